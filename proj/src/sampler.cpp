//
// Copyright (C) 2026 The clod Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "clod/sampler.hpp"

#include <algorithm>
#include <cmath>

#include "clod/error.hpp"

namespace clod {

std::uint64_t stream_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(master) ^ a) ^ b);
}

TrainingView TrainingView::make(Image rgba, Image saliency, const Camera& camera) {
  if (rgba.channels != 4) throw_invalid("training view must be RGBA");
  if (rgba.width != camera.width || rgba.height != camera.height)
    throw_invalid("training image resolution does not match its camera");
  if (saliency.empty()) {
    saliency = Image(rgba.width, rgba.height, 1, 0.0f);
  } else if (saliency.channels != 1 || saliency.width != rgba.width || saliency.height != rgba.height) {
    throw_invalid("saliency map must be single-channel and match the image");
  }
  TrainingView view;
  view.sat = SummedAreaTable::build(rgba);
  view.image = std::move(rgba);
  view.saliency = std::move(saliency);
  view.camera = camera;
  return view;
}

std::uint32_t RayPdf::sample_foreground(double u) const {
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), foreground.size() - 1);
  return foreground[k];
}

RayPdf build_ray_pdf(const TrainingView& view, double lambda_f, double lambda_s, double fg_threshold) {
  if (!(lambda_f >= 0.0) || !(lambda_s >= 0.0)) throw_invalid("sampling weights must be non-negative");
  if (lambda_f == 0.0 && lambda_s == 0.0) throw_invalid("sampling weights cannot both be zero");

  RayPdf pdf;
  pdf.lambda_f = lambda_f;
  pdf.lambda_s = lambda_s;
  const auto& img = view.image;
  std::vector<double> weight;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const auto index = static_cast<std::uint32_t>(y * img.width + x);
      if (img.at(y, x, 3) > fg_threshold) {
        pdf.foreground.push_back(index);
        weight.push_back(lambda_f + lambda_s * view.saliency.at(y, x, 0));
      } else {
        pdf.background.push_back(index);
      }
    }
  }
  if (pdf.foreground.empty()) {
    pdf.no_foreground = true;
    return pdf;
  }

  double total = 0.0;
  for (double w : weight) total += w;
  if (!(total > 0.0)) throw_invalid("sampling weights vanish on every foreground pixel");
  pdf.probability.resize(weight.size());
  pdf.cdf.resize(weight.size());
  double running = 0.0;
  for (std::size_t i = 0; i < weight.size(); ++i) {
    pdf.probability[i] = weight[i] / total;
    running += weight[i];
    pdf.cdf[i] = running / total;
  }
  pdf.cdf.back() = 1.0;
  return pdf;
}

std::size_t foreground_draw_count(std::size_t batch_size, double fraction) {
  return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(batch_size)));
}

RayBatch sample_batch(std::span<const TrainingView> views, std::span<const RayPdf> pdfs, std::size_t batch_size,
                      Rng& rng) {
  if (views.empty()) throw_invalid("sample_batch: no views");
  if (pdfs.size() != views.size()) throw_invalid("sample_batch: one pdf per view required");
  if (batch_size < 1) throw_invalid("sample_batch: batch_size must be at least 1");

  std::vector<std::uint32_t> with_fg;
  std::vector<std::uint32_t> with_bg;
  for (std::uint32_t v = 0; v < views.size(); ++v) {
    if (!pdfs[v].foreground.empty()) with_fg.push_back(v);
    if (!pdfs[v].background.empty()) with_bg.push_back(v);
  }

  RayBatch batch;
  batch.view.resize(batch_size);
  batch.px.resize(batch_size);
  batch.py.resize(batch_size);
  const std::size_t fg_target = foreground_draw_count(batch_size, pdfs.front().foreground_fraction);

  auto pick = [&rng](const std::vector<std::uint32_t>& pool) {
    return pool[std::min<std::size_t>(static_cast<std::size_t>(uniform01(rng) * pool.size()), pool.size() - 1)];
  };
  auto draw_foreground = [&](std::size_t k) {
    const std::uint32_t v = pick(with_fg);
    const std::uint32_t index = pdfs[v].sample_foreground(uniform01(rng));
    batch.view[k] = v;
    batch.px[k] = index % views[v].image.width;
    batch.py[k] = index / views[v].image.width;
  };
  auto draw_background = [&](std::size_t k) {
    const std::uint32_t v = pick(with_bg);
    const std::uint32_t index = pick(pdfs[v].background);
    batch.view[k] = v;
    batch.px[k] = index % views[v].image.width;
    batch.py[k] = index / views[v].image.width;
  };

  for (std::size_t k = 0; k < batch_size; ++k) {
    const bool want_fg = k < fg_target;
    if (want_fg && !with_fg.empty()) {
      draw_foreground(k);
      ++batch.foreground;
    } else if (!want_fg && !with_bg.empty()) {
      draw_background(k);
      ++batch.background;
    } else if (want_fg) {
      draw_background(k);
      ++batch.background;
      ++batch.redirected;
    } else {
      draw_foreground(k);
      ++batch.foreground;
      ++batch.redirected;
    }
  }

  batch.inputs.resize(6, static_cast<Eigen::Index>(batch_size));
  const auto n = static_cast<std::ptrdiff_t>(batch_size);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const auto& cam = views[batch.view[k]].camera;
    const auto f = ray_for_pixel(cam, Vec2(batch.px[k] + 0.5, batch.py[k] + 0.5)).features();
    for (int i = 0; i < 6; ++i) batch.inputs(i, k) = static_cast<float>(f[i]);
  }
  return batch;
}

namespace {

void fill_targets(const TrainingView& view, std::uint32_t px, std::uint32_t py, double scale, Matrix<float>& out,
                  Eigen::Index column) {
  const int channels = view.image.channels;
  if (scale == 1.0) {
    for (int c = 0; c < channels; ++c) out(c, column) = view.image.at(static_cast<int>(py), static_cast<int>(px), c);
    return;
  }
  double buf[4];
  view.sat.filtered_sample(px + 0.5, py + 0.5, scale, std::span<double>(buf, 4));
  for (int c = 0; c < channels; ++c) out(c, column) = static_cast<float>(buf[c]);
}

}  // namespace

Matrix<float> target_colors(std::span<const TrainingView> views, const RayBatch& batch, double scale) {
  if (!(scale > 0.0) || scale > 1.0) throw_invalid("target_colors: scale must lie in (0, 1]");
  Matrix<float> out(4, static_cast<Eigen::Index>(batch.size()));
  const auto n = static_cast<std::ptrdiff_t>(batch.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < n; ++k) fill_targets(views[batch.view[k]], batch.px[k], batch.py[k], scale, out, k);
  return out;
}

Matrix<float> target_colors(const TrainingView& view, std::span<const std::uint32_t> px,
                            std::span<const std::uint32_t> py, double scale) {
  if (!(scale > 0.0) || scale > 1.0) throw_invalid("target_colors: scale must lie in (0, 1]");
  if (px.size() != py.size()) throw_invalid("target_colors: coordinate lists differ in length");
  for (std::size_t k = 0; k < px.size(); ++k)
    if (px[k] >= static_cast<std::uint32_t>(view.image.width) || py[k] >= static_cast<std::uint32_t>(view.image.height))
      throw_invalid("target_colors: pixel outside the image");
  Matrix<float> out(4, static_cast<Eigen::Index>(px.size()));
  const auto n = static_cast<std::ptrdiff_t>(px.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < n; ++k) fill_targets(view, px[k], py[k], scale, out, k);
  return out;
}

}  // namespace clod
