//
// Copyright (C) 2026 The clod Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "clod/metrics.hpp"

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>

#include "clod/error.hpp"

namespace clod {

double psnr(const Image& a, const Image& b, double peak) {
  if (!a.same_shape(b) || a.empty()) throw_invalid("psnr: images must be non-empty and equally shaped");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = static_cast<double>(a.pixels[i]) - b.pixels[i];
    sum += d * d;
  }
  const double mse = sum / static_cast<double>(a.pixels.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;

std::array<double, kWindow> gaussian_taps() {
  std::array<double, kWindow> taps{};
  double sum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double x = i - kWindow / 2;
    taps[i] = std::exp(-x * x / (2 * kSigma * kSigma));
    sum += taps[i];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

// Separable Gaussian filter, valid region only.
std::vector<double> filter_valid(const std::vector<double>& src, int w, int h) {
  static const auto taps = gaussian_taps();
  const int ow = w - kWindow + 1;
  const int oh = h - kWindow + 1;
  std::vector<double> tmp(static_cast<std::size_t>(ow) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kWindow; ++k) acc += taps[k] * src[static_cast<std::size_t>(y) * w + x + k];
      tmp[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kWindow; ++k) acc += taps[k] * tmp[static_cast<std::size_t>(y + k) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  return out;
}

}  // namespace

double ssim(const Image& a, const Image& b, double dynamic_range) {
  if (!a.same_shape(b)) throw_invalid("ssim: images must be equally shaped");
  if (a.width < kWindow || a.height < kWindow) throw_invalid("ssim: image smaller than the 11x11 window");
  const double c1 = (0.01 * dynamic_range) * (0.01 * dynamic_range);
  const double c2 = (0.03 * dynamic_range) * (0.03 * dynamic_range);
  const int w = a.width;
  const int h = a.height;
  const std::size_t n = a.pixel_count();

  double total = 0.0;
  for (int c = 0; c < a.channels; ++c) {
    std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = a.pixels[i * a.channels + c];
      y[i] = b.pixels[i * b.channels + c];
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const auto mx = filter_valid(x, w, h);
    const auto my = filter_valid(y, w, h);
    const auto sxx = filter_valid(xx, w, h);
    const auto syy = filter_valid(yy, w, h);
    const auto sxy = filter_valid(xy, w, h);
    double sum = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
      const double vx = sxx[i] - mx[i] * mx[i];
      const double vy = syy[i] - my[i] * my[i];
      const double cov = sxy[i] - mx[i] * my[i];
      sum += ((2 * mx[i] * my[i] + c1) * (2 * cov + c2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
    }
    total += sum / static_cast<double>(mx.size());
  }
  return total / a.channels;
}

Image luminance(const Image& image) {
  Image out(image.width, image.height, 1);
  for (std::size_t i = 0; i < image.pixel_count(); ++i) {
    const float* p = image.pixels.data() + i * image.channels;
    double y = 0.0;
    switch (image.channels) {
      case 1: y = p[0]; break;
      case 3: y = 0.2126 * p[0] + 0.7152 * p[1] + 0.0722 * p[2]; break;
      case 4: y = (0.2126 * p[0] + 0.7152 * p[1] + 0.0722 * p[2]) * p[3]; break;
      default: throw_invalid("luminance: expected 1, 3 or 4 channels");
    }
    out.pixels[i] = static_cast<float>(y);
  }
  return out;
}

FlickerParts flicker_of_change(const Image& change, double radial_split) {
  if (change.channels != 1 || change.empty()) throw_invalid("flicker_of_change: expects a non-empty single-channel image");
  const int w = change.width;
  const int h = change.height;
  const std::size_t n = change.pixel_count();

  struct FftwFree {
    void operator()(fftw_complex* p) const { fftw_free(p); }
  };
  std::unique_ptr<fftw_complex, FftwFree> in(fftw_alloc_complex(n));
  std::unique_ptr<fftw_complex, FftwFree> out(fftw_alloc_complex(n));
  fftw_plan plan;
#pragma omp critical(clod_fftw_planner)
  plan = fftw_plan_dft_2d(h, w, in.get(), out.get(), FFTW_FORWARD, FFTW_ESTIMATE);
  for (std::size_t i = 0; i < n; ++i) {
    in.get()[i][0] = change.pixels[i];
    in.get()[i][1] = 0.0;
  }
  fftw_execute(plan);
#pragma omp critical(clod_fftw_planner)
  fftw_destroy_plan(plan);

  const double cutoff = radial_split * 0.5;  // Nyquist is 0.5 cycles/pixel
  FlickerParts parts;
  for (int ky = 0; ky < h; ++ky) {
    const double fy = static_cast<double>(std::min(ky, h - ky)) / h;
    for (int kx = 0; kx < w; ++kx) {
      const double fx = static_cast<double>(std::min(kx, w - kx)) / w;
      const auto& z = out.get()[static_cast<std::size_t>(ky) * w + kx];
      const double mag = std::hypot(z[0], z[1]);
      if (std::sqrt(fx * fx + fy * fy) < cutoff)
        parts.low += mag;
      else
        parts.high += mag;
    }
  }
  return parts;
}

std::vector<FlickerParts> flicker(std::span<const Image> processed, std::span<const Image> reference,
                                  double radial_split) {
  if (processed.size() != reference.size()) throw_invalid("flicker: sequence lengths differ");
  if (processed.size() < 2) throw_invalid("flicker: need at least two frames");
  for (std::size_t i = 0; i < processed.size(); ++i)
    if (!processed[i].same_shape(reference[i]) || !processed[i].same_shape(processed.front()))
      throw_invalid("flicker: frame shapes differ");

  std::vector<Image> diff(processed.size());
  for (std::size_t i = 0; i < processed.size(); ++i) {
    diff[i] = luminance(processed[i]);
    const Image ref = luminance(reference[i]);
    for (std::size_t k = 0; k < diff[i].pixels.size(); ++k) diff[i].pixels[k] -= ref.pixels[k];
  }
  std::vector<FlickerParts> out(processed.size() - 1);
  const auto transitions = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t t = 0; t < transitions; ++t) {
    Image change = diff[t + 1];
    for (std::size_t k = 0; k < change.pixels.size(); ++k) change.pixels[k] -= diff[t].pixels[k];
    out[t] = flicker_of_change(change, radial_split);
  }
  return out;
}

}  // namespace clod
