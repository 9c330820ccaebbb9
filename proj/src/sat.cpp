//
// Copyright (C) 2026 The clod Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "clod/sat.hpp"

#include <algorithm>
#include <cmath>

#include "clod/error.hpp"

namespace clod {

SummedAreaTable SummedAreaTable::build(const Image& image) {
  if (image.width < 1 || image.height < 1 || image.channels < 1) throw_invalid("cannot build a SAT from an empty image");
  SummedAreaTable sat;
  sat.width_ = image.width;
  sat.height_ = image.height;
  sat.channels_ = image.channels;
  const int c_count = image.channels;
  const std::size_t row = static_cast<std::size_t>(image.width + 1) * c_count;
  sat.sums_.assign(row * (image.height + 1), 0.0);

  std::vector<double> running(c_count);
  for (int i = 0; i < image.height; ++i) {
    std::fill(running.begin(), running.end(), 0.0);
    const double* above = sat.sums_.data() + row * i;
    double* current = sat.sums_.data() + row * (i + 1);
    for (int j = 0; j < image.width; ++j) {
      for (int c = 0; c < c_count; ++c) {
        running[c] += image.at(i, j, c);
        current[(j + 1) * c_count + c] = above[(j + 1) * c_count + c] + running[c];
      }
    }
  }
  return sat;
}

void SummedAreaTable::corner(double x, double y, std::span<double> out) const {
  const int j = std::clamp(static_cast<int>(std::floor(x)), 0, width_ - 1);
  const int i = std::clamp(static_cast<int>(std::floor(y)), 0, height_ - 1);
  const double u = x - j;
  const double v = y - i;
  for (int c = 0; c < channels_; ++c) {
    const double s00 = sum(i, j, c);
    const double s01 = sum(i, j + 1, c);
    const double s10 = sum(i + 1, j, c);
    const double s11 = sum(i + 1, j + 1, c);
    out[c] = (1 - v) * ((1 - u) * s00 + u * s01) + v * ((1 - u) * s10 + u * s11);
  }
}

void SummedAreaTable::rect_average(const Rect& rect, std::span<double> out) const {
  if (static_cast<int>(out.size()) < channels_) throw_invalid("rect_average: output span too small");
  const double x0 = std::clamp(rect.x0, 0.0, static_cast<double>(width_));
  const double x1 = std::clamp(rect.x1, 0.0, static_cast<double>(width_));
  const double y0 = std::clamp(rect.y0, 0.0, static_cast<double>(height_));
  const double y1 = std::clamp(rect.y1, 0.0, static_cast<double>(height_));
  const double area = (x1 - x0) * (y1 - y0);
  if (!(x1 > x0) || !(y1 > y0) || !(area > 0.0)) throw_invalid("rect_average: rectangle has no area inside the image");

  double a[8], b[8], c[8], d[8];
  std::vector<double> heap;
  double *pa = a, *pb = b, *pc = c, *pd = d;
  if (channels_ > 8) {
    heap.resize(4 * channels_);
    pa = heap.data();
    pb = pa + channels_;
    pc = pb + channels_;
    pd = pc + channels_;
  }
  const auto n = static_cast<std::size_t>(channels_);
  corner(x1, y1, {pa, n});
  corner(x0, y1, {pb, n});
  corner(x1, y0, {pc, n});
  corner(x0, y0, {pd, n});
  for (int ch = 0; ch < channels_; ++ch) out[ch] = (pa[ch] - pb[ch] - pc[ch] + pd[ch]) / area;
}

std::vector<double> SummedAreaTable::rect_average(const Rect& rect) const {
  std::vector<double> out(channels_);
  rect_average(rect, out);
  return out;
}

void SummedAreaTable::filtered_sample(double px, double py, double scale, std::span<double> out) const {
  if (!(scale > 0.0) || scale > 1.0) throw_invalid("filtered_sample: scale must lie in (0, 1]");
  const double half = 0.5 / scale;
  rect_average({px - half, py - half, px + half, py + half}, out);
}

std::vector<double> SummedAreaTable::filtered_sample(double px, double py, double scale) const {
  std::vector<double> out(channels_);
  filtered_sample(px, py, scale, out);
  return out;
}

std::vector<SummedAreaTable> build_tables(std::span<const Image> images) {
  for (const auto& image : images)
    if (image.width < 1 || image.height < 1 || image.channels < 1) throw_invalid("cannot build a SAT from an empty image");
  std::vector<SummedAreaTable> tables(images.size());
  const auto n = static_cast<std::ptrdiff_t>(images.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) tables[i] = SummedAreaTable::build(images[i]);
  return tables;
}

}  // namespace clod

namespace clod {

Image box_resample(const SummedAreaTable& table, int out_width, int out_height) {
  if (out_width < 1 || out_height < 1) throw_invalid("box_resample: output size must be positive");
  if (table.width() == 0) throw_invalid("box_resample: empty table");
  Image out(out_width, out_height, table.channels());
  const double sx = static_cast<double>(table.width()) / out_width;
  const double sy = static_cast<double>(table.height()) / out_height;
#pragma omp parallel
  {
    std::vector<double> px(table.channels());
#pragma omp for
    for (int y = 0; y < out_height; ++y)
      for (int x = 0; x < out_width; ++x) {
        table.rect_average({x * sx, y * sy, (x + 1) * sx, (y + 1) * sy}, px);
        for (int c = 0; c < table.channels(); ++c) out.at(y, x, c) = static_cast<float>(px[c]);
      }
  }
  return out;
}

}  // namespace clod
