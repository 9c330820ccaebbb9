//
// Copyright (C) 2026 The clod Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <span>
#include <vector>

#include "clod/image.hpp"

namespace clod {

/// Axis-aligned rectangle in continuous pixel units; x spans columns.
struct Rect {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  double area() const { return (x1 - x0) * (y1 - y0); }
};

/// Summed-area table over an H x W x C image with a zero first row and column.
/// sums(i, j, c) is the sum of image[0..i) x [0..j) in channel c, kept in
/// double precision.
class SummedAreaTable {
 public:
  SummedAreaTable() = default;

  /// Throws InvalidInput for an empty image.
  static SummedAreaTable build(const Image& image);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }

  double sum(int i, int j, int c) const {
    return sums_[(static_cast<std::size_t>(i) * (width_ + 1) + j) * channels_ + c];
  }

  /// Table value at a continuous corner (x, y) in [0,W] x [0,H], bilinear in
  /// the four surrounding entries. For a piecewise-constant image this is the
  /// exact integral over [0,x] x [0,y].
  void corner(double x, double y, std::span<double> out) const;

  /// Area-weighted mean over `rect` after clipping it to the image. Throws
  /// InvalidInput when the clipped rectangle has no area.
  void rect_average(const Rect& rect, std::span<double> out) const;
  std::vector<double> rect_average(const Rect& rect) const;

  /// Box-filtered value for a full-resolution pixel position at `scale`:
  /// the average over the square of side 1/scale centered on `(px, py)`.
  void filtered_sample(double px, double py, double scale, std::span<double> out) const;
  std::vector<double> filtered_sample(double px, double py, double scale) const;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> sums_;
};

/// Area resampling to out_width x out_height: each output pixel averages its
/// footprint in the source image.
Image box_resample(const SummedAreaTable& table, int out_width, int out_height);

/// Builds one table per image; images are processed in parallel.
std::vector<SummedAreaTable> build_tables(std::span<const Image> images);

}  // namespace clod
