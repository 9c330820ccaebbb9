//
// Copyright (C) 2026 The clod Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "clod/geometry.hpp"
#include "clod/image.hpp"
#include "clod/mlp.hpp"
#include "clod/sat.hpp"

namespace clod {

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) from 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Seed for an independent stream keyed by (master, a, b) via splitmix64.
std::uint64_t stream_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0);

/// One posed RGBA training image with its table and saliency map.
struct TrainingView {
  Image image;     ///< RGBA, straight alpha
  Image saliency;  ///< 1 channel in [0, 1]
  SummedAreaTable sat;
  Camera camera;

  /// Builds the table; an empty saliency image means s = 0 everywhere.
  static TrainingView make(Image rgba, Image saliency, const Camera& camera);
};

inline constexpr double kForegroundFraction = 0.67;
inline constexpr double kLambdaForeground = 0.4;
inline constexpr double kLambdaSaliency = 0.6;
inline constexpr double kForegroundThreshold = 0.5;

/// Sampling density over one view: p(x) proportional to lambda_f +
/// lambda_s * s(x) on foreground pixels; background pixels are uniform.
struct RayPdf {
  std::vector<std::uint32_t> foreground;  ///< pixel indices y * width + x
  std::vector<double> probability;        ///< normalized, one per foreground pixel
  std::vector<double> cdf;
  std::vector<std::uint32_t> background;
  double foreground_fraction = kForegroundFraction;
  double lambda_f = kLambdaForeground;
  double lambda_s = kLambdaSaliency;
  bool no_foreground = false;  ///< every ray of this view comes from the background

  /// Foreground pixel index for u in [0, 1).
  std::uint32_t sample_foreground(double u) const;
};

/// Foreground = alpha > fg_threshold. Throws InvalidInput for negative
/// weights or both weights zero, and when the weights vanish on every
/// foreground pixel.
RayPdf build_ray_pdf(const TrainingView& view, double lambda_f = kLambdaForeground,
                     double lambda_s = kLambdaSaliency, double fg_threshold = kForegroundThreshold);

/// round(fraction * batch_size), half away from zero.
std::size_t foreground_draw_count(std::size_t batch_size, double fraction = kForegroundFraction);

struct RayBatch {
  std::vector<std::uint32_t> view;
  std::vector<std::uint32_t> px;
  std::vector<std::uint32_t> py;
  Matrix<float> inputs;  ///< 6 x N Plücker rays through pixel centers
  std::size_t foreground = 0;
  std::size_t background = 0;
  std::size_t redirected = 0;  ///< draws that fell back to the other pixel class

  std::size_t size() const { return view.size(); }
};

/// Draws with replacement: foreground_draw_count(N) foreground rays (view
/// uniform, pixel by pdf), the rest uniform background. A class that is
/// empty everywhere is replaced by the other one and counted in
/// `redirected`. Deterministic for a given rng state.
RayBatch sample_batch(std::span<const TrainingView> views, std::span<const RayPdf> pdfs, std::size_t batch_size,
                      Rng& rng);

/// SAT box-filtered RGBA at each sampled pixel center; scale = 1 returns the
/// raw pixels. Output is channels x N.
Matrix<float> target_colors(std::span<const TrainingView> views, const RayBatch& batch, double scale);

/// Single-view variant with explicit pixel coordinates.
Matrix<float> target_colors(const TrainingView& view, std::span<const std::uint32_t> px,
                            std::span<const std::uint32_t> py, double scale);

}  // namespace clod
