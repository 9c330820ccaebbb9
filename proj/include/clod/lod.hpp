//
// Copyright (C) 2026 The clod Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>

namespace clod {

/// Shape of a variable-width MLP. `depth` counts every linear layer, so the
/// default has nine normalized hidden layers and one linear output layer.
struct ArchConfig {
  std::uint32_t input_dim = 6;
  std::uint32_t output_dim = 4;
  std::uint32_t depth = 10;
  std::uint32_t min_width = 128;
  std::uint32_t max_width = 512;

  /// Throws InvalidInput on a degenerate configuration.
  void validate() const;

  /// Highest level of detail; the lowest is always 1.0.
  double max_lod() const { return static_cast<double>(max_width - min_width + 1); }
  std::uint32_t hidden_layers() const { return depth - 1; }

  friend bool operator==(const ArchConfig&, const ArchConfig&) = default;
};

/// Desk-scale preset used by the acceptance suite and quick experiments.
inline constexpr ArchConfig kDeskArch{6, 4, 5, 16, 64};

/// Everything a fractional level of detail implies.
struct LodSpec {
  double lod = 1.0;
  std::uint32_t active_width = 0;
  double alpha = 1.0;  ///< fade-in weight of the newest neuron
  double scale = 1.0;  ///< matching image scale
};

struct WidthAlpha {
  std::uint32_t active_width;
  double alpha;
};

/// Width ceil-indexed from the lod, alpha = 1 - (ceil(lod) - lod), so
/// integral lods have their newest neuron fully on.
WidthAlpha width_for_lod(const ArchConfig& cfg, double lod);

/// s = 2^(4w - 4) with the fractional effective width
/// w = (min_width - 1 + lod) / max_width.
double scale_for_lod(const ArchConfig& cfg, double lod);

struct LodForScale {
  double lod;
  bool clamped;  ///< scale was outside the representable range
};

/// Inverse of scale_for_lod; out-of-range scales clamp to the nearest end.
LodForScale lod_for_scale(const ArchConfig& cfg, double scale);

LodSpec lod_spec(const ArchConfig& cfg, double lod);

/// Exact parameter count of the network truncated to `width`: linear weights
/// and biases of every layer plus gain/bias of each hidden normalization.
std::uint64_t param_count(const ArchConfig& cfg, std::uint32_t width);

/// Single-precision payload size, param_count * 4.
std::uint64_t model_bytes(const ArchConfig& cfg, std::uint32_t width);

/// Parameters added when growing from width - 1 to width.
std::uint64_t delta_param_count(const ArchConfig& cfg, std::uint32_t width);

}  // namespace clod
