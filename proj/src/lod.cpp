//
// Copyright (C) 2026 The clod Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "clod/lod.hpp"

#include <cmath>
#include <string>

#include "clod/error.hpp"

namespace clod {

void ArchConfig::validate() const {
  if (input_dim < 1 || output_dim < 1) throw_invalid("arch: input/output dims must be positive");
  if (depth < 2) throw_invalid("arch: depth must be at least 2");
  if (min_width < 1) throw_invalid("arch: min_width must be at least 1");
  if (min_width > max_width) throw_invalid("arch: min_width exceeds max_width");
  if (max_width > (1u << 16)) throw_invalid("arch: max_width is unreasonably large");
}

namespace {

void check_lod(const ArchConfig& cfg, double lod) {
  cfg.validate();
  if (!(lod >= 1.0) || !(lod <= cfg.max_lod()))
    throw_invalid("lod " + std::to_string(lod) + " outside [1, " + std::to_string(cfg.max_lod()) + "]");
}

}  // namespace

WidthAlpha width_for_lod(const ArchConfig& cfg, double lod) {
  check_lod(cfg, lod);
  const double top = std::ceil(lod);
  return {cfg.min_width - 1 + static_cast<std::uint32_t>(top), 1.0 - (top - lod)};
}

double scale_for_lod(const ArchConfig& cfg, double lod) {
  check_lod(cfg, lod);
  const double w = (cfg.min_width - 1.0 + lod) / cfg.max_width;
  return std::exp2(4.0 * w - 4.0);
}

LodForScale lod_for_scale(const ArchConfig& cfg, double scale) {
  cfg.validate();
  if (!(scale > 0.0)) throw_invalid("lod_for_scale: scale must be positive");
  const double w = 0.25 * (std::log2(scale) + 4.0);
  const double lod = w * cfg.max_width - (cfg.min_width - 1.0);
  if (lod < 1.0) return {1.0, true};
  if (lod > cfg.max_lod()) return {cfg.max_lod(), true};
  return {lod, false};
}

LodSpec lod_spec(const ArchConfig& cfg, double lod) {
  const auto [width, alpha] = width_for_lod(cfg, lod);
  return {lod, width, alpha, scale_for_lod(cfg, lod)};
}

std::uint64_t param_count(const ArchConfig& cfg, std::uint32_t width) {
  cfg.validate();
  if (width < cfg.min_width || width > cfg.max_width) throw_invalid("param_count: width out of range");
  const std::uint64_t w = width;
  const std::uint64_t input = w * cfg.input_dim + w;
  const std::uint64_t hidden = (cfg.depth - 2ull) * (w * w + w);
  const std::uint64_t output = cfg.output_dim * w + cfg.output_dim;
  const std::uint64_t norm = 2ull * w * cfg.hidden_layers();
  return input + hidden + output + norm;
}

std::uint64_t model_bytes(const ArchConfig& cfg, std::uint32_t width) { return 4 * param_count(cfg, width); }

std::uint64_t delta_param_count(const ArchConfig& cfg, std::uint32_t width) {
  if (width <= cfg.min_width) throw_invalid("delta_param_count: width must exceed min_width");
  return param_count(cfg, width) - param_count(cfg, width - 1);
}

}  // namespace clod
