//
// Copyright (C) 2026 The clod Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "clod/image.hpp"
#include "clod/mlp.hpp"

namespace clod::test {

inline Image random_image(int w, int h, int c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Image img(w, h, c);
  for (float& v : img.pixels) v = u(rng);
  return img;
}

template <typename Real>
Matrix<Real> random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double lo = -1.0,
                           double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix<Real> m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = static_cast<Real>(u(rng));
  return m;
}

/// Initialized model whose gains and norm biases are also perturbed, so
/// every parameter kind carries a non-trivial gradient.
template <typename Real>
VariableWidthMlp<Real> random_model(const ArchConfig& arch, std::uint64_t seed) {
  VariableWidthMlp<Real> model(arch);
  model.initialize(seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (std::uint32_t l = 0; l < model.layer_count(); ++l) {
    if (!model.layout().layers[l].normalized) continue;
    for (Eigen::Index i = 0; i < model.gain(l).size(); ++i) {
      model.gain(l)[i] = static_cast<Real>(1.0 + u(rng));
      model.beta(l)[i] = static_cast<Real>(u(rng));
    }
  }
  return model;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("clod_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace clod::test
