//
// Copyright (C) 2026 The clod Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "clod/render.hpp"

#include <algorithm>
#include <cmath>

#include "clod/error.hpp"

namespace clod {

template <typename Real>
Matrix<Real> ray_inputs(std::span<const PluckerRay> rays) {
  Matrix<Real> m(6, static_cast<Eigen::Index>(rays.size()));
  for (std::size_t j = 0; j < rays.size(); ++j) {
    const auto f = rays[j].features();
    for (int i = 0; i < 6; ++i) m(i, static_cast<Eigen::Index>(j)) = static_cast<Real>(f[i]);
  }
  return m;
}

template <typename Real>
Matrix<Real> camera_inputs(const Camera& camera) {
  camera.validate();
  const Eigen::Index n = static_cast<Eigen::Index>(camera.width) * camera.height;
  Matrix<Real> m(6, n);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < camera.height; ++y) {
    for (int x = 0; x < camera.width; ++x) {
      const auto f = ray_for_pixel(camera, Vec2(x + 0.5, y + 0.5)).features();
      const Eigen::Index j = static_cast<Eigen::Index>(y) * camera.width + x;
      for (int i = 0; i < 6; ++i) m(i, j) = static_cast<Real>(f[i]);
    }
  }
  return m;
}

template <typename Real>
Image render(const VariableWidthMlp<Real>& model, const Camera& camera, double lod, int out_width, int out_height) {
  const Camera target = camera.resized(out_width, out_height);
  const Matrix<Real> out = forward(model, camera_inputs<Real>(target), lod);
  Image image(out_width, out_height, static_cast<int>(model.arch().output_dim));
  for (Eigen::Index j = 0; j < out.cols(); ++j)
    for (Eigen::Index c = 0; c < out.rows(); ++c)
      image.pixels[static_cast<std::size_t>(j) * out.rows() + c] = static_cast<float>(out(c, j));
  return image;
}

std::pair<int, int> resolution_for_lod(const ArchConfig& arch, const Camera& camera, double lod) {
  const double s = scale_for_lod(arch, lod);
  return {std::max(1, static_cast<int>(std::lround(camera.width * s))),
          std::max(1, static_cast<int>(std::lround(camera.height * s)))};
}

template Matrix<float> ray_inputs<float>(std::span<const PluckerRay>);
template Matrix<double> ray_inputs<double>(std::span<const PluckerRay>);
template Matrix<float> camera_inputs<float>(const Camera&);
template Matrix<double> camera_inputs<double>(const Camera&);
template Image render(const VariableWidthMlp<float>&, const Camera&, double, int, int);
template Image render(const VariableWidthMlp<double>&, const Camera&, double, int, int);

}  // namespace clod
