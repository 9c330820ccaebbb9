//
// Copyright (C) 2026 The clod Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <span>

#include "clod/geometry.hpp"
#include "clod/image.hpp"
#include "clod/mlp.hpp"

namespace clod {

/// Packs rays into a 6 x N network input matrix.
template <typename Real>
Matrix<Real> ray_inputs(std::span<const PluckerRay> rays);

/// Rays through every pixel center of `camera`, row-major.
template <typename Real>
Matrix<Real> camera_inputs(const Camera& camera);

/// One forward pass per pixel of `camera` resized to out_width x out_height.
/// The result is the raw network output; clamp before exporting.
template <typename Real>
Image render(const VariableWidthMlp<Real>& model, const Camera& camera, double lod, int out_width, int out_height);

/// Output resolution round(full * scale_for_lod(lod)), at least 1x1.
std::pair<int, int> resolution_for_lod(const ArchConfig& arch, const Camera& camera, double lod);

}  // namespace clod
