//
// Copyright (C) 2026 The clod Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <span>
#include <vector>

#include "clod/mlp.hpp"

// Serial, one-ray-at-a-time evaluation of the variable-width MLP. Plain loops,
// no Eigen products; kept as the oracle for the batched kernels and as the
// baseline in bench/.
namespace clod::reference {

/// Output for one ray. When `masked_features` is non-null it receives, per
/// hidden layer, the masked pre-normalization features.
template <typename Real>
std::vector<Real> forward_ray(const VariableWidthMlp<Real>& model, std::span<const Real> input, double lod,
                              std::vector<std::vector<Real>>* masked_features = nullptr);

template <typename Real>
Matrix<Real> forward(const VariableWidthMlp<Real>& model, const Matrix<Real>& inputs, double lod);

/// Gradients accumulated (+=) into `grads`, rays processed in order.
template <typename Real>
void backward(const VariableWidthMlp<Real>& model, const Matrix<Real>& inputs, double lod,
              const Matrix<Real>& output_grad, std::span<Real> grads);

}  // namespace clod::reference
