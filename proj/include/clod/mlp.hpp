//
// Copyright (C) 2026 The clod Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

#include "clod/lod.hpp"

namespace clod {

/// Column-per-ray activation matrix (features x batch).
template <typename Real>
using Matrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;

/// Flat buffer aligned the way Eigen's own allocations are. Vectorized
/// reductions peel their loops by address, so an unaligned base would make
/// results depend on where the heap happened to put the buffer.
template <typename Real>
using ParamVector = std::vector<Real, Eigen::aligned_allocator<Real>>;

/// Offsets of every tensor inside the flat parameter vector. Tensors are
/// stored at full (max) width, layer by layer: weights (row-major, out x in),
/// bias, then normalization gain and bias for hidden layers.
struct ParamLayout {
  struct Layer {
    std::uint32_t rows = 0;  ///< output features at max width
    std::uint32_t cols = 0;  ///< input features at max width
    std::size_t weight = 0;
    std::size_t bias = 0;
    std::size_t gain = 0;  ///< only for normalized layers
    std::size_t beta = 0;
    bool normalized = false;
  };

  std::vector<Layer> layers;
  std::size_t total = 0;

  static ParamLayout for_arch(const ArchConfig& arch);
};

/// A single MLP whose hidden layers can be evaluated at any width in
/// [min_width, max_width]; width W uses the leading W rows/columns of every
/// hidden tensor.
template <typename Real>
class VariableWidthMlp {
 public:
  using RowMajor = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using WeightMap = Eigen::Map<RowMajor>;
  using ConstWeightMap = Eigen::Map<const RowMajor>;
  using VectorMap = Eigen::Map<Eigen::Matrix<Real, Eigen::Dynamic, 1>>;
  using ConstVectorMap = Eigen::Map<const Eigen::Matrix<Real, Eigen::Dynamic, 1>>;

  explicit VariableWidthMlp(const ArchConfig& arch);

  const ArchConfig& arch() const { return arch_; }
  const ParamLayout& layout() const { return layout_; }
  ParamVector<Real>& parameters() { return params_; }
  const ParamVector<Real>& parameters() const { return params_; }

  /// Widest network whose parameters are present. Prefix-decoded streams
  /// report less than max_width; evaluation beyond it is rejected.
  std::uint32_t available_width() const { return available_width_; }
  void set_available_width(std::uint32_t width);

  /// Kaiming-uniform (fan-in) weights, zero biases, unit gains.
  void initialize(std::uint64_t seed);

  std::uint32_t layer_count() const { return static_cast<std::uint32_t>(layout_.layers.size()); }
  WeightMap weights(std::uint32_t layer);
  ConstWeightMap weights(std::uint32_t layer) const;
  VectorMap bias(std::uint32_t layer);
  ConstVectorMap bias(std::uint32_t layer) const;
  VectorMap gain(std::uint32_t layer);
  ConstVectorMap gain(std::uint32_t layer) const;
  VectorMap beta(std::uint32_t layer);
  ConstVectorMap beta(std::uint32_t layer) const;

  template <typename Other>
  VariableWidthMlp<Other> cast() const {
    VariableWidthMlp<Other> out(arch_);
    for (std::size_t i = 0; i < params_.size(); ++i) out.parameters()[i] = static_cast<Other>(params_[i]);
    out.set_available_width(available_width_);
    return out;
  }

  bool operator==(const VariableWidthMlp& other) const {
    return arch_ == other.arch_ && available_width_ == other.available_width_ && params_ == other.params_;
  }

 private:
  ArchConfig arch_;
  ParamLayout layout_;
  ParamVector<Real> params_;
  std::uint32_t available_width_;
};

inline constexpr double kLayerNormEps = 1e-5;

/// Scales the newest (last) feature by alpha, leaving the rest untouched.
template <typename Real>
void apply_neuron_mask(std::span<Real> features, Real alpha) {
  if (!features.empty()) features.back() = alpha * features.back();
}

/// Intermediates kept by the batched forward pass for backward().
template <typename Real>
struct ForwardCache {
  std::uint32_t width = 0;
  Real alpha = 1;
  Matrix<Real> input;                    ///< input_dim x batch
  std::vector<Matrix<Real>> normalized;  ///< per hidden layer, width x batch
  std::vector<Matrix<Real>> activation;  ///< per hidden layer, post-ReLU
  std::vector<Eigen::Matrix<Real, 1, Eigen::Dynamic>> inv_std;
  Matrix<Real> output;  ///< output_dim x batch, unclamped

  std::size_t batch() const { return static_cast<std::size_t>(input.cols()); }
};

// Batched OpenMP kernels. Work is split into fixed column chunks for
// activations and fixed row blocks for parameter reductions, so results are
// bit-identical for any thread count.

/// Per hidden layer: linear at the active width, mask the newest feature by
/// alpha, layer-normalize over the active features, ReLU. Output layer is
/// linear. Throws InvalidInput for an out-of-range lod or one wider than the
/// model's available width.
template <typename Real>
void forward(const VariableWidthMlp<Real>& model, const Matrix<Real>& inputs, double lod, ForwardCache<Real>& cache);

template <typename Real>
Matrix<Real> forward(const VariableWidthMlp<Real>& model, const Matrix<Real>& inputs, double lod);

/// Reverse-mode gradients of the cached pass with respect to every parameter,
/// accumulated (+=) into `grads` (same layout as parameters()). Parameters
/// outside the active width are not touched.
template <typename Real>
void backward(const VariableWidthMlp<Real>& model, const ForwardCache<Real>& cache, const Matrix<Real>& output_grad,
              std::span<Real> grads);

template <typename Real>
struct AdamState {
  ParamVector<Real> m;
  ParamVector<Real> v;
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  AdamState() = default;
  explicit AdamState(std::size_t n) : m(n, Real(0)), v(n, Real(0)) {}
};

/// Bias-corrected Adam update. Throws NumericalError, leaving parameters and
/// state untouched, when any gradient is non-finite.
template <typename Real>
void adam_step(std::span<Real> params, AdamState<Real>& state, std::span<const Real> grads, double lr);

}  // namespace clod
