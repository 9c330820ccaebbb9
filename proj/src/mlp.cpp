//
// Copyright (C) 2026 The clod Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "clod/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "clod/error.hpp"

namespace clod {

ParamLayout ParamLayout::for_arch(const ArchConfig& arch) {
  arch.validate();
  ParamLayout layout;
  std::size_t offset = 0;
  for (std::uint32_t l = 0; l < arch.depth; ++l) {
    Layer layer;
    layer.rows = (l + 1 == arch.depth) ? arch.output_dim : arch.max_width;
    layer.cols = (l == 0) ? arch.input_dim : arch.max_width;
    layer.normalized = l + 1 < arch.depth;
    layer.weight = offset;
    offset += static_cast<std::size_t>(layer.rows) * layer.cols;
    layer.bias = offset;
    offset += layer.rows;
    if (layer.normalized) {
      layer.gain = offset;
      offset += layer.rows;
      layer.beta = offset;
      offset += layer.rows;
    }
    layout.layers.push_back(layer);
  }
  layout.total = offset;
  return layout;
}

template <typename Real>
VariableWidthMlp<Real>::VariableWidthMlp(const ArchConfig& arch)
    : arch_(arch), layout_(ParamLayout::for_arch(arch)), params_(layout_.total, Real(0)), available_width_(arch.max_width) {
  for (const auto& layer : layout_.layers)
    if (layer.normalized) std::fill_n(params_.begin() + layer.gain, layer.rows, Real(1));
}

template <typename Real>
void VariableWidthMlp<Real>::set_available_width(std::uint32_t width) {
  if (width < arch_.min_width || width > arch_.max_width) throw_invalid("available width out of range");
  available_width_ = width;
}

template <typename Real>
void VariableWidthMlp<Real>::initialize(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  std::fill(params_.begin(), params_.end(), Real(0));
  for (const auto& layer : layout_.layers) {
    const double bound = std::sqrt(6.0 / layer.cols);
    const std::size_t n = static_cast<std::size_t>(layer.rows) * layer.cols;
    for (std::size_t i = 0; i < n; ++i) params_[layer.weight + i] = static_cast<Real>((2.0 * uniform() - 1.0) * bound);
    if (layer.normalized) std::fill_n(params_.begin() + layer.gain, layer.rows, Real(1));
  }
  available_width_ = arch_.max_width;
}

template <typename Real>
typename VariableWidthMlp<Real>::WeightMap VariableWidthMlp<Real>::weights(std::uint32_t l) {
  const auto& L = layout_.layers.at(l);
  return WeightMap(params_.data() + L.weight, L.rows, L.cols);
}
template <typename Real>
typename VariableWidthMlp<Real>::ConstWeightMap VariableWidthMlp<Real>::weights(std::uint32_t l) const {
  const auto& L = layout_.layers.at(l);
  return ConstWeightMap(params_.data() + L.weight, L.rows, L.cols);
}
template <typename Real>
typename VariableWidthMlp<Real>::VectorMap VariableWidthMlp<Real>::bias(std::uint32_t l) {
  const auto& L = layout_.layers.at(l);
  return VectorMap(params_.data() + L.bias, L.rows);
}
template <typename Real>
typename VariableWidthMlp<Real>::ConstVectorMap VariableWidthMlp<Real>::bias(std::uint32_t l) const {
  const auto& L = layout_.layers.at(l);
  return ConstVectorMap(params_.data() + L.bias, L.rows);
}
template <typename Real>
typename VariableWidthMlp<Real>::VectorMap VariableWidthMlp<Real>::gain(std::uint32_t l) {
  const auto& L = layout_.layers.at(l);
  if (!L.normalized) throw_invalid("output layer has no normalization");
  return VectorMap(params_.data() + L.gain, L.rows);
}
template <typename Real>
typename VariableWidthMlp<Real>::ConstVectorMap VariableWidthMlp<Real>::gain(std::uint32_t l) const {
  const auto& L = layout_.layers.at(l);
  if (!L.normalized) throw_invalid("output layer has no normalization");
  return ConstVectorMap(params_.data() + L.gain, L.rows);
}
template <typename Real>
typename VariableWidthMlp<Real>::VectorMap VariableWidthMlp<Real>::beta(std::uint32_t l) {
  const auto& L = layout_.layers.at(l);
  if (!L.normalized) throw_invalid("output layer has no normalization");
  return VectorMap(params_.data() + L.beta, L.rows);
}
template <typename Real>
typename VariableWidthMlp<Real>::ConstVectorMap VariableWidthMlp<Real>::beta(std::uint32_t l) const {
  const auto& L = layout_.layers.at(l);
  if (!L.normalized) throw_invalid("output layer has no normalization");
  return ConstVectorMap(params_.data() + L.beta, L.rows);
}

namespace {

using Eigen::Index;

constexpr Index kColumnChunk = 64;
constexpr Index kRowBlock = 16;

// Runs f(start, count) over fixed-size pieces of [0, n). The partition does
// not depend on the number of threads.
template <typename F>
void for_each_piece(Index n, Index piece, F&& f) {
  const Index count = (n + piece - 1) / piece;
#pragma omp parallel for schedule(static)
  for (Index k = 0; k < count; ++k) {
    const Index start = k * piece;
    f(start, std::min(piece, n - start));
  }
}

template <typename Real>
std::uint32_t checked_width(const VariableWidthMlp<Real>& model, double lod, double& alpha) {
  const auto wa = width_for_lod(model.arch(), lod);
  if (wa.active_width > model.available_width())
    throw_invalid("lod " + std::to_string(lod) + " needs width " + std::to_string(wa.active_width) +
                  " but only " + std::to_string(model.available_width()) + " is available");
  alpha = wa.alpha;
  return wa.active_width;
}

}  // namespace

template <typename Real>
void forward(const VariableWidthMlp<Real>& model, const Matrix<Real>& inputs, double lod, ForwardCache<Real>& cache) {
  const ArchConfig& arch = model.arch();
  double alpha_d = 1.0;
  const std::uint32_t width = checked_width(model, lod, alpha_d);
  if (inputs.rows() != static_cast<Index>(arch.input_dim)) throw_invalid("forward: input rows must equal input_dim");

  const Index batch = inputs.cols();
  const std::uint32_t hidden = arch.hidden_layers();
  const Index w = width;
  cache.width = width;
  cache.alpha = static_cast<Real>(alpha_d);
  cache.input = inputs;
  cache.normalized.resize(hidden);
  cache.activation.resize(hidden);
  cache.inv_std.resize(hidden);
  for (std::uint32_t l = 0; l < hidden; ++l) {
    cache.normalized[l].resize(w, batch);
    cache.activation[l].resize(w, batch);
    cache.inv_std[l].resize(batch);
  }
  cache.output.resize(arch.output_dim, batch);
  const Real alpha = cache.alpha;

  for_each_piece(batch, kColumnChunk, [&](Index c0, Index n) {
    Matrix<Real> z(w, n);
    for (std::uint32_t l = 0; l < hidden; ++l) {
      const auto weights = model.weights(l);
      if (l == 0)
        z.noalias() = weights.topLeftCorner(w, arch.input_dim) * inputs.middleCols(c0, n);
      else
        z.noalias() = weights.topLeftCorner(w, w) * cache.activation[l - 1].middleCols(c0, n);
      z.colwise() += model.bias(l).head(w);
      z.row(w - 1) *= alpha;

      auto yhat = cache.normalized[l].middleCols(c0, n);
      for (Index j = 0; j < n; ++j) {
        double sum = 0.0;
        for (Index i = 0; i < w; ++i) sum += z(i, j);
        const double mean = sum / w;
        double sq = 0.0;
        for (Index i = 0; i < w; ++i) {
          const double d = z(i, j) - mean;
          sq += d * d;
        }
        const double inv = 1.0 / std::sqrt(sq / w + kLayerNormEps);
        for (Index i = 0; i < w; ++i) yhat(i, j) = static_cast<Real>((z(i, j) - mean) * inv);
        cache.inv_std[l](c0 + j) = static_cast<Real>(inv);
      }
      const auto gain = model.gain(l).head(w);
      const auto beta = model.beta(l).head(w);
      cache.activation[l].middleCols(c0, n) =
          ((gain.asDiagonal() * yhat).colwise() + beta).cwiseMax(Real(0));
    }
    const std::uint32_t out_layer = hidden;
    auto out = cache.output.middleCols(c0, n);
    out.noalias() = model.weights(out_layer).topLeftCorner(arch.output_dim, w) * cache.activation.back().middleCols(c0, n);
    out.colwise() += model.bias(out_layer);
  });
}

template <typename Real>
Matrix<Real> forward(const VariableWidthMlp<Real>& model, const Matrix<Real>& inputs, double lod) {
  ForwardCache<Real> cache;
  forward(model, inputs, lod, cache);
  return std::move(cache.output);
}

template <typename Real>
void backward(const VariableWidthMlp<Real>& model, const ForwardCache<Real>& cache, const Matrix<Real>& output_grad,
              std::span<Real> grads) {
  const ArchConfig& arch = model.arch();
  const ParamLayout& layout = model.layout();
  const Index batch = static_cast<Index>(cache.batch());
  const Index w = cache.width;
  const std::uint32_t hidden = arch.hidden_layers();
  if (grads.size() != layout.total) throw_invalid("backward: gradient buffer does not match parameter layout");
  if (output_grad.rows() != static_cast<Index>(arch.output_dim) || output_grad.cols() != batch)
    throw_invalid("backward: loss gradient shape does not match the cached batch");
  if (cache.activation.size() != hidden || w < 1) throw_invalid("backward: cache does not belong to this model");

  using RowMajor = typename VariableWidthMlp<Real>::RowMajor;
  using VecMap = Eigen::Map<Eigen::Matrix<Real, Eigen::Dynamic, 1>>;
  auto grad_weights = [&](std::uint32_t l) {
    const auto& L = layout.layers[l];
    return Eigen::Map<RowMajor>(grads.data() + L.weight, L.rows, L.cols);
  };
  auto grad_vec = [&](std::size_t offset, std::uint32_t rows) { return VecMap(grads.data() + offset, rows); };

  // Weight and bias gradients for one layer, reduced over the batch in fixed
  // row blocks. Reductions land in owned temporaries first: Eigen picks its
  // vectorized path by destination address, and `grads` may sit anywhere.
  auto reduce_linear = [&](std::uint32_t l, const Matrix<Real>& delta, const Matrix<Real>& x, Index rows, Index cols) {
    auto gw = grad_weights(l);
    auto gb = grad_vec(layout.layers[l].bias, layout.layers[l].rows);
    for_each_piece(rows, kRowBlock, [&](Index r0, Index rn) {
      const Matrix<Real> dw = delta.middleRows(r0, rn) * x.topRows(cols).transpose();
      const Eigen::Matrix<Real, Eigen::Dynamic, 1> db = delta.middleRows(r0, rn).rowwise().sum();
      gw.block(r0, 0, rn, cols) += dw;
      gb.segment(r0, rn) += db;
    });
  };

  // Output layer.
  reduce_linear(hidden, output_grad, cache.activation.back(), arch.output_dim, w);
  Matrix<Real> d_act(w, batch);
  {
    const auto wout = model.weights(hidden).topLeftCorner(arch.output_dim, w);
    for_each_piece(batch, kColumnChunk, [&](Index c0, Index n) {
      d_act.middleCols(c0, n).noalias() = wout.transpose() * output_grad.middleCols(c0, n);
    });
  }

  Matrix<Real> d_y(w, batch);
  Matrix<Real> d_z(w, batch);
  const double alpha = cache.alpha;
  for (std::uint32_t l = hidden; l-- > 0;) {
    const auto& yhat = cache.normalized[l];
    const auto& act = cache.activation[l];
    const auto gain = model.gain(l).head(w);

    for_each_piece(batch, kColumnChunk, [&](Index c0, Index n) {
      for (Index j = c0; j < c0 + n; ++j) {
        double mean_g = 0.0;
        double mean_gy = 0.0;
        for (Index i = 0; i < w; ++i) {
          const Real dy = act(i, j) > Real(0) ? d_act(i, j) : Real(0);
          d_y(i, j) = dy;
          const double g = static_cast<double>(gain(i)) * dy;
          mean_g += g;
          mean_gy += g * yhat(i, j);
        }
        mean_g /= w;
        mean_gy /= w;
        const double inv = cache.inv_std[l](j);
        for (Index i = 0; i < w; ++i) {
          const double g = static_cast<double>(gain(i)) * d_y(i, j);
          d_z(i, j) = static_cast<Real>(inv * (g - mean_g - yhat(i, j) * mean_gy));
        }
        d_z(w - 1, j) = static_cast<Real>(alpha * d_z(w - 1, j));
      }
    });

    auto g_gain = grad_vec(layout.layers[l].gain, layout.layers[l].rows);
    auto g_beta = grad_vec(layout.layers[l].beta, layout.layers[l].rows);
    for_each_piece(w, kRowBlock, [&](Index r0, Index rn) {
      const Eigen::Matrix<Real, Eigen::Dynamic, 1> dg =
          d_y.middleRows(r0, rn).cwiseProduct(yhat.middleRows(r0, rn)).rowwise().sum();
      const Eigen::Matrix<Real, Eigen::Dynamic, 1> db = d_y.middleRows(r0, rn).rowwise().sum();
      g_gain.segment(r0, rn) += dg;
      g_beta.segment(r0, rn) += db;
    });

    const Matrix<Real>& x = (l == 0) ? cache.input : cache.activation[l - 1];
    const Index in = (l == 0) ? static_cast<Index>(arch.input_dim) : w;
    reduce_linear(l, d_z, x, w, in);

    if (l > 0) {
      const auto wl = model.weights(l).topLeftCorner(w, w);
      for_each_piece(batch, kColumnChunk, [&](Index c0, Index n) {
        d_act.middleCols(c0, n).noalias() = wl.transpose() * d_z.middleCols(c0, n);
      });
    }
  }
}

template <typename Real>
void adam_step(std::span<Real> params, AdamState<Real>& state, std::span<const Real> grads, double lr) {
  if (params.size() != grads.size() || state.m.size() != params.size() || state.v.size() != params.size())
    throw_invalid("adam_step: parameter, gradient and moment shapes differ");
  for (const Real g : grads)
    if (!std::isfinite(static_cast<double>(g))) throw NumericalError("adam_step: non-finite gradient, step aborted");

  state.step += 1;
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  const auto n = static_cast<std::ptrdiff_t>(params.size());
  Real* p = params.data();
  Real* m = state.m.data();
  Real* v = state.v.data();
  const Real* g = grads.data();
  const double eps = state.eps;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double gi = g[i];
    const double mi = b1 * m[i] + (1.0 - b1) * gi;
    const double vi = b2 * v[i] + (1.0 - b2) * gi * gi;
    m[i] = static_cast<Real>(mi);
    v[i] = static_cast<Real>(vi);
    const double m_hat = mi / correction1;
    const double v_hat = vi / correction2;
    p[i] = static_cast<Real>(p[i] - lr * m_hat / (std::sqrt(v_hat) + eps));
  }
}

template class VariableWidthMlp<float>;
template class VariableWidthMlp<double>;

template void forward(const VariableWidthMlp<float>&, const Matrix<float>&, double, ForwardCache<float>&);
template void forward(const VariableWidthMlp<double>&, const Matrix<double>&, double, ForwardCache<double>&);
template Matrix<float> forward(const VariableWidthMlp<float>&, const Matrix<float>&, double);
template Matrix<double> forward(const VariableWidthMlp<double>&, const Matrix<double>&, double);
template void backward(const VariableWidthMlp<float>&, const ForwardCache<float>&, const Matrix<float>&,
                       std::span<float>);
template void backward(const VariableWidthMlp<double>&, const ForwardCache<double>&, const Matrix<double>&,
                       std::span<double>);
template void adam_step(std::span<float>, AdamState<float>&, std::span<const float>, double);
template void adam_step(std::span<double>, AdamState<double>&, std::span<const double>, double);

}  // namespace clod
