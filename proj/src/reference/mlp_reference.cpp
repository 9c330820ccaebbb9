//
// Copyright (C) 2026 The clod Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "clod/reference/mlp_reference.hpp"

#include <cmath>

#include "clod/error.hpp"

namespace clod::reference {

namespace {

template <typename Real>
struct LayerTrace {
  std::vector<Real> input;
  std::vector<Real> yhat;
  std::vector<Real> act;
  double inv_std = 1.0;
};

template <typename Real>
struct RayTrace {
  std::uint32_t width = 0;
  double alpha = 1.0;
  std::vector<LayerTrace<Real>> layers;
  std::vector<Real> last_input;
  std::vector<Real> output;
};

template <typename Real>
RayTrace<Real> trace(const VariableWidthMlp<Real>& model, std::span<const Real> input, double lod,
                     std::vector<std::vector<Real>>* masked_features) {
  const ArchConfig& arch = model.arch();
  const auto [width, alpha] = width_for_lod(arch, lod);
  if (width > model.available_width()) throw_invalid("reference forward: lod exceeds available width");
  if (input.size() != arch.input_dim) throw_invalid("reference forward: wrong input size");

  const auto& params = model.parameters();
  const auto& layout = model.layout();
  RayTrace<Real> t;
  t.width = width;
  t.alpha = alpha;
  std::vector<Real> x(input.begin(), input.end());
  if (masked_features) masked_features->clear();

  for (std::uint32_t l = 0; l < arch.hidden_layers(); ++l) {
    const auto& L = layout.layers[l];
    const std::uint32_t in = (l == 0) ? arch.input_dim : width;
    LayerTrace<Real> lt;
    lt.input = x;
    std::vector<Real> f(width);
    for (std::uint32_t r = 0; r < width; ++r) {
      Real acc = params[L.bias + r];
      for (std::uint32_t c = 0; c < in; ++c) acc += params[L.weight + static_cast<std::size_t>(r) * L.cols + c] * x[c];
      f[r] = acc;
    }
    apply_neuron_mask(std::span<Real>(f), static_cast<Real>(alpha));
    if (masked_features) masked_features->push_back(f);

    double mean = 0.0;
    for (Real v : f) mean += v;
    mean /= width;
    double var = 0.0;
    for (Real v : f) var += (v - mean) * (v - mean);
    var /= width;
    lt.inv_std = 1.0 / std::sqrt(var + kLayerNormEps);
    lt.yhat.resize(width);
    lt.act.resize(width);
    for (std::uint32_t r = 0; r < width; ++r) {
      lt.yhat[r] = static_cast<Real>((f[r] - mean) * lt.inv_std);
      const Real y = params[L.gain + r] * lt.yhat[r] + params[L.beta + r];
      lt.act[r] = y > Real(0) ? y : Real(0);
    }
    x = lt.act;
    t.layers.push_back(std::move(lt));
  }

  const auto& O = layout.layers.back();
  t.last_input = x;
  t.output.resize(arch.output_dim);
  for (std::uint32_t r = 0; r < arch.output_dim; ++r) {
    Real acc = params[O.bias + r];
    for (std::uint32_t c = 0; c < width; ++c) acc += params[O.weight + static_cast<std::size_t>(r) * O.cols + c] * x[c];
    t.output[r] = acc;
  }
  return t;
}

}  // namespace

template <typename Real>
std::vector<Real> forward_ray(const VariableWidthMlp<Real>& model, std::span<const Real> input, double lod,
                              std::vector<std::vector<Real>>* masked_features) {
  return trace(model, input, lod, masked_features).output;
}

template <typename Real>
Matrix<Real> forward(const VariableWidthMlp<Real>& model, const Matrix<Real>& inputs, double lod) {
  Matrix<Real> out(model.arch().output_dim, inputs.cols());
  for (Eigen::Index j = 0; j < inputs.cols(); ++j) {
    const auto y = forward_ray(model, std::span<const Real>(inputs.col(j).data(), inputs.rows()), lod);
    for (std::size_t r = 0; r < y.size(); ++r) out(r, j) = y[r];
  }
  return out;
}

template <typename Real>
void backward(const VariableWidthMlp<Real>& model, const Matrix<Real>& inputs, double lod,
              const Matrix<Real>& output_grad, std::span<Real> grads) {
  const ArchConfig& arch = model.arch();
  const auto& layout = model.layout();
  const auto& params = model.parameters();
  if (grads.size() != layout.total) throw_invalid("reference backward: gradient size mismatch");
  if (output_grad.cols() != inputs.cols() || output_grad.rows() != static_cast<Eigen::Index>(arch.output_dim))
    throw_invalid("reference backward: mismatched batch");

  for (Eigen::Index j = 0; j < inputs.cols(); ++j) {
    const auto t = trace(model, std::span<const Real>(inputs.col(j).data(), inputs.rows()), lod,
                           static_cast<std::vector<std::vector<Real>>*>(nullptr));
    const std::uint32_t width = t.width;

    const auto& O = layout.layers.back();
    std::vector<Real> d_x(width, Real(0));
    for (std::uint32_t r = 0; r < arch.output_dim; ++r) {
      const Real g = output_grad(r, j);
      grads[O.bias + r] += g;
      for (std::uint32_t c = 0; c < width; ++c) {
        grads[O.weight + static_cast<std::size_t>(r) * O.cols + c] += g * t.last_input[c];
        d_x[c] += params[O.weight + static_cast<std::size_t>(r) * O.cols + c] * g;
      }
    }

    for (std::uint32_t l = arch.hidden_layers(); l-- > 0;) {
      const auto& L = layout.layers[l];
      const auto& lt = t.layers[l];
      std::vector<Real> d_y(width);
      for (std::uint32_t r = 0; r < width; ++r) d_y[r] = lt.act[r] > Real(0) ? d_x[r] : Real(0);

      double mean_g = 0.0;
      double mean_gy = 0.0;
      for (std::uint32_t r = 0; r < width; ++r) {
        grads[L.gain + r] += d_y[r] * lt.yhat[r];
        grads[L.beta + r] += d_y[r];
        const double g = static_cast<double>(params[L.gain + r]) * d_y[r];
        mean_g += g;
        mean_gy += g * lt.yhat[r];
      }
      mean_g /= width;
      mean_gy /= width;
      std::vector<Real> d_f(width);
      for (std::uint32_t r = 0; r < width; ++r) {
        const double g = static_cast<double>(params[L.gain + r]) * d_y[r];
        d_f[r] = static_cast<Real>(lt.inv_std * (g - mean_g - lt.yhat[r] * mean_gy));
      }
      d_f[width - 1] = static_cast<Real>(t.alpha * d_f[width - 1]);

      const std::uint32_t in = (l == 0) ? arch.input_dim : width;
      std::vector<Real> d_in(in, Real(0));
      for (std::uint32_t r = 0; r < width; ++r) {
        grads[L.bias + r] += d_f[r];
        for (std::uint32_t c = 0; c < in; ++c) {
          grads[L.weight + static_cast<std::size_t>(r) * L.cols + c] += d_f[r] * lt.input[c];
          d_in[c] += params[L.weight + static_cast<std::size_t>(r) * L.cols + c] * d_f[r];
        }
      }
      d_x = std::move(d_in);
    }
  }
}

template std::vector<float> forward_ray(const VariableWidthMlp<float>&, std::span<const float>, double,
                                        std::vector<std::vector<float>>*);
template std::vector<double> forward_ray(const VariableWidthMlp<double>&, std::span<const double>, double,
                                         std::vector<std::vector<double>>*);
template Matrix<float> forward(const VariableWidthMlp<float>&, const Matrix<float>&, double);
template Matrix<double> forward(const VariableWidthMlp<double>&, const Matrix<double>&, double);
template void backward(const VariableWidthMlp<float>&, const Matrix<float>&, double, const Matrix<float>&,
                       std::span<float>);
template void backward(const VariableWidthMlp<double>&, const Matrix<double>&, double, const Matrix<double>&,
                       std::span<double>);

}  // namespace clod::reference
