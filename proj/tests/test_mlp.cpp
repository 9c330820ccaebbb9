//
// Copyright (C) 2026 The clod Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <omp.h>

#include <cmath>
#include <limits>
#include <random>

#include "clod/error.hpp"
#include "clod/mlp.hpp"
#include "clod/reference/mlp_reference.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace clod;

namespace {

const ArchConfig kSmall{6, 4, 4, 4, 8};

// Scalar objective sum(output .* weights) so the output gradient is `weights`.
double objective(const VariableWidthMlp<double>& model, const Matrix<double>& x, double lod, const Matrix<double>& w) {
  return forward(model, x, lod).cwiseProduct(w).sum();
}

// Indices of parameters that take part in a pass at `width`.
std::vector<std::size_t> active_indices(const VariableWidthMlp<double>& model, std::uint32_t layer, std::uint32_t width) {
  const ArchConfig& arch = model.arch();
  const auto& L = model.layout().layers[layer];
  const bool output = layer + 1 == model.layer_count();
  const std::uint32_t rows = output ? arch.output_dim : width;
  const std::uint32_t cols = layer == 0 ? arch.input_dim : width;
  std::vector<std::size_t> idx;
  for (std::uint32_t r = 0; r < rows; ++r) {
    for (std::uint32_t c = 0; c < cols; ++c) idx.push_back(L.weight + static_cast<std::size_t>(r) * L.cols + c);
    idx.push_back(L.bias + r);
    if (L.normalized) {
      idx.push_back(L.gain + r);
      idx.push_back(L.beta + r);
    }
  }
  return idx;
}

}  // namespace

TEST_CASE("parameter layout covers every tensor exactly once") {
  for (const ArchConfig& arch : {kSmall, ArchConfig{}, kDeskArch}) {
    const auto layout = ParamLayout::for_arch(arch);
    CHECK(layout.total == param_count(arch, arch.max_width));
    CHECK(layout.layers.size() == arch.depth);
    std::size_t expected = 0;
    for (const auto& L : layout.layers) {
      CHECK(L.weight == expected);
      expected += static_cast<std::size_t>(L.rows) * L.cols;
      CHECK(L.bias == expected);
      expected += L.rows;
      if (L.normalized) {
        CHECK(L.gain == expected);
        CHECK(L.beta == expected + L.rows);
        expected += 2 * L.rows;
      }
    }
    CHECK(expected == layout.total);
  }
}

TEST_CASE("initialization is seeded and bounded by sqrt(6 / fan_in)") {
  VariableWidthMlp<float> a(kDeskArch), b(kDeskArch), c(kDeskArch);
  a.initialize(7);
  b.initialize(7);
  c.initialize(8);
  CHECK(a == b);
  CHECK_FALSE(a == c);
  for (std::uint32_t l = 0; l < a.layer_count(); ++l) {
    const auto& L = a.layout().layers[l];
    const double bound = std::sqrt(6.0 / L.cols);
    CHECK(a.weights(l).cwiseAbs().maxCoeff() <= bound);
    CHECK(a.weights(l).cwiseAbs().maxCoeff() > 0.5 * bound);
    CHECK(a.bias(l).isZero());
    if (L.normalized) {
      CHECK((a.gain(l).array() == 1.0f).all());
      CHECK(a.beta(l).isZero());
    }
  }
}

TEST_CASE("reverse-mode gradients match central differences") {
  const auto x = test::random_matrix<double>(6, 5, 11);
  const auto w = test::random_matrix<double>(4, 5, 12);
  std::mt19937_64 rng(13);
  for (double lod : {1.0, 2.0, 2.5, 3.3, 5.0}) {
    auto model = test::random_model<double>(kSmall, 21);
    ForwardCache<double> cache;
    forward(model, x, lod, cache);
    std::vector<double> grads(model.parameters().size(), 0.0);
    backward(model, cache, w, std::span<double>(grads));
    const std::uint32_t width = width_for_lod(kSmall, lod).active_width;
    for (std::uint32_t l = 0; l < model.layer_count(); ++l) {
      const auto idx = active_indices(model, l, width);
      for (int probe = 0; probe < 20; ++probe) {
        const std::size_t i = idx[rng() % idx.size()];
        const double saved = model.parameters()[i];
        const double h = 1e-6;
        model.parameters()[i] = saved + h;
        const double up = objective(model, x, lod, w);
        model.parameters()[i] = saved - h;
        const double down = objective(model, x, lod, w);
        model.parameters()[i] = saved;
        const double numeric = (up - down) / (2 * h);
        const double scale = std::max({std::abs(numeric), std::abs(grads[i]), 1e-6});
        INFO("lod " << lod << " layer " << l << " index " << i);
        CHECK(std::abs(numeric - grads[i]) / scale < 1e-4);
      }
    }
  }
}

TEST_CASE("parameters outside the active width receive no gradient") {
  auto model = test::random_model<double>(kSmall, 3);
  const auto x = test::random_matrix<double>(6, 7, 4);
  ForwardCache<double> cache;
  forward(model, x, 2.4, cache);  // width 6
  std::vector<double> grads(model.parameters().size(), 0.0);
  backward(model, cache, test::random_matrix<double>(4, 7, 5), std::span<double>(grads));
  std::vector<bool> active(grads.size(), false);
  for (std::uint32_t l = 0; l < model.layer_count(); ++l)
    for (std::size_t i : active_indices(model, l, 6)) active[i] = true;
  for (std::size_t i = 0; i < grads.size(); ++i)
    if (!active[i]) CHECK(grads[i] == 0.0);
}

TEST_CASE("batched kernels agree with the serial reference") {
  const ArchConfig arch{6, 4, 5, 16, 40};
  for (double lod : {1.0, 7.25, 18.0, 24.9, 25.0}) {
    const auto model = test::random_model<double>(arch, 99);
    const auto x = test::random_matrix<double>(6, 130, 5);
    const auto g = test::random_matrix<double>(4, 130, 6);
    const Matrix<double> fast = forward(model, x, lod);
    const Matrix<double> slow = reference::forward(model, x, lod);
    CHECK((fast - slow).cwiseAbs().maxCoeff() < 1e-12);

    ForwardCache<double> cache;
    forward(model, x, lod, cache);
    std::vector<double> g_fast(model.parameters().size(), 0.0), g_slow(g_fast.size(), 0.0);
    backward(model, cache, g, std::span<double>(g_fast));
    reference::backward(model, x, lod, g, std::span<double>(g_slow));
    double worst = 0.0;
    for (std::size_t i = 0; i < g_fast.size(); ++i) worst = std::max(worst, std::abs(g_fast[i] - g_slow[i]));
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("float kernels track double within single precision") {
  const auto md = test::random_model<double>(kDeskArch, 5);
  const auto mf = md.cast<float>();
  const auto xd = test::random_matrix<double>(6, 64, 8);
  const Matrix<float> xf = xd.cast<float>();
  for (double lod : {1.0, 13.7, 49.0}) {
    const Matrix<double> yd = forward(md, xd, lod);
    const Matrix<float> yf = forward(mf, xf, lod);
    CHECK((yf.cast<double>() - yd).cwiseAbs().maxCoeff() < 1e-4);
  }
}

TEST_CASE("results do not depend on the thread count") {
  const auto model = test::random_model<float>(kDeskArch, 1);
  const auto x = test::random_matrix<float>(6, 1000, 2);
  const auto g = test::random_matrix<float>(4, 1000, 3);
  auto run = [&](int threads) {
    omp_set_num_threads(threads);
    ForwardCache<float> cache;
    forward(model, x, 30.5, cache);
    std::vector<float> grads(model.parameters().size(), 0.0f);
    backward(model, cache, g, std::span<float>(grads));
    return std::make_pair(cache.output, grads);
  };
  const auto one = run(1);
  const auto four = run(4);
  omp_set_num_threads(omp_get_num_procs());
  CHECK(one.first == four.first);
  CHECK(one.second == four.second);
}

TEST_CASE("a width-W pass never reads parameters beyond W") {
  const ArchConfig arch{6, 4, 5, 8, 24};
  auto clean = test::random_model<float>(arch, 17);
  const auto x = test::random_matrix<float>(6, 33, 18);
  for (std::uint32_t width = arch.min_width; width < arch.max_width; ++width) {
    auto poisoned = clean;
    const float nan = std::numeric_limits<float>::quiet_NaN();
    for (std::uint32_t l = 0; l < poisoned.layer_count(); ++l) {
      const auto& L = poisoned.layout().layers[l];
      auto W = poisoned.weights(l);
      for (Eigen::Index r = 0; r < W.rows(); ++r)
        for (Eigen::Index c = 0; c < W.cols(); ++c)
          if ((L.normalized && r >= width) || (l > 0 && c >= width)) W(r, c) = nan;
      if (L.normalized)
        for (std::uint32_t r = width; r < L.rows; ++r) {
          poisoned.bias(l)[r] = nan;
          poisoned.gain(l)[r] = nan;
          poisoned.beta(l)[r] = nan;
        }
    }
    const double lod = width - arch.min_width + 1;
    const Matrix<float> a = forward(clean, x, lod);
    const Matrix<float> b = forward(poisoned, x, lod);
    CHECK(b.allFinite());
    CHECK(a == b);
    CHECK(reference::forward(poisoned, x, lod) == reference::forward(clean, x, lod));
  }
}

TEST_CASE("neuron mask scales only the newest feature") {
  std::vector<double> f{0.5, -2.0, 3.0};
  apply_neuron_mask(std::span<double>(f), 1.0);
  CHECK(f == std::vector<double>{0.5, -2.0, 3.0});
  apply_neuron_mask(std::span<double>(f), 0.25);
  CHECK(f == std::vector<double>{0.5, -2.0, 0.75});

  const auto model = test::random_model<double>(kSmall, 2);
  const std::vector<double> x{0.1, -0.2, 0.3, 0.4, -0.5, 0.6};
  std::vector<std::vector<double>> at_one, at_alpha;
  reference::forward_ray(model, std::span<const double>(x), 3.0, &at_one);
  reference::forward_ray(model, std::span<const double>(x), 2.3, &at_alpha);  // width 6, alpha 0.3
  // The first layer sees the same input, so its pre-mask features agree.
  REQUIRE(at_one.size() == at_alpha.size());
  CHECK(at_alpha[0].back() == doctest::Approx(0.3 * at_one[0].back()).epsilon(1e-15));
  for (std::size_t k = 0; k + 1 < at_one[0].size(); ++k) CHECK(at_alpha[0][k] == at_one[0][k]);
}

TEST_CASE("outputs are continuous in the lod inside an integer bracket") {
  const auto model = test::random_model<double>(kDeskArch, 4);
  const auto x = test::random_matrix<double>(6, 16, 9);
  // (9, 10] shares width 25: the upper end is approached from below.
  const Matrix<double> at10 = forward(model, x, 10.0);
  CHECK((at10 - forward(model, x, 10.0 - 1e-9)).cwiseAbs().maxCoeff() < 1e-6);
  const Matrix<double> mid = forward(model, x, 9.5);
  CHECK((mid - forward(model, x, 9.5 + 1e-9)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("forward rejects lods outside the model") {
  VariableWidthMlp<float> model(kSmall);
  model.initialize(1);
  const Matrix<float> x = Matrix<float>::Zero(6, 2);
  CHECK_THROWS_AS(forward(model, x, 0.5), InvalidInput);
  CHECK_THROWS_AS(forward(model, x, 5.5), InvalidInput);
  CHECK_THROWS_AS(forward(model, Matrix<float>(Matrix<float>::Zero(5, 2)), 1.0), InvalidInput);
  model.set_available_width(6);
  CHECK_NOTHROW(forward(model, x, 3.0));
  CHECK_THROWS_AS(forward(model, x, 3.5), InvalidInput);
}

TEST_CASE("adam follows the bias-corrected update") {
  std::vector<double> p{1.0, -2.0, 0.5};
  const std::vector<double> g1{0.1, -0.4, 0.0};
  const std::vector<double> g2{0.3, 0.2, -1.0};
  AdamState<double> s(3);
  adam_step(std::span<double>(p), s, std::span<const double>(g1), 0.01);
  adam_step(std::span<double>(p), s, std::span<const double>(g2), 0.01);

  // Independent recomputation of two steps.
  std::vector<double> q{1.0, -2.0, 0.5}, m(3, 0.0), v(3, 0.0);
  for (int t = 1; t <= 2; ++t) {
    const auto& g = t == 1 ? g1 : g2;
    for (int i = 0; i < 3; ++i) {
      m[i] = 0.9 * m[i] + 0.1 * g[i];
      v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
      const double mh = m[i] / (1 - std::pow(0.9, t));
      const double vh = v[i] / (1 - std::pow(0.999, t));
      q[i] -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
    }
  }
  CHECK(s.step == 2);
  for (int i = 0; i < 3; ++i) CHECK(p[i] == doctest::Approx(q[i]).epsilon(1e-14));
}

TEST_CASE("adam refuses non-finite gradients and leaves state alone") {
  std::vector<float> p{1.0f, 2.0f};
  AdamState<float> s(2);
  const std::vector<float> bad{0.5f, std::numeric_limits<float>::infinity()};
  CHECK_THROWS_AS(adam_step(std::span<float>(p), s, std::span<const float>(bad), 0.1), NumericalError);
  CHECK(p == std::vector<float>{1.0f, 2.0f});
  CHECK(s.step == 0);
  CHECK(s.m == ParamVector<float>{0.0f, 0.0f});
}

TEST_CASE("parameter buffers keep Eigen's alignment") {
  // Vectorized sums peel by address; a drifting base changes rounding.
  for (int i = 0; i < 8; ++i) {
    std::vector<char> spacer(static_cast<std::size_t>(i) * 4 + 1);
    VariableWidthMlp<float> model(ArchConfig{6, 4, 3, 4, 8});
    AdamState<float> state(model.parameters().size());
    CHECK(reinterpret_cast<std::uintptr_t>(model.parameters().data()) % EIGEN_MAX_ALIGN_BYTES == 0);
    CHECK(reinterpret_cast<std::uintptr_t>(state.m.data()) % EIGEN_MAX_ALIGN_BYTES == 0);
  }
}

TEST_CASE("gradients do not depend on where the caller's buffer sits") {
  const auto model = test::random_model<float>(kDeskArch, 4);
  const auto x = test::random_matrix<float>(6, 300, 5);
  const auto g = test::random_matrix<float>(4, 300, 6);
  ForwardCache<float> cache;
  forward(model, x, 20.5, cache);
  const std::size_t n = model.parameters().size();
  ParamVector<float> aligned(n, 0.0f);
  backward(model, cache, g, std::span<float>(aligned));
  for (std::size_t shift = 1; shift < 4; ++shift) {
    std::vector<float> buffer(n + shift, 0.0f);
    const std::span<float> offset(buffer.data() + shift, n);
    backward(model, cache, g, offset);
    CHECK(std::equal(offset.begin(), offset.end(), aligned.begin()));
  }
}
