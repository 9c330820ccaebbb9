//
// Copyright (C) 2026 The clod Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <cmath>
#include <complex>
#include <numbers>

#include "clod/error.hpp"
#include "clod/metrics.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace clod;

namespace {

Image shifted(const Image& img, float delta) {
  Image out = img;
  for (float& v : out.pixels) v += delta;
  return out;
}

// Straightforward SSIM: explicit 11x11 Gaussian sums at every valid window.
double naive_ssim(const Image& a, const Image& b) {
  double g[11][11], norm = 0.0;
  for (int y = 0; y < 11; ++y)
    for (int x = 0; x < 11; ++x) norm += g[y][x] = std::exp(-((x - 5) * (x - 5) + (y - 5) * (y - 5)) / (2 * 1.5 * 1.5));
  const double c1 = 1e-4, c2 = 9e-4;
  double total = 0.0;
  int count = 0;
  for (int c = 0; c < a.channels; ++c)
    for (int y0 = 0; y0 + 11 <= a.height; ++y0)
      for (int x0 = 0; x0 + 11 <= a.width; ++x0) {
        double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
        for (int y = 0; y < 11; ++y)
          for (int x = 0; x < 11; ++x) {
            const double w = g[y][x] / norm, va = a.at(y0 + y, x0 + x, c), vb = b.at(y0 + y, x0 + x, c);
            ma += w * va;
            mb += w * vb;
            saa += w * va * va;
            sbb += w * vb * vb;
            sab += w * va * vb;
          }
        const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
        total += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++count;
      }
  return total / count;
}

// O(N^2) DFT split at the same radial cutoff, for comparison with FFTW.
FlickerParts naive_flicker(const Image& c, double split) {
  FlickerParts parts;
  const int w = c.width, h = c.height;
  for (int ky = 0; ky < h; ++ky)
    for (int kx = 0; kx < w; ++kx) {
      std::complex<double> z = 0.0;
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          z += double(c.at(y, x, 0)) *
               std::polar(1.0, -2.0 * std::numbers::pi * (double(kx) * x / w + double(ky) * y / h));
      // Frequency of a bin measured as its distance to the nearest alias of 0.
      const double fx = std::min(kx, w - kx) / double(w), fy = std::min(ky, h - ky) / double(h);
      (std::hypot(fx, fy) < 0.5 * split ? parts.low : parts.high) += std::abs(z);
    }
  return parts;
}

}  // namespace

TEST_CASE("psnr of known offsets") {
  const Image a = test::random_image(20, 10, 3, 1);
  CHECK(psnr(a, shifted(a, 0.1f)) == doctest::Approx(20.0).epsilon(1e-5));
  CHECK(psnr(a, shifted(a, 0.01f)) == doctest::Approx(40.0).epsilon(1e-4));
  CHECK(psnr(a, shifted(a, 2.0f), 2.0) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(std::isinf(psnr(a, a)));
  CHECK(psnr(a, a) > 0);
  CHECK_THROWS_AS(psnr(a, Image(20, 10, 4)), InvalidInput);
}

TEST_CASE("ssim identities and closed forms") {
  const Image a = test::random_image(16, 14, 3, 2);
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-9));

  // Constant images: the structure term is C2 / C2, leaving the mean term.
  const double u = 0.3, v = 0.7, c1 = 1e-4;
  CHECK(ssim(Image(12, 12, 1, float(u)), Image(12, 12, 1, float(v))) ==
        doctest::Approx((2 * u * v + c1) / (u * u + v * v + c1)).epsilon(1e-6));

  Image board(12, 12, 1), inverse(12, 12, 1);
  for (int y = 0; y < 12; ++y)
    for (int x = 0; x < 12; ++x) {
      board.at(y, x, 0) = (x + y) % 2 ? 1.0f : 0.0f;
      inverse.at(y, x, 0) = 1.0f - board.at(y, x, 0);
    }
  CHECK(ssim(board, inverse) < 0.0);

  const Image b = test::random_image(16, 14, 3, 3);
  CHECK(ssim(a, b) == doctest::Approx(naive_ssim(a, b)).epsilon(1e-6));
  const Image noisy = shifted(a, 0.05f);
  CHECK(ssim(a, noisy) == doctest::Approx(naive_ssim(a, noisy)).epsilon(1e-6));
  CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)).epsilon(1e-12));

  CHECK_THROWS_AS(ssim(Image(10, 20, 1), Image(10, 20, 1)), InvalidInput);
  CHECK_THROWS_AS(ssim(a, Image(16, 14, 1)), InvalidInput);
}

TEST_CASE("luminance weights and alpha") {
  Image rgb(1, 1, 3);
  rgb.pixels = {1, 0, 0};
  CHECK(luminance(rgb).pixels[0] == doctest::Approx(0.2126));
  rgb.pixels = {0, 1, 0};
  CHECK(luminance(rgb).pixels[0] == doctest::Approx(0.7152));
  rgb.pixels = {0, 0, 1};
  CHECK(luminance(rgb).pixels[0] == doctest::Approx(0.0722));
  Image rgba(1, 1, 4);
  rgba.pixels = {1, 1, 1, 0.5f};
  CHECK(luminance(rgba).pixels[0] == doctest::Approx(0.5));
  const Image gray = test::random_image(3, 2, 1, 4);
  CHECK(luminance(gray).pixels == gray.pixels);
  CHECK_THROWS_AS(luminance(Image(2, 2, 2)), InvalidInput);
}

TEST_CASE("flicker of simple changes") {
  CHECK(flicker_of_change(Image(8, 8, 1)).total() == 0.0);

  // A uniform change of 2e over N pixels lands entirely in the DC bin.
  const float e = 0.01f;
  const std::vector<Image> reference(2, Image(8, 6, 3));
  const std::vector<Image> processed{Image(8, 6, 3, -e), Image(8, 6, 3, e)};
  const auto parts = flicker(processed, reference);
  REQUIRE(parts.size() == 1);
  CHECK(parts[0].low == doctest::Approx(2.0 * e * 48).epsilon(1e-6));
  CHECK(parts[0].high == doctest::Approx(0.0));

  // A pixel-level checkerboard is pure Nyquist energy.
  Image board(8, 8, 1);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) board.at(y, x, 0) = (x + y) % 2 ? 1.0f : -1.0f;
  const auto high = flicker_of_change(board);
  CHECK(high.low == doctest::Approx(0.0));
  CHECK(high.high == doctest::Approx(64.0));
}

TEST_CASE("flicker matches a direct DFT") {
  for (const auto& [w, h] : {std::pair{7, 5}, std::pair{8, 8}, std::pair{12, 9}}) {
    Image c = test::random_image(w, h, 1, w * 31 + h);
    for (float& v : c.pixels) v -= 0.5f;
    for (double split : {0.25, 0.5, 1.0}) {
      const auto fast = flicker_of_change(c, split);
      const auto slow = naive_flicker(c, split);
      CHECK(fast.low == doctest::Approx(slow.low).epsilon(1e-9));
      CHECK(fast.high == doctest::Approx(slow.high).epsilon(1e-9));
    }
  }
}

TEST_CASE("flicker ignores static error and sums its bands") {
  std::vector<Image> reference, processed;
  const Image error = shifted(test::random_image(10, 10, 3, 5), -0.5f);
  for (int i = 0; i < 5; ++i) {
    reference.push_back(test::random_image(10, 10, 3, 10 + i));
    Image p = reference.back();
    for (std::size_t k = 0; k < p.pixels.size(); ++k) p.pixels[k] += 0.2f * error.pixels[k];
    processed.push_back(p);
  }
  for (const auto& f : flicker(processed, reference)) CHECK(f.total() < 1e-4);

  processed[2] = test::random_image(10, 10, 3, 99);
  const auto changed = flicker(processed, reference);
  REQUIRE(changed.size() == 4);
  CHECK(changed[0].total() < 1e-4);
  CHECK(changed[1].total() > 1.0);
  CHECK(changed[2].total() > 1.0);
  for (const auto& f : changed) CHECK(f.total() == f.low + f.high);

  CHECK_THROWS_AS(flicker(std::span<const Image>(processed.data(), 1), std::span<const Image>(reference.data(), 1)),
                  InvalidInput);
  CHECK_THROWS_AS(flicker(std::span<const Image>(processed.data(), 3), std::span<const Image>(reference.data(), 4)),
                  InvalidInput);
  processed[1] = Image(9, 10, 3);
  CHECK_THROWS_AS(flicker(processed, reference), InvalidInput);
}
