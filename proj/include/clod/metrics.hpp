//
// Copyright (C) 2026 The clod Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <span>
#include <vector>

#include "clod/image.hpp"

namespace clod {

/// 10 log10(peak^2 / MSE) over all samples; +infinity for identical images.
/// Throws InvalidInput on a shape mismatch.
double psnr(const Image& a, const Image& b, double peak = 1.0);

/// Mean local SSIM with an 11x11 Gaussian window (sigma 1.5) over valid
/// window positions, C1 = (0.01 L)^2, C2 = (0.03 L)^2, averaged over channels.
/// Throws InvalidInput when the images are smaller than the window.
double ssim(const Image& a, const Image& b, double dynamic_range = 1.0);

/// Rec.709 luminance; RGBA is composited over black first.
Image luminance(const Image& image);

struct FlickerParts {
  double low = 0.0;   ///< DFT magnitude sum below the radial split
  double high = 0.0;  ///< the remaining bins
  double total() const { return low + high; }
};

inline constexpr double kDefaultRadialSplit = 0.25;

/// Temporal flicker of one consecutive-frame change image c: unnormalized 2D
/// DFT magnitudes split at `radial_split` x Nyquist radius.
FlickerParts flicker_of_change(const Image& change, double radial_split = kDefaultRadialSplit);

/// Per transition n = 1..N-1: d_n = L(processed_n) - L(reference_n),
/// c = d_n - d_{n-1}, flicker = s_L + s_H of c. Needs at least two frames,
/// equal sequence lengths and matching shapes.
std::vector<FlickerParts> flicker(std::span<const Image> processed, std::span<const Image> reference,
                                  double radial_split = kDefaultRadialSplit);

}  // namespace clod
