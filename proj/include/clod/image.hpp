//
// Copyright (C) 2026 The clod Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <filesystem>
#include <span>
#include <vector>

namespace clod {

/// Row-major interleaved float image (height x width x channels).
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<float> pixels;

  Image() = default;
  Image(int w, int h, int c, float fill = 0.0f);

  bool empty() const { return pixels.empty(); }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }

  float& at(int y, int x, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  float at(int y, int x, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::span<float> pixel(int y, int x) {
    return {pixels.data() + (static_cast<std::size_t>(y) * width + x) * channels,
            static_cast<std::size_t>(channels)};
  }
  std::span<const float> pixel(int y, int x) const {
    return {pixels.data() + (static_cast<std::size_t>(y) * width + x) * channels,
            static_cast<std::size_t>(channels)};
  }

  bool same_shape(const Image& other) const {
    return width == other.width && height == other.height && channels == other.channels;
  }
};

/// Returns a copy with every sample clamped to [0, 1].
Image clamped(const Image& image);

/// Single-channel view of one channel.
Image extract_channel(const Image& image, int channel);

// PNG I/O. 8-bit; 1 channel is written as grayscale, 4 as RGBA. Values are
// clamped to [0, 1] and rounded on write.
Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& image);

}  // namespace clod
