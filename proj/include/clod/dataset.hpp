//
// Copyright (C) 2026 The clod Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "clod/geometry.hpp"
#include "clod/image.hpp"
#include "clod/sampler.hpp"

namespace clod {

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// 216/12/12-of-240 proportions: val and test each get max(1, round(n / 20))
/// evenly spaced views, the rest train. Fewer than 3 views are all train.
Split compute_split(std::size_t n);

/// On disk: cameras.json, images/NNNN.png (RGBA), saliency/NNNN.png
/// (grayscale) and split.json.
struct Dataset {
  std::vector<Camera> cameras;
  std::vector<Image> images;    ///< RGBA
  std::vector<Image> saliency;  ///< 1 channel; empty when the map is missing
  Split split;
};

void write_dataset(const std::filesystem::path& dir, const Dataset& data);

using WarningSink = std::function<void(const std::string&)>;

/// Missing saliency maps are reported through `warn` and load as empty
/// images (s = 0). A missing split.json makes every view a training view.
/// Throws FormatError for a malformed directory and InvalidInput when image
/// sizes disagree with their cameras.
Dataset load_dataset(const std::filesystem::path& dir, const WarningSink& warn = {});

/// Training views for `indices`, converted to RGBA if needed.
std::vector<TrainingView> make_views(const Dataset& data, const std::vector<std::size_t>& indices);

}  // namespace clod
