//
// Copyright (C) 2026 The clod Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "clod/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "clod/error.hpp"
#include "json.hpp"

namespace clod {

Split compute_split(std::size_t n) {
  Split split;
  if (n < 3) {
    for (std::size_t i = 0; i < n; ++i) split.train.push_back(i);
    return split;
  }
  const auto held = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(n / 20.0)));
  std::vector<int> role(n, 0);
  for (std::size_t k = 0; k < held; ++k) {
    const double stride = static_cast<double>(n) / held;
    role[static_cast<std::size_t>((k + 1.0 / 3.0) * stride)] = 1;
    role[static_cast<std::size_t>((k + 2.0 / 3.0) * stride)] = 2;
  }
  for (std::size_t i = 0; i < n; ++i) (role[i] == 0 ? split.train : role[i] == 1 ? split.val : split.test).push_back(i);
  return split;
}

namespace {

std::string frame_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04zu.png", i);
  return buf;
}

Image to_rgba(const Image& img) {
  if (img.channels == 4) return img;
  Image out(img.width, img.height, 4);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const float* p = img.pixels.data() + i * img.channels;
    float* q = out.pixels.data() + i * 4;
    switch (img.channels) {
      case 1: q[0] = q[1] = q[2] = p[0]; q[3] = 1.0f; break;
      case 2: q[0] = q[1] = q[2] = p[0]; q[3] = p[1]; break;
      case 3: q[0] = p[0]; q[1] = p[1]; q[2] = p[2]; q[3] = 1.0f; break;
      default: throw_invalid("unsupported channel count");
    }
  }
  return out;
}

}  // namespace

void write_dataset(const std::filesystem::path& dir, const Dataset& data) {
  if (data.images.size() != data.cameras.size() ||
      (!data.saliency.empty() && data.saliency.size() != data.cameras.size()))
    throw_invalid("dataset: cameras, images and saliency maps must have equal counts");
  std::filesystem::create_directories(dir / "images");
  std::filesystem::create_directories(dir / "saliency");
  save_cameras(dir / "cameras.json", data.cameras);
  for (std::size_t i = 0; i < data.images.size(); ++i) {
    write_png(dir / "images" / frame_name(i), data.images[i]);
    if (!data.saliency.empty() && !data.saliency[i].empty()) write_png(dir / "saliency" / frame_name(i), data.saliency[i]);
  }
  const nlohmann::json split = {{"train", data.split.train}, {"val", data.split.val}, {"test", data.split.test}};
  std::ofstream(dir / "split.json") << split.dump(2) << '\n';
}

Dataset load_dataset(const std::filesystem::path& dir, const WarningSink& warn) {
  if (!std::filesystem::is_directory(dir)) throw FormatError("dataset directory not found: " + dir.string());
  Dataset data;
  data.cameras = load_cameras(dir / "cameras.json");
  const std::size_t n = data.cameras.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto image_path = dir / "images" / frame_name(i);
    if (!std::filesystem::exists(image_path)) throw FormatError("missing image " + image_path.string());
    Image img = read_png(image_path);
    if (img.width != data.cameras[i].width || img.height != data.cameras[i].height)
      throw_invalid("image " + image_path.string() + " does not match its camera resolution");
    data.images.push_back(std::move(img));

    const auto sal_path = dir / "saliency" / frame_name(i);
    if (!std::filesystem::exists(sal_path)) {
      if (warn) warn("no saliency map for view " + std::to_string(i) + "; using s = 0");
      data.saliency.emplace_back();
      continue;
    }
    Image sal = read_png(sal_path);
    if (sal.channels != 1) sal = extract_channel(sal, 0);
    if (sal.width != data.images.back().width || sal.height != data.images.back().height)
      throw_invalid("saliency map " + sal_path.string() + " does not match its image");
    data.saliency.push_back(std::move(sal));
  }

  const auto split_path = dir / "split.json";
  if (!std::filesystem::exists(split_path)) {
    for (std::size_t i = 0; i < n; ++i) data.split.train.push_back(i);
    return data;
  }
  try {
    std::ifstream in(split_path);
    const auto j = nlohmann::json::parse(in);
    data.split.train = j.at("train").get<std::vector<std::size_t>>();
    data.split.val = j.value("val", std::vector<std::size_t>{});
    data.split.test = j.value("test", std::vector<std::size_t>{});
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed split.json: " + std::string(e.what()));
  }
  for (const auto* list : {&data.split.train, &data.split.val, &data.split.test})
    for (std::size_t i : *list)
      if (i >= n) throw FormatError("split.json references view " + std::to_string(i) + " out of range");
  return data;
}

std::vector<TrainingView> make_views(const Dataset& data, const std::vector<std::size_t>& indices) {
  std::vector<TrainingView> views;
  views.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= data.images.size()) throw_invalid("view index out of range");
    Image sal = i < data.saliency.size() ? data.saliency[i] : Image();
    views.push_back(TrainingView::make(to_rgba(data.images[i]), std::move(sal), data.cameras[i]));
  }
  return views;
}

}  // namespace clod
