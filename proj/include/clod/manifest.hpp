//
// Copyright (C) 2026 The clod Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "clod/lod.hpp"
#include "clod/trainer.hpp"
#include "json.hpp"

namespace clod {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kManifestName = "manifest.json";

/// Configuration snapshot written next to every artifact. Loading it back as
/// a config file reproduces the run.
struct RunManifest {
  std::string command;
  std::string tool_version = kToolVersion;
  std::string dataset;
  std::uint64_t seed = 0;
  ArchConfig arch;
  TrainConfig train;
  nlohmann::json options = nlohmann::json::object();  ///< subcommand-specific settings
};

nlohmann::json to_json(const ArchConfig& arch);
nlohmann::json to_json(const TrainConfig& cfg);
nlohmann::json to_json(const RunManifest& m);

/// Keys present in `j` override the fields of `base`; unknown keys throw
/// InvalidInput so typos in config files surface.
ArchConfig arch_from_json(const nlohmann::json& j, ArchConfig base = {});
TrainConfig train_from_json(const nlohmann::json& j, TrainConfig base = {});
RunManifest manifest_from_json(const nlohmann::json& j);

void write_manifest(const std::filesystem::path& dir, const RunManifest& m);
/// Throws FormatError for unreadable or malformed JSON.
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace clod
