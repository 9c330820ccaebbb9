//
// Copyright (C) 2026 The clod Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "clod/manifest.hpp"

#include <fstream>
#include <set>

#include "clod/error.hpp"

namespace clod {

namespace {

void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed, const char* what) {
  if (!j.is_object()) throw_invalid(std::string(what) + " must be a JSON object");
  for (const auto& item : j.items())
    if (!allowed.count(item.key())) throw_invalid(std::string("unknown ") + what + " key '" + item.key() + "'");
}

template <typename T>
void take(const nlohmann::json& j, const char* key, T& field) {
  if (!j.contains(key)) return;
  try {
    field = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw_invalid(std::string("config key '") + key + "' has the wrong type");
  }
}

}  // namespace

nlohmann::json to_json(const ArchConfig& arch) {
  return {{"input_dim", arch.input_dim},
          {"output_dim", arch.output_dim},
          {"depth", arch.depth},
          {"min_width", arch.min_width},
          {"max_width", arch.max_width}};
}

nlohmann::json to_json(const TrainConfig& cfg) {
  return {{"epochs", cfg.epochs},         {"batch_size", cfg.batch_size},
          {"lr", cfg.lr},                 {"lr_decay", cfg.lr_decay},
          {"lambda_f", cfg.lambda_f},     {"lambda_s", cfg.lambda_s},
          {"seed", cfg.seed},             {"integer_lods", cfg.integer_lods},
          {"batches_per_epoch", cfg.batches_per_epoch}};
}

nlohmann::json to_json(const RunManifest& m) {
  return {{"command", m.command}, {"tool_version", m.tool_version}, {"dataset", m.dataset},
          {"seed", m.seed},       {"arch", to_json(m.arch)},       {"train", to_json(m.train)},
          {"options", m.options}};
}

ArchConfig arch_from_json(const nlohmann::json& j, ArchConfig base) {
  check_keys(j, {"input_dim", "output_dim", "depth", "min_width", "max_width"}, "arch");
  take(j, "input_dim", base.input_dim);
  take(j, "output_dim", base.output_dim);
  take(j, "depth", base.depth);
  take(j, "min_width", base.min_width);
  take(j, "max_width", base.max_width);
  return base;
}

TrainConfig train_from_json(const nlohmann::json& j, TrainConfig base) {
  check_keys(j,
             {"epochs", "batch_size", "lr", "lr_decay", "lambda_f", "lambda_s", "seed", "integer_lods",
              "batches_per_epoch"},
             "train");
  take(j, "epochs", base.epochs);
  take(j, "batch_size", base.batch_size);
  take(j, "lr", base.lr);
  take(j, "lr_decay", base.lr_decay);
  take(j, "lambda_f", base.lambda_f);
  take(j, "lambda_s", base.lambda_s);
  take(j, "seed", base.seed);
  take(j, "integer_lods", base.integer_lods);
  take(j, "batches_per_epoch", base.batches_per_epoch);
  return base;
}

RunManifest manifest_from_json(const nlohmann::json& j) {
  check_keys(j, {"command", "tool_version", "dataset", "seed", "arch", "train", "options"}, "manifest");
  RunManifest m;
  take(j, "command", m.command);
  take(j, "tool_version", m.tool_version);
  take(j, "dataset", m.dataset);
  take(j, "seed", m.seed);
  if (j.contains("arch")) m.arch = arch_from_json(j.at("arch"));
  if (j.contains("train")) m.train = train_from_json(j.at("train"));
  if (j.contains("options")) {
    if (!j.at("options").is_object()) throw_invalid("manifest options must be an object");
    m.options = j.at("options");
  }
  return m;
}

void write_manifest(const std::filesystem::path& dir, const RunManifest& m) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / kManifestName);
  if (!out) throw std::runtime_error("cannot write " + (dir / kManifestName).string());
  out << to_json(m).dump(2) << '\n';
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

}  // namespace clod
