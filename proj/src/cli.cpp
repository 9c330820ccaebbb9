//
// Copyright (C) 2026 The clod Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "clod/cli.hpp"

#include <omp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "clod/codec.hpp"
#include "clod/dataset.hpp"
#include "clod/error.hpp"
#include "clod/lod.hpp"
#include "clod/manifest.hpp"
#include "clod/metrics.hpp"
#include "clod/render.hpp"
#include "clod/sat.hpp"
#include "clod/synth.hpp"
#include "clod/trainer.hpp"

namespace clod {

namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void set_threads_from_env() {
  const char* value = std::getenv("CLOD_NUM_THREADS");
  if (!value || !*value) return;
  int n = 0;
  const auto* end = value + std::strlen(value);
  const auto [ptr, ec] = std::from_chars(value, end, n);
  if (ec != std::errc() || ptr != end || n < 1)
    throw UsageError(std::string("CLOD_NUM_THREADS must be a positive integer, got '") + value + "'");
  omp_set_num_threads(n);
}

std::pair<int, int> parse_resolution(const std::string& text) {
  int w = 0, h = 0;
  const auto x = text.find('x');
  try {
    std::size_t used = 0;
    if (x == std::string::npos) {
      w = h = std::stoi(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
    } else {
      w = std::stoi(text.substr(0, x), &used);
      if (used != x) throw std::invalid_argument(text);
      h = std::stoi(text.substr(x + 1), &used);
      if (used != text.size() - x - 1) throw std::invalid_argument(text);
    }
  } catch (const std::logic_error&) {
    throw UsageError("resolution must look like 64 or 64x48, got '" + text + "'");
  }
  if (w < 1 || h < 1) throw UsageError("resolution must be positive");
  return {w, h};
}

StreamSchedule parse_mode(const std::string& mode) {
  if (mode == "continuous") return {true, 0};
  const std::string prefix = "discrete:";
  if (mode.rfind(prefix, 0) == 0) {
    const std::string n = mode.substr(prefix.size());
    unsigned levels = 0;
    const auto [ptr, ec] = std::from_chars(n.data(), n.data() + n.size(), levels);
    if (ec == std::errc() && ptr == n.data() + n.size() && levels >= 2) return {false, levels};
  }
  throw UsageError("--mode must be 'continuous' or 'discrete:N' with N >= 2, got '" + mode + "'");
}

RunManifest load_config(const std::string& path) {
  try {
    return manifest_from_json(read_json(path));
  } catch (const FormatError& e) {
    throw UsageError(e.what());
  } catch (const InvalidInput& e) {
    throw UsageError(std::string("invalid config ") + path + ": " + e.what());
  }
}

template <typename T>
void from_options(const RunManifest& config, const char* key, const CLI::Option* flag, T& field) {
  if (flag->count() > 0 || !config.options.contains(key)) return;
  try {
    field = config.options.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw UsageError(std::string("config option '") + key + "' has the wrong type");
  }
}

VariableWidthMlp<float> load_model(const fs::path& path, std::ostream& err) {
  auto model = decode_model(read_file(path));
  if (model.available_width() < model.arch().max_width)
    err << "warning: " << path.string() << " is truncated; using width " << model.available_width() << '\n';
  return model;
}

fs::path sidecar_manifest(const fs::path& artifact) { return fs::path(artifact.string() + ".manifest.json"); }

void write_sidecar(const fs::path& artifact, const RunManifest& m) {
  std::ofstream out(sidecar_manifest(artifact));
  if (!out) throw std::runtime_error("cannot write " + sidecar_manifest(artifact).string());
  out << to_json(m).dump(2) << '\n';
}

std::ofstream open_csv(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  return out;
}

std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream s;
  s << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return s.str();
}

void require_lod(const ArchConfig& arch, double lod) {
  if (!(lod >= 1.0) || lod > arch.max_lod())
    throw UsageError("--lod must lie in [1, " + csv_number(arch.max_lod()) + "] for this model, got " + csv_number(lod));
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string out;
  std::string config;
  int azimuth = 40;
  int elevation = 6;
  double radius = 4.0;
  double fov = 40.0;
  double min_elevation = -10.0;
  double max_elevation = 35.0;
  std::string resolution = "128";
};

void add_synth(CLI::App& app, SynthArgs& a, std::function<void()>& action, std::ostream& out) {
  auto* cmd = app.add_subcommand("synth", "Generate a synthetic light-field dataset");
  cmd->add_option("--out", a.out, "Dataset directory")->required();
  auto* config = cmd->add_option("--config", a.config, "Manifest or config JSON")->check(CLI::ExistingFile);
  auto* az = cmd->add_option("--azimuth", a.azimuth, "Cameras around the vertical axis")->check(CLI::PositiveNumber);
  auto* el = cmd->add_option("--elevation", a.elevation, "Camera rows")->check(CLI::PositiveNumber);
  auto* radius = cmd->add_option("--radius", a.radius, "Rig radius")->check(CLI::PositiveNumber);
  auto* fov = cmd->add_option("--fov", a.fov, "Horizontal field of view in degrees")->check(CLI::Range(1.0, 179.0));
  auto* emin = cmd->add_option("--min-elevation", a.min_elevation, "Lowest row in degrees");
  auto* emax = cmd->add_option("--max-elevation", a.max_elevation, "Highest row in degrees");
  auto* res = cmd->add_option("--resolution", a.resolution, "Image size, N or WxH");
  cmd->callback([&, config, az, el, radius, fov, emin, emax, res] {
    action = [&, config, az, el, radius, fov, emin, emax, res] {
      if (!config->empty()) {
        const RunManifest m = load_config(a.config);
        from_options(m, "azimuth", az, a.azimuth);
        from_options(m, "elevation", el, a.elevation);
        from_options(m, "radius", radius, a.radius);
        from_options(m, "fov", fov, a.fov);
        from_options(m, "min_elevation", emin, a.min_elevation);
        from_options(m, "max_elevation", emax, a.max_elevation);
        from_options(m, "resolution", res, a.resolution);
      }
      const auto [w, h] = parse_resolution(a.resolution);
      if (w < 8 || h < 8) throw UsageError("synth resolution must be at least 8x8");
      RigSpec rig;
      rig.count_azimuth = a.azimuth;
      rig.count_elevation = a.elevation;
      rig.radius = a.radius;
      rig.fov_deg = a.fov;
      rig.min_elevation_deg = a.min_elevation;
      rig.max_elevation_deg = a.max_elevation;
      rig.width = w;
      rig.height = h;

      Dataset data;
      data.cameras = generate_rig(rig);
      for (auto& gt : render_ground_truth(default_scene(), data.cameras)) {
        data.images.push_back(std::move(gt.rgba));
        data.saliency.push_back(std::move(gt.saliency));
      }
      data.split = compute_split(data.cameras.size());
      write_dataset(a.out, data);

      RunManifest m;
      m.command = "synth";
      m.dataset = a.out;
      m.options = {{"azimuth", a.azimuth},     {"elevation", a.elevation},         {"radius", a.radius},
                   {"fov", a.fov},             {"min_elevation", a.min_elevation}, {"max_elevation", a.max_elevation},
                   {"resolution", a.resolution}, {"scene", "default"}};
      write_manifest(a.out, m);
      out << "wrote " << data.cameras.size() << " views (" << data.split.train.size() << " train, "
          << data.split.val.size() << " val, " << data.split.test.size() << " test) to " << a.out << '\n';
    };
  });
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string data;
  std::string out;
  std::string config;
  TrainConfig train;
  ArchConfig arch;
  bool resume = false;
  bool quiet = false;
};

void add_train(CLI::App& app, TrainArgs& a, std::function<void()>& action, std::ostream& out, std::ostream& err) {
  auto* cmd = app.add_subcommand("train", "Train a continuous-LOD light field network");
  auto* data = cmd->add_option("--data", a.data, "Dataset directory")->check(CLI::ExistingDirectory);
  cmd->add_option("--out", a.out, "Run directory")->required();
  auto* config = cmd->add_option("--config", a.config, "Manifest or config JSON")->check(CLI::ExistingFile);
  auto* epochs = cmd->add_option("--epochs", a.train.epochs)->check(CLI::PositiveNumber);
  auto* batch = cmd->add_option("--batch-size", a.train.batch_size)->check(CLI::PositiveNumber);
  auto* lr = cmd->add_option("--lr", a.train.lr)->check(CLI::PositiveNumber);
  auto* decay = cmd->add_option("--lr-decay", a.train.lr_decay)->check(CLI::Range(0.0, 1.0));
  auto* lf = cmd->add_option("--lambda-f", a.train.lambda_f)->check(CLI::NonNegativeNumber);
  auto* ls = cmd->add_option("--lambda-s", a.train.lambda_s)->check(CLI::NonNegativeNumber);
  auto* seed = cmd->add_option("--seed", a.train.seed);
  auto* bpe = cmd->add_option("--batches-per-epoch", a.train.batches_per_epoch, "0 derives it from the pixel count");
  auto* integer = cmd->add_flag("--integer-lods", a.train.integer_lods, "Draw low lods from integers only");
  auto* depth = cmd->add_option("--depth", a.arch.depth)->check(CLI::Range(2, 1000));
  auto* wmin = cmd->add_option("--min-width", a.arch.min_width)->check(CLI::PositiveNumber);
  auto* wmax = cmd->add_option("--max-width", a.arch.max_width)->check(CLI::PositiveNumber);
  cmd->add_flag("--resume", a.resume, "Continue from <out>/checkpoint");
  cmd->add_flag("--quiet", a.quiet, "No per-epoch progress");

  cmd->callback([&, data, config, epochs, batch, lr, decay, lf, ls, seed, bpe, integer, depth, wmin, wmax] {
    action = [&, data, config, epochs, batch, lr, decay, lf, ls, seed, bpe, integer, depth, wmin, wmax] {
      // defaults < config file < flags
      const TrainConfig flags_train = a.train;
      const ArchConfig flags_arch = a.arch;
      TrainConfig cfg;
      ArchConfig arch;
      std::string dataset = a.data;
      if (!config->empty()) {
        const RunManifest m = load_config(a.config);
        cfg = m.train;
        arch = m.arch;
        if (data->empty()) dataset = m.dataset;
      }
      if (epochs->count()) cfg.epochs = flags_train.epochs;
      if (batch->count()) cfg.batch_size = flags_train.batch_size;
      if (lr->count()) cfg.lr = flags_train.lr;
      if (decay->count()) cfg.lr_decay = flags_train.lr_decay;
      if (lf->count()) cfg.lambda_f = flags_train.lambda_f;
      if (ls->count()) cfg.lambda_s = flags_train.lambda_s;
      if (seed->count()) cfg.seed = flags_train.seed;
      if (bpe->count()) cfg.batches_per_epoch = flags_train.batches_per_epoch;
      if (integer->count()) cfg.integer_lods = flags_train.integer_lods;
      if (depth->count()) arch.depth = flags_arch.depth;
      if (wmin->count()) arch.min_width = flags_arch.min_width;
      if (wmax->count()) arch.max_width = flags_arch.max_width;
      if (dataset.empty()) throw UsageError("train needs --data or a config naming a dataset");
      if (!fs::is_directory(dataset)) throw UsageError("dataset directory not found: " + dataset);
      try {
        cfg.validate();
        arch.validate();
      } catch (const InvalidInput& e) {
        throw UsageError(e.what());
      }

      const Dataset ds = load_dataset(dataset, [&](const std::string& w) { err << "warning: " << w << '\n'; });
      if (ds.split.train.empty()) throw std::runtime_error("dataset has no training views");
      Trainer trainer(make_views(ds, ds.split.train), arch, cfg);

      const fs::path run = a.out;
      const fs::path checkpoint = run / "checkpoint";
      fs::create_directories(run);
      if (a.resume && fs::exists(checkpoint / "trainer.json")) {
        trainer.load_checkpoint(checkpoint);
        out << "resumed at epoch " << trainer.epochs_done() << '\n';
      }

      RunManifest m;
      m.command = "train";
      m.dataset = dataset;
      m.seed = cfg.seed;
      m.arch = arch;
      m.train = cfg;
      write_manifest(run, m);

      trainer.run([&](std::uint32_t done) {
        trainer.save_checkpoint(checkpoint);
        if (!a.quiet) {
          const auto& last = trainer.log().back();
          out << "epoch " << done << "/" << cfg.epochs << " loss " << last.total << " (max " << last.loss_max
              << ", low " << last.loss_low << ")\n";
        }
      });
      write_file(run / "model.clfn", encode_full(trainer.model()));
      write_loss_csv(run / "loss.csv", trainer.log());
      out << "wrote " << (run / "model.clfn").string() << '\n';
    };
  });
}

// ---------------------------------------------------------------- render

struct RenderArgs {
  std::string model;
  std::string cameras;
  std::string data;
  std::string out;
  std::string resolution;
  std::size_t view = 0;
  double lod = 0.0;
};

void add_render(CLI::App& app, RenderArgs& a, std::function<void()>& action, std::ostream& out, std::ostream& err) {
  auto* cmd = app.add_subcommand("render", "Render one view at a fractional LOD");
  cmd->add_option("--model", a.model, "Model file (full or progressive)")->required()->check(CLI::ExistingFile);
  auto* cams = cmd->add_option("--cameras", a.cameras, "cameras.json")->check(CLI::ExistingFile);
  auto* data = cmd->add_option("--data", a.data, "Dataset directory")->check(CLI::ExistingDirectory);
  cams->excludes(data);
  cmd->add_option("--view", a.view, "Camera index");
  cmd->add_option("--lod", a.lod, "Level of detail, at least 1")->required();
  auto* res = cmd->add_option("--resolution", a.resolution, "Output size N or WxH instead of the LOD's scale");
  cmd->add_option("--out", a.out, "Output PNG")->required();
  cmd->callback([&, cams, data, res] {
    action = [&, cams, data, res] {
      if (!(a.lod >= 1.0)) throw UsageError("--lod must be at least 1, got " + csv_number(a.lod));
      if (cams->empty() && data->empty()) throw UsageError("render needs --cameras or --data");
      const fs::path cam_path = cams->empty() ? fs::path(a.data) / "cameras.json" : fs::path(a.cameras);
      if (!fs::exists(cam_path)) throw UsageError("cameras file not found: " + cam_path.string());
      std::optional<std::pair<int, int>> size;
      if (!res->empty()) size = parse_resolution(a.resolution);

      const auto model = load_model(a.model, err);
      require_lod(model.arch(), a.lod);
      const auto cameras = load_cameras(cam_path);
      if (a.view >= cameras.size()) throw UsageError("--view out of range");
      const Camera& cam = cameras[a.view];
      const auto [w, h] = size ? *size : resolution_for_lod(model.arch(), cam, a.lod);
      const Image img = render(model, cam, a.lod, w, h);
      write_png(a.out, clamped(img));

      RunManifest m;
      m.command = "render";
      m.arch = model.arch();
      m.dataset = a.data;
      m.options = {{"model", a.model}, {"cameras", cam_path.string()}, {"view", a.view},
                   {"lod", a.lod},     {"width", w},                     {"height", h}};
      write_sidecar(a.out, m);
      out << "rendered " << w << "x" << h << " at lod " << a.lod << " (scale " << scale_for_lod(model.arch(), a.lod)
          << ")\n";
    };
  });
}

// ---------------------------------------------------------------- encode / decode

struct CodecArgs {
  std::string in;
  std::string out;
  std::uint32_t up_to_width = 0;
};

void add_codec(CLI::App& app, CodecArgs& enc, CodecArgs& dec, std::function<void()>& action, std::ostream& out,
               std::ostream& err) {
  auto* e = app.add_subcommand("encode", "Convert a model file to a progressive stream");
  e->add_option("--model", enc.in, "Model file")->required()->check(CLI::ExistingFile);
  e->add_option("--out", enc.out, "Stream file")->required();
  e->callback([&] {
    action = [&] {
      const auto model = decode_model(read_file(enc.in));
      const Bytes stream = encode_stream(model);
      write_file(enc.out, stream);
      RunManifest m;
      m.command = "encode";
      m.arch = model.arch();
      m.options = {{"model", enc.in}, {"bytes", stream.size()}};
      write_sidecar(enc.out, m);
      out << "wrote " << stream.size() << " bytes (" << scan_segments(stream).size() << " segments)\n";
    };
  });

  auto* d = app.add_subcommand("decode", "Rebuild a model file from a (possibly partial) stream");
  d->add_option("--stream", dec.in, "Stream file")->required()->check(CLI::ExistingFile);
  d->add_option("--out", dec.out, "Model file")->required();
  auto* limit = d->add_option("--up-to-width", dec.up_to_width, "Stop after this width")->check(CLI::PositiveNumber);
  d->callback([&, limit] {
    action = [&, limit] {
      const Bytes bytes = read_file(dec.in);
      const auto model = limit->empty() ? load_model(dec.in, err) : decode_prefix(bytes, dec.up_to_width);
      write_file(dec.out, encode_full(model));
      RunManifest m;
      m.command = "decode";
      m.arch = model.arch();
      m.options = {{"stream", dec.in}, {"width", model.available_width()}};
      write_sidecar(dec.out, m);
      out << "decoded width " << model.available_width() << '\n';
    };
  });
}

// ---------------------------------------------------------------- stream-sim

struct StreamArgs {
  std::string stream;
  std::string out;
  std::string bandwidth;
  std::string mode = "continuous";
};

void add_stream_sim(CLI::App& app, StreamArgs& a, std::function<void()>& action, std::ostream& out) {
  auto* cmd = app.add_subcommand("stream-sim", "Replay a progressive stream at a fixed bandwidth");
  cmd->add_option("--stream", a.stream, "Stream file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--bandwidth", a.bandwidth, "Bytes per second, or inf")->required();
  cmd->add_option("--mode", a.mode, "continuous or discrete:N");
  cmd->add_option("--out", a.out, "CSV path (stdout when omitted)");
  cmd->callback([&] {
    action = [&] {
      double bandwidth = 0.0;
      if (a.bandwidth == "inf") {
        bandwidth = std::numeric_limits<double>::infinity();
      } else {
        try {
          std::size_t used = 0;
          bandwidth = std::stod(a.bandwidth, &used);
          if (used != a.bandwidth.size()) throw std::invalid_argument(a.bandwidth);
        } catch (const std::logic_error&) {
          throw UsageError("--bandwidth must be a number or inf, got '" + a.bandwidth + "'");
        }
      }
      if (!(bandwidth > 0.0)) throw UsageError("--bandwidth must be positive");
      const StreamSchedule schedule = parse_mode(a.mode);
      const Bytes bytes = read_file(a.stream);
      const auto events = stream_simulate(bytes, bandwidth, schedule);

      std::ostringstream csv;
      csv << std::setprecision(std::numeric_limits<double>::max_digits10);
      csv << "time,available_width,bytes_received,delta_payload_bytes,delta_wire_bytes\n";
      for (const auto& ev : events)
        csv << ev.time << ',' << ev.available_width << ',' << ev.bytes_received << ',' << ev.delta_payload_bytes << ','
            << ev.delta_wire_bytes << '\n';
      if (a.out.empty()) {
        out << csv.str();
        return;
      }
      std::ofstream(a.out) << csv.str();
      RunManifest m;
      m.command = "stream-sim";
      m.arch = read_header(bytes);
      m.options = {{"stream", a.stream}, {"bandwidth", a.bandwidth}, {"mode", a.mode}};
      write_sidecar(a.out, m);
      out << events.size() << " width changes written to " << a.out << '\n';
    };
  });
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string model;
  std::string data;
  std::string out;
  std::string config;
  std::string split = "test";
  std::vector<double> lods;
  std::uint32_t levels = 4;
  std::size_t max_views = 0;
};

std::vector<std::size_t> eval_indices(const Dataset& ds, const std::string& which) {
  if (which == "train") return ds.split.train;
  if (which == "val") return ds.split.val;
  if (which == "test") return ds.split.test;
  std::vector<std::size_t> all(ds.cameras.size());
  std::iota(all.begin(), all.end(), 0);
  return all;
}

// Mean flicker per transition over views; frames are full-resolution renders
// at the given integer widths, the reference is the ground-truth view.
std::vector<FlickerParts> width_sweep_flicker(const VariableWidthMlp<float>& model, const Dataset& ds,
                                              const std::vector<std::size_t>& views,
                                              const std::vector<std::uint32_t>& widths) {
  const ArchConfig& arch = model.arch();
  std::vector<FlickerParts> mean(widths.size() - 1);
  for (std::size_t v : views) {
    const Camera& cam = ds.cameras[v];
    std::vector<Image> frames, refs;
    for (std::uint32_t w : widths) {
      frames.push_back(clamped(render(model, cam, static_cast<double>(w - arch.min_width + 1), cam.width, cam.height)));
      refs.push_back(ds.images[v]);
    }
    const auto parts = flicker(frames, refs);
    for (std::size_t t = 0; t < parts.size(); ++t) {
      mean[t].low += parts[t].low / views.size();
      mean[t].high += parts[t].high / views.size();
    }
  }
  return mean;
}

void write_flicker_csv(const fs::path& path, const ArchConfig& arch, const std::vector<std::uint32_t>& widths,
                       const std::vector<FlickerParts>& parts) {
  auto csv = open_csv(path);
  csv << "transition,from_width,to_width,flicker,s_low,s_high,delta_bytes\n";
  for (std::size_t t = 0; t < parts.size(); ++t)
    csv << t + 1 << ',' << widths[t] << ',' << widths[t + 1] << ',' << parts[t].total() << ',' << parts[t].low << ','
        << parts[t].high << ',' << model_bytes(arch, widths[t + 1]) - model_bytes(arch, widths[t]) << '\n';
}

void add_eval(CLI::App& app, EvalArgs& a, std::function<void()>& action, std::ostream& out, std::ostream& err) {
  auto* cmd = app.add_subcommand("eval", "Quality per LOD, flicker per transition and delta sizes");
  auto* model = cmd->add_option("--model", a.model, "Model file")->check(CLI::ExistingFile);
  auto* data = cmd->add_option("--data", a.data, "Dataset directory")->check(CLI::ExistingDirectory);
  cmd->add_option("--out", a.out, "Output directory")->required();
  auto* config = cmd->add_option("--config", a.config, "Manifest of an earlier eval")->check(CLI::ExistingFile);
  auto* split = cmd->add_option("--split", a.split, "Views to evaluate")
                    ->check(CLI::IsMember({"train", "val", "test", "all"}));
  auto* lods = cmd->add_option("--lods", a.lods, "LODs to score (default: those of scales 1/8, 1/4, 1/2, 1)")
                   ->delimiter(',');
  auto* levels = cmd->add_option("--levels", a.levels, "Discrete baseline level count")->check(CLI::Range(2, 1 << 20));
  auto* max_views = cmd->add_option("--max-views", a.max_views, "Evaluate at most this many views (0 = all)");
  cmd->callback([&, model, data, config, split, lods, levels, max_views] {
    action = [&, model, data, config, split, lods, levels, max_views] {
      if (!config->empty()) {
        const RunManifest m = load_config(a.config);
        from_options(m, "model", model, a.model);
        from_options(m, "split", split, a.split);
        from_options(m, "lods", lods, a.lods);
        from_options(m, "levels", levels, a.levels);
        from_options(m, "max_views", max_views, a.max_views);
        if (data->empty()) a.data = m.dataset;
      }
      if (a.model.empty() || a.data.empty()) throw UsageError("eval needs --model and --data (or a config with both)");
      if (!fs::exists(a.model)) throw UsageError("model file not found: " + a.model);
      if (!fs::is_directory(a.data)) throw UsageError("dataset directory not found: " + a.data);

      const auto net = load_model(a.model, err);
      const ArchConfig& arch = net.arch();
      if (net.available_width() != arch.max_width) throw std::runtime_error("eval needs a complete model");
      std::vector<double> score_lods = a.lods;
      if (score_lods.empty())
        for (double s : {0.125, 0.25, 0.5, 1.0}) score_lods.push_back(lod_for_scale(arch, s).lod);
      for (double l : score_lods) require_lod(arch, l);

      const Dataset ds = load_dataset(a.data, [&](const std::string& w) { err << "warning: " << w << '\n'; });
      auto views = eval_indices(ds, a.split);
      if (a.max_views && views.size() > a.max_views) views.resize(a.max_views);
      if (views.empty()) throw std::runtime_error("no views in split '" + a.split + "'");
      std::vector<SummedAreaTable> tables;
      for (std::size_t v : views) tables.push_back(SummedAreaTable::build(ds.images[v]));

      const fs::path dir = a.out;
      fs::create_directories(dir);
      {
        auto csv = open_csv(dir / "quality.csv");
        csv << "lod,scale,width,height,psnr,ssim,psnr_full,ssim_full\n";
        for (double lod : score_lods) {
          double p = 0, s = 0, pf = 0, sf = 0;
          int w = 0, h = 0;
          for (std::size_t k = 0; k < views.size(); ++k) {
            const Camera& cam = ds.cameras[views[k]];
            std::tie(w, h) = resolution_for_lod(arch, cam, lod);
            const Image target = box_resample(tables[k], w, h);
            const Image img = clamped(render(net, cam, lod, w, h));
            const Image full = clamped(render(net, cam, lod, cam.width, cam.height));
            p += psnr(img, target);
            s += (w >= 11 && h >= 11) ? ssim(img, target) : std::numeric_limits<double>::quiet_NaN();
            pf += psnr(full, ds.images[views[k]]);
            sf += ssim(full, ds.images[views[k]]);
          }
          const double n = static_cast<double>(views.size());
          csv << csv_number(lod) << ',' << csv_number(scale_for_lod(arch, lod)) << ',' << w << ',' << h << ','
              << csv_number(p / n) << ',' << csv_number(s / n) << ',' << csv_number(pf / n) << ','
              << csv_number(sf / n) << '\n';
        }
      }

      std::vector<std::uint32_t> every(arch.max_width - arch.min_width + 1);
      std::iota(every.begin(), every.end(), arch.min_width);
      const auto discrete = discrete_widths(arch, a.levels);
      const auto cont = width_sweep_flicker(net, ds, views, every);
      const auto disc = width_sweep_flicker(net, ds, views, discrete);
      write_flicker_csv(dir / "flicker_continuous.csv", arch, every, cont);
      write_flicker_csv(dir / "flicker_discrete.csv", arch, discrete, disc);
      {
        auto csv = open_csv(dir / "deltas.csv");
        csv << "width,param_count,delta_params,delta_bytes\n";
        for (std::uint32_t w = arch.min_width; w <= arch.max_width; ++w) {
          const std::uint64_t d = w == arch.min_width ? param_count(arch, w) : delta_param_count(arch, w);
          csv << w << ',' << param_count(arch, w) << ',' << d << ',' << 4 * d << '\n';
        }
      }

      RunManifest m;
      m.command = "eval";
      m.dataset = a.data;
      m.arch = arch;
      m.options = {{"model", a.model}, {"split", a.split}, {"lods", score_lods}, {"levels", a.levels},
                   {"max_views", a.max_views}};
      write_manifest(dir, m);

      auto mean = [](const std::vector<FlickerParts>& v) {
        double s = 0;
        for (const auto& p : v) s += p.total();
        return s / static_cast<double>(v.size());
      };
      out << "mean flicker: continuous " << mean(cont) << " over " << cont.size() << " transitions, discrete "
          << mean(disc) << " over " << disc.size() << " transitions\n";
    };
  });
}

}  // namespace

int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app("Light field networks with continuous levels of detail", "clod");
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  std::function<void()> action;
  SynthArgs synth;
  TrainArgs train;
  RenderArgs render_args;
  CodecArgs enc, dec;
  StreamArgs stream;
  EvalArgs eval;
  add_synth(app, synth, action, out);
  add_train(app, train, action, out, err);
  add_render(app, render_args, action, out, err);
  add_codec(app, enc, dec, action, out, err);
  add_stream_sim(app, stream, action, out);
  add_eval(app, eval, action, out, err);

  try {
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    set_threads_from_env();
    if (action) action();
    return kExitOk;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

int run_cli(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(std::move(args), std::cout, std::cerr);
}

}  // namespace clod
