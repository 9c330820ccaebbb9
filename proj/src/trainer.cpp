//
// Copyright (C) 2026 The clod Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "clod/trainer.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "clod/codec.hpp"
#include "clod/error.hpp"
#include "json.hpp"

namespace clod {

void TrainConfig::validate() const {
  if (epochs < 1) throw_invalid("epochs must be at least 1");
  if (batch_size < 1) throw_invalid("batch_size must be at least 1");
  if (!(lr > 0.0)) throw_invalid("learning rate must be positive");
  if (!(lr_decay > 0.0) || lr_decay > 1.0) throw_invalid("lr_decay must lie in (0, 1]");
  if (!(lambda_f >= 0.0) || !(lambda_s >= 0.0) || (lambda_f == 0.0 && lambda_s == 0.0))
    throw_invalid("sampling weights must be non-negative and not both zero");
}

LodDraw sample_lod(const ArchConfig& arch, Rng& rng, bool integer_lods) {
  const double top = arch.max_lod();
  double lod = 1.0;
  if (integer_lods) {
    const auto levels = static_cast<std::uint64_t>(top) - 1;  // 1 .. top-1
    lod = levels == 0 ? 1.0 : 1.0 + static_cast<double>(std::min<std::uint64_t>(
                                        static_cast<std::uint64_t>(uniform01(rng) * levels), levels - 1));
  } else {
    lod = 1.0 + uniform01(rng) * (top - 1.0);
    if (lod >= top) lod = std::nextafter(top, 1.0);
  }
  return {lod, scale_for_lod(arch, lod)};
}

double mse(const Matrix<float>& prediction, const Matrix<float>& target) {
  if (prediction.rows() != target.rows() || prediction.cols() != target.cols())
    throw_invalid("mse: shapes differ");
  double sum = 0.0;
  for (Eigen::Index j = 0; j < prediction.cols(); ++j)
    for (Eigen::Index i = 0; i < prediction.rows(); ++i) {
      const double d = static_cast<double>(prediction(i, j)) - target(i, j);
      sum += d * d;
    }
  return sum / static_cast<double>(prediction.size());
}

namespace {

Matrix<float> mse_gradient(const Matrix<float>& prediction, const Matrix<float>& target) {
  const float k = 2.0f / static_cast<float>(prediction.size());
  return (prediction - target) * k;
}

}  // namespace

StepLoss train_step(VariableWidthMlp<float>& model, AdamState<float>& optimizer, const Matrix<float>& inputs,
                    double low_lod, const Matrix<float>& targets_full, const Matrix<float>& targets_low, double lr) {
  const ArchConfig& arch = model.arch();
  if (targets_full.cols() != inputs.cols() || targets_low.cols() != inputs.cols() ||
      targets_full.rows() != static_cast<Eigen::Index>(arch.output_dim) ||
      targets_low.rows() != static_cast<Eigen::Index>(arch.output_dim))
    throw_invalid("train_step: targets do not match the ray batch");
  if (optimizer.m.size() != model.parameters().size()) optimizer = AdamState<float>(model.parameters().size());

  ParamVector<float> grads(model.parameters().size(), 0.0f);
  ForwardCache<float> cache;
  StepLoss loss;

  forward(model, inputs, arch.max_lod(), cache);
  loss.loss_max = mse(cache.output, targets_full);
  if (!std::isfinite(loss.loss_max))
    throw NumericalError("non-finite loss at max lod (step " + std::to_string(optimizer.step + 1) + ")");
  backward(model, cache, mse_gradient(cache.output, targets_full), std::span<float>(grads));

  forward(model, inputs, low_lod, cache);
  loss.loss_low = mse(cache.output, targets_low);
  if (!std::isfinite(loss.loss_low))
    throw NumericalError("non-finite loss at lod " + std::to_string(low_lod) + " (step " +
                         std::to_string(optimizer.step + 1) + ")");
  backward(model, cache, mse_gradient(cache.output, targets_low), std::span<float>(grads));

  loss.total = loss.loss_max + loss.loss_low;
  adam_step(std::span<float>(model.parameters()), optimizer, std::span<const float>(grads), lr);
  return loss;
}

double learning_rate(const TrainConfig& cfg, std::uint32_t epoch) { return cfg.lr * std::pow(cfg.lr_decay, epoch); }

Trainer::Trainer(std::vector<TrainingView> views, const ArchConfig& arch, const TrainConfig& cfg)
    : views_(std::move(views)), cfg_(cfg), model_(arch) {
  cfg_.validate();
  if (views_.empty()) throw_invalid("training needs at least one view");
  model_.initialize(cfg_.seed);
  optimizer_ = AdamState<float>(model_.parameters().size());
  std::size_t pixels = 0;
  for (const auto& v : views_) {
    pdfs_.push_back(build_ray_pdf(v, cfg_.lambda_f, cfg_.lambda_s));
    pixels += v.image.pixel_count();
  }
  batches_per_epoch_ = cfg_.batches_per_epoch ? cfg_.batches_per_epoch : (pixels + cfg_.batch_size - 1) / cfg_.batch_size;
}

void Trainer::run_epoch() {
  const double lr = learning_rate(cfg_, epoch_);
  for (std::size_t b = 0; b < batches_per_epoch_; ++b) {
    Rng rng(stream_seed(cfg_.seed, epoch_, b));
    const RayBatch batch = sample_batch(views_, pdfs_, cfg_.batch_size, rng);
    const LodDraw low = sample_lod(model_.arch(), rng, cfg_.integer_lods);
    const Matrix<float> full_targets = target_colors(views_, batch, 1.0);
    const Matrix<float> low_targets = target_colors(views_, batch, low.scale);
    const StepLoss loss = train_step(model_, optimizer_, batch.inputs, low.lod, full_targets, low_targets, lr);
    ++step_;
    log_.push_back({epoch_ + 1, step_, lr, loss.loss_max, loss.loss_low, loss.total});
  }
  ++epoch_;
}

void Trainer::run(const std::function<void(std::uint32_t)>& on_epoch) {
  while (epoch_ < cfg_.epochs) {
    run_epoch();
    if (on_epoch) on_epoch(epoch_);
  }
}

namespace {

constexpr char kOptimizerMagic[4] = {'C', 'L', 'F', 'O'};

void put_u64(Bytes& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
std::uint64_t get_u64(const Bytes& in, std::size_t& offset) {
  if (offset + 8 > in.size()) throw FormatError("optimizer state truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in[offset + i]) << (8 * i);
  offset += 8;
  return v;
}

Bytes encode_optimizer(const AdamState<float>& s) {
  Bytes out(std::begin(kOptimizerMagic), std::end(kOptimizerMagic));
  for (int i = 0; i < 4; ++i) out.push_back(i == 0 ? 1 : 0);  // version 1
  put_u64(out, s.step);
  put_u64(out, std::bit_cast<std::uint64_t>(s.beta1));
  put_u64(out, std::bit_cast<std::uint64_t>(s.beta2));
  put_u64(out, std::bit_cast<std::uint64_t>(s.eps));
  put_u64(out, s.m.size());
  for (const auto* vec : {&s.m, &s.v})
    for (float f : *vec) {
      const auto u = std::bit_cast<std::uint32_t>(f);
      for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
    }
  return out;
}

AdamState<float> decode_optimizer(const Bytes& in) {
  if (in.size() < 8 || std::memcmp(in.data(), kOptimizerMagic, 4) != 0) throw FormatError("not an optimizer state file");
  std::size_t offset = 8;
  AdamState<float> s;
  s.step = get_u64(in, offset);
  s.beta1 = std::bit_cast<double>(get_u64(in, offset));
  s.beta2 = std::bit_cast<double>(get_u64(in, offset));
  s.eps = std::bit_cast<double>(get_u64(in, offset));
  const std::uint64_t n = get_u64(in, offset);
  if (in.size() != offset + 8 * n) throw FormatError("optimizer state has the wrong length");
  s.m.resize(n);
  s.v.resize(n);
  for (auto* vec : {&s.m, &s.v})
    for (auto& f : *vec) {
      std::uint32_t u = 0;
      for (int i = 0; i < 4; ++i) u |= static_cast<std::uint32_t>(in[offset + i]) << (8 * i);
      offset += 4;
      f = std::bit_cast<float>(u);
    }
  return s;
}

}  // namespace

void Trainer::save_checkpoint(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  write_file(dir / "model.clfn", encode_full(model_));
  write_file(dir / "optimizer.bin", encode_optimizer(optimizer_));
  nlohmann::json state = {{"epochs_done", epoch_}, {"step", step_}, {"seed", cfg_.seed}};
  std::ofstream(dir / "trainer.json") << state.dump(2) << '\n';
  write_loss_csv(dir / "loss.csv", log_);
}

void Trainer::load_checkpoint(const std::filesystem::path& dir) {
  auto model = decode_model(read_file(dir / "model.clfn"));
  if (!(model.arch() == model_.arch())) throw FormatError("checkpoint architecture differs from the trainer's");
  auto optimizer = decode_optimizer(read_file(dir / "optimizer.bin"));
  if (optimizer.m.size() != model.parameters().size()) throw FormatError("optimizer state does not match the model");
  std::ifstream in(dir / "trainer.json");
  if (!in) throw std::runtime_error("cannot open " + (dir / "trainer.json").string());
  const auto state = nlohmann::json::parse(in);
  model_ = std::move(model);
  optimizer_ = std::move(optimizer);
  epoch_ = state.at("epochs_done").get<std::uint32_t>();
  step_ = state.at("step").get<std::uint64_t>();
  log_ = std::filesystem::exists(dir / "loss.csv") ? read_loss_csv(dir / "loss.csv") : std::vector<LossRecord>{};
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<LossRecord>& log) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "epoch,step,lr,loss_max,loss_low,total\n" << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& r : log)
    out << r.epoch << ',' << r.step << ',' << r.lr << ',' << r.loss_max << ',' << r.loss_low << ',' << r.total << '\n';
}

std::vector<LossRecord> read_loss_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "epoch,step,lr,loss_max,loss_low,total")
    throw FormatError("unexpected loss log header in " + path.string());
  std::vector<LossRecord> log;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    LossRecord r;
    char c1 = 0, c2 = 0, c3 = 0, c4 = 0, c5 = 0;
    row >> r.epoch >> c1 >> r.step >> c2 >> r.lr >> c3 >> r.loss_max >> c4 >> r.loss_low >> c5 >> r.total;
    if (!row || c1 != ',' || c2 != ',' || c3 != ',' || c4 != ',' || c5 != ',')
      throw FormatError("malformed loss log row: " + line);
    log.push_back(r);
  }
  return log;
}

std::vector<double> smoothed_loss(const std::vector<LossRecord>& log, std::size_t window) {
  if (window < 1) throw_invalid("smoothing window must be at least 1");
  std::vector<double> out;
  out.reserve(log.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < log.size(); ++i) {
    sum += log[i].total;
    if (i >= window) sum -= log[i - window].total;
    out.push_back(sum / static_cast<double>(std::min(i + 1, window)));
  }
  return out;
}

}  // namespace clod
