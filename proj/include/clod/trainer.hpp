//
// Copyright (C) 2026 The clod Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "clod/mlp.hpp"
#include "clod/sampler.hpp"

namespace clod {

struct TrainConfig {
  std::uint32_t epochs = 100;
  std::size_t batch_size = 8192;
  double lr = 1e-3;
  double lr_decay = 0.98;  ///< multiplied in once per epoch
  double lambda_f = kLambdaForeground;
  double lambda_s = kLambdaSaliency;
  std::uint64_t seed = 0;
  /// Draw low lods from integers only instead of the continuous range.
  bool integer_lods = false;
  /// 0 means ceil(total pixels / batch_size).
  std::size_t batches_per_epoch = 0;

  void validate() const;
};

struct LodDraw {
  double lod;
  double scale;
};

/// lod ~ U[1, max_lod) (or a uniform integer in [1, max_lod - 1] when
/// `integer_lods`), scale = scale_for_lod(lod).
LodDraw sample_lod(const ArchConfig& arch, Rng& rng, bool integer_lods = false);

struct StepLoss {
  double loss_max = 0.0;  ///< MSE at the highest lod against raw colors
  double loss_low = 0.0;  ///< MSE at the sampled lod against filtered colors
  double total = 0.0;
};

/// Mean squared error over every element of two equally shaped matrices,
/// accumulated in double.
double mse(const Matrix<float>& prediction, const Matrix<float>& target);

/// One optimizer step on loss_max + loss_low. Throws NumericalError (model
/// untouched) when either term is non-finite.
StepLoss train_step(VariableWidthMlp<float>& model, AdamState<float>& optimizer, const Matrix<float>& inputs,
                    double low_lod, const Matrix<float>& targets_full, const Matrix<float>& targets_low, double lr);

struct LossRecord {
  std::uint32_t epoch = 0;  ///< 1-based
  std::uint64_t step = 0;   ///< 1-based, global
  double lr = 0.0;
  double loss_max = 0.0;
  double loss_low = 0.0;
  double total = 0.0;
};

/// Learning rate during 0-based epoch `epoch`: lr * decay^epoch.
double learning_rate(const TrainConfig& cfg, std::uint32_t epoch);

class Trainer {
 public:
  /// Initializes the model from cfg.seed. Throws InvalidInput for an empty
  /// view set or invalid configuration.
  Trainer(std::vector<TrainingView> views, const ArchConfig& arch, const TrainConfig& cfg);

  void run_epoch();
  /// Runs the remaining epochs. `on_epoch` fires after each one with the
  /// number of completed epochs.
  void run(const std::function<void(std::uint32_t)>& on_epoch = {});

  /// model.clfn (full-model format), optimizer.bin, trainer.json and the
  /// loss log so far.
  void save_checkpoint(const std::filesystem::path& dir) const;
  /// Restores model, optimizer state and progress. The views and config
  /// given at construction are kept.
  void load_checkpoint(const std::filesystem::path& dir);

  const VariableWidthMlp<float>& model() const { return model_; }
  const AdamState<float>& optimizer() const { return optimizer_; }
  const std::vector<LossRecord>& log() const { return log_; }
  std::uint32_t epochs_done() const { return epoch_; }
  std::size_t batches_per_epoch() const { return batches_per_epoch_; }
  const TrainConfig& config() const { return cfg_; }
  const std::vector<TrainingView>& views() const { return views_; }

 private:
  std::vector<TrainingView> views_;
  std::vector<RayPdf> pdfs_;
  TrainConfig cfg_;
  VariableWidthMlp<float> model_;
  AdamState<float> optimizer_;
  std::vector<LossRecord> log_;
  std::uint32_t epoch_ = 0;
  std::uint64_t step_ = 0;
  std::size_t batches_per_epoch_ = 0;
};

/// CSV columns: epoch,step,lr,loss_max,loss_low,total; doubles round-trip exactly.
void write_loss_csv(const std::filesystem::path& path, const std::vector<LossRecord>& log);

/// Throws FormatError on a malformed file.
std::vector<LossRecord> read_loss_csv(const std::filesystem::path& path);

/// Trailing moving average of the total loss over `window` steps.
std::vector<double> smoothed_loss(const std::vector<LossRecord>& log, std::size_t window);

}  // namespace clod
