//
// Copyright (C) 2026 The clod Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <algorithm>
#include <cmath>
#include <fstream>

#include "clod/error.hpp"
#include "clod/synth.hpp"
#include "clod/trainer.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace clod;

namespace {

constexpr ArchConfig kTiny{6, 4, 3, 4, 8};

std::vector<TrainingView> small_views(int count = 4, int size = 16) {
  RigSpec rig;
  rig.count_azimuth = count;
  rig.count_elevation = 1;
  rig.width = size;
  rig.height = size;
  const auto cams = generate_rig(rig);
  const auto truth = render_ground_truth(default_scene(), cams);
  std::vector<TrainingView> views;
  for (std::size_t i = 0; i < cams.size(); ++i)
    views.push_back(TrainingView::make(truth[i].rgba, truth[i].saliency, cams[i]));
  return views;
}

TrainConfig quick_config() {
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.batch_size = 64;
  cfg.batches_per_epoch = 5;
  cfg.seed = 11;
  return cfg;
}

}  // namespace

TEST_CASE("learning rate schedule") {
  TrainConfig cfg;
  CHECK(learning_rate(cfg, 0) == 1e-3);
  CHECK(learning_rate(cfg, 10) == doctest::Approx(8.1707e-4).epsilon(1e-4));
  CHECK(learning_rate(cfg, 10) == doctest::Approx(1e-3 * std::pow(0.98, 10)).epsilon(1e-15));
  cfg.lr_decay = 1.0;
  CHECK(learning_rate(cfg, 99) == 1e-3);
}

TEST_CASE("configuration validation") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  auto bad = cfg;
  bad.epochs = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  bad = cfg;
  bad.batch_size = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  bad = cfg;
  bad.lr = 0.0;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  bad = cfg;
  bad.lr_decay = 1.5;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  bad = cfg;
  bad.lambda_f = 0.0;
  bad.lambda_s = 0.0;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  CHECK_THROWS_AS(Trainer({}, kTiny, cfg), InvalidInput);
}

TEST_CASE("mse accumulates every element") {
  const auto a = test::random_matrix<float>(4, 9, 1);
  const auto b = test::random_matrix<float>(4, 9, 2);
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) s += std::pow(double(a.data()[i]) - b.data()[i], 2);
  CHECK(mse(a, b) == doctest::Approx(s / 36.0).epsilon(1e-12));
  CHECK(mse(a, a) == 0.0);
  CHECK_THROWS_AS(mse(a, test::random_matrix<float>(4, 8, 3)), InvalidInput);
}

TEST_CASE("lod draws stay in range and are uniform") {
  Rng rng(4);
  std::vector<double> draws;
  for (int i = 0; i < 20000; ++i) {
    const auto d = sample_lod(kDeskArch, rng);
    CHECK(d.lod >= 1.0);
    CHECK(d.lod < 49.0);
    CHECK(d.scale == scale_for_lod(kDeskArch, d.lod));
    draws.push_back(d.lod);
  }
  std::sort(draws.begin(), draws.end());
  double ks = 0.0;
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const double cdf = (draws[i] - 1.0) / 48.0;
    ks = std::max({ks, std::abs(cdf - double(i) / draws.size()), std::abs(cdf - double(i + 1) / draws.size())});
  }
  CHECK(ks < 1.63 / std::sqrt(double(draws.size())));  // 1% level

  std::vector<int> hits(49, 0);
  for (int i = 0; i < 48000; ++i) {
    const double l = sample_lod(kDeskArch, rng, true).lod;
    CHECK(l == std::floor(l));
    REQUIRE(l >= 1.0);
    REQUIRE(l <= 48.0);
    ++hits[static_cast<int>(l)];
  }
  for (int l = 1; l <= 48; ++l) CHECK(std::abs(hits[l] - 1000) < 4 * std::sqrt(1000.0));
}

TEST_CASE("a step with a perfect fit leaves the parameters alone") {
  auto model = test::random_model<float>(kTiny, 5);
  AdamState<float> opt(model.parameters().size());
  const auto inputs = test::random_matrix<float>(6, 32, 6);
  ForwardCache<float> cache;
  forward(model, inputs, kTiny.max_lod(), cache);
  const Matrix<float> full = cache.output;
  forward(model, inputs, 2.5, cache);
  const Matrix<float> low = cache.output;
  const auto before = model.parameters();
  const auto loss = train_step(model, opt, inputs, 2.5, full, low, 1e-2);
  CHECK(loss.total == 0.0);
  CHECK(model.parameters() == before);
  CHECK(opt.step == 1);
}

TEST_CASE("step losses match a direct recomputation") {
  auto model = test::random_model<float>(kTiny, 7);
  AdamState<float> opt(model.parameters().size());
  const auto inputs = test::random_matrix<float>(6, 40, 8);
  const auto full = test::random_matrix<float>(4, 40, 9, 0.0, 1.0);
  const auto low = test::random_matrix<float>(4, 40, 10, 0.0, 1.0);
  ForwardCache<float> cache;
  forward(model, inputs, kTiny.max_lod(), cache);
  const double expect_max = mse(cache.output, full);
  forward(model, inputs, 3.25, cache);
  const double expect_low = mse(cache.output, low);

  auto copy = model;
  AdamState<float> copy_opt(model.parameters().size());
  const auto loss = train_step(model, opt, inputs, 3.25, full, low, 1e-3);
  CHECK(loss.loss_max == expect_max);
  CHECK(loss.loss_low == expect_low);
  CHECK(loss.total == expect_max + expect_low);

  // At the top lod with equal targets both terms coincide.
  const auto same = train_step(copy, copy_opt, inputs, kTiny.max_lod(), full, full, 1e-3);
  CHECK(same.total == 2.0 * expect_max);

  CHECK_THROWS_AS(train_step(model, opt, inputs, 2.0, full, test::random_matrix<float>(4, 39, 1), 1e-3),
                  InvalidInput);
}

TEST_CASE("non-finite losses abort the step without touching the model") {
  auto model = test::random_model<float>(kTiny, 12);
  AdamState<float> opt(model.parameters().size());
  const auto inputs = test::random_matrix<float>(6, 8, 13);
  auto full = test::random_matrix<float>(4, 8, 14);
  full(0, 0) = std::numeric_limits<float>::infinity();
  const auto before = model.parameters();
  CHECK_THROWS_AS(train_step(model, opt, inputs, 2.0, full, full, 1e-3), NumericalError);
  CHECK(model.parameters() == before);
  CHECK(opt.step == 0);
}

TEST_CASE("training reduces the loss and logs every step") {
  auto cfg = quick_config();
  cfg.epochs = 6;
  cfg.batches_per_epoch = 0;
  Trainer trainer(small_views(), kTiny, cfg);
  CHECK(trainer.batches_per_epoch() == 16);  // 4 * 256 pixels / 64
  std::vector<std::uint32_t> seen;
  trainer.run([&](std::uint32_t e) { seen.push_back(e); });
  CHECK(seen == std::vector<std::uint32_t>{1, 2, 3, 4, 5, 6});
  const auto& log = trainer.log();
  REQUIRE(log.size() == 96);
  CHECK(log.front().step == 1);
  CHECK(log.back().step == 96);
  CHECK(log.back().epoch == 6);
  CHECK(log.back().lr == learning_rate(cfg, 5));
  const auto smooth = smoothed_loss(log, 16);
  CHECK(smooth.back() < smooth[15]);
}

TEST_CASE("training is deterministic for a seed") {
  const auto views = small_views();
  Trainer a(views, kTiny, quick_config());
  Trainer b(views, kTiny, quick_config());
  a.run();
  b.run();
  CHECK(a.model().parameters() == b.model().parameters());
  auto other = quick_config();
  other.seed = 12;
  Trainer c(views, kTiny, other);
  c.run();
  CHECK(a.model().parameters() != c.model().parameters());
}

TEST_CASE("resuming from a checkpoint reproduces the uninterrupted run") {
  const auto views = small_views();
  Trainer straight(views, kTiny, quick_config());
  straight.run();

  const auto dir = test::scratch_dir("trainer_ckpt");
  Trainer first(views, kTiny, quick_config());
  first.run_epoch();
  first.run_epoch();
  first.save_checkpoint(dir);
  for (const char* f : {"model.clfn", "optimizer.bin", "trainer.json", "loss.csv"})
    CHECK(std::filesystem::exists(dir / f));

  Trainer resumed(views, kTiny, quick_config());
  resumed.load_checkpoint(dir);
  CHECK(resumed.epochs_done() == 2);
  CHECK(resumed.log().size() == 10);
  resumed.run();
  CHECK(resumed.model().parameters() == straight.model().parameters());
  CHECK(resumed.optimizer().step == straight.optimizer().step);
  REQUIRE(resumed.log().size() == straight.log().size());
  for (std::size_t i = 0; i < straight.log().size(); ++i) CHECK(resumed.log()[i].total == straight.log()[i].total);

  Trainer wrong(views, ArchConfig{6, 4, 3, 4, 9}, quick_config());
  CHECK_THROWS_AS(wrong.load_checkpoint(dir), FormatError);
}

TEST_CASE("loss logs round-trip through CSV") {
  const auto dir = test::scratch_dir("trainer_csv");
  std::vector<LossRecord> log{{1, 1, 1e-3, 0.1 / 3.0, std::nextafter(0.2, 1.0), 0.1 / 3.0 + 0.2},
                              {2, 2, 9.8e-4, 1e-300, 0.0, 1e-300}};
  write_loss_csv(dir / "loss.csv", log);
  const auto back = read_loss_csv(dir / "loss.csv");
  REQUIRE(back.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back[i].epoch == log[i].epoch);
    CHECK(back[i].step == log[i].step);
    CHECK(back[i].lr == log[i].lr);
    CHECK(back[i].loss_max == log[i].loss_max);
    CHECK(back[i].loss_low == log[i].loss_low);
    CHECK(back[i].total == log[i].total);
  }
  std::ofstream(dir / "bad.csv") << "epoch,step\n1,2\n";
  CHECK_THROWS_AS(read_loss_csv(dir / "bad.csv"), FormatError);
  std::ofstream(dir / "row.csv") << "epoch,step,lr,loss_max,loss_low,total\n1;2;3\n";
  CHECK_THROWS_AS(read_loss_csv(dir / "row.csv"), FormatError);
  CHECK_THROWS_AS(read_loss_csv(dir / "missing.csv"), FormatError);
}

TEST_CASE("smoothed loss is a trailing mean") {
  std::vector<LossRecord> log;
  for (int i = 1; i <= 5; ++i) log.push_back({1, std::uint64_t(i), 1e-3, 0, 0, double(i)});
  const auto s = smoothed_loss(log, 2);
  CHECK(s == std::vector<double>{1.0, 1.5, 2.5, 3.5, 4.5});
  CHECK_THROWS_AS(smoothed_loss(log, 0), InvalidInput);
}
