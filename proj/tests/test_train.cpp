#include <doctest.h>

#include <cmath>
#include <sstream>

#include "helpers.hpp"
#include "mpn/data.hpp"
#include "mpn/synth.hpp"
#include "mpn/train.hpp"

using namespace mpn;

namespace {

const MpnDims kTiny{2, 2, 1, 3, 5};

std::vector<Sample> tiny_batch(Rng& rng, std::size_t n) {
  std::vector<Sample> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(testing::random_sample(rng, kTiny, 0.4));
  return out;
}

ClassWeights weights_of(const std::vector<Sample>& s) { return class_weights(segment_matrix(s)); }

std::vector<Sample> synth(std::size_t n, std::uint64_t seed = 0) {
  SynthConfig cfg = SynthConfig::defaults();
  cfg.seed = seed;
  return synth_generate(cfg, n).samples;
}

}  // namespace

TEST_SUITE("train") {
  TEST_CASE("optimizer: SGD") {
    Optimizer sgd(OptimizerKind::sgd, 0.1, 1);
    std::vector<double> p{1.0};
    sgd.step(p, std::vector<double>{0.0});
    CHECK(p[0] == 1.0);
    sgd.step(p, std::vector<double>{2.0});
    CHECK(std::abs(p[0] - 0.8) <= 1e-15);
    CHECK(sgd.steps_taken() == 2);
    CHECK_THROWS_AS(sgd.step(p, std::vector<double>{1.0, 2.0}), DimensionError);
  }

  TEST_CASE("optimizer: Adam first step has magnitude eta") {
    for (double g : {1e-3, 0.5, 7.0, -250.0}) {
      Optimizer adam(OptimizerKind::adam, 0.01, 1);
      std::vector<double> p{0.0};
      adam.step(p, std::vector<double>{g});
      // m̂ = g, v̂ = g², step = η·g/(|g| + ε).
      const double want = -0.01 * g / (std::abs(g) + 1e-8);
      CHECK(std::abs(p[0] - want) <= 1e-15);
      CHECK(std::abs(std::abs(p[0]) - 0.01) <= 1e-7);
    }
  }

  TEST_CASE("optimizer: Adam second step by hand") {
    Optimizer adam(OptimizerKind::adam, 0.1, 1);
    std::vector<double> p{0.0};
    adam.step(p, std::vector<double>{1.0});
    adam.step(p, std::vector<double>{3.0});
    const double m = 0.9 * 0.1 + 0.1 * 3.0, v = 0.999 * 0.001 + 0.001 * 9.0;
    const double mhat = m / (1 - 0.81), vhat = v / (1 - 0.999 * 0.999);
    const double want = -0.1 * (1.0 / (1.0 + 1e-8)) - 0.1 * mhat / (std::sqrt(vhat) + 1e-8);
    CHECK(std::abs(p[0] - want) <= 1e-14);
  }

  TEST_CASE("global norm clipping") {
    MpnGrads g = MpnGrads::zeros_like(MpnModel::zeros(MpnDims{1, 1, 0, 1, 2}));
    g.b_g[0] = 3;
    g.encoder.b_input[0] = 4;
    CHECK(clip_global_norm(g, 10.0) == 5.0);
    CHECK(g.b_g[0] == 3.0);
    CHECK(clip_global_norm(g, 1.0) == 5.0);
    CHECK(std::abs(g.b_g[0] - 0.6) <= 1e-15);
    CHECK(std::abs(g.encoder.b_input[0] - 0.8) <= 1e-15);
  }

  TEST_CASE("config validation") {
    TrainConfig c;
    CHECK_NOTHROW(c.validate());
    c.learning_rate = 0;
    CHECK_THROWS(c.validate());
    c = TrainConfig{};
    c.l2 = -1;
    CHECK_THROWS(c.validate());
    c = TrainConfig{};
    c.beta = 1.5;
    CHECK_THROWS(c.validate());
    c = TrainConfig{};
    c.loss = LossConfig::siamese;
    c.batch_size = 1;
    CHECK_THROWS(c.validate());
    CHECK(optimizer_from_string("sgd") == OptimizerKind::sgd);
    CHECK_THROWS(optimizer_from_string("rmsprop"));
  }

  TEST_CASE("grad_check passes for every configuration") {
    Rng rng(2);
    const MpnModel m = testing::random_model(rng, kTiny);
    const auto batch = tiny_batch(rng, 2);
    const auto cw = weights_of(batch);
    for (auto cfg : {LossConfig::base, LossConfig::localize, LossConfig::siamese}) {
      CAPTURE(to_string(cfg));
      const auto r = grad_check(m, batch, cfg, cw, 0.1, 0.3, 1e-5);
      CHECK(r.parameters == m.scalar_count());
      CHECK(r.max_relative_error < 1e-4);
    }
  }

  TEST_CASE("batch gradient does not depend on the thread count") {
    Rng rng(3);
    const MpnModel m = testing::random_model(rng, kTiny);
    const auto batch = tiny_batch(rng, 6);
    std::vector<const Sample*> ptrs;
    for (const auto& s : batch) ptrs.push_back(&s);
    const auto cw = weights_of(batch);
    const auto a = batch_gradient(m, ptrs, LossConfig::siamese, cw, 0.1, 0.5, 1);
    const auto b = batch_gradient(m, ptrs, LossConfig::siamese, cw, 0.1, 0.5, 4);
    CHECK(flatten(a.grads) == flatten(b.grads));
    CHECK(a.loss.total == b.loss.total);
  }

  TEST_CASE("zero epochs return the initial model") {
    Rng rng(4);
    const MpnModel m = testing::random_model(rng, kTiny);
    const auto data = tiny_batch(rng, 4);
    TrainConfig c;
    c.max_epochs = 0;
    const auto r = train(m, data, {}, c);
    CHECK(r.model == m);
    CHECK(r.history.epochs.empty());
    CHECK_FALSE(r.history.best_epoch.has_value());
  }

  TEST_CASE("training is deterministic") {
    const auto data = synth(40);
    const MpnDims d = SynthConfig::defaults().meta().model_dims();
    Rng rng = Rng(9).fork(kInitStream);
    const MpnModel init = MpnModel::initialized(d, rng);
    TrainConfig c;
    c.max_epochs = 4;
    c.batch_size = 8;
    c.seed = 9;
    const auto a = train(init, data, {}, c);
    const auto b = train(init, data, {}, c);
    CHECK(a.model == b.model);
    REQUIRE(a.history.epochs.size() == b.history.epochs.size());
    for (std::size_t e = 0; e < a.history.epochs.size(); ++e) {
      CHECK(a.history.epochs[e].train.total == b.history.epochs[e].train.total);
      CHECK(a.history.epochs[e].val_micro_f1 == b.history.epochs[e].val_micro_f1);
    }
    c.threads = 3;
    CHECK(train(init, data, {}, c).model == a.model);
  }

  TEST_CASE("the returned model is the best-validation snapshot") {
    const auto data = synth(48);
    const std::vector<Sample> tr(data.begin(), data.begin() + 32), va(data.begin() + 32, data.end());
    const MpnDims d = SynthConfig::defaults().meta().model_dims();
    Rng rng = Rng(1).fork(kInitStream);
    const MpnModel init = MpnModel::initialized(d, rng);
    TrainConfig c;
    c.learning_rate = 0.05;
    c.max_epochs = 15;
    c.patience = 4;
    c.batch_size = 8;
    const auto r = train(init, tr, va, c);
    REQUIRE(r.history.best_epoch.has_value());
    const auto& best = r.history.epochs[*r.history.best_epoch - 1];
    CHECK(best.val_micro_f1 + best.val_macro_f1 == r.history.best_score());
    const auto again = threshold_scores(r.model, va);
    CHECK(again.micro_f1 == best.val_micro_f1);
    CHECK(again.macro_f1 == best.val_macro_f1);
    // Early stopping: never more than patience epochs after the best one.
    CHECK(r.history.epochs.size() <= *r.history.best_epoch + c.patience);
  }

  TEST_CASE("overfitting a tiny set drives the loss down") {
    const auto data = synth(16, 5);
    const MpnDims d = SynthConfig::defaults().meta().model_dims();
    Rng rng = Rng(0).fork(kInitStream);
    const MpnModel init = MpnModel::initialized(d, rng);
    TrainConfig c;
    c.l2 = 0.0;
    c.learning_rate = 0.02;
    c.max_epochs = 400;
    c.patience = 400;
    c.batch_size = 16;
    const auto r = train(init, data, {}, c);
    REQUIRE(r.history.epochs.size() == 400);
    CHECK(r.history.epochs.back().train.total < 0.1 * r.history.epochs.front().train.total);
  }

  TEST_CASE("default grids") {
    TrainConfig base;
    base.seed = 10;
    const auto g = default_grid(base);
    CHECK(g.size() == 9);
    for (std::size_t k = 0; k < g.size(); ++k) CHECK(g[k].seed == 10 + k);
    base.loss = LossConfig::siamese;
    CHECK(default_grid(base).size() == 45);
  }

  TEST_CASE("singleton grid returns its only config") {
    const auto data = synth(24);
    const MpnDims d = SynthConfig::defaults().meta().model_dims();
    TrainConfig c;
    c.max_epochs = 2;
    c.learning_rate = 0.01;
    const std::vector<TrainConfig> grid{c};
    const auto r = grid_search(grid, d, data, {});
    CHECK(r.best_index == 0);
    CHECK(r.rows.size() == 1);
    CHECK(r.best_config.learning_rate == 0.01);
  }

  TEST_CASE("a working config beats diverging ones") {
    const auto data = synth(64, 2);
    const std::vector<Sample> tr(data.begin(), data.begin() + 48), va(data.begin() + 48, data.end());
    const MpnDims d = SynthConfig::defaults().meta().model_dims();
    TrainConfig good;
    good.learning_rate = 0.05;
    good.l2 = 0.01;
    good.max_epochs = 60;
    good.batch_size = 16;
    TrainConfig bad = good;
    bad.optimizer = OptimizerKind::sgd;
    bad.learning_rate = 1e12;
    std::vector<TrainConfig> grid{bad, good, bad};
    for (std::size_t k = 0; k < grid.size(); ++k) grid[k].seed = k;
    const auto r = grid_search(grid, d, tr, va, 2);
    CHECK(r.best_index == 1);
    CHECK(r.rows.front().index == 1);
    std::ostringstream report;
    write_grid_report(report, r);
    CHECK(report.str().find("0.05") != std::string::npos);
  }

  TEST_CASE("history csv") {
    TrainHistory h;
    h.epochs.push_back(EpochRecord{1, {1.5, 1.0, 0.5, 0.0, 0.0}, 0.25, 0.5, 0.1});
    std::ostringstream out;
    write_history_csv(out, h);
    CHECK(out.str().rfind("epoch,", 0) == 0);
    CHECK(out.str().find("\n1,1,0.5,0,0,1.5,0.25,0.5") != std::string::npos);
  }
}
