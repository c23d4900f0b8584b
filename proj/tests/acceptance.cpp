// Acceptance suite: one PASS / FAIL / SKIP line per criterion. Exit status is
// nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <thread>

#include "helpers.hpp"
#include "mpn/cli.hpp"
#include "mpn/loss.hpp"
#include "mpn/lstm.hpp"
#include "mpn/metrics.hpp"
#include "mpn/synth.hpp"
#include "mpn/train.hpp"
#include "oracles.hpp"

using namespace mpn;
using json = nlohmann::json;

namespace {

enum class Status { pass, fail, skip };

struct Outcome {
  Status status;
  std::string detail;
};

Outcome verdict(bool ok, std::string detail) { return {ok ? Status::pass : Status::fail, std::move(detail)}; }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int cli(std::vector<std::string> args, std::string* out = nullptr) {
  std::ostringstream o, log;
  const int code = run_cli(args, o, log);
  if (out) *out = o.str();
  if (code != 0) std::cerr << "mpn " << args.front() << " exited " << code << ": " << log.str();
  return code;
}

// 1. Analytic gradients against central differences on random instances.
Outcome gradient_exactness() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(1001);
  double worst = 0.0;
  std::string where;
  int instances = 0;
  for (auto cfg : {LossConfig::base, LossConfig::localize, LossConfig::siamese}) {
    for (int k = 0; k < 20; ++k) {
      MpnDims d;
      d.labels = 1 + rng.below(3);
      d.observed = 1 + rng.below(3);
      d.context = rng.below(3);
      d.history = 1 + rng.below(4);
      d.total = d.history + 1 + rng.below(3);
      const MpnModel m = testing::random_model(rng, d, rng.uniform(0.2, 1.0));
      const std::size_t n = 2 + rng.below(2);
      std::vector<Sample> batch;
      for (std::size_t i = 0; i < n; ++i) batch.push_back(testing::random_sample(rng, d, rng.uniform(0.1, 0.6)));
      // Class weights from a separate random label set, sometimes with p = 0.
      const ClassWeights cw = class_weights(testing::random_binary(rng, 6, d.labels, rng.uniform(0.0, 0.7)));
      const double lambda = rng.uniform(0.0, 1.0), beta = rng.uniform(0.0, 1.0);
      const auto r = grad_check(m, batch, cfg, cw, lambda, beta, 1e-5);
      ++instances;
      if (r.max_relative_error > worst) {
        worst = r.max_relative_error;
        where = to_string(cfg) + " instance " + std::to_string(k);
      }
    }
  }
  const double secs = seconds_since(t0);
  return verdict(worst < 1e-4 && secs < 60.0,
                 std::to_string(instances) + " instances, max relative error " + fmt("%.2e", worst) + " (" + where +
                     "), " + fmt("%.1f", secs) + " s");
}

// 2. Metrics against the brute-force scorer.
Outcome metric_oracle() {
  Rng rng(1002);
  int mismatches = 0, zero_cases = 0;
  for (int k = 0; k < 100; ++k) {
    const std::size_t N = 1 + rng.below(10), L = 1 + rng.below(5);
    // Every fifth instance draws from p = 0 so empty predictions/truths occur.
    const double pp = k % 5 == 0 ? 0.0 : rng.uniform(0, 1), pt = k % 7 == 0 ? 0.0 : rng.uniform(0, 1);
    const Matrix pred = testing::random_binary(rng, N, L, pp), truth = testing::random_binary(rng, N, L, pt);
    const auto got = prf(count(pred, truth));
    const auto want = oracle::brute_force_prf(pred, truth);
    if (!(got == want)) ++mismatches;
    const auto c = count(pred, truth);
    for (std::size_t l = 0; l < L; ++l) zero_cases += (c.tp[l] + c.fp[l] == 0 || c.tp[l] + c.fn[l] == 0) ? 1 : 0;
  }
  return verdict(mismatches == 0, "100 instances, " + std::to_string(mismatches) + " mismatches, " +
                                      std::to_string(zero_cases) + " labels with a zero denominator");
}

// 3. Loss fixtures at 1e-10.
Outcome loss_fixtures() {
  std::vector<std::pair<std::string, bool>> checks;
  auto near = [](double a, double b) { return std::abs(a - b) <= 1e-10; };
  auto w = [](Vector v) { return ClassWeights{Vector(v.size(), 0.5), std::move(v)}; };
  const auto never = class_weights(Matrix{{0}, {0}, {0}});
  checks.push_back({"p=0 -> w=1", never.w[0] == 1.0});
  checks.push_back({"p=0.5 -> ln 2", near(class_weights(Matrix{{1}, {0}}).w[0], std::log(2.0))});
  checks.push_back({"w=-log p", near(class_weights(Matrix{{1}, {0}, {0}, {0}}).w[0], std::log(4.0))});
  checks.push_back({"L_Y negative", near(loss_y(Vector{0.5}, Vector{0}, w({1})), std::log(2.0))});
  checks.push_back({"L_Y positive", near(loss_y(Vector{0.5}, Vector{1}, w({1})), std::log(2.0))});
  checks.push_back({"L_Y weighted",
                    near(loss_y(Vector{0.5, 0.25}, Vector{1, 0}, w({2, 1})), 2 * std::log(2.0) - std::log(0.75))});
  checks.push_back({"L_O corners", loss_o(Matrix{{1, 0}}, Matrix{{1, 0}}) == 0.0});
  checks.push_back({"L_O 0.25", near(loss_o(Matrix(2, 3, 0.25), Matrix(2, 3, 0.0)), 0.0625)});
  checks.push_back({"L_O single", near(loss_o(Matrix{{0.25}}, Matrix{{1}}), 0.5625)});
  checks.push_back({"s equal", siamese_similarity(Vector{0.4, 2}, Vector{0.4, 2}) == Vector{1, 1}});
  checks.push_back({"s ln 2", near(siamese_similarity(Vector{std::log(2.0)}, Vector{0})[0], 0.5)});
  const auto s = siamese_similarity(Vector{1, -1}, Vector{0, 1});
  checks.push_back({"s pair", near(s[0], std::exp(-1.0)) && near(s[1], std::exp(-2.0))});
  checks.push_back({"L_S zero", loss_s(Vector{1}, Vector{1}) == 0.0});
  checks.push_back({"L_S 0.25", near(loss_s(Vector{0.5}, Vector{0}), 0.25)});
  checks.push_back({"L_S 0.13", near(loss_s(Vector{0.5, 0.1}, Vector{1, 0}), 0.13)});
  MpnModel one = MpnModel::zeros(MpnDims{1, 1, 1, 1, 2});
  checks.push_back({"l2 zero weights", l2_penalty(one, 3.0) == 0.0});
  one.decoder.w_forget(0, 0) = 3;
  one.decoder.w_forget(0, 1) = 4;
  checks.push_back({"l2 lambda 0", l2_penalty(one, 0.0) == 0.0});
  checks.push_back({"l2 [3,4]", near(l2_penalty(one, 2.0), 25.0)});

  // Batch compositions.
  Rng rng(1003);
  const MpnDims d{2, 1, 1, 2, 4};
  const MpnModel m = testing::random_model(rng, d);
  const Sample a = testing::random_sample(rng, d), b = testing::random_sample(rng, d);
  const auto cw = w({1.2, 0.7});
  const Prediction pa = predict(m, a.z, a.c), pb = predict(m, b.z, b.c);
  const Sample* pa_ptr[] = {&a};
  const auto base = batch_loss(LossConfig::base, std::span(&pa, 1), pa_ptr, cw, m, 0.2, 0.5);
  checks.push_back({"base batch", near(base.breakdown.total, loss_y(pa.y, a.y_true, cw) + l2_penalty(m, 0.2))});
  Prediction perfect = pa;
  perfect.o = a.o_true;
  const auto loc = batch_loss(LossConfig::localize, std::span(&perfect, 1), pa_ptr, cw, m, 0.0, 0.5);
  checks.push_back({"localize corners", near(loc.breakdown.total, loss_y(pa.y, a.y_true, cw))});
  const std::vector<Prediction> pair{pa, pb};
  const Sample* pair_ptr[] = {&a, &b};
  const auto sia = batch_loss(LossConfig::siamese, pair, pair_ptr, cw, m, 0.0, 0.3);
  const double hand = 0.3 * (loss_y(pa.y, a.y_true, cw) + loss_y(pb.y, b.y_true, cw) + loss_o(pa.o, a.o_true) +
                             loss_o(pb.o, b.o_true)) +
                      0.7 * loss_s(siamese_similarity(pa.g, pb.g), siamese_target(a.y_true, b.y_true));
  checks.push_back({"siamese pair", near(sia.breakdown.total, hand)});

  std::string failed;
  for (const auto& [name, ok] : checks) {
    if (!ok) failed += (failed.empty() ? "" : ", ") + name;
  }
  return verdict(failed.empty(), std::to_string(checks.size()) + " fixtures" +
                                     (failed.empty() ? ", all within 1e-10" : ", failed: " + failed));
}

// 4. Parameter accounting.
Outcome parameter_accounting() {
  int bad = 0, total = 0;
  for (std::size_t L = 1; L <= 8; ++L) {
    for (std::size_t m = 0; m <= 40; ++m) {
      const LstmParams p(L, m);
      std::size_t n = 0;
      p.for_each_tensor([&](std::span<const double> t, bool) { n += t.size(); });
      const std::size_t formula = 4 * (L * L + L * m + L);
      bad += (n != formula || param_count(L, m) != formula) ? 1 : 0;
      ++total;
    }
  }
  return verdict(bad == 0, std::to_string(total) + " (L, m) pairs, " + std::to_string(bad) + " mismatches");
}

// 5. Overfit a 64-sample default synthetic set.
Outcome overfit() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto data = synth_generate(SynthConfig::defaults(), 64).samples;
  TrainConfig c;
  c.learning_rate = 0.01;
  c.max_epochs = 2000;
  c.patience = 2000;
  c.seed = 0;
  Rng init_rng = Rng(c.seed).fork(kInitStream);
  const MpnModel init = MpnModel::initialized(SynthConfig::defaults().meta().model_dims(), init_rng);
  const auto r = train(init, data, {}, c);
  const auto scores = threshold_scores(r.model, data);
  const double secs = seconds_since(t0);
  return verdict(scores.micro_f1 >= 0.95 && secs < 600.0,
                 "training micro-F1 " + fmt("%.4f", scores.micro_f1) + " (threshold at zero), best epoch " +
                     std::to_string(r.history.best_epoch.value_or(0)) + " of " +
                     std::to_string(r.history.epochs.size()) + ", " + fmt("%.1f", secs) + " s");
}

struct Pipeline {
  bool ok = false;
  json report;
  std::string grid_head;
  double seconds = 0.0;
};

// Generate 1000 default samples, grid-search MPN-base on 500/100, fit the
// classifiers on the training embeddings and score the 400 test samples.
Pipeline run_pipeline(const std::filesystem::path& dir) {
  Pipeline p;
  const auto t0 = std::chrono::steady_clock::now();
  const std::string data = (dir / "synthetic.jsonl").string(), model = (dir / "best.model").string();
  const std::string threads = std::to_string(std::max(1u, std::thread::hardware_concurrency()));
  if (cli({"generate", "--n", "1000", "--seed", "0", "--out", data}) != 0) return p;
  std::string grid;
  if (cli({"gridsearch", "--data", data, "--out", model, "--split", "500,100,400", "--seed", "0", "--threads",
           threads},
          &grid) != 0) {
    return p;
  }
  std::istringstream lines(grid);
  std::string line;
  for (int k = 0; k < 4 && std::getline(lines, line); ++k) p.grid_head = line;
  if (cli({"evaluate", "--model", model, "--data", data, "--split", "500,100,400", "--seed", "0", "--classifier",
           "all", "--localize", "--out", (dir / "test").string()}) != 0) {
    return p;
  }
  std::ifstream in(dir / "test.json");
  p.report = json::parse(in);
  p.ok = true;
  p.seconds = seconds_since(t0);
  return p;
}

double get(const json& j, std::initializer_list<const char*> path) {
  const json* node = &j;
  for (const char* k : path) node = &node->at(k);
  return node->get<double>();
}

// 6. Generalization.
Outcome generalization(const Pipeline& p) {
  if (!p.ok) return {Status::fail, "pipeline did not complete"};
  const double micro = get(p.report, {"segment", "svm", "micro_f1"});
  const double macro = get(p.report, {"segment", "svm", "macro_f1"});
  return verdict(micro >= 0.80 && macro >= 0.60, "test micro-F1 " + fmt("%.4f", micro) + ", macro-F1 " +
                                                     fmt("%.4f", macro) + " (best grid row: " + p.grid_head + "), " +
                                                     fmt("%.0f", p.seconds) + " s");
}

// 7. Localized stepwise decisions against broadcasting the segment decision.
Outcome localization(const Pipeline& p) {
  if (!p.ok) return {Status::fail, "pipeline did not complete"};
  auto m = [&](const char* which, const char* key) { return get(p.report, {"localization", which, key}); };
  const double lf = m("localized", "micro_f1"), bf = m("broadcast", "micro_f1");
  const double lp = m("localized", "micro_precision"), bp = m("broadcast", "micro_precision");
  const double lr = m("localized", "micro_recall"), br = m("broadcast", "micro_recall");
  return verdict(lf > bf && lp > bp && br >= lr, "F1 " + fmt("%.4f", lf) + " vs " + fmt("%.4f", bf) + ", precision " +
                                                     fmt("%.4f", lp) + " vs " + fmt("%.4f", bp) + ", recall " +
                                                     fmt("%.4f", lr) + " vs " + fmt("%.4f", br) +
                                                     " (localized vs broadcast)");
}

// 8. SVM >= threshold >= nearest mean, each comparison with 0.01 slack, on
// micro-F1 and on macro-F1.
Outcome classifier_ordering(const Pipeline& p) {
  if (!p.ok) return {Status::fail, "pipeline did not complete"};
  bool ok = true;
  std::string detail;
  for (const char* key : {"micro_f1", "macro_f1"}) {
    const double s = get(p.report, {"segment", "svm", key});
    const double t = get(p.report, {"segment", "threshold_zero", key});
    const double n = get(p.report, {"segment", "nearest_mean", key});
    ok = ok && s - t >= -0.01 && s - n >= -0.01 && t - n >= -0.01;
    detail += std::string(detail.empty() ? "" : "; ") + key + " svm " + fmt("%.4f", s) + ", threshold " +
              fmt("%.4f", t) + ", nearest " + fmt("%.4f", n);
  }
  return verdict(ok, detail);
}

// 10. Two identical single-threaded training runs.
Outcome determinism(const std::filesystem::path& dir) {
  const std::string data = (dir / "det.jsonl").string();
  if (cli({"generate", "--n", "200", "--seed", "11", "--out", data}) != 0) return {Status::fail, "generate failed"};
  for (const char* name : {"det_a.model", "det_b.model"}) {
    if (cli({"train", "--data", data, "--out", (dir / name).string(), "--max-epochs", "20", "--seed", "5",
             "--threads", "1"}) != 0) {
      return {Status::fail, "train failed"};
    }
  }
  const std::string a = testing::read_file(dir / "det_a.model"), b = testing::read_file(dir / "det_b.model");
  return verdict(!a.empty() && a == b, std::to_string(a.size()) + " bytes, " + (a == b ? "identical" : "different"));
}

}  // namespace

int main() {
  const auto dir = testing::scratch_dir("acceptance");
  int failures = 0;
  auto report = [&](int id, const std::string& name, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {Status::fail, std::string("exception: ") + e.what()};
    }
    const char* tag = o.status == Status::pass ? "PASS" : o.status == Status::fail ? "FAIL" : "SKIP";
    failures += o.status == Status::fail ? 1 : 0;
    std::cout << tag << " " << id << " " << name << ": " << o.detail << std::endl;
  };

  report(1, "gradient exactness", gradient_exactness);
  report(2, "metric oracle equivalence", metric_oracle);
  report(3, "loss fixtures", loss_fixtures);
  report(4, "parameter accounting", parameter_accounting);
  report(5, "overfit capacity", overfit);
  Pipeline p;
  try {
    p = run_pipeline(dir);
  } catch (const std::exception& e) {
    std::cerr << "pipeline: " << e.what() << "\n";
  }
  report(6, "generalization on synthetic", [&] { return generalization(p); });
  report(7, "localization benefit", [&] { return localization(p); });
  report(8, "classifier ordering", [&] { return classifier_ordering(p); });
  report(9, "benchmark table reproduction", [] {
    return Outcome{Status::skip, "needs the raw PHM 2015 and Opportunity data; see README for the recipe"};
  });
  report(10, "training determinism", [&] { return determinism(dir); });
  return failures == 0 ? 0 : 1;
}
