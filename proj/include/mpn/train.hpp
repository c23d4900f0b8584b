#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mpn/loss.hpp"
#include "mpn/metrics.hpp"
#include "mpn/model.hpp"
#include "mpn/sample.hpp"

namespace mpn {

enum class OptimizerKind { adam, sgd };

std::string to_string(OptimizerKind k);
OptimizerKind optimizer_from_string(const std::string& s);

struct TrainConfig {
  LossConfig loss = LossConfig::base;
  double learning_rate = 0.01;  // η
  double l2 = 0.1;              // λ
  double beta = 0.5;            // β, siamese only
  std::size_t batch_size = 32;
  std::size_t max_epochs = 200;
  std::size_t patience = 25;
  std::uint64_t seed = 0;
  std::optional<double> clip_norm;
  OptimizerKind optimizer = OptimizerKind::adam;
  std::size_t threads = 1;

  /// Throws std::invalid_argument on η ≤ 0, λ < 0, β ∉ [0,1], batch_size 0,
  /// or a siamese batch size below 2.
  void validate() const;
};

// Sub-seeds derived from TrainConfig::seed.
inline constexpr std::uint64_t kInitStream = 1;
inline constexpr std::uint64_t kShuffleStream = 2;

struct EpochRecord {
  std::size_t epoch = 0;
  LossBreakdown train;
  double val_micro_f1 = 0.0;
  double val_macro_f1 = 0.0;
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::optional<std::size_t> best_epoch;  // 1-based epoch of the returned snapshot

  double best_score() const;  // max over epochs of val micro-F1 + macro-F1
};

struct TrainResult {
  MpnModel model;
  TrainHistory history;
};

/// Adam (β1 = 0.9, β2 = 0.999, ε = 1e-8) or plain SGD over a flat
/// parameter vector.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double learning_rate, std::size_t parameters);

  void step(std::span<double> params, std::span<const double> grads);
  void step(MpnModel& model, const MpnGrads& grads);

  std::size_t steps_taken() const { return t_; }

 private:
  OptimizerKind kind_;
  double lr_;
  std::size_t t_ = 0;
  std::vector<double> m_, v_;
};

/// Rescales `grads` in place when its global L2 norm exceeds `max_norm`.
/// Returns the norm before clipping.
double clip_global_norm(MpnGrads& grads, double max_norm);

struct BatchGradient {
  LossBreakdown loss;
  MpnGrads grads;
};

/// Full batch objective (with L2) and its exact gradient. Per-sample work may
/// run on `threads` workers; reductions follow sample order.
BatchGradient batch_gradient(const MpnModel& model, std::span<const Sample* const> batch,
                             LossConfig config, const ClassWeights& cw, double lambda, double beta,
                             std::size_t threads = 1);

/// Micro and macro F1 of threshold-at-zero segment decisions.
PrfReport threshold_scores(const MpnModel& model, std::span<const Sample> samples,
                           std::size_t threads = 1);

/// Mini-batch training with best-validation snapshotting and early stopping.
/// An empty validation set makes the training set serve as validation.
TrainResult train(const MpnModel& init, std::span<const Sample> train_set,
                  std::span<const Sample> validation_set, const TrainConfig& config,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t parameters = 0;
};

/// Relative error |a - n| / max(|a|, |n|, kGradCheckFloor).
inline constexpr double kGradCheckFloor = 1e-8;

/// Central differences of the full batch objective against batch_gradient,
/// over every parameter coordinate.
GradCheckResult grad_check(const MpnModel& model, std::span<const Sample> batch, LossConfig config,
                           const ClassWeights& cw, double lambda, double beta, double fd_step);

struct GridRow {
  std::size_t index = 0;
  TrainConfig config;
  double val_micro_f1 = 0.0;
  double val_macro_f1 = 0.0;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  double score() const { return val_micro_f1 + val_macro_f1; }
};

struct GridSearchResult {
  std::size_t best_index = 0;
  TrainConfig best_config;
  MpnModel best_model;
  TrainHistory best_history;
  std::vector<GridRow> rows;  // ranked, best first
};

/// η ∈ {0.001, 0.01, 0.1} × λ ∈ {0.01, 0.1, 1}, plus β ∈ {0.1, 0.3, 0.5,
/// 0.7, 0.9} for siamese. Point k gets seed base.seed + k.
std::vector<TrainConfig> default_grid(const TrainConfig& base);

/// Trains one model per grid point (initialized from the point's seed) and
/// keeps the one with the highest validation micro-F1 + macro-F1; ties go to
/// smaller η, then larger λ, then the earlier point. `threads` > 1 runs grid
/// points concurrently.
GridSearchResult grid_search(std::span<const TrainConfig> grid, const MpnDims& dims,
                             std::span<const Sample> train_set, std::span<const Sample> validation_set,
                             std::size_t threads = 1);

void write_history_csv(std::ostream& out, const TrainHistory& history);
void write_grid_report(std::ostream& out, const GridSearchResult& result);

/// Runs fn(i) for i in [0, n) on up to `threads` workers.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace mpn
