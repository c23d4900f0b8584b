#include "mpn/train.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "mpn/data.hpp"
#include "mpn/decide.hpp"
#include "mpn/model_io.hpp"

namespace mpn {

std::string to_string(OptimizerKind k) { return k == OptimizerKind::adam ? "adam" : "sgd"; }

OptimizerKind optimizer_from_string(const std::string& s) {
  if (s == "adam") return OptimizerKind::adam;
  if (s == "sgd") return OptimizerKind::sgd;
  throw std::invalid_argument("unknown optimizer '" + s + "'");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (!(l2 >= 0.0)) throw std::invalid_argument("lambda must be non-negative");
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("beta must lie in [0, 1]");
  if (batch_size < 1) throw std::invalid_argument("batch size must be at least 1");
  if (loss == LossConfig::siamese && batch_size < 2) {
    throw std::invalid_argument("the siamese objective needs a batch size of at least 2");
  }
  if (clip_norm && !(*clip_norm > 0.0)) throw std::invalid_argument("clip norm must be positive");
  if (threads < 1) throw std::invalid_argument("threads must be at least 1");
}

double TrainHistory::best_score() const {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& e : epochs) best = std::max(best, e.val_micro_f1 + e.val_macro_f1);
  return best;
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min(threads, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

Optimizer::Optimizer(OptimizerKind kind, double learning_rate, std::size_t parameters)
    : kind_(kind), lr_(learning_rate) {
  if (kind_ == OptimizerKind::adam) {
    m_.assign(parameters, 0.0);
    v_.assign(parameters, 0.0);
  }
}

void Optimizer::step(std::span<double> params, std::span<const double> grads) {
  if (params.size() != grads.size()) {
    throw DimensionError("optimizer: " + shape_of(params) + " parameters vs " + shape_of(grads) +
                         " gradients");
  }
  ++t_;
  if (kind_ == OptimizerKind::sgd) {
    for (std::size_t k = 0; k < params.size(); ++k) params[k] -= lr_ * grads[k];
    return;
  }
  if (m_.size() != params.size()) throw DimensionError("optimizer: state sized for another model");
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    m_[k] = b1 * m_[k] + (1.0 - b1) * grads[k];
    v_[k] = b2 * v_[k] + (1.0 - b2) * grads[k] * grads[k];
    const double mhat = m_[k] / c1;
    const double vhat = v_[k] / c2;
    params[k] -= lr_ * mhat / (std::sqrt(vhat) + eps);
  }
}

void Optimizer::step(MpnModel& model, const MpnGrads& grads) {
  auto flat = flatten(model);
  step(flat, flatten(grads));
  assign(model, flat);
}

double clip_global_norm(MpnGrads& grads, double max_norm) {
  double sq = 0.0;
  for_each_tensor(grads, [&](std::span<const double> t, bool) {
    for (double v : t) sq += v * v;
  });
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for_each_tensor(grads, [&](std::span<double> t, bool) {
      for (auto& v : t) v *= scale;
    });
  }
  return norm;
}

BatchGradient batch_gradient(const MpnModel& model, std::span<const Sample* const> batch,
                             LossConfig config, const ClassWeights& cw, double lambda, double beta,
                             std::size_t threads) {
  const std::size_t n = batch.size();
  std::vector<ForwardPass> passes(n);
  parallel_for(n, threads, [&](std::size_t i) { passes[i] = mpn_forward(model, batch[i]->z, batch[i]->c); });

  std::vector<Prediction> preds;
  preds.reserve(n);
  for (const auto& p : passes) preds.push_back(p.prediction);
  const BatchLoss bl = batch_loss(config, preds, batch, cw, model, lambda, beta);

  std::vector<MpnGrads> per_sample(n);
  parallel_for(n, threads, [&](std::size_t i) { per_sample[i] = mpn_backward(model, passes[i], bl.adjoints[i]); });

  BatchGradient out{bl.breakdown, MpnGrads::zeros_like(model)};
  for (const auto& g : per_sample) out.grads += g;
  add_l2_gradient(model, lambda, out.grads);
  return out;
}

PrfReport threshold_scores(const MpnModel& model, std::span<const Sample> samples, std::size_t threads) {
  const std::size_t L = model.dims.labels;
  Matrix pred(samples.size(), L), truth(samples.size(), L);
  const LabelClassifier zero{ClassifierKind::threshold_zero, {}};
  parallel_for(samples.size(), threads, [&](std::size_t i) {
    const Prediction p = predict(model, samples[i].z, samples[i].c);
    pred.set_row(i, classify(zero, p.g));
    truth.set_row(i, samples[i].y_true);
  });
  return prf(count(pred, truth));
}

namespace {

bool finite_breakdown(const LossBreakdown& b) { return std::isfinite(b.total); }

bool finite_model(const MpnModel& m) {
  bool ok = true;
  for_each_tensor(m, [&](std::span<const double> t, bool) { ok = ok && all_finite(t); });
  return ok;
}

}  // namespace

TrainResult train(const MpnModel& init, std::span<const Sample> train_set,
                  std::span<const Sample> validation_set, const TrainConfig& config,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  config.validate();
  const MpnDims& d = init.dims;
  for (std::size_t i = 0; i < train_set.size(); ++i) {
    const auto& s = train_set[i];
    if (s.z.rows() != d.history || s.z.cols() != d.observed || s.c.rows() != d.total ||
        s.c.cols() != d.context || s.y_true.size() != d.labels) {
      throw DimensionError("train: sample " + std::to_string(i) + " does not match the model dimensions");
    }
  }

  TrainResult result{init, {}};
  if (config.max_epochs == 0 || train_set.empty()) return result;

  const auto validation = validation_set.empty() ? train_set : validation_set;
  const ClassWeights cw = class_weights(segment_matrix(std::vector<Sample>(train_set.begin(), train_set.end())));

  MpnModel model = init;
  Optimizer opt(config.optimizer, config.learning_rate, model.scalar_count());
  Rng shuffle = Rng(config.seed).fork(kShuffleStream);
  double best = -std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto order = permutation(shuffle, train_set.size());

    // Batch boundaries; a trailing single sample joins the previous batch
    // under the siamese objective, which needs pairs.
    std::vector<std::pair<std::size_t, std::size_t>> batches;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      batches.emplace_back(start, std::min(order.size(), start + config.batch_size));
    }
    if (config.loss == LossConfig::siamese && batches.size() > 1 &&
        batches.back().second - batches.back().first < 2) {
      batches[batches.size() - 2].second = batches.back().second;
      batches.pop_back();
    }

    EpochRecord rec;
    rec.epoch = epoch;
    bool diverged = false;
    for (const auto& [begin, end] : batches) {
      std::vector<const Sample*> batch;
      for (std::size_t k = begin; k < end; ++k) batch.push_back(&train_set[order[k]]);
      if (config.loss == LossConfig::siamese && batch.size() < 2) continue;
      BatchGradient bg = batch_gradient(model, batch, config.loss, cw, config.l2, config.beta, config.threads);
      if (!finite_breakdown(bg.loss)) {
        diverged = true;
        break;
      }
      const double share = static_cast<double>(batch.size()) / static_cast<double>(train_set.size());
      rec.train.total += share * bg.loss.total;
      rec.train.l_y += share * bg.loss.l_y;
      rec.train.l_o += share * bg.loss.l_o;
      rec.train.l_s += share * bg.loss.l_s;
      rec.train.l_reg += share * bg.loss.l_reg;
      if (config.clip_norm) clip_global_norm(bg.grads, *config.clip_norm);
      opt.step(model, bg.grads);
    }
    if (diverged || !finite_model(model)) break;

    const PrfReport val = threshold_scores(model, validation, config.threads);
    rec.val_micro_f1 = val.micro_f1;
    rec.val_macro_f1 = val.macro_f1;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.history.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);

    const double score = val.micro_f1 + val.macro_f1;
    if (score > best) {
      best = score;
      since_best = 0;
      result.model = model;
      result.history.best_epoch = epoch;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  return result;
}

GradCheckResult grad_check(const MpnModel& model, std::span<const Sample> batch, LossConfig config,
                           const ClassWeights& cw, double lambda, double beta, double fd_step) {
  std::vector<const Sample*> ptrs;
  for (const auto& s : batch) ptrs.push_back(&s);
  const auto analytic = flatten(batch_gradient(model, ptrs, config, cw, lambda, beta).grads);

  auto objective = [&](const MpnModel& m) {
    std::vector<Prediction> preds;
    for (const auto* s : ptrs) preds.push_back(predict(m, s->z, s->c));
    return batch_loss(config, preds, ptrs, cw, m, lambda, beta).breakdown.total;
  };

  GradCheckResult r;
  r.parameters = analytic.size();
  auto theta = flatten(model);
  MpnModel probe = model;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    const double saved = theta[k];
    theta[k] = saved + fd_step;
    assign(probe, theta);
    const double up = objective(probe);
    theta[k] = saved - fd_step;
    assign(probe, theta);
    const double down = objective(probe);
    theta[k] = saved;
    const double numeric = (up - down) / (2.0 * fd_step);
    const double denom = std::max({std::abs(analytic[k]), std::abs(numeric), kGradCheckFloor});
    const double rel = std::abs(analytic[k] - numeric) / denom;
    if (k == 0 || rel > r.max_relative_error) {
      r.max_relative_error = rel;
      r.worst_index = k;
      r.analytic = analytic[k];
      r.numeric = numeric;
    }
  }
  return r;
}

std::vector<TrainConfig> default_grid(const TrainConfig& base) {
  const std::vector<double> etas = {0.001, 0.01, 0.1};
  const std::vector<double> lambdas = {0.01, 0.1, 1.0};
  const std::vector<double> betas = base.loss == LossConfig::siamese
                                        ? std::vector<double>{0.1, 0.3, 0.5, 0.7, 0.9}
                                        : std::vector<double>{base.beta};
  std::vector<TrainConfig> grid;
  for (double eta : etas) {
    for (double beta : betas) {
      for (double lambda : lambdas) {
        TrainConfig c = base;
        c.learning_rate = eta;
        c.beta = beta;
        c.l2 = lambda;
        c.seed = base.seed + grid.size();
        grid.push_back(c);
      }
    }
  }
  return grid;
}

GridSearchResult grid_search(std::span<const TrainConfig> grid, const MpnDims& dims,
                             std::span<const Sample> train_set, std::span<const Sample> validation_set,
                             std::size_t threads) {
  if (grid.empty()) throw std::invalid_argument("grid_search: empty grid");
  for (const auto& c : grid) c.validate();

  std::vector<TrainResult> results(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t k) {
    TrainConfig c = grid[k];
    if (threads > 1) c.threads = 1;
    Rng init_rng = Rng(c.seed).fork(kInitStream);
    const MpnModel init = MpnModel::initialized(dims, init_rng);
    results[k] = train(init, train_set, validation_set, c);
  });

  GridSearchResult out;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    GridRow row;
    row.index = k;
    row.config = grid[k];
    const auto& h = results[k].history;
    row.epochs_run = h.epochs.size();
    if (h.best_epoch) {
      const auto& e = h.epochs[*h.best_epoch - 1];
      row.val_micro_f1 = e.val_micro_f1;
      row.val_macro_f1 = e.val_macro_f1;
      row.best_epoch = *h.best_epoch;
    }
    out.rows.push_back(row);
  }
  std::stable_sort(out.rows.begin(), out.rows.end(), [](const GridRow& a, const GridRow& b) {
    if (a.score() != b.score()) return a.score() > b.score();
    if (a.config.learning_rate != b.config.learning_rate) return a.config.learning_rate < b.config.learning_rate;
    if (a.config.l2 != b.config.l2) return a.config.l2 > b.config.l2;
    return a.index < b.index;
  });
  out.best_index = out.rows.front().index;
  out.best_config = grid[out.best_index];
  out.best_model = std::move(results[out.best_index].model);
  out.best_history = std::move(results[out.best_index].history);
  return out;
}

void write_history_csv(std::ostream& out, const TrainHistory& history) {
  out << "epoch,l_y,l_o,l_s,l_reg,total,val_micro_f1,val_macro_f1\n";
  for (const auto& e : history.epochs) {
    out << e.epoch << ',' << format_double(e.train.l_y) << ',' << format_double(e.train.l_o) << ','
        << format_double(e.train.l_s) << ',' << format_double(e.train.l_reg) << ','
        << format_double(e.train.total) << ',' << format_double(e.val_micro_f1) << ','
        << format_double(e.val_macro_f1) << "\n";
  }
}

void write_grid_report(std::ostream& out, const GridSearchResult& result) {
  out << "# grid search: " << result.rows.size() << " points, ranked by validation micro_f1 + macro_f1\n";
  out << "best_index: " << result.best_index << "\n";
  out << "rank,index,loss,eta,lambda,beta,val_micro_f1,val_macro_f1,score,best_epoch,epochs_run\n";
  std::size_t rank = 1;
  for (const auto& r : result.rows) {
    out << rank++ << ',' << r.index << ',' << to_string(r.config.loss) << ','
        << format_double(r.config.learning_rate) << ',' << format_double(r.config.l2) << ','
        << format_double(r.config.beta) << ',' << format_double(r.val_micro_f1) << ','
        << format_double(r.val_macro_f1) << ',' << format_double(r.score()) << ',' << r.best_epoch
        << ',' << r.epochs_run << "\n";
  }
}

}  // namespace mpn
