#include "mpn/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mpn {

std::string to_string(LossConfig c) {
  switch (c) {
    case LossConfig::base: return "base";
    case LossConfig::localize: return "localize";
    case LossConfig::siamese: return "siamese";
  }
  return "unknown";
}

LossConfig loss_config_from_string(const std::string& s) {
  if (s == "base") return LossConfig::base;
  if (s == "localize") return LossConfig::localize;
  if (s == "siamese") return LossConfig::siamese;
  throw std::invalid_argument("unknown loss configuration '" + s + "'");
}

ClassWeights class_weights(const Matrix& segment_labels, std::vector<std::size_t>* always_present) {
  const std::size_t N = segment_labels.rows();
  if (N == 0) throw std::invalid_argument("class_weights: empty training set");
  const std::size_t L = segment_labels.cols();
  ClassWeights cw{Vector(L, 0.0), Vector(L, 1.0)};
  for (std::size_t l = 0; l < L; ++l) {
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < N; ++i) {
      const double v = segment_labels(i, l);
      if (v != 0.0 && v != 1.0) throw std::invalid_argument("class_weights: labels must be 0 or 1");
      if (v == 1.0) ++n_pos;
    }
    cw.p[l] = static_cast<double>(n_pos) / static_cast<double>(N);
    if (n_pos > 0) cw.w[l] = -std::log(cw.p[l]);
    if (n_pos == N) {
      cw.w[l] = 0.0;
      if (always_present) always_present->push_back(l);
    }
  }
  return cw;
}

namespace {
double clamp_prob(double v) { return std::clamp(v, kProbClamp, 1.0 - kProbClamp); }

void require_same(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": length " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

void require_same(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(what) + ": " + a.shape() + " vs " + b.shape());
  }
}
}  // namespace

double loss_y(std::span<const double> y, std::span<const double> y_true, const ClassWeights& cw) {
  require_same(y.size(), y_true.size(), "loss_y");
  require_same(y.size(), cw.w.size(), "loss_y weights");
  double sum = 0.0;
  for (std::size_t l = 0; l < y.size(); ++l) {
    const double p = clamp_prob(y[l]);
    sum += cw.w[l] * y_true[l] * std::log(p) + (1.0 - y_true[l]) * std::log(1.0 - p);
  }
  return -sum;
}

Vector loss_y_grad_logit(std::span<const double> y, std::span<const double> y_true,
                         const ClassWeights& cw) {
  require_same(y.size(), y_true.size(), "loss_y_grad_logit");
  Vector d(y.size());
  for (std::size_t l = 0; l < y.size(); ++l) {
    d[l] = cw.w[l] * y_true[l] * (y[l] - 1.0) + (1.0 - y_true[l]) * y[l];
  }
  return d;
}

double loss_o(const Matrix& o, const Matrix& o_true) {
  require_same(o, o_true, "loss_o");
  if (o.empty()) return 0.0;
  double sum = 0.0;
  const auto ov = o.values();
  const auto tv = o_true.values();
  for (std::size_t k = 0; k < ov.size(); ++k) {
    sum += tv[k] * (1.0 - ov[k]) * (1.0 - ov[k]) + (1.0 - tv[k]) * ov[k] * ov[k];
  }
  return sum / static_cast<double>(ov.size());
}

Matrix loss_o_grad(const Matrix& o, const Matrix& o_true) {
  require_same(o, o_true, "loss_o_grad");
  Matrix d(o.rows(), o.cols());
  if (o.empty()) return d;
  const double scale = 1.0 / static_cast<double>(o.size());
  const auto ov = o.values();
  const auto tv = o_true.values();
  auto dv = d.values();
  for (std::size_t k = 0; k < ov.size(); ++k) {
    dv[k] = scale * (-2.0 * tv[k] * (1.0 - ov[k]) + 2.0 * (1.0 - tv[k]) * ov[k]);
  }
  return d;
}

Vector siamese_similarity(std::span<const double> g_i, std::span<const double> g_j) {
  require_same(g_i.size(), g_j.size(), "siamese_similarity");
  Vector s(g_i.size());
  for (std::size_t l = 0; l < s.size(); ++l) s[l] = std::exp(-std::abs(g_i[l] - g_j[l]));
  return s;
}

Vector siamese_target(std::span<const double> y_true_i, std::span<const double> y_true_j) {
  require_same(y_true_i.size(), y_true_j.size(), "siamese_target");
  Vector t(y_true_i.size());
  for (std::size_t l = 0; l < t.size(); ++l) t[l] = y_true_i[l] == y_true_j[l] ? 1.0 : 0.0;
  return t;
}

double loss_s(std::span<const double> s, std::span<const double> s_true) {
  require_same(s.size(), s_true.size(), "loss_s");
  if (s.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t l = 0; l < s.size(); ++l) {
    sum += s_true[l] * (1.0 - s[l]) * (1.0 - s[l]) + (1.0 - s_true[l]) * s[l] * s[l];
  }
  return sum / static_cast<double>(s.size());
}

Vector loss_s_grad(std::span<const double> s, std::span<const double> s_true) {
  require_same(s.size(), s_true.size(), "loss_s_grad");
  Vector d(s.size());
  const double scale = s.empty() ? 0.0 : 1.0 / static_cast<double>(s.size());
  for (std::size_t l = 0; l < s.size(); ++l) {
    d[l] = scale * (-2.0 * s_true[l] * (1.0 - s[l]) + 2.0 * (1.0 - s_true[l]) * s[l]);
  }
  return d;
}

double l2_penalty(const MpnModel& model, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("l2_penalty: lambda must be non-negative");
  double sq = 0.0;
  for_each_tensor(model, [&](std::span<const double> t, bool is_weight) {
    if (!is_weight) return;
    for (double v : t) sq += v * v;
  });
  return 0.5 * lambda * sq;
}

void add_l2_gradient(const MpnModel& model, double lambda, MpnGrads& grads) {
  std::vector<std::span<const double>> weights;
  for_each_tensor(model, [&](std::span<const double> t, bool w) {
    if (w) weights.push_back(t);
  });
  std::size_t k = 0;
  for_each_tensor(grads, [&](std::span<double> t, bool w) {
    if (!w) return;
    const auto src = weights.at(k++);
    for (std::size_t j = 0; j < t.size(); ++j) t[j] += lambda * src[j];
  });
}

BatchLoss batch_loss(LossConfig config, std::span<const Prediction> predictions,
                     std::span<const Sample* const> samples, const ClassWeights& cw,
                     const MpnModel& model, double lambda, double beta) {
  const std::size_t n = predictions.size();
  if (n == 0) throw std::invalid_argument("batch_loss: empty batch");
  if (samples.size() != n) {
    throw DimensionError("batch_loss: " + std::to_string(n) + " predictions for " +
                         std::to_string(samples.size()) + " samples");
  }
  if (config == LossConfig::siamese && n < 2) {
    throw std::invalid_argument("batch_loss: the siamese objective needs at least 2 samples per batch");
  }

  const bool use_o = config != LossConfig::base;
  std::vector<double> ly(n), lo(n, 0.0);
  std::vector<Vector> dly(n);
  std::vector<Matrix> dlo(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = predictions[i];
    const auto& s = *samples[i];
    ly[i] = loss_y(p.y, s.y_true, cw);
    dly[i] = loss_y_grad_logit(p.y, s.y_true, cw);
    if (use_o) {
      lo[i] = loss_o(p.o, s.o_true);
      dlo[i] = loss_o_grad(p.o, s.o_true);
    }
  }

  BatchLoss out;
  out.adjoints.resize(n);
  auto& b = out.breakdown;

  if (config != LossConfig::siamese) {
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      b.l_y += ly[i];
      b.l_o += lo[i];
      auto& adj = out.adjoints[i];
      adj.dg = dly[i];
      for (auto& v : adj.dg) v *= inv;
      if (use_o) {
        adj.d_o = dlo[i];
        for (auto& v : adj.d_o.values()) v *= inv;
      }
    }
    b.l_y *= inv;
    b.l_o *= inv;
  } else {
    // Each sample belongs to n-1 of the n(n-1)/2 pairs.
    const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
    const double inv_pairs = 1.0 / pairs;
    const double per_sample = beta * static_cast<double>(n - 1) * inv_pairs;
    for (std::size_t i = 0; i < n; ++i) {
      auto& adj = out.adjoints[i];
      adj.dg = dly[i];
      for (auto& v : adj.dg) v *= per_sample;
      adj.d_o = dlo[i];
      for (auto& v : adj.d_o.values()) v *= per_sample;
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        b.l_y += beta * (ly[i] + ly[j]);
        b.l_o += beta * (lo[i] + lo[j]);
        const auto& gi = predictions[i].g;
        const auto& gj = predictions[j].g;
        const Vector s = siamese_similarity(gi, gj);
        const Vector st = siamese_target(samples[i]->y_true, samples[j]->y_true);
        b.l_s += (1.0 - beta) * loss_s(s, st);
        const Vector ds = loss_s_grad(s, st);
        for (std::size_t l = 0; l < s.size(); ++l) {
          const double diff = gi[l] - gj[l];
          const double sgn = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
          const double d = (1.0 - beta) * inv_pairs * ds[l] * (-s[l] * sgn);
          out.adjoints[i].dg[l] += d;
          out.adjoints[j].dg[l] -= d;
        }
      }
    }
    b.l_y *= inv_pairs;
    b.l_o *= inv_pairs;
    b.l_s *= inv_pairs;
  }

  b.l_reg = l2_penalty(model, lambda);
  b.total = b.l_y + b.l_o + b.l_s + b.l_reg;
  return out;
}

}  // namespace mpn
