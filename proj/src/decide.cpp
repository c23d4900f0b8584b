#include "mpn/decide.hpp"

#include <cmath>
#include <stdexcept>
#include <tuple>

namespace mpn {

std::string to_string(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::svm: return "svm";
    case ClassifierKind::threshold_zero: return "threshold_zero";
    case ClassifierKind::nearest_mean: return "nearest_mean";
  }
  return "unknown";
}

ClassifierKind classifier_kind_from_string(const std::string& s) {
  if (s == "svm") return ClassifierKind::svm;
  if (s == "threshold" || s == "threshold_zero") return ClassifierKind::threshold_zero;
  if (s == "nearest" || s == "nearest_mean") return ClassifierKind::nearest_mean;
  throw std::invalid_argument("unknown classifier kind '" + s + "'");
}

std::pair<double, double> fit_svm_1d(std::span<const double> x, std::span<const int> sign,
                                     const SvmOptions& options) {
  if (x.empty() || x.size() != sign.size()) {
    throw std::invalid_argument("fit_svm_1d: need matching, nonempty inputs");
  }
  // Standardize so the regularizer treats slope and offset on one scale.
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  const double scale = var > 0.0 ? std::sqrt(var / n) : 1.0;
  double positives = 0.0;
  for (int v : sign) positives += v > 0 ? 1.0 : 0.0;
  const double w_pos = options.weight_positives && positives > 0.0 ? -std::log(positives / n) : 1.0;

  // Pegasos on the standardized feature; only the slope is regularized, as in
  // the usual soft-margin objective. Iterates from the second half are averaged.
  const double lambda = options.regularization;
  Rng rng(options.seed);
  double a = 0.0, b = 0.0;
  double avg_a = 0.0, avg_b = 0.0;
  std::size_t averaged = 0;
  const std::size_t start_avg = options.iterations / 2;
  for (std::size_t it = 1; it <= options.iterations; ++it) {
    const auto i = static_cast<std::size_t>(rng.below(x.size()));
    const double xi = (x[i] - mean) / scale;
    const double yi = sign[i] > 0 ? 1.0 : -1.0;
    const double eta = 1.0 / (lambda * static_cast<double>(it));
    const double margin = yi * (a * xi + b);
    a *= 1.0 - eta * lambda;
    if (margin < 1.0) {
      const double wi = yi > 0.0 ? w_pos : 1.0;
      a += eta * wi * yi * xi;
      b += eta * wi * yi;
    }
    if (it > start_avg) {
      avg_a += a;
      avg_b += b;
      ++averaged;
    }
  }
  if (averaged > 0) {
    a = avg_a / static_cast<double>(averaged);
    b = avg_b / static_cast<double>(averaged);
  }
  // a·(x - mean)/scale + b  ==  (a/scale)·x + (b - a·mean/scale)
  return {a / scale, b - a * mean / scale};
}

LabelClassifier fit(ClassifierKind kind, const Matrix& features, const Matrix& labels,
                    const SvmOptions& options) {
  if (features.rows() == 0) throw std::invalid_argument("fit: empty training set");
  if (features.rows() != labels.rows() || features.cols() != labels.cols()) {
    throw DimensionError("fit: features " + features.shape() + " vs labels " + labels.shape());
  }
  LabelClassifier clf;
  clf.kind = kind;
  if (kind == ClassifierKind::threshold_zero) return clf;

  const std::size_t N = features.rows();
  const std::size_t L = features.cols();
  clf.rules.resize(L);
  for (std::size_t l = 0; l < L; ++l) {
    LabelRule& rule = clf.rules[l];
    std::vector<double> x(N);
    std::vector<int> sign(N);
    std::size_t pos = 0;
    double pos_sum = 0.0, neg_sum = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      x[i] = features(i, l);
      sign[i] = labels(i, l) > 0.5 ? 1 : -1;
      if (sign[i] > 0) {
        ++pos;
        pos_sum += x[i];
      } else {
        neg_sum += x[i];
      }
    }
    if (pos == 0 || pos == N) {
      rule.fallback = true;
      rule.fallback_threshold = options.fallback_threshold;
      continue;
    }
    if (kind == ClassifierKind::nearest_mean) {
      rule.positive_mean = pos_sum / static_cast<double>(pos);
      rule.negative_mean = neg_sum / static_cast<double>(N - pos);
    } else {
      SvmOptions per_label = options;
      per_label.seed = Rng(options.seed).fork(l).seed();
      std::tie(rule.weight, rule.bias) = fit_svm_1d(x, sign, per_label);
    }
  }
  return clf;
}

namespace {

bool decide(const LabelClassifier& clf, std::size_t l, double v) {
  if (clf.kind == ClassifierKind::threshold_zero) return v > 0.0;
  const LabelRule& rule = clf.rules[l];
  if (rule.fallback) return v > rule.fallback_threshold;
  if (clf.kind == ClassifierKind::svm) return rule.weight * v + rule.bias > 0.0;
  return std::abs(v - rule.positive_mean) < std::abs(v - rule.negative_mean);
}

void check_width(const LabelClassifier& clf, std::size_t width) {
  if (clf.kind != ClassifierKind::threshold_zero && clf.rules.size() != width) {
    throw DimensionError("classifier has " + std::to_string(clf.rules.size()) +
                         " labels, input has " + std::to_string(width));
  }
}

}  // namespace

Vector classify(const LabelClassifier& clf, std::span<const double> features) {
  check_width(clf, features.size());
  Vector out(features.size());
  for (std::size_t l = 0; l < features.size(); ++l) out[l] = decide(clf, l, features[l]) ? 1.0 : 0.0;
  return out;
}

Matrix classify_rows(const LabelClassifier& clf, const Matrix& features) {
  Matrix out(features.rows(), features.cols());
  for (std::size_t r = 0; r < features.rows(); ++r) out.set_row(r, classify(clf, features.row(r)));
  return out;
}

Matrix localize(const LabelClassifier& step_classifier, const Matrix& o) {
  return classify_rows(step_classifier, o);
}

Matrix localize_gated(const LabelClassifier& step_classifier, const Matrix& o,
                      std::span<const double> segment_decision) {
  if (segment_decision.size() != o.cols()) {
    throw DimensionError("localize_gated: decision " + shape_of(segment_decision) + " vs scores " +
                         o.shape());
  }
  Matrix out = localize(step_classifier, o);
  for (std::size_t s = 0; s < out.rows(); ++s) {
    for (std::size_t l = 0; l < out.cols(); ++l) {
      if (segment_decision[l] < 0.5) out(s, l) = 0.0;
    }
  }
  return out;
}

Matrix broadcast_baseline(std::span<const double> segment_decision, std::size_t horizon) {
  if (horizon < 1) throw std::invalid_argument("broadcast_baseline: horizon must be at least 1");
  Matrix out(horizon, segment_decision.size());
  for (std::size_t s = 0; s < horizon; ++s) out.set_row(s, segment_decision);
  return out;
}

}  // namespace mpn
