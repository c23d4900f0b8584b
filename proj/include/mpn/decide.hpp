#pragma once

// Per-label binary decisions on embeddings (segment level) and on stepwise
// scores (localization). Every label is decided independently from a single
// scalar feature.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mpn/tensor.hpp"

namespace mpn {

enum class ClassifierKind { svm, threshold_zero, nearest_mean };

std::string to_string(ClassifierKind kind);
/// Accepts "svm", "threshold" / "threshold_zero", "nearest" / "nearest_mean".
ClassifierKind classifier_kind_from_string(const std::string& s);

struct LabelRule {
  // Set when the label lacked a positive or a negative training example; the
  // label is then decided by `feature > fallback_threshold`.
  bool fallback = false;
  double fallback_threshold = 0.0;
  double weight = 0.0;  // svm: decision weight·x + bias > 0
  double bias = 0.0;
  double negative_mean = 0.0;  // nearest_mean
  double positive_mean = 0.0;

  bool operator==(const LabelRule&) const = default;
};

struct LabelClassifier {
  ClassifierKind kind = ClassifierKind::threshold_zero;
  std::vector<LabelRule> rules;  // empty for threshold_zero

  std::size_t labels() const { return rules.size(); }
  bool operator==(const LabelClassifier&) const = default;
};

struct SvmOptions {
  std::size_t iterations = 10000;
  double regularization = 1e-2;
  std::uint64_t seed = 0;
  /// Weight positive hinge terms by -log p (p = positive rate), the same
  /// class weighting the segment loss uses; negatives keep weight 1.
  bool weight_positives = false;
  /// Boundary used by labels that fall back (no positives or no negatives).
  double fallback_threshold = 0.0;
};

/// features and labels are N×L; label entries are 0/1.
LabelClassifier fit(ClassifierKind kind, const Matrix& features, const Matrix& labels,
                    const SvmOptions& options = {});

/// 1-D soft-margin linear SVM on (x, ±1) pairs by averaged stochastic
/// subgradient descent. Returns (weight, bias) in the original x scale.
std::pair<double, double> fit_svm_1d(std::span<const double> x, std::span<const int> sign,
                                     const SvmOptions& options);

/// Per-label decisions; a value exactly on a boundary is negative.
Vector classify(const LabelClassifier& clf, std::span<const double> features);

/// Decisions for every row of an N×L score matrix.
Matrix classify_rows(const LabelClassifier& clf, const Matrix& features);

/// Stepwise decisions from stepwise scores o ((T-τ)×L).
Matrix localize(const LabelClassifier& step_classifier, const Matrix& o);

/// Localized decisions restricted to labels the segment decision marks present.
Matrix localize_gated(const LabelClassifier& step_classifier, const Matrix& o,
                      std::span<const double> segment_decision);

/// Segment decision replicated over `horizon` steps.
Matrix broadcast_baseline(std::span<const double> segment_decision, std::size_t horizon);

}  // namespace mpn
