#pragma once

// Embedding a sample set with a trained model, fitting the decision
// classifiers on the training embeddings, and scoring segment and stepwise
// decisions.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mpn/decide.hpp"
#include "mpn/metrics.hpp"
#include "mpn/model.hpp"
#include "mpn/model_io.hpp"
#include "mpn/sample.hpp"

namespace mpn {

struct EmbeddedSet {
  std::vector<Prediction> predictions;
  Matrix embeddings;             // N×L rows of g
  Matrix segment_truth;          // N×L
  std::vector<Matrix> step_truth;
};

EmbeddedSet embed(const MpnModel& model, std::span<const Sample> samples, std::size_t threads = 1);

// Classifier roles stored alongside a model.
inline constexpr const char* kSegmentSvm = "segment.svm";
inline constexpr const char* kSegmentThreshold = "segment.threshold_zero";
inline constexpr const char* kSegmentNearest = "segment.nearest_mean";
inline constexpr const char* kStepSvm = "step.svm";

const char* segment_role(ClassifierKind kind);

/// Segment classifiers of every kind on g, plus the stepwise SVM on pooled
/// o_t[l] scores (fallback boundary 0.5 for labels without both classes).
std::vector<NamedClassifier> fit_classifiers(const EmbeddedSet& train, std::uint64_t seed);

Matrix segment_decisions(const LabelClassifier& clf, const EmbeddedSet& set);
PrfReport evaluate_segment(const LabelClassifier& clf, const EmbeddedSet& set);

struct LocalizationEvaluation {
  PrfReport localized;  // stepwise SVM decisions, gated by the segment decision
  PrfReport broadcast;  // segment decision replicated over the window
};

LocalizationEvaluation evaluate_localization(const LabelClassifier& segment,
                                             const LabelClassifier& step, const EmbeddedSet& set);

}  // namespace mpn
