#include "mpn/evaluate.hpp"

#include "mpn/train.hpp"

namespace mpn {

EmbeddedSet embed(const MpnModel& model, std::span<const Sample> samples, std::size_t threads) {
  const std::size_t L = model.dims.labels;
  EmbeddedSet set;
  set.predictions.resize(samples.size());
  parallel_for(samples.size(), threads,
               [&](std::size_t i) { set.predictions[i] = predict(model, samples[i].z, samples[i].c); });
  set.embeddings = Matrix(samples.size(), L);
  set.segment_truth = Matrix(samples.size(), L);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    set.embeddings.set_row(i, set.predictions[i].g);
    set.segment_truth.set_row(i, samples[i].y_true);
    set.step_truth.push_back(samples[i].o_true);
  }
  return set;
}

const char* segment_role(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::svm: return kSegmentSvm;
    case ClassifierKind::threshold_zero: return kSegmentThreshold;
    case ClassifierKind::nearest_mean: return kSegmentNearest;
  }
  return kSegmentSvm;
}

std::vector<NamedClassifier> fit_classifiers(const EmbeddedSet& train, std::uint64_t seed) {
  SvmOptions seg;
  seg.seed = seed;
  seg.weight_positives = true;
  std::vector<NamedClassifier> out;
  for (auto kind : {ClassifierKind::svm, ClassifierKind::threshold_zero, ClassifierKind::nearest_mean}) {
    out.push_back({segment_role(kind), fit(kind, train.embeddings, train.segment_truth, seg)});
  }
  std::vector<Matrix> scores;
  for (const auto& p : train.predictions) scores.push_back(p.o);
  SvmOptions step;
  step.seed = Rng(seed).fork(1).seed();
  step.fallback_threshold = 0.5;
  out.push_back({kStepSvm, fit(ClassifierKind::svm, stack_rows(scores), stack_rows(train.step_truth), step)});
  return out;
}

Matrix segment_decisions(const LabelClassifier& clf, const EmbeddedSet& set) {
  return classify_rows(clf, set.embeddings);
}

PrfReport evaluate_segment(const LabelClassifier& clf, const EmbeddedSet& set) {
  return prf(count(segment_decisions(clf, set), set.segment_truth));
}

LocalizationEvaluation evaluate_localization(const LabelClassifier& segment,
                                             const LabelClassifier& step, const EmbeddedSet& set) {
  const Matrix decisions = segment_decisions(segment, set);
  std::vector<Matrix> localized, broadcast;
  for (std::size_t i = 0; i < set.predictions.size(); ++i) {
    const auto& o = set.predictions[i].o;
    localized.push_back(localize_gated(step, o, decisions.row(i)));
    broadcast.push_back(broadcast_baseline(decisions.row(i), o.rows()));
  }
  return {localization_metrics(localized, set.step_truth), localization_metrics(broadcast, set.step_truth)};
}

}  // namespace mpn
