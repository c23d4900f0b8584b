#include "mpn/metrics.hpp"

#include <ostream>

#include "mpn/model_io.hpp"

namespace mpn {

CountTable count(const Matrix& pred, const Matrix& truth) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols()) {
    throw DimensionError("count: predictions " + pred.shape() + " vs truth " + truth.shape());
  }
  const std::size_t L = pred.cols();
  CountTable t{std::vector<std::size_t>(L, 0), std::vector<std::size_t>(L, 0),
               std::vector<std::size_t>(L, 0)};
  for (std::size_t i = 0; i < pred.rows(); ++i) {
    for (std::size_t l = 0; l < L; ++l) {
      const bool p = pred(i, l) > 0.5;
      const bool y = truth(i, l) > 0.5;
      if (p && y) ++t.tp[l];
      else if (p) ++t.fp[l];
      else if (y) ++t.fn[l];
    }
  }
  return t;
}

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

// Harmonic mean of precision and recall, formed from the counts so it is
// rounded once.
double f1(std::size_t tp, std::size_t fp, std::size_t fn) { return ratio(2 * tp, 2 * tp + fp + fn); }

}  // namespace

PrfReport prf(const CountTable& counts) {
  PrfReport r;
  const std::size_t L = counts.labels();
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t l = 0; l < L; ++l) {
    const double p = ratio(counts.tp[l], counts.tp[l] + counts.fp[l]);
    const double rc = ratio(counts.tp[l], counts.tp[l] + counts.fn[l]);
    r.macro_precision += p;
    r.macro_recall += rc;
    r.macro_f1 += f1(counts.tp[l], counts.fp[l], counts.fn[l]);
    tp += counts.tp[l];
    fp += counts.fp[l];
    fn += counts.fn[l];
  }
  if (L > 0) {
    r.macro_precision /= static_cast<double>(L);
    r.macro_recall /= static_cast<double>(L);
    r.macro_f1 /= static_cast<double>(L);
  }
  r.micro_precision = ratio(tp, tp + fp);
  r.micro_recall = ratio(tp, tp + fn);
  r.micro_f1 = f1(tp, fp, fn);
  return r;
}

Matrix stack_rows(std::span<const Matrix> blocks) {
  if (blocks.empty()) return {};
  const std::size_t cols = blocks.front().cols();
  std::size_t rows = 0;
  for (const auto& b : blocks) {
    if (b.cols() != cols) throw DimensionError("stack_rows: " + b.shape() + " has a different width");
    rows += b.rows();
  }
  Matrix out(rows, cols);
  std::size_t r = 0;
  for (const auto& b : blocks) {
    for (std::size_t k = 0; k < b.rows(); ++k) out.set_row(r++, b.row(k));
  }
  return out;
}

PrfReport localization_metrics(std::span<const Matrix> pred_steps, std::span<const Matrix> truth_steps) {
  if (pred_steps.size() != truth_steps.size()) {
    throw DimensionError("localization_metrics: " + std::to_string(pred_steps.size()) +
                         " predicted samples vs " + std::to_string(truth_steps.size()) + " true samples");
  }
  for (std::size_t i = 0; i < pred_steps.size(); ++i) {
    if (pred_steps[i].rows() != truth_steps[i].rows() || pred_steps[i].cols() != truth_steps[i].cols()) {
      throw DimensionError("localization_metrics: sample " + std::to_string(i) + " predicted " +
                           pred_steps[i].shape() + " vs true " + truth_steps[i].shape());
    }
  }
  return prf(count(stack_rows(pred_steps), stack_rows(truth_steps)));
}

std::vector<std::pair<std::string, double>> report_fields(const PrfReport& r) {
  return {{"macro_precision", r.macro_precision}, {"macro_recall", r.macro_recall},
          {"macro_f1", r.macro_f1},               {"micro_precision", r.micro_precision},
          {"micro_recall", r.micro_recall},       {"micro_f1", r.micro_f1}};
}

void write_report_text(std::ostream& out, const PrfReport& r, const std::string& prefix) {
  for (const auto& [k, v] : report_fields(r)) out << prefix << k << ": " << format_double(v) << "\n";
}

}  // namespace mpn
