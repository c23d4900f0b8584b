#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mpn/tensor.hpp"

namespace mpn {

struct CountTable {
  std::vector<std::size_t> tp, fp, fn;

  std::size_t labels() const { return tp.size(); }
  bool operator==(const CountTable&) const = default;
};

/// Precision, recall, F1 under macro (per-label mean) and micro (pooled
/// counts) averaging. Any ratio with a zero denominator is 0.
struct PrfReport {
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double micro_precision = 0.0;
  double micro_recall = 0.0;
  double micro_f1 = 0.0;

  bool operator==(const PrfReport&) const = default;
};

/// pred and truth are N×L with 0/1 entries.
CountTable count(const Matrix& pred, const Matrix& truth);
PrfReport prf(const CountTable& counts);

/// Stepwise evaluation: each (sample, step) pair is one row. Each element
/// is a (T-τ)×L matrix.
PrfReport localization_metrics(std::span<const Matrix> pred_steps, std::span<const Matrix> truth_steps);
/// Stacks per-sample stepwise matrices into one (N·(T-τ))×L matrix.
Matrix stack_rows(std::span<const Matrix> blocks);

/// Named (key, value) pairs in a fixed order.
std::vector<std::pair<std::string, double>> report_fields(const PrfReport& r);

/// "key: value" lines, one per metric, each key prefixed by `prefix`.
void write_report_text(std::ostream& out, const PrfReport& r, const std::string& prefix = "");

}  // namespace mpn
