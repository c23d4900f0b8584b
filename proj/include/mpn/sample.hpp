#pragma once

#include "mpn/tensor.hpp"

namespace mpn {

/// One instance: observed history, full context, and the labels of the
/// forecast window.
struct Sample {
  Matrix z;       // τ×d_z observations
  Matrix c;       // T×d_c context, known through T
  Vector y_true;  // segment labels ỹ, length L
  Matrix o_true;  // (T-τ)×L stepwise labels õ

  bool operator==(const Sample&) const = default;
};

}  // namespace mpn
