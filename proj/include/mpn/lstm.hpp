#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mpn/tensor.hpp"

namespace mpn {

/// One LSTM layer with `hidden` units reading `input`-dimensional steps.
/// Every gate sees the concatenation [h_{t-1}, x_t], so each weight matrix is
/// hidden × (hidden + input).
struct LstmParams {
  std::size_t hidden = 0;
  std::size_t input = 0;

  Matrix w_forget, w_input, w_cell, w_output;
  Vector b_forget, b_input, b_cell, b_output;

  LstmParams() = default;
  LstmParams(std::size_t hidden_size, std::size_t input_size);  // all zeros

  std::size_t scalar_count() const;

  /// Visits the four weight matrices then the four biases, always in the
  /// order forget, input, cell, output. `f(span, is_weight_matrix)`.
  template <class F>
  void for_each_tensor(F&& f) {
    visit(*this, f);
  }
  template <class F>
  void for_each_tensor(F&& f) const {
    visit(*this, f);
  }

  bool operator==(const LstmParams&) const = default;

 private:
  template <class Self, class F>
  static void visit(Self& self, F& f) {
    f(self.w_forget.values(), true);
    f(self.w_input.values(), true);
    f(self.w_cell.values(), true);
    f(self.w_output.values(), true);
    f(std::span(self.b_forget), false);
    f(std::span(self.b_input), false);
    f(std::span(self.b_cell), false);
    f(std::span(self.b_output), false);
  }
};

struct LstmState {
  Vector h;
  Vector cell;

  static LstmState zeros(std::size_t hidden) { return {Vector(hidden, 0.0), Vector(hidden, 0.0)}; }
  bool operator==(const LstmState&) const = default;
};

/// Everything the backward pass needs from one forward step.
struct StepRecord {
  Vector h_prev, cell_prev, x;
  Vector forget, input, candidate, output;
  Vector cell, h;
};

using StepTape = std::vector<StepRecord>;

struct LstmGrads {
  LstmParams params;          // ∂Loss/∂(weights, biases)
  LstmState initial;          // ∂Loss/∂(h_0, ξ_0)
  std::vector<Vector> inputs; // ∂Loss/∂x_t, one per step
};

/// Adjoints leaving a single reversed step.
struct StepAdjoint {
  Vector h_prev;
  Vector cell_prev;
  Vector x;
};

constexpr std::size_t param_count(std::size_t hidden, std::size_t input) {
  return 4 * (hidden * hidden + hidden * input + hidden);
}

std::pair<LstmState, StepRecord> lstm_step(const LstmParams& p, const LstmState& prev,
                                           std::span<const double> x);

/// Reverses one step given the adjoints on its outputs (h_t, ξ_t), adding the
/// parameter gradient into `acc`.
StepAdjoint lstm_step_backward(const LstmParams& p, const StepRecord& rec,
                               std::span<const double> dh, std::span<const double> dcell,
                               LstmParams& acc);

struct LstmRun {
  std::vector<LstmState> states;
  StepTape tape;
};

LstmRun lstm_forward(const LstmParams& p, const LstmState& init, std::span<const Vector> xs);

/// BPTT over a whole tape. `dh[t]` is the external adjoint on h_t;
/// `d_final` the adjoint on the last state.
LstmGrads lstm_backward(const LstmParams& p, const StepTape& tape, std::span<const Vector> dh,
                        const LstmState& d_final);

enum class InitRule {
  glorot_uniform,  // weights U[-a, a], a = sqrt(6 / (2·hidden + input)), b_forget = 1
  zeros,
};

LstmParams init_params(Rng& rng, std::size_t hidden, std::size_t input,
                       InitRule rule = InitRule::glorot_uniform);

}  // namespace mpn
