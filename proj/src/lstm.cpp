#include "mpn/lstm.hpp"

#include <cmath>
#include <string>

namespace mpn {

LstmParams::LstmParams(std::size_t hidden_size, std::size_t input_size)
    : hidden(hidden_size),
      input(input_size),
      w_forget(hidden_size, hidden_size + input_size),
      w_input(hidden_size, hidden_size + input_size),
      w_cell(hidden_size, hidden_size + input_size),
      w_output(hidden_size, hidden_size + input_size),
      b_forget(hidden_size, 0.0),
      b_input(hidden_size, 0.0),
      b_cell(hidden_size, 0.0),
      b_output(hidden_size, 0.0) {}

std::size_t LstmParams::scalar_count() const {
  std::size_t n = 0;
  for_each_tensor([&](std::span<const double> t, bool) { n += t.size(); });
  return n;
}

std::pair<LstmState, StepRecord> lstm_step(const LstmParams& p, const LstmState& prev,
                                           std::span<const double> x) {
  if (x.size() != p.input) {
    throw DimensionError("lstm_step: input " + shape_of(x) + ", expected [" +
                         std::to_string(p.input) + "]");
  }
  if (prev.h.size() != p.hidden || prev.cell.size() != p.hidden) {
    throw DimensionError("lstm_step: state " + shape_of(prev.h) + "/" + shape_of(prev.cell) +
                         ", expected [" + std::to_string(p.hidden) + "]");
  }
  const Vector u = concat({prev.h, x});

  StepRecord rec;
  rec.h_prev = prev.h;
  rec.cell_prev = prev.cell;
  rec.x.assign(x.begin(), x.end());
  rec.forget = sigmoid(affine(p.w_forget, u, p.b_forget));
  rec.input = sigmoid(affine(p.w_input, u, p.b_input));
  rec.candidate = tanh_vec(affine(p.w_cell, u, p.b_cell));
  rec.output = sigmoid(affine(p.w_output, u, p.b_output));

  rec.cell.resize(p.hidden);
  rec.h.resize(p.hidden);
  for (std::size_t k = 0; k < p.hidden; ++k) {
    rec.cell[k] = rec.forget[k] * prev.cell[k] + rec.input[k] * rec.candidate[k];
    rec.h[k] = rec.output[k] * std::tanh(rec.cell[k]);
  }
  LstmState next{rec.h, rec.cell};
  return {std::move(next), std::move(rec)};
}

StepAdjoint lstm_step_backward(const LstmParams& p, const StepRecord& rec,
                               std::span<const double> dh, std::span<const double> dcell,
                               LstmParams& acc) {
  const std::size_t n = p.hidden;
  if (dh.size() != n || dcell.size() != n) {
    throw DimensionError("lstm_step_backward: adjoints " + shape_of(dh) + "/" + shape_of(dcell) +
                         ", expected [" + std::to_string(n) + "]");
  }
  Vector da_f(n), da_i(n), da_c(n), da_o(n);
  StepAdjoint out;
  out.cell_prev.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double tc = std::tanh(rec.cell[k]);
    const double d_out = dh[k] * tc;
    const double dc = dcell[k] + dh[k] * rec.output[k] * (1.0 - tc * tc);
    const double d_forget = dc * rec.cell_prev[k];
    const double d_input = dc * rec.candidate[k];
    const double d_cand = dc * rec.input[k];
    out.cell_prev[k] = dc * rec.forget[k];

    da_f[k] = d_forget * rec.forget[k] * (1.0 - rec.forget[k]);
    da_i[k] = d_input * rec.input[k] * (1.0 - rec.input[k]);
    da_c[k] = d_cand * (1.0 - rec.candidate[k] * rec.candidate[k]);
    da_o[k] = d_out * rec.output[k] * (1.0 - rec.output[k]);
  }

  const Vector u = concat({rec.h_prev, rec.x});
  add_outer(acc.w_forget, da_f, u);
  add_outer(acc.w_input, da_i, u);
  add_outer(acc.w_cell, da_c, u);
  add_outer(acc.w_output, da_o, u);
  add_to(acc.b_forget, da_f);
  add_to(acc.b_input, da_i);
  add_to(acc.b_cell, da_c);
  add_to(acc.b_output, da_o);

  Vector du(u.size(), 0.0);
  add_transposed_product(du, p.w_forget, da_f);
  add_transposed_product(du, p.w_input, da_i);
  add_transposed_product(du, p.w_cell, da_c);
  add_transposed_product(du, p.w_output, da_o);

  out.h_prev.assign(du.begin(), du.begin() + static_cast<std::ptrdiff_t>(n));
  out.x.assign(du.begin() + static_cast<std::ptrdiff_t>(n), du.end());
  return out;
}

LstmRun lstm_forward(const LstmParams& p, const LstmState& init, std::span<const Vector> xs) {
  LstmRun run;
  run.states.reserve(xs.size());
  run.tape.reserve(xs.size());
  LstmState state = init;
  for (std::size_t t = 0; t < xs.size(); ++t) {
    if (xs[t].size() != p.input) {
      throw DimensionError("lstm_forward: step " + std::to_string(t) + " input " +
                           shape_of(xs[t]) + ", expected [" + std::to_string(p.input) + "]");
    }
    auto [next, rec] = lstm_step(p, state, xs[t]);
    state = next;
    run.states.push_back(std::move(next));
    run.tape.push_back(std::move(rec));
  }
  return run;
}

LstmGrads lstm_backward(const LstmParams& p, const StepTape& tape, std::span<const Vector> dh,
                        const LstmState& d_final) {
  if (dh.size() != tape.size()) {
    throw DimensionError("lstm_backward: " + std::to_string(dh.size()) + " adjoints for a tape of " +
                         std::to_string(tape.size()) + " steps");
  }
  if (d_final.h.size() != p.hidden || d_final.cell.size() != p.hidden) {
    throw DimensionError("lstm_backward: final adjoint shape " + shape_of(d_final.h) + "/" +
                         shape_of(d_final.cell));
  }
  LstmGrads grads;
  grads.params = LstmParams(p.hidden, p.input);
  grads.inputs.resize(tape.size());

  Vector carry_h = d_final.h;
  Vector carry_c = d_final.cell;
  for (std::size_t t = tape.size(); t-- > 0;) {
    Vector total_h = dh[t];
    if (total_h.size() != p.hidden) {
      throw DimensionError("lstm_backward: adjoint at step " + std::to_string(t) + " is " +
                           shape_of(total_h));
    }
    add_to(total_h, carry_h);
    auto adj = lstm_step_backward(p, tape[t], total_h, carry_c, grads.params);
    carry_h = std::move(adj.h_prev);
    carry_c = std::move(adj.cell_prev);
    grads.inputs[t] = std::move(adj.x);
  }
  grads.initial = {std::move(carry_h), std::move(carry_c)};
  return grads;
}

LstmParams init_params(Rng& rng, std::size_t hidden, std::size_t input, InitRule rule) {
  LstmParams p(hidden, input);
  if (rule == InitRule::zeros) return p;
  const double a = std::sqrt(6.0 / static_cast<double>(2 * hidden + input));
  p.for_each_tensor([&](std::span<double> t, bool is_weight) {
    if (!is_weight) return;
    for (auto& v : t) v = rng.uniform(-a, a);
  });
  std::fill(p.b_forget.begin(), p.b_forget.end(), 1.0);
  return p;
}

}  // namespace mpn
