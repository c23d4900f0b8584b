#pragma once

// Multi-label Predictive Network: an encoder LSTM over the observed history,
// a decoder LSTM over the forecast window, and the embedding/segment/stepwise
// outputs built from the decoder hidden states.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mpn/lstm.hpp"
#include "mpn/tensor.hpp"

namespace mpn {

struct MpnDims {
  std::size_t labels = 0;    // L, also the hidden size of both LSTMs
  std::size_t observed = 0;  // d_z
  std::size_t context = 0;   // d_c
  std::size_t history = 0;   // τ
  std::size_t total = 0;     // T

  std::size_t horizon() const { return total - history; }
  std::size_t encoder_input() const { return observed + context + labels; }
  std::size_t decoder_input() const { return context + labels; }

  /// Throws std::invalid_argument unless L ≥ 1 and τ < T.
  void validate() const;
  bool operator==(const MpnDims&) const = default;
};

struct MpnModel {
  MpnDims dims;
  LstmParams encoder;
  LstmParams decoder;
  Vector b_g;

  static MpnModel zeros(const MpnDims& dims);
  static MpnModel initialized(const MpnDims& dims, Rng& rng);

  std::size_t scalar_count() const;
  bool operator==(const MpnModel&) const = default;
};

/// Same tensor layout as MpnModel, holding ∂Loss/∂θ.
struct MpnGrads {
  LstmParams encoder;
  LstmParams decoder;
  Vector b_g;

  static MpnGrads zeros_like(const MpnModel& m);
  MpnGrads& operator+=(const MpnGrads& other);
};

/// Visits encoder tensors, decoder tensors, then b_g, calling
/// f(span, is_weight_matrix). Works for MpnModel and MpnGrads alike.
template <class Params, class F>
void for_each_tensor(Params& p, F&& f) {
  p.encoder.for_each_tensor(f);
  p.decoder.for_each_tensor(f);
  f(std::span(p.b_g), false);
}

std::vector<double> flatten(const MpnModel& m);
std::vector<double> flatten(const MpnGrads& g);
void assign(MpnModel& m, std::span<const double> flat);
std::vector<bool> weight_mask(const MpnModel& m);

struct Prediction {
  Vector g;                // embedding, length L
  Vector y;                // σ(g)
  Matrix o;                // (T-τ)×L stepwise scores σ(h_t)⊙σ(g)
  Matrix decoder_hidden;   // (T-τ)×L decoder h_t

  bool operator==(const Prediction&) const = default;
};

struct MpnTape {
  StepTape encoder;
  StepTape decoder;
};

struct ForwardPass {
  Prediction prediction;
  MpnTape tape;
};

/// Upstream adjoints on the prediction. Empty members are treated as zero.
struct PredictionAdjoint {
  Vector dy;
  Vector dg;
  Matrix d_o;
};

// The extra L inputs that close each recurrence. The encoder re-reads its
// previous hidden state; the decoder reads the squashed previous hidden
// state (a stepwise-prediction-like signal in (0,1)).
Vector encoder_feedback(std::span<const double> h_prev);
Vector decoder_feedback(std::span<const double> h_prev);
/// ∂decoder_feedback/∂h_prev applied to an adjoint (elementwise).
Vector decoder_feedback_backward(std::span<const double> h_prev, std::span<const double> adjoint);

/// z is τ×d_z, c is T×d_c.
ForwardPass mpn_forward(const MpnModel& model, const Matrix& z, const Matrix& c);
MpnGrads mpn_backward(const MpnModel& model, const ForwardPass& pass, const PredictionAdjoint& adj);
Prediction predict(const MpnModel& model, const Matrix& z, const Matrix& c);

}  // namespace mpn
