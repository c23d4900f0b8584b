#include "mpn/model.hpp"

#include <stdexcept>

namespace mpn {

void MpnDims::validate() const {
  if (labels < 1) throw std::invalid_argument("model dims: L must be at least 1");
  if (history >= total) {
    throw std::invalid_argument("model dims: history length " + std::to_string(history) +
                                " must be less than total length " + std::to_string(total));
  }
}

MpnModel MpnModel::zeros(const MpnDims& dims) {
  dims.validate();
  MpnModel m;
  m.dims = dims;
  m.encoder = LstmParams(dims.labels, dims.encoder_input());
  m.decoder = LstmParams(dims.labels, dims.decoder_input());
  m.b_g.assign(dims.labels, 0.0);
  return m;
}

MpnModel MpnModel::initialized(const MpnDims& dims, Rng& rng) {
  dims.validate();
  MpnModel m;
  m.dims = dims;
  m.encoder = init_params(rng, dims.labels, dims.encoder_input());
  m.decoder = init_params(rng, dims.labels, dims.decoder_input());
  m.b_g.assign(dims.labels, 0.0);
  return m;
}

std::size_t MpnModel::scalar_count() const {
  return encoder.scalar_count() + decoder.scalar_count() + b_g.size();
}

MpnGrads MpnGrads::zeros_like(const MpnModel& m) {
  return {LstmParams(m.encoder.hidden, m.encoder.input),
          LstmParams(m.decoder.hidden, m.decoder.input), Vector(m.b_g.size(), 0.0)};
}

MpnGrads& MpnGrads::operator+=(const MpnGrads& other) {
  std::vector<std::span<const double>> rhs;
  for_each_tensor(other, [&](std::span<const double> t, bool) { rhs.push_back(t); });
  std::size_t k = 0;
  for_each_tensor(*this, [&](std::span<double> t, bool) { add_to(t, rhs.at(k++)); });
  return *this;
}

namespace {
template <class P>
std::vector<double> flatten_impl(const P& p) {
  std::vector<double> out;
  for_each_tensor(p, [&](std::span<const double> t, bool) { out.insert(out.end(), t.begin(), t.end()); });
  return out;
}
}  // namespace

std::vector<double> flatten(const MpnModel& m) { return flatten_impl(m); }
std::vector<double> flatten(const MpnGrads& g) { return flatten_impl(g); }

void assign(MpnModel& m, std::span<const double> flat) {
  if (flat.size() != m.scalar_count()) {
    throw DimensionError("assign: " + shape_of(flat) + " values for a model of " +
                         std::to_string(m.scalar_count()) + " parameters");
  }
  std::size_t k = 0;
  for_each_tensor(m, [&](std::span<double> t, bool) {
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(k),
              flat.begin() + static_cast<std::ptrdiff_t>(k + t.size()), t.begin());
    k += t.size();
  });
}

std::vector<bool> weight_mask(const MpnModel& m) {
  std::vector<bool> mask;
  for_each_tensor(m, [&](std::span<const double> t, bool w) { mask.insert(mask.end(), t.size(), w); });
  return mask;
}

Vector encoder_feedback(std::span<const double> h_prev) { return {h_prev.begin(), h_prev.end()}; }

Vector decoder_feedback(std::span<const double> h_prev) { return sigmoid(h_prev); }

Vector decoder_feedback_backward(std::span<const double> h_prev, std::span<const double> adjoint) {
  Vector out(h_prev.size());
  for (std::size_t k = 0; k < h_prev.size(); ++k) {
    const double s = sigmoid(h_prev[k]);
    out[k] = adjoint[k] * s * (1.0 - s);
  }
  return out;
}

namespace {

void check_inputs(const MpnDims& d, const Matrix& z, const Matrix& c) {
  if (z.rows() != d.history || z.cols() != d.observed) {
    throw DimensionError("mpn: observations z is " + z.shape() + ", expected [" +
                         std::to_string(d.history) + "x" + std::to_string(d.observed) + "]");
  }
  if (c.rows() != d.total || c.cols() != d.context) {
    throw DimensionError("mpn: context c is " + c.shape() + ", expected [" +
                         std::to_string(d.total) + "x" + std::to_string(d.context) + "]");
  }
}

}  // namespace

ForwardPass mpn_forward(const MpnModel& model, const Matrix& z, const Matrix& c) {
  const MpnDims& d = model.dims;
  check_inputs(d, z, c);
  const std::size_t L = d.labels;

  ForwardPass pass;
  pass.tape.encoder.reserve(d.history);
  pass.tape.decoder.reserve(d.horizon());

  LstmState state = LstmState::zeros(L);
  for (std::size_t t = 0; t < d.history; ++t) {
    const Vector x = concat({z.row(t), c.row(t), encoder_feedback(state.h)});
    auto [next, rec] = lstm_step(model.encoder, state, x);
    state = std::move(next);
    pass.tape.encoder.push_back(std::move(rec));
  }

  Prediction& pred = pass.prediction;
  pred.decoder_hidden = Matrix(d.horizon(), L);
  pred.g = model.b_g;
  for (std::size_t s = 0; s < d.horizon(); ++s) {
    const Vector x = concat({c.row(d.history + s), decoder_feedback(state.h)});
    auto [next, rec] = lstm_step(model.decoder, state, x);
    state = std::move(next);
    pred.decoder_hidden.set_row(s, state.h);
    pass.tape.decoder.push_back(std::move(rec));
  }
  // Summation in step order keeps g bit-reproducible.
  for (std::size_t s = 0; s < d.horizon(); ++s) add_to(pred.g, pred.decoder_hidden.row(s));

  pred.y = sigmoid(pred.g);
  pred.o = Matrix(d.horizon(), L);
  for (std::size_t s = 0; s < d.horizon(); ++s) {
    for (std::size_t k = 0; k < L; ++k) {
      pred.o(s, k) = sigmoid(pred.decoder_hidden(s, k)) * pred.y[k];
    }
  }
  return pass;
}

MpnGrads mpn_backward(const MpnModel& model, const ForwardPass& pass, const PredictionAdjoint& adj) {
  const MpnDims& d = model.dims;
  const std::size_t L = d.labels;
  const std::size_t H = d.horizon();
  const Prediction& pred = pass.prediction;

  if ((!adj.dy.empty() && adj.dy.size() != L) || (!adj.dg.empty() && adj.dg.size() != L)) {
    throw DimensionError("mpn_backward: adjoint dy " + shape_of(adj.dy) + " / dg " +
                         shape_of(adj.dg) + ", expected [" + std::to_string(L) + "]");
  }
  if (!adj.d_o.empty() && (adj.d_o.rows() != H || adj.d_o.cols() != L)) {
    throw DimensionError("mpn_backward: adjoint on o is " + adj.d_o.shape() + ", expected [" +
                         std::to_string(H) + "x" + std::to_string(L) + "]");
  }

  // Adjoint on g collects the direct term, the y = σ(g) path, and g's
  // appearance inside every o_t.
  Vector dg(L, 0.0);
  if (!adj.dg.empty()) dg = adj.dg;
  Vector dh_ext(H * L, 0.0);
  for (std::size_t k = 0; k < L; ++k) {
    const double y = pred.y[k];
    const double dsig_g = y * (1.0 - y);
    double acc = adj.dy.empty() ? 0.0 : adj.dy[k] * dsig_g;
    if (!adj.d_o.empty()) {
      for (std::size_t s = 0; s < H; ++s) {
        const double sh = sigmoid(pred.decoder_hidden(s, k));
        acc += adj.d_o(s, k) * sh * dsig_g;
        dh_ext[s * L + k] = adj.d_o(s, k) * y * sh * (1.0 - sh);
      }
    }
    dg[k] += acc;
  }

  MpnGrads grads = MpnGrads::zeros_like(model);
  grads.b_g = dg;

  // Decoder, reversed. `pending_h` is the adjoint on h_{t} arriving through
  // the recurrence and through step t+1's feedback input.
  Vector pending_h(L, 0.0);
  Vector pending_c(L, 0.0);
  for (std::size_t s = H; s-- > 0;) {
    Vector dh = pending_h;
    add_to(dh, dg);
    add_to(dh, std::span<const double>(dh_ext).subspan(s * L, L));
    auto step = lstm_step_backward(model.decoder, pass.tape.decoder[s], dh, pending_c, grads.decoder);
    const auto& rec = pass.tape.decoder[s];
    const auto fb_adj = std::span<const double>(step.x).subspan(d.context, L);
    pending_h = decoder_feedback_backward(rec.h_prev, fb_adj);
    add_to(pending_h, step.h_prev);
    pending_c = std::move(step.cell_prev);
  }

  // Encoder, reversed; its final state seeded the decoder.
  for (std::size_t t = d.history; t-- > 0;) {
    auto step = lstm_step_backward(model.encoder, pass.tape.encoder[t], pending_h, pending_c,
                                   grads.encoder);
    const auto fb_adj = std::span<const double>(step.x).subspan(d.observed + d.context, L);
    pending_h = encoder_feedback(fb_adj);
    add_to(pending_h, step.h_prev);
    pending_c = std::move(step.cell_prev);
  }
  return grads;
}

Prediction predict(const MpnModel& model, const Matrix& z, const Matrix& c) {
  return mpn_forward(model, z, c).prediction;
}

}  // namespace mpn
