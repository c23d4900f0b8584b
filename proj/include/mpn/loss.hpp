#pragma once

// Training objectives: the class-weighted segment cross-entropy, the stepwise
// squared loss, the pairwise Siamese similarity loss, L2 on the weight
// matrices, and their batch compositions (base, localize, siamese).

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mpn/model.hpp"
#include "mpn/sample.hpp"

namespace mpn {

enum class LossConfig { base, localize, siamese };

std::string to_string(LossConfig c);
LossConfig loss_config_from_string(const std::string& s);

/// Probabilities are clamped to [kProbClamp, 1 - kProbClamp] before logs.
inline constexpr double kProbClamp = 1e-12;

struct ClassWeights {
  Vector p;  // label frequency in the training segment labels
  Vector w;  // -log p, or 1 where p == 0
};

/// N×L binary segment labels of the training split. Throws on N == 0.
/// `always_present` (optional) receives the labels with p == 1, whose
/// weight is 0.
ClassWeights class_weights(const Matrix& segment_labels,
                           std::vector<std::size_t>* always_present = nullptr);

double loss_y(std::span<const double> y, std::span<const double> y_true, const ClassWeights& cw);
/// ∂loss_y/∂g with y = σ(g), in the cancellation-free form w·ỹ·(y-1) + (1-ỹ)·y.
Vector loss_y_grad_logit(std::span<const double> y, std::span<const double> y_true,
                         const ClassWeights& cw);

double loss_o(const Matrix& o, const Matrix& o_true);
Matrix loss_o_grad(const Matrix& o, const Matrix& o_true);

Vector siamese_similarity(std::span<const double> g_i, std::span<const double> g_j);
/// s̃[l] = 1 when both samples agree on segment label l.
Vector siamese_target(std::span<const double> y_true_i, std::span<const double> y_true_j);
double loss_s(std::span<const double> s, std::span<const double> s_true);
Vector loss_s_grad(std::span<const double> s, std::span<const double> s_true);

/// (λ/2)·Σ‖W‖²_F over encoder and decoder weight matrices (biases excluded).
double l2_penalty(const MpnModel& model, double lambda);
void add_l2_gradient(const MpnModel& model, double lambda, MpnGrads& grads);

struct LossBreakdown {
  double total = 0.0;
  double l_y = 0.0;
  double l_o = 0.0;
  double l_s = 0.0;
  double l_reg = 0.0;
};

struct BatchLoss {
  LossBreakdown breakdown;
  std::vector<PredictionAdjoint> adjoints;  // one per sample, input order
};

/// Batch objective and its adjoints on each sample's prediction. For the
/// siamese configuration the l_y/l_o/l_s fields hold the β- and
/// (1-β)-scaled pair averages, so they still sum to `total`.
BatchLoss batch_loss(LossConfig config, std::span<const Prediction> predictions,
                     std::span<const Sample* const> samples, const ClassWeights& cw,
                     const MpnModel& model, double lambda, double beta);

}  // namespace mpn
