#pragma once

// Plant-like synthetic generator (trigger formulas version 1).
//
// Context channels are piecewise-constant setpoint schedules over the whole
// horizon 1..T, with levels uniform in [-1, 1] or, when setpoint_levels = K
// is set, snapped to the K values -1 + 2k/(K-1). Each sensor follows its setpoint channel (sensor k tracks
// channel k mod d_c) through a first-order lag plus clipped Gaussian noise:
//
//   s_t = s_{t-1} + a_k·(c_t - s_{t-1}) + σ·clip(n_t, ±4),   s_1 = c_1
//
// Label l is raised at step t when its trigger statistic exceeds
// threshold_l · rarity_l, and then stays raised for a duration drawn
// uniformly from [persist_min, persist_max] steps. Trigger statistics:
//
//   lag_above(a)      c_t[a] - s_t[a]
//   lag_below(a)      s_t[a] - c_t[a]
//   spread(a, b)      |c_t[a] - c_t[b]|
//   compound(a, b)    |c_t[a] - s_t[a]| + |c_t[b] - s_t[b]|
//   jump(a)           |c_t[a] - c_{t-1}[a]|   (0 at t = 1)
//   demand_above(a)   c_t[a] + κ·(c_t[a] - s_t[a])
//   demand_below(a)   -c_t[a] + κ·(s_t[a] - c_t[a])
//   demand_spread(a,b) c_t[a] - c_t[b] + κ·((c_t[a] - s_t[a]) - (c_t[b] - s_t[b]))
//
// where s_t[a] is the first sensor attached to channel a. Only steps τ+1..T
// are labelled, so the forecast context drives the labels. Every random draw
// is made whether or not it affects the output, so changing a threshold
// never changes the signals.
//
// Bounds: setpoints lie in [-1, 1]; sensors lie in [-1 - 4σ/a_min, 1 + 4σ/a_min].

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mpn/data.hpp"

namespace mpn {

enum class TriggerKind { lag_above, lag_below, spread, compound, jump, demand_above, demand_below, demand_spread };

std::string to_string(TriggerKind k);

struct LabelTrigger {
  std::string name;
  TriggerKind kind = TriggerKind::jump;
  std::size_t channel = 0;
  std::size_t channel_b = 0;
  double threshold = 1.0;
  double rarity = 1.0;  // multiplies the threshold
  double deviation_weight = 0.0;  // κ in the demand_* statistics
};

struct SynthConfig {
  std::size_t history = 20;  // τ
  std::size_t total = 30;    // T
  std::size_t context = 2;   // d_c setpoint channels
  std::vector<double> sensor_lags;  // one per sensor; d_z = size
  double change_probability = 0.1;  // per channel per step
  std::size_t setpoint_levels = 0;  // >= 2: snap setpoints to this many evenly spaced values; 0: continuous
  double noise = 0.05;
  std::size_t persist_min = 1;
  std::size_t persist_max = 3;
  std::vector<LabelTrigger> triggers;  // one per label
  std::uint64_t seed = 0;

  std::size_t observed() const { return sensor_lags.size(); }
  std::size_t labels() const { return triggers.size(); }
  DatasetMeta meta() const;

  /// Throws std::invalid_argument on an inconsistent configuration.
  void validate() const;

  /// The committed default configuration.
  static SynthConfig defaults();
};

/// Sample i is generated from Rng(seed).fork(i), so the first k samples do not
/// depend on n.
Dataset synth_generate(const SynthConfig& config, std::size_t n);

/// Upper bound on |value| for any generated observation or context entry.
double synth_value_bound(const SynthConfig& config);

}  // namespace mpn
