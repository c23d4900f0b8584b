#include "mpn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mpn {

std::string to_string(TriggerKind k) {
  switch (k) {
    case TriggerKind::lag_above: return "lag_above";
    case TriggerKind::lag_below: return "lag_below";
    case TriggerKind::spread: return "spread";
    case TriggerKind::compound: return "compound";
    case TriggerKind::jump: return "jump";
    case TriggerKind::demand_above: return "demand_above";
    case TriggerKind::demand_below: return "demand_below";
    case TriggerKind::demand_spread: return "demand_spread";
  }
  return "unknown";
}

DatasetMeta SynthConfig::meta() const {
  DatasetMeta m;
  m.history = history;
  m.total = total;
  m.labels = labels();
  m.observed = observed();
  m.context = context;
  for (const auto& t : triggers) m.label_names.push_back(t.name);
  m.source = DataSource::synthetic;
  return m;
}

void SynthConfig::validate() const {
  if (history >= total) throw std::invalid_argument("synth: history must be shorter than total length");
  if (context < 1) throw std::invalid_argument("synth: need at least one context channel");
  if (sensor_lags.size() < context) {
    throw std::invalid_argument("synth: need at least one sensor per context channel");
  }
  for (double a : sensor_lags) {
    if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("synth: sensor lag coefficients must lie in (0, 1)");
  }
  if (!(change_probability >= 0.0 && change_probability <= 1.0)) {
    throw std::invalid_argument("synth: change probability must lie in [0, 1]");
  }
  if (setpoint_levels == 1) throw std::invalid_argument("synth: setpoint_levels must be 0 or at least 2");
  if (!(noise >= 0.0)) throw std::invalid_argument("synth: noise scale must be non-negative");
  if (persist_min < 1 || persist_max < persist_min) {
    throw std::invalid_argument("synth: persistence range must satisfy 1 <= min <= max");
  }
  if (triggers.empty()) throw std::invalid_argument("synth: need at least one label trigger");
  for (const auto& t : triggers) {
    if (!(t.threshold > 0.0)) throw std::invalid_argument("synth: trigger thresholds must be positive");
    if (!(t.rarity > 0.0)) throw std::invalid_argument("synth: rarity multipliers must be positive");
    if (t.channel >= context || t.channel_b >= context) {
      throw std::invalid_argument("synth: trigger '" + t.name + "' references a missing channel");
    }
  }
}

SynthConfig SynthConfig::defaults() {
  SynthConfig c;
  c.history = 20;
  c.total = 30;
  c.context = 2;
  c.sensor_lags = {0.3, 0.3, 0.15};
  c.change_probability = 0.1;
  c.setpoint_levels = 9;
  c.noise = 0.03;
  c.persist_min = 1;
  c.persist_max = 3;
  // Thresholds sit between setpoint levels; the deviation term decides the
  // borderline cases, which depend on how recently the setpoint jumped.
  c.triggers = {
      {"surge_a", TriggerKind::demand_above, 0, 0, 0.375, 1.0, 0.1},
      {"sag_b", TriggerKind::demand_below, 1, 1, 0.6, 1.0, 0.1},
      {"spread_ab", TriggerKind::demand_spread, 0, 1, 1.2, 1.0, 0.1},
      {"spread_ba", TriggerKind::demand_spread, 1, 0, 1.875, 1.0, 0.1},
  };
  c.seed = 0;
  return c;
}

double synth_value_bound(const SynthConfig& config) {
  const double a_min = *std::min_element(config.sensor_lags.begin(), config.sensor_lags.end());
  return 1.0 + 4.0 * config.noise / a_min;
}

namespace {

Sample generate_one(const SynthConfig& cfg, Rng rng) {
  const std::size_t T = cfg.total;
  const std::size_t dc = cfg.context;
  const std::size_t dz = cfg.observed();
  const std::size_t L = cfg.labels();

  const std::size_t K = cfg.setpoint_levels;
  auto snap = [K](double u) {
    if (K < 2) return u;
    const auto k = std::min(K - 1, static_cast<std::size_t>((u + 1.0) / 2.0 * static_cast<double>(K)));
    return -1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(K - 1);
  };

  Matrix c(T, dc);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t k = 0; k < dc; ++k) {
      const double coin = rng.next_double();
      const double level = snap(rng.uniform(-1.0, 1.0));
      c(t, k) = (t == 0 || coin < cfg.change_probability) ? level : c(t - 1, k);
    }
  }

  Matrix s(T, dz);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t k = 0; k < dz; ++k) {
      const double n = std::clamp(rng.normal(), -4.0, 4.0);
      const double target = c(t, k % dc);
      if (t == 0) {
        s(t, k) = target;
      } else {
        s(t, k) = s(t - 1, k) + cfg.sensor_lags[k] * (target - s(t - 1, k)) + cfg.noise * n;
      }
    }
  }

  std::vector<std::size_t> duration(T * L);
  const std::size_t span = cfg.persist_max - cfg.persist_min + 1;
  for (auto& d : duration) d = cfg.persist_min + static_cast<std::size_t>(rng.below(span));

  auto stat = [&](const LabelTrigger& tr, std::size_t t) {
    const std::size_t a = tr.channel, b = tr.channel_b;
    switch (tr.kind) {
      case TriggerKind::lag_above: return c(t, a) - s(t, a);
      case TriggerKind::lag_below: return s(t, a) - c(t, a);
      case TriggerKind::spread: return std::abs(c(t, a) - c(t, b));
      case TriggerKind::compound: return std::abs(c(t, a) - s(t, a)) + std::abs(c(t, b) - s(t, b));
      case TriggerKind::jump: return t == 0 ? 0.0 : std::abs(c(t, a) - c(t - 1, a));
      case TriggerKind::demand_above: return c(t, a) + tr.deviation_weight * (c(t, a) - s(t, a));
      case TriggerKind::demand_below: return -c(t, a) + tr.deviation_weight * (s(t, a) - c(t, a));
      case TriggerKind::demand_spread:
        return c(t, a) - c(t, b) + tr.deviation_weight * ((c(t, a) - s(t, a)) - (c(t, b) - s(t, b)));
    }
    return 0.0;
  };

  Sample out;
  out.z = Matrix(cfg.history, dz);
  for (std::size_t t = 0; t < cfg.history; ++t) out.z.set_row(t, s.row(t));
  out.c = c;
  out.o_true = Matrix(T - cfg.history, L);
  for (std::size_t l = 0; l < L; ++l) {
    const auto& tr = cfg.triggers[l];
    const double threshold = tr.threshold * tr.rarity;
    std::size_t active_until = 0;  // exclusive
    for (std::size_t t = 0; t < T; ++t) {
      if (stat(tr, t) > threshold) active_until = std::max(active_until, t + duration[t * L + l]);
      if (t >= cfg.history && t < active_until) out.o_true(t - cfg.history, l) = 1.0;
    }
  }
  out.y_true = segment_from_stepwise(out.o_true);
  return out;
}

}  // namespace

Dataset synth_generate(const SynthConfig& config, std::size_t n) {
  config.validate();
  Dataset ds;
  ds.meta = config.meta();
  ds.samples.reserve(n);
  const Rng root(config.seed);
  for (std::size_t i = 0; i < n; ++i) ds.samples.push_back(generate_one(config, root.fork(i)));
  return ds;
}

}  // namespace mpn
