#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "routesignal/model.hpp"

namespace routesignal {

/**
 * Smoothing weights beta(k), k >= 2, confined to [beta_min, beta_max] inside (0,1).
 *
 * Either a constant weight or an explicit sequence listing beta(2), beta(3), ...;
 * rounds past the end of a sequence reuse its last value.
 */
struct BetaSchedule {
  double beta_min = 0.3;
  double beta_max = 0.7;
  double constant = 0.5;
  std::shared_ptr<const Vector> sequence;

  static BetaSchedule constant_beta(double beta, double lo = 0.3, double hi = 0.7) {
    return {lo, hi, beta, nullptr};
  }
  static BetaSchedule custom(Vector values, double lo, double hi) {
    return {lo, hi, 0.5, std::make_shared<const Vector>(std::move(values))};
  }

  bool is_constant() const { return sequence == nullptr; }

  double at(std::size_t k) const {
    if (!sequence || sequence->empty()) return constant;
    const std::size_t idx = k < 2 ? 0 : k - 2;
    return idx < sequence->size() ? (*sequence)[idx] : sequence->back();
  }

  void validate() const {
    if (!(beta_min > 0.0 && beta_min <= beta_max && beta_max < 1.0))
      throw ConfigError("beta bounds must satisfy 0 < beta_min <= beta_max < 1");
    auto check = [&](double b) {
      if (!(b >= beta_min && b <= beta_max))
        throw ConfigError("smoothing weight " + detail::fmt_double(b) + " outside [" +
                          detail::fmt_double(beta_min) + ", " + detail::fmt_double(beta_max) + "]");
    };
    if (sequence) {
      if (sequence->empty()) throw ConfigError("beta sequence must not be empty");
      for (double b : *sequence) check(b);
    } else {
      check(constant);
    }
  }
};

struct SmoothingState {
  double theta_hat = 0.0;
  BetaSchedule schedule;
};

/**
 * One simple exponential smoothing step from round k to k+1:
 * theta_hat(k+1) = beta(k+1) theta(k) + (1 - beta(k+1)) theta_hat(k).
 */
inline SmoothingState smoothing_update(SmoothingState state, double theta_observed, std::size_t k) {
  const double beta = state.schedule.at(k + 1);
  if (!(beta > 0.0 && beta < 1.0))
    throw ConfigError("smoothing weight " + detail::fmt_double(beta) + " outside (0,1)");
  state.theta_hat = beta * theta_observed + (1.0 - beta) * state.theta_hat;
  return state;
}

/// Observer of the aggregate regret driven by the latency output error.
struct LuenbergerState {
  double m_hat = 0.0;
  Vector gain;  // empty means zero gain
  std::size_t k = 1;

  bool zero_gain() const {
    for (double g : gain)
      if (g != 0.0) return false;
    return true;
  }
};

/**
 * m_hat[k+1] = k/(k+1) m_hat[k] + u[k]/(k+1) + L . (ell[k] - ell_hat[k])
 *
 * With `discount` set, the averaging part mirrors the discounted aggregation
 * lambda m_hat + (1 - lambda) u instead.
 */
inline LuenbergerState luenberger_update(LuenbergerState state, double u,
                                         std::span<const double> latencies_observed,
                                         std::span<const double> latencies_predicted,
                                         std::optional<double> discount = std::nullopt) {
  if (latencies_observed.size() != latencies_predicted.size())
    throw ConfigError("luenberger_update: latency vectors differ in length");
  double correction = 0.0;
  if (!state.gain.empty()) {
    if (state.gain.size() != latencies_observed.size())
      throw ConfigError("luenberger_update: gain length does not match link count");
    for (std::size_t i = 0; i < state.gain.size(); ++i)
      correction += state.gain[i] * (latencies_observed[i] - latencies_predicted[i]);
  }
  const double k = static_cast<double>(state.k);
  if (discount)
    state.m_hat = *discount * state.m_hat + (1.0 - *discount) * u;
  else
    state.m_hat = k / (k + 1.0) * state.m_hat + u / (k + 1.0);
  state.m_hat += correction;
  ++state.k;
  return state;
}

/// sum_{t=2..k} (1 - beta_min)^(k-t) / t, summed term by term.
inline double delta_tilde(std::size_t k, double beta_min) {
  const double gamma = 1.0 - beta_min;
  double total = 0.0;
  for (std::size_t t = 2; t <= k; ++t)
    total += std::pow(gamma, static_cast<double>(k - t)) / static_cast<double>(t);
  return total;
}

struct Envelope {
  double lower;
  double upper;
};

/**
 * Bounds on the forecast error e(k) = theta(k) - theta_hat(k) when theta moves by
 * at most 2/(k+1) per round: prod_{t=2..k}(1 - beta(t)) e1 -/+ 2 delta_tilde(k).
 */
inline Envelope e_theta_envelope(std::size_t k, double e1, double beta_min,
                                 const BetaSchedule& schedule) {
  double prod = 1.0;
  for (std::size_t t = 2; t <= k; ++t) prod *= 1.0 - schedule.at(t);
  const double spread = 2.0 * delta_tilde(k, beta_min);
  return {prod * e1 - spread, prod * e1 + spread};
}

/// Envelope for k = 1..rounds in one pass; entry k-1 holds round k.
inline std::vector<Envelope> e_theta_envelope_series(std::size_t rounds, double e1,
                                                     const BetaSchedule& schedule) {
  std::vector<Envelope> out;
  out.reserve(rounds);
  const double gamma = 1.0 - schedule.beta_min;
  double prod = 1.0;
  double dt = 0.0;
  for (std::size_t k = 1; k <= rounds; ++k) {
    if (k >= 2) {
      prod *= 1.0 - schedule.at(k);
      dt = gamma * dt + 1.0 / static_cast<double>(k);
    }
    out.push_back({prod * e1 - 2.0 * dt, prod * e1 + 2.0 * dt});
  }
  return out;
}

/**
 * Forecast errors e(1..rounds) when the regret is frozen, so theta never moves and
 * smoothing alone drives theta_hat.
 */
inline Vector frozen_regret_errors(double theta, double theta_hat_init,
                                   const BetaSchedule& schedule, std::size_t rounds) {
  Vector errors;
  errors.reserve(rounds);
  SmoothingState s{theta_hat_init, schedule};
  for (std::size_t k = 1; k <= rounds; ++k) {
    errors.push_back(theta - s.theta_hat);
    s = smoothing_update(std::move(s), theta, k);
  }
  return errors;
}

}  // namespace routesignal
