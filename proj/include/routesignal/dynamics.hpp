#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "routesignal/equilibrium.hpp"
#include "routesignal/estimators.hpp"
#include "routesignal/game_config.hpp"
#include "routesignal/model.hpp"
#include "routesignal/rng.hpp"

namespace routesignal {

/// The forward flow map carries no information about theta in this state.
class UnidentifiableError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Error raised inside a round, tagged with the round index.
class SimulationError : public std::runtime_error {
public:
  SimulationError(std::size_t round, const std::string& what)
      : std::runtime_error("round " + std::to_string(round) + ": " + what), round(round) {}
  std::size_t round;
};

/// Participants' aggregate payoff shortfall pi_w^T (I - P) ell.
inline double instantaneous_regret(const Signal& signal, const DisobedienceMatrix& dis,
                                   std::span<const double> ell, std::size_t omega) {
  const auto pi = signal.pi.row(omega);
  double u = 0.0;
  for (std::size_t i = 0; i < pi.size(); ++i) {
    double deviation = 0.0;
    for (std::size_t j = 0; j < pi.size(); ++j) deviation += dis.p(i, j) * ell[j];
    u += pi[i] * (ell[i] - deviation);
  }
  return u;
}

/// Running average k/(k+1) m + u/(k+1), or lambda m + (1-lambda) u when discounted.
inline double regret_update(double m, double u, std::size_t k, const Scenario& scenario) {
  if (scenario.kind == Scenario::Kind::discounted)
    return scenario.lambda * m + (1.0 - scenario.lambda) * u;
  const double kk = static_cast<double>(k);
  return kk / (kk + 1.0) * m + u / (kk + 1.0);
}

/// Fraction of disobeying participants, [m]^+ / m_max clamped to [0,1].
inline double theta_of_m(double m, double m_max) {
  return std::clamp(std::max(m, 0.0) / m_max, 0.0, 1.0);
}

/**
 * Invert the participant flow map: given total flows and the known Bayesian
 * response, least-squares solve x - pi_w = theta (P^T - I) pi_w for theta.
 */
inline double recover_theta(const Signal& signal, const DisobedienceMatrix& dis,
                            std::span<const double> total_flows, std::size_t omega,
                            std::span<const double> y_known) {
  const auto pi = signal.pi.row(omega);
  const std::size_t n = pi.size();
  double num = 0.0;
  double den = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double moved_in = 0.0;
    for (std::size_t j = 0; j < n; ++j) moved_in += dis.p(j, i) * pi[j];
    const double c = moved_in - pi[i];
    const double r = total_flows[i] - y_known[i] - pi[i];
    num += c * r;
    den += c * c;
    scale = std::max(scale, std::abs(pi[i]));
  }
  if (!(den > 1e-20 * scale * scale))
    throw UnidentifiableError("state " + std::to_string(omega) +
                              " leaves the flow map independent of theta");
  return std::clamp(num / den, 0.0, 1.0);
}

using EstimatorState = std::variant<SmoothingState, LuenbergerState>;

struct SimulationState {
  std::size_t k = 1;
  double m = 0.0;
  double theta_hat = 0.0;
  EstimatorState estimator;
  double nu_current = 0.0;
  SplitMix64 rng;
  std::size_t clamp_events = 0;
};

struct TrajectoryRecord {
  std::size_t k = 0;
  std::size_t omega = 0;
  double theta = 0.0;
  double theta_hat = 0.0;
  double nu = 0.0;
  Vector x;
  Vector x_hat;
  Vector y;
  Vector ell;
  double u = 0.0;
  double m = 0.0;
  double m_next = 0.0;
  double e_theta = 0.0;
  double flow_gap = 0.0;
  std::size_t solver_iterations = 0;
};

inline SimulationState initial_state(const GameConfig& cfg, std::uint64_t seed) {
  SimulationState s;
  s.k = 1;
  s.m = cfg.m_init;
  s.nu_current = cfg.signal.nu;
  s.rng = SplitMix64(seed);
  if (cfg.estimator.kind == EstimatorSpec::Kind::luenberger) {
    // The observer starts from the regret level implied by the initial forecast.
    LuenbergerState est{cfg.theta_hat_init * cfg.m_max, cfg.estimator.gain, 1};
    s.theta_hat = theta_of_m(est.m_hat, cfg.m_max);
    s.estimator = std::move(est);
  } else {
    s.theta_hat = cfg.theta_hat_init;
    s.estimator = SmoothingState{cfg.theta_hat_init, cfg.beta};
  }
  return s;
}

/**
 * One round of the repeated game: sample the state, realise participant flows from
 * the current regret, best-respond to the forecast, observe latencies, then update
 * the regret, the forecast and (for dynamic_nu) the participation rate.
 */
inline std::pair<SimulationState, TrajectoryRecord> step(const GameConfig& cfg, SimulationState state,
                                                         std::optional<std::size_t> forced_omega =
                                                             std::nullopt) {
  const std::size_t n = cfg.latency.links;
  TrajectoryRecord rec;
  rec.k = state.k;
  try {
    rec.omega = forced_omega ? *forced_omega : sample_index(state.rng, cfg.prior.mu0);
    const bool dynamic = cfg.scenario.kind == Scenario::Kind::dynamic_nu;
    const Signal signal = dynamic ? cfg.signal.rescaled(state.nu_current) : cfg.signal;

    rec.nu = state.nu_current;
    rec.m = state.m;
    rec.theta = theta_of_m(state.m, cfg.m_max);
    rec.theta_hat = state.theta_hat;
    rec.e_theta = rec.theta - rec.theta_hat;
    rec.x = p_flows(signal, cfg.disobedience, rec.theta, rec.omega);
    rec.x_hat = forecast_flows(signal, cfg.disobedience, rec.theta_hat, rec.omega);

    const ExpectedLatency el(cfg.latency, cfg.prior, signal, cfg.disobedience, rec.theta_hat);
    BestResponse br = solve_bwe(el, cfg.b_mass(), cfg.solver);
    rec.y = std::move(br.y);
    rec.solver_iterations = br.iterations;

    Vector total(n);
    for (std::size_t i = 0; i < n; ++i) total[i] = rec.x[i] + rec.y[i];
    rec.ell = eval_latency(cfg.latency, rec.omega, total);
    rec.u = instantaneous_regret(signal, cfg.disobedience, rec.ell, rec.omega);

    double m_next = regret_update(state.m, rec.u, state.k, cfg.scenario);
    if (std::abs(m_next) > cfg.m_max) {
      m_next = std::clamp(m_next, -cfg.m_max, cfg.m_max);
      ++state.clamp_events;
    }
    rec.m_next = m_next;

    const auto pi = signal.pi.row(rec.omega);
    for (std::size_t i = 0; i < n; ++i)
      rec.flow_gap = std::max(rec.flow_gap, std::abs(rec.x[i] - pi[i]));

    if (auto* sm = std::get_if<SmoothingState>(&state.estimator)) {
      *sm = smoothing_update(std::move(*sm), rec.theta, state.k);
      state.theta_hat = sm->theta_hat;
    } else {
      auto& lu = std::get<LuenbergerState>(state.estimator);
      Vector forecast_total(n);
      for (std::size_t i = 0; i < n; ++i) forecast_total[i] = rec.x_hat[i] + rec.y[i];
      const Vector ell_hat = eval_latency(cfg.latency, rec.omega, forecast_total);
      std::optional<double> discount;
      if (cfg.scenario.kind == Scenario::Kind::discounted) discount = cfg.scenario.lambda;
      lu = luenberger_update(std::move(lu), rec.u, rec.ell, ell_hat, discount);
      state.theta_hat = theta_of_m(lu.m_hat, cfg.m_max);
    }

    if (dynamic) state.nu_current = rec.theta;
    state.m = m_next;
    ++state.k;
  } catch (const SimulationError&) {
    throw;
  } catch (const std::exception& e) {
    throw SimulationError(rec.k, e.what());
  }
  return {std::move(state), std::move(rec)};
}

struct SimulationResult {
  std::vector<TrajectoryRecord> trajectory;
  std::size_t clamp_events = 0;
};

inline SimulationResult run_simulation(const GameConfig& cfg, std::uint64_t seed) {
  SimulationResult out;
  out.trajectory.reserve(cfg.rounds);
  SimulationState state = initial_state(cfg, seed);
  for (std::size_t r = 0; r < cfg.rounds; ++r) {
    auto [next, rec] = step(cfg, std::move(state));
    state = std::move(next);
    out.trajectory.push_back(std::move(rec));
  }
  out.clamp_events = state.clamp_events;
  return out;
}

/// K rounds from (m_init, theta_hat_init, seed); bit-reproducible.
inline std::vector<TrajectoryRecord> simulate(const GameConfig& cfg) {
  return run_simulation(cfg, cfg.seed).trajectory;
}

/// Time-averaged |x_j - xhat_j| per link.
inline Vector calibration_score(std::span<const TrajectoryRecord> trajectory) {
  if (trajectory.empty()) throw ConfigError("calibration_score needs a nonempty trajectory");
  const std::size_t n = trajectory.front().x.size();
  Vector score(n, 0.0);
  for (const auto& r : trajectory)
    for (std::size_t j = 0; j < n; ++j) score[j] += std::abs(r.x[j] - r.x_hat[j]);
  for (double& s : score) s /= static_cast<double>(trajectory.size());
  return score;
}

/// Envelope for the forecast error along a trajectory, with e1 taken from its first round.
inline std::vector<Envelope> trajectory_envelope(std::span<const TrajectoryRecord> trajectory,
                                                 const BetaSchedule& schedule) {
  if (trajectory.empty()) return {};
  return e_theta_envelope_series(trajectory.size(), trajectory.front().e_theta, schedule);
}

}  // namespace routesignal
