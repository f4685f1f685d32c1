#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "routesignal/estimators.hpp"
#include "routesignal/model.hpp"

namespace routesignal {

struct Scenario {
  enum class Kind { baseline, discounted, dynamic_nu };
  Kind kind = Kind::baseline;
  double lambda = 0.0;  // only for discounted

  static Scenario baseline() { return {}; }
  static Scenario discounted(double lambda) { return {Kind::discounted, lambda}; }
  static Scenario dynamic_nu() { return {Kind::dynamic_nu, 0.0}; }

  std::string name() const {
    switch (kind) {
      case Kind::baseline: return "baseline";
      case Kind::discounted: return "discounted";
      case Kind::dynamic_nu: return "dynamic_nu";
    }
    return "baseline";
  }
};

struct EstimatorSpec {
  enum class Kind { smoothing, luenberger };
  Kind kind = Kind::smoothing;
  Vector gain;  // luenberger only; empty or all zeros means L = 0

  static EstimatorSpec smoothing() { return {}; }
  static EstimatorSpec luenberger(Vector gain = {}) { return {Kind::luenberger, std::move(gain)}; }

  /// The observer is only analysed for zero gain.
  bool stability_unanalyzed() const {
    if (kind != Kind::luenberger) return false;
    for (double g : gain)
      if (g != 0.0) return true;
    return false;
  }
};

struct SolverOptions {
  double tol = 1e-8;
  std::size_t max_iter = 10000;
};

struct GameConfig {
  LatencyModel latency;
  bool require_strict = true;
  Prior prior;
  Signal signal;
  DisobedienceMatrix disobedience;
  double m_max = 0.0;
  bool m_max_override = false;
  double m_init = 0.0;
  double theta_hat_init = 0.0;
  BetaSchedule beta;
  Scenario scenario;
  EstimatorSpec estimator;
  SolverOptions solver;
  std::size_t rounds = 5000;
  std::uint64_t seed = 1;

  /// Mass of the non-participating population.
  double b_mass() const { return 1.0 - signal.nu; }

  void validate() const {
    latency.validate(require_strict);
    const std::size_t n = latency.links;
    prior.validate(latency.state_count());
    signal.validate(latency);
    disobedience.validate(n);
    if (!(m_max > 0.0) || !std::isfinite(m_max)) throw ConfigError("m_max must be positive");
    const double floor = m_max_default(latency);
    if (m_max < floor && !m_max_override)
      throw ConfigError("m_max = " + detail::fmt_double(m_max) + " is below the regret bound " +
                        detail::fmt_double(floor) + "; set m_max_override to allow it");
    if (!(std::abs(m_init) <= m_max))
      throw ConfigError("m_init must lie in [-m_max, m_max]");
    if (!(theta_hat_init >= 0.0 && theta_hat_init <= 1.0))
      throw ConfigError("theta_hat_init must lie in [0,1]");
    beta.validate();
    if (scenario.kind == Scenario::Kind::discounted && !(scenario.lambda > 0.0 && scenario.lambda < 1.0))
      throw ConfigError("discount factor lambda must lie in (0,1)");
    if (scenario.kind == Scenario::Kind::dynamic_nu && !(signal.nu > 0.0))
      throw ConfigError("dynamic_nu scenario needs a signal with positive participation");
    if (estimator.kind == EstimatorSpec::Kind::luenberger && !estimator.gain.empty() &&
        estimator.gain.size() != n)
      throw ConfigError("luenberger gain must have one entry per link");
    if (!(solver.tol > 0.0)) throw ConfigError("solver tol must be positive");
    if (solver.max_iter == 0) throw ConfigError("solver max_iter must be positive");
    if (rounds == 0) throw ConfigError("rounds must be positive");
  }
};

}  // namespace routesignal
