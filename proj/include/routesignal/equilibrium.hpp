#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "routesignal/game_config.hpp"
#include "routesignal/model.hpp"
#include "routesignal/simplex.hpp"

namespace routesignal {

/// The best-response solver failed to certify a solution within its iteration budget.
class SolverError : public std::runtime_error {
public:
  SolverError(const std::string& what, Vector last_iterate, double vi_margin)
      : std::runtime_error(what), last_iterate(std::move(last_iterate)), vi_margin(vi_margin) {}

  Vector last_iterate;
  double vi_margin;
};

/**
 * Expected latency of every link, seen by the Bayesian agents, as a polynomial in
 * their own flow s on that link:
 *
 *   E_w[ latency_{w,i}(xhat_i(theta, w) + s) ] = sum_k coeff[i][k] s^k
 *
 * The binomial expansion is exact, so the potential (its integral) and the
 * gradient of the potential are available in closed form.
 */
class ExpectedLatency {
public:
  ExpectedLatency(const LatencyModel& model, const Prior& prior, const Signal& signal,
                  const DisobedienceMatrix& dis, double theta)
      : theta_(theta), poly_(model.links, Vector(model.degree + 1, 0.0)) {
    const std::size_t D = model.degree;
    // binomial[d][k] = C(d, k)
    std::vector<Vector> binomial(D + 1, Vector(D + 1, 0.0));
    for (std::size_t d = 0; d <= D; ++d) {
      binomial[d][0] = 1.0;
      for (std::size_t k = 1; k <= d; ++k)
        binomial[d][k] = binomial[d - 1][k - 1] + (k < d ? binomial[d - 1][k] : 0.0);
    }
    for (std::size_t w = 0; w < model.state_count(); ++w) {
      const Vector xhat = forecast_flows(signal, dis, theta, w);
      const double weight = prior.mu0[w];
      for (std::size_t i = 0; i < model.links; ++i)
        for (std::size_t d = 0; d <= D; ++d) {
          const double a = weight * model.coeff(d, w, i);
          if (a == 0.0) continue;
          for (std::size_t k = 0; k <= d; ++k)
            poly_[i][k] += a * binomial[d][k] * std::pow(xhat[i], static_cast<double>(d - k));
        }
    }
  }

  std::size_t links() const { return poly_.size(); }
  double theta() const { return theta_; }

  /// Polynomial coefficients of link i, lowest degree first.
  std::span<const double> coefficients(std::size_t i) const { return poly_[i]; }

  double link(std::size_t i, double s) const {
    const auto& c = poly_[i];
    double acc = 0.0;
    for (std::size_t k = c.size(); k-- > 0;) acc = acc * s + c[k];
    return acc;
  }

  Vector operator()(std::span<const double> y) const {
    Vector out(links());
    for (std::size_t i = 0; i < links(); ++i) out[i] = link(i, y[i]);
    return out;
  }

  /// sum_i integral_0^{y_i} of link i's expected latency.
  double potential(std::span<const double> y) const {
    double total = 0.0;
    for (std::size_t i = 0; i < links(); ++i) {
      const auto& c = poly_[i];
      double acc = 0.0;
      for (std::size_t k = c.size(); k-- > 0;) acc = acc * y[i] + c[k] / static_cast<double>(k + 1);
      total += acc * y[i];
    }
    return total;
  }

  /**
   * Change of potential(y) - shift * sum(y) from `from` to `to`. Each power difference is
   * factored as (b - a) sum_j b^j a^(k-j) so nearby points do not cancel; on a simplex the
   * shift only moves the potential by a constant and absorbs mass rounding.
   */
  double potential_change(std::span<const double> from, std::span<const double> to,
                          double shift = 0.0) const {
    double total = 0.0;
    for (std::size_t i = 0; i < links(); ++i) {
      const double a = from[i], b = to[i];
      if (a == b) continue;
      const auto& c = poly_[i];
      double link_total = 0.0;
      double sum_powers = 0.0;  // sum_{j=0..k} b^j a^(k-j)
      double a_pow = 1.0;       // a^k
      for (std::size_t k = 0; k < c.size(); ++k) {
        sum_powers = k == 0 ? 1.0 : b * sum_powers + a_pow;
        link_total += c[k] * sum_powers / static_cast<double>(k + 1);
        a_pow *= a;
      }
      total += (b - a) * (link_total - shift);
    }
    return total;
  }

private:
  double theta_;
  std::vector<Vector> poly_;
};

struct BestResponse {
  Vector y;
  double theta = 0.0;
  double potential_value = 0.0;
  double vi_margin = 0.0;
  std::size_t iterations = 0;
};

/**
 * Most negative variational-inequality slack of y over the simplex of mass `mass`.
 * The slack is linear in the comparison point, so the simplex vertices suffice.
 */
inline double vi_margin(const ExpectedLatency& el, std::span<const double> y, double mass) {
  const Vector g = el(y);
  double dot = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * y[i];
  const double gmin = *std::min_element(g.begin(), g.end());
  return mass * gmin - dot;
}

/**
 * Bayesian agents' Wardrop response: minimise the potential over the simplex of mass
 * `mass` by projected gradient descent with halving Armijo backtracking. Stops once
 * the VI margin reaches -tol.
 */
inline BestResponse solve_bwe(const ExpectedLatency& el, double mass, const SolverOptions& opts = {},
                              std::optional<Vector> start = std::nullopt) {
  const std::size_t n = el.links();
  constexpr double kArmijo = 1e-4;
  BestResponse out;
  out.theta = el.theta();

  if (mass <= 0.0) {
    out.y.assign(n, 0.0);
    return out;
  }

  Vector y = start ? project_to_simplex(*start, mass)
                   : Vector(n, mass / static_cast<double>(n));
  double step = 1.0;
  double margin = vi_margin(el, y, mass);
  std::size_t iter = 0;
  while (margin < -opts.tol) {
    if (iter >= opts.max_iter)
      throw SolverError("best response did not converge after " + std::to_string(iter) +
                            " iterations (vi margin " + detail::fmt_double(margin) + ")",
                        y, margin);
    const Vector g = el(y);
    // projection ignores a common shift; removing it keeps large steps exact
    const double g_min = *std::min_element(g.begin(), g.end());
    Vector trial(n);
    Vector y_new;
    double change = 0.0;
    while (true) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = y[i] - step * (g[i] - g_min);
      y_new = project_to_simplex(trial, mass);
      double descent = 0.0;
      for (std::size_t i = 0; i < n; ++i) descent += (g[i] - g_min) * (y_new[i] - y[i]);
      change = el.potential_change(y, y_new, g_min);
      if (change <= kArmijo * descent) break;
      step *= 0.5;
      if (step < 1e-18)
        throw SolverError("best response line search stalled (vi margin " +
                              detail::fmt_double(margin) + ")",
                          y, margin);
    }
    y = std::move(y_new);
    step = std::min(step * 2.0, 1e6);
    margin = vi_margin(el, y, mass);
    ++iter;
  }
  out.potential_value = el.potential(y);
  out.y = std::move(y);
  out.vi_margin = margin;
  out.iterations = iter;
  return out;
}

inline ExpectedLatency expected_latency_model(const GameConfig& cfg, double theta) {
  return ExpectedLatency(cfg.latency, cfg.prior, cfg.signal, cfg.disobedience, theta);
}

/// E_w[latency_{w,i}(xhat_i(theta, w) + y_i)] for every link.
inline Vector expected_latency(const GameConfig& cfg, double theta, std::span<const double> y) {
  if (y.size() != cfg.latency.links) throw ConfigError("expected_latency: dimension mismatch");
  return expected_latency_model(cfg, theta)(y);
}

inline double potential(const GameConfig& cfg, double theta, std::span<const double> y) {
  if (y.size() != cfg.latency.links) throw ConfigError("potential: dimension mismatch");
  return expected_latency_model(cfg, theta).potential(y);
}

inline BestResponse solve_bwe(const GameConfig& cfg, double theta,
                              std::optional<Vector> start = std::nullopt) {
  return solve_bwe(expected_latency_model(cfg, theta), cfg.b_mass(), cfg.solver, std::move(start));
}

inline double verify_vi(const GameConfig& cfg, double theta, std::span<const double> y) {
  return vi_margin(expected_latency_model(cfg, theta), y, cfg.b_mass());
}

/**
 * Outcome of testing a signal against both obedience inequality families with the
 * canonical witness y(0). Slack(i, j) is left side minus right side; only i != j
 * enters the worst slacks.
 */
struct ObedienceReport {
  bool obedient = false;
  BestResponse y0;
  double worst_obedience_slack = 0.0;
  double worst_nash_slack = 0.0;
  Matrix obedience_slacks;  // weighted by pi_{w,i}
  Matrix nash_slacks;       // weighted by y_i
  double tol = 0.0;
  std::string witness = "y(0)";
};

inline ObedienceReport check_obedience(const GameConfig& cfg, double tol = 1e-8) {
  const std::size_t n = cfg.latency.links;
  ObedienceReport rep;
  rep.tol = tol;
  rep.y0 = solve_bwe(cfg, 0.0);
  rep.obedience_slacks = Matrix(n, n);
  rep.nash_slacks = Matrix(n, n);
  const Vector& y = rep.y0.y;

  for (std::size_t w = 0; w < cfg.latency.state_count(); ++w) {
    const auto pi = cfg.signal.pi.row(w);
    Vector load(n);
    for (std::size_t i = 0; i < n; ++i) load[i] = pi[i] + y[i];
    const Vector ell = eval_latency(cfg.latency, w, load);
    const double mu = cfg.prior.mu0[w];
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        rep.obedience_slacks(i, j) += mu * pi[i] * (ell[i] - ell[j]);
        rep.nash_slacks(i, j) += mu * y[i] * (ell[i] - ell[j]);
      }
  }

  double worst_o = -std::numeric_limits<double>::infinity();
  double worst_n = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      worst_o = std::max(worst_o, rep.obedience_slacks(i, j));
      worst_n = std::max(worst_n, rep.nash_slacks(i, j));
    }
  rep.worst_obedience_slack = worst_o;
  rep.worst_nash_slack = worst_n;
  rep.obedient = worst_o <= tol && worst_n <= tol;
  return rep;
}

/// Largest l1 change of y(theta) per unit theta between neighbours on a uniform grid.
inline double lipschitz_estimate(const GameConfig& cfg, std::size_t grid_size, double lo = 0.0,
                                 double hi = 1.0) {
  if (grid_size < 2) throw ConfigError("lipschitz_estimate needs grid_size >= 2");
  const double dtheta = (hi - lo) / static_cast<double>(grid_size - 1);
  double best = 0.0;
  Vector prev = solve_bwe(cfg, lo).y;
  for (std::size_t t = 1; t < grid_size; ++t) {
    const double theta = t + 1 == grid_size ? hi : lo + dtheta * static_cast<double>(t);
    Vector cur = solve_bwe(cfg, theta).y;
    double dist = 0.0;
    for (std::size_t i = 0; i < cur.size(); ++i) dist += std::abs(cur[i] - prev[i]);
    best = std::max(best, dist / dtheta);
    prev = std::move(cur);
  }
  return best;
}

}  // namespace routesignal
