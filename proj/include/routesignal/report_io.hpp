#pragma once

#include <cstdio>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "routesignal/dynamics.hpp"
#include "routesignal/equilibrium.hpp"
#include "routesignal/estimators.hpp"

namespace routesignal {

namespace detail {

inline std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Column names of the trajectory CSV for n links.
inline std::vector<std::string> trajectory_columns(std::size_t n, bool with_envelope = false) {
  std::vector<std::string> cols = {"k", "omega", "theta", "theta_hat", "e_theta", "u", "m"};
  for (const char* prefix : {"x_", "xhat_", "y_", "ell_"})
    for (std::size_t i = 1; i <= n; ++i) cols.push_back(prefix + std::to_string(i));
  cols.emplace_back("flow_gap");
  if (with_envelope) {
    cols.emplace_back("e_lower");
    cols.emplace_back("e_upper");
  }
  return cols;
}

/**
 * One row per round. `m` is the regret at the start of the round, the one that
 * produced `theta`. Floats use 17 significant digits; omega is the state label.
 */
inline void write_trajectory_csv(std::ostream& out, const LatencyModel& model,
                                 std::span<const TrajectoryRecord> trajectory,
                                 std::span<const Envelope> envelope = {}) {
  const std::size_t n = model.links;
  const bool with_env = !envelope.empty();
  const auto cols = trajectory_columns(n, with_env);
  for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
  out << '\n';
  for (std::size_t r = 0; r < trajectory.size(); ++r) {
    const auto& rec = trajectory[r];
    out << rec.k << ',' << model.states[rec.omega] << ',' << detail::g17(rec.theta) << ','
        << detail::g17(rec.theta_hat) << ',' << detail::g17(rec.e_theta) << ','
        << detail::g17(rec.u) << ',' << detail::g17(rec.m);
    for (const Vector* v : {&rec.x, &rec.x_hat, &rec.y, &rec.ell})
      for (double val : *v) out << ',' << detail::g17(val);
    out << ',' << detail::g17(rec.flow_gap);
    if (with_env) out << ',' << detail::g17(envelope[r].lower) << ',' << detail::g17(envelope[r].upper);
    out << '\n';
  }
}

inline nlohmann::json to_json(const BestResponse& br) {
  return {{"y", br.y},
          {"theta", br.theta},
          {"potential_value", br.potential_value},
          {"vi_margin", br.vi_margin},
          {"iterations", br.iterations}};
}

inline nlohmann::json to_json(const ObedienceReport& rep) {
  auto rows = [](const Matrix& m) {
    nlohmann::json out = nlohmann::json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) out.push_back(Vector(m.row(r).begin(), m.row(r).end()));
    return out;
  };
  return {{"obedient", rep.obedient},
          {"witness", rep.witness},
          {"tol", rep.tol},
          {"y0", to_json(rep.y0)},
          {"worst_obedience_slack", rep.worst_obedience_slack},
          {"worst_nash_slack", rep.worst_nash_slack},
          {"per_pair_slacks", {{"obedience", rows(rep.obedience_slacks)}, {"nash", rows(rep.nash_slacks)}}}};
}

}  // namespace routesignal
