// Sweep the participation rate for the two-link affine network, check whether the
// state-revealing signal is obedient, and report where short simulations end up.

#include <cstdio>

#include "routesignal/dynamics.hpp"
#include "routesignal/equilibrium.hpp"

using namespace routesignal;

int main() {
  GameConfig cfg;
  cfg.latency = LatencyModel::from_tensor({"w1", "w2"}, {{{5, 25}, {20, 15}}, {{4, 2}, {1, 2}}});
  cfg.prior.mu0 = {0.6, 0.4};
  cfg.disobedience = DisobedienceMatrix::uniform(2);
  cfg.m_max = m_max_default(cfg.latency);
  cfg.m_init = 0.5 * cfg.m_max;
  cfg.theta_hat_init = 0.25;
  cfg.rounds = 2000;

  std::printf("%5s %9s %12s %12s %9s %9s\n", "nu", "obedient", "obey_slack", "nash_slack", "theta_K",
              "gap_K");
  for (int step = 1; step <= 10; ++step) {
    const double nu = 0.1 * step;
    cfg.signal = Signal{Matrix::from_rows({{nu, 0.0}, {0.0, nu}}), nu};
    cfg.validate();
    const ObedienceReport rep = check_obedience(cfg);
    const auto traj = simulate(cfg);
    std::printf("%5.2f %9s %12.4g %12.4g %9.4f %9.4f\n", nu, rep.obedient ? "yes" : "no",
                rep.worst_obedience_slack, rep.worst_nash_slack, traj.back().theta, traj.back().flow_gap);
  }
}
