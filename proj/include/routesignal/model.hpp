#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <sstream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace routesignal {

/// Raised for any invalid or inconsistent input configuration.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

using Vector = std::vector<double>;

/// Tolerance on simplex membership for validated inputs.
inline constexpr double kInputSimplexTol = 1e-12;
/// Tolerance on simplex membership for computed outputs.
inline constexpr double kOutputSimplexTol = 1e-10;

/// Dense row-major matrix. Only desk-scale sizes are expected.
class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(const std::vector<Vector>& rows) {
    if (rows.empty()) return {};
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != m.cols_) throw ConfigError("ragged matrix rows");
      std::copy(rows[r].begin(), rows[r].end(), m.data_.begin() + r * m.cols_);
    }
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  bool operator==(const Matrix&) const = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

namespace detail {

inline double sum(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

inline std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

inline bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace detail

/**
 * Per-state polynomial link latencies
 *
 *   latency(state w, link i, flow f) = sum_{d=0..D} coeff(d, w, i) * f^d
 *
 * Coefficients are stored dense as a (D+1) x s x n tensor.
 */
struct LatencyModel {
  std::size_t links = 0;
  std::vector<std::string> states;
  std::size_t degree = 0;
  std::vector<double> coeffs;  // index ((d * s) + w) * n + i

  /// Build from nested arrays indexed [d][state][link].
  static LatencyModel from_tensor(std::vector<std::string> states,
                                  const std::vector<std::vector<Vector>>& tensor) {
    LatencyModel m;
    if (tensor.empty()) throw ConfigError("latency tensor must have at least one degree");
    m.states = std::move(states);
    m.degree = tensor.size() - 1;
    if (tensor.front().size() != m.states.size())
      throw ConfigError("latency tensor has " + std::to_string(tensor.front().size()) +
                        " state rows, expected " + std::to_string(m.states.size()));
    m.links = tensor.front().empty() ? 0 : tensor.front().front().size();
    m.coeffs.reserve(tensor.size() * m.states.size() * m.links);
    for (std::size_t d = 0; d < tensor.size(); ++d) {
      if (tensor[d].size() != m.states.size())
        throw ConfigError("latency tensor degree " + std::to_string(d) + " has wrong state count");
      for (const auto& row : tensor[d]) {
        if (row.size() != m.links)
          throw ConfigError("latency tensor degree " + std::to_string(d) + " has wrong link count");
        m.coeffs.insert(m.coeffs.end(), row.begin(), row.end());
      }
    }
    return m;
  }

  std::size_t state_count() const { return states.size(); }

  double coeff(std::size_t d, std::size_t w, std::size_t i) const {
    return coeffs[(d * states.size() + w) * links + i];
  }

  /// True if every (state, link) latency has a positive coefficient of degree >= 1.
  bool strictly_increasing() const {
    for (std::size_t w = 0; w < state_count(); ++w)
      for (std::size_t i = 0; i < links; ++i) {
        bool any = false;
        for (std::size_t d = 1; d <= degree; ++d) any = any || coeff(d, w, i) > 0.0;
        if (!any) return false;
      }
    return true;
  }

  void validate(bool require_strict = false) const {
    if (links < 2) throw ConfigError("latency model needs at least 2 links");
    if (states.empty()) throw ConfigError("latency model needs at least 1 state");
    if (coeffs.size() != (degree + 1) * states.size() * links)
      throw ConfigError("latency coefficient tensor has wrong size");
    if (!detail::all_finite(coeffs)) throw ConfigError("latency coefficients must be finite");
    for (std::size_t w = 0; w < state_count(); ++w)
      for (std::size_t i = 0; i < links; ++i)
        for (std::size_t d = 0; d <= std::min<std::size_t>(degree, 1); ++d)
          if (coeff(d, w, i) < 0.0)
            throw ConfigError("latency coefficient alpha[" + std::to_string(d) + "][" + states[w] +
                              "][" + std::to_string(i + 1) + "] = " +
                              detail::fmt_double(coeff(d, w, i)) + " must be nonnegative");
    if (require_strict && !strictly_increasing())
      throw ConfigError("latency model is not strictly increasing on every link and state");
  }
};

struct Prior {
  Vector mu0;

  void validate(std::size_t states) const {
    if (mu0.size() != states)
      throw ConfigError("prior has " + std::to_string(mu0.size()) + " entries, expected " +
                        std::to_string(states));
    for (double p : mu0)
      if (!(p > 0.0)) throw ConfigError("prior entries must be strictly positive");
    if (std::abs(detail::sum(mu0) - 1.0) > kInputSimplexTol)
      throw ConfigError("prior sums to " + detail::fmt_double(detail::sum(mu0)) + ", expected 1");
  }
};

/// Route recommendations: row w is the recommended flow split in state w, of mass nu.
struct Signal {
  Matrix pi;
  double nu = 0.0;

  void validate(const LatencyModel& model) const {
    if (!(nu >= 0.0 && nu <= 1.0)) throw ConfigError("participation nu must lie in [0,1]");
    if (pi.rows() != model.state_count() || pi.cols() != model.links)
      throw ConfigError("signal must be " + std::to_string(model.state_count()) + " x " +
                        std::to_string(model.links));
    for (std::size_t w = 0; w < pi.rows(); ++w) {
      auto row = pi.row(w);
      for (double v : row)
        if (!(v >= 0.0) || !std::isfinite(v))
          throw ConfigError("signal row " + model.states[w] + " has a negative entry");
      double s = detail::sum(row);
      if (std::abs(s - nu) > kInputSimplexTol)
        throw ConfigError("signal row " + model.states[w] + " sums to " + detail::fmt_double(s) +
                          ", expected nu=" + detail::fmt_double(nu));
    }
  }

  /// Same recommendation pattern rescaled to participation mass `new_nu`.
  Signal rescaled(double new_nu) const {
    if (nu <= 0.0) throw ConfigError("cannot rescale a signal of zero mass");
    Signal out{pi, new_nu};
    const double factor = new_nu / nu;
    for (std::size_t w = 0; w < pi.rows(); ++w)
      for (auto& v : out.pi.row(w)) v *= factor;
    return out;
  }
};

/// Row-stochastic, zero-diagonal routing of disobeying participants.
struct DisobedienceMatrix {
  Matrix p;

  /// Swap matrix for two links, uniform off-diagonal otherwise.
  static DisobedienceMatrix uniform(std::size_t n) {
    DisobedienceMatrix out{Matrix(n, n)};
    if (n < 2) return out;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        out.p(i, j) = i == j ? 0.0 : 1.0 / static_cast<double>(n - 1);
    return out;
  }

  void validate(std::size_t n) const {
    if (p.rows() != n || p.cols() != n)
      throw ConfigError("disobedience matrix must be " + std::to_string(n) + " x " +
                        std::to_string(n));
    for (std::size_t i = 0; i < n; ++i) {
      if (p(i, i) != 0.0) throw ConfigError("disobedience matrix must have a zero diagonal");
      for (double v : p.row(i))
        if (!(v >= 0.0)) throw ConfigError("disobedience matrix entries must be nonnegative");
      double s = detail::sum(p.row(i));
      if (std::abs(s - 1.0) > kInputSimplexTol)
        throw ConfigError("disobedience row " + std::to_string(i + 1) + " sums to " +
                          detail::fmt_double(s) + ", expected 1");
    }
  }
};

/// Latency vector in state `omega` at link flows `f`.
inline Vector eval_latency(const LatencyModel& model, std::size_t omega,
                           std::span<const double> f) {
  if (f.size() != model.links || omega >= model.state_count())
    throw ConfigError("eval_latency: dimension mismatch");
  Vector out(model.links, 0.0);
  for (std::size_t i = 0; i < model.links; ++i) {
    // Horner
    double acc = 0.0;
    for (std::size_t d = model.degree + 1; d-- > 0;) acc = acc * f[i] + model.coeff(d, omega, i);
    out[i] = acc;
  }
  return out;
}

/// Upper bound on positive regret: sum over links and degrees of the largest coefficient.
inline double m_max_default(const LatencyModel& model) {
  double total = 0.0;
  for (std::size_t i = 0; i < model.links; ++i)
    for (std::size_t d = 0; d <= model.degree; ++d) {
      double best = model.coeff(d, 0, i);
      for (std::size_t w = 1; w < model.state_count(); ++w) best = std::max(best, model.coeff(d, w, i));
      total += best;
    }
  return total;
}

/**
 * Participant link flows when a fraction `theta` disobeys in state `omega`:
 * (1 - theta) * pi_w + theta * P^T pi_w, which equals pi_w + theta (P^T - I) pi_w.
 * The rows of `signal.pi` already carry the participation mass.
 */
inline Vector p_flows(const Signal& signal, const DisobedienceMatrix& dis, double theta,
                      std::size_t omega) {
  const auto pi = signal.pi.row(omega);
  const std::size_t n = pi.size();
  Vector x(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double moved_in = 0.0;
    for (std::size_t j = 0; j < n; ++j) moved_in += dis.p(j, i) * pi[j];
    x[i] = (1.0 - theta) * pi[i] + theta * moved_in;
  }
  return x;
}

/// Bayesian agents' forecast of participant flows; same map as p_flows at the forecast.
inline Vector forecast_flows(const Signal& signal, const DisobedienceMatrix& dis, double theta_hat,
                             std::size_t omega) {
  return p_flows(signal, dis, theta_hat, omega);
}

}  // namespace routesignal
