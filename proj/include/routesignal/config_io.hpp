#pragma once

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "routesignal/game_config.hpp"
#include "routesignal/model.hpp"

namespace routesignal {

using json = nlohmann::json;

namespace detail {

template <typename T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

inline Vector parse_vector(const json& j, const std::string& key) {
  if (!j.is_array()) throw ConfigError("config key '" + key + "' must be an array of numbers");
  return get_as<Vector>(j, key);
}

inline std::vector<Vector> parse_rows(const json& j, const std::string& key) {
  if (!j.is_array()) throw ConfigError("config key '" + key + "' must be a nested array");
  return get_as<std::vector<Vector>>(j, key);
}

inline json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r)
    rows.push_back(Vector(m.row(r).begin(), m.row(r).end()));
  return rows;
}

/// Parses "baseline", "dynamic_nu"/"dynamic-nu", "discounted=<lambda>" or an object form.
inline Scenario parse_scenario(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "baseline") return Scenario::baseline();
    if (s == "dynamic_nu" || s == "dynamic-nu") return Scenario::dynamic_nu();
    if (s.rfind("discounted=", 0) == 0) {
      try {
        return Scenario::discounted(std::stod(s.substr(11)));
      } catch (const std::logic_error&) {
        throw ConfigError("bad discount factor in scenario '" + s + "'");
      }
    }
    throw ConfigError("unknown scenario '" + s + "'");
  }
  if (!j.is_object() || !j.contains("kind")) throw ConfigError("scenario needs a 'kind'");
  const auto kind = get_as<std::string>(j.at("kind"), "scenario.kind");
  if (kind == "discounted") {
    if (!j.contains("lambda")) throw ConfigError("discounted scenario needs 'lambda'");
    return Scenario::discounted(get_as<double>(j.at("lambda"), "scenario.lambda"));
  }
  return parse_scenario(json(kind));
}

/// Parses "smoothing", "luenberger", "luenberger=<L>" or an object form.
inline EstimatorSpec parse_estimator(const json& j, std::size_t links) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "smoothing") return EstimatorSpec::smoothing();
    if (s == "luenberger") return EstimatorSpec::luenberger();
    if (s.rfind("luenberger=", 0) == 0) {
      try {
        return EstimatorSpec::luenberger(Vector(links, std::stod(s.substr(11))));
      } catch (const std::logic_error&) {
        throw ConfigError("bad gain in estimator '" + s + "'");
      }
    }
    throw ConfigError("unknown estimator '" + s + "'");
  }
  if (!j.is_object() || !j.contains("kind")) throw ConfigError("estimator needs a 'kind'");
  const auto kind = get_as<std::string>(j.at("kind"), "estimator.kind");
  if (kind == "smoothing") return EstimatorSpec::smoothing();
  if (kind != "luenberger") throw ConfigError("unknown estimator '" + kind + "'");
  if (!j.contains("gain")) return EstimatorSpec::luenberger();
  const json& g = j.at("gain");
  if (g.is_number()) return EstimatorSpec::luenberger(Vector(links, g.get<double>()));
  return EstimatorSpec::luenberger(parse_vector(g, "estimator.gain"));
}

inline void reject_unknown(const json& j, const std::set<std::string>& allowed,
                           const std::string& where) {
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

}  // namespace detail

/**
 * Build and validate a GameConfig from its JSON form, applying defaults:
 * m_max = m_max_default, P = swap/uniform, solver tol 1e-8, 5000 rounds,
 * constant beta 0.5 in [0.3, 0.7].
 */
inline GameConfig config_from_json(const json& j) {
  using detail::get_as;
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  detail::reject_unknown(j,
                         {"states", "latency", "prior", "signal", "disobedience", "m_max",
                          "m_max_override", "m_init", "theta_init", "theta_hat_init", "beta",
                          "scenario", "estimator", "solver", "rounds", "seed"},
                         "config");
  for (const char* key : {"states", "latency", "prior", "signal"})
    if (!j.contains(key)) throw ConfigError(std::string("config is missing '") + key + "'");

  GameConfig cfg;
  const auto states = get_as<std::vector<std::string>>(j.at("states"), "states");
  for (const auto& s : states)
    if (s.empty() || s.find_first_of(",\"\n\r") != std::string::npos)
      throw ConfigError("state label '" + s + "' must be nonempty without commas or quotes");

  const json& lat = j.at("latency");
  if (!lat.is_object() || !lat.contains("coefficients"))
    throw ConfigError("latency needs 'coefficients' indexed [degree][state][link]");
  detail::reject_unknown(lat, {"coefficients", "require_strict"}, "latency");
  const auto tensor =
      get_as<std::vector<std::vector<Vector>>>(lat.at("coefficients"), "latency.coefficients");
  cfg.latency = LatencyModel::from_tensor(states, tensor);
  cfg.require_strict = lat.value("require_strict", true);
  cfg.latency.validate(cfg.require_strict);
  const std::size_t n = cfg.latency.links;

  cfg.prior.mu0 = detail::parse_vector(j.at("prior"), "prior");

  const json& sig = j.at("signal");
  if (!sig.is_object() || !sig.contains("nu") || !sig.contains("pi"))
    throw ConfigError("signal needs 'nu' and 'pi'");
  detail::reject_unknown(sig, {"nu", "pi"}, "signal");
  cfg.signal.nu = get_as<double>(sig.at("nu"), "signal.nu");
  cfg.signal.pi = Matrix::from_rows(detail::parse_rows(sig.at("pi"), "signal.pi"));

  cfg.disobedience = j.contains("disobedience")
                         ? DisobedienceMatrix{Matrix::from_rows(
                               detail::parse_rows(j.at("disobedience"), "disobedience"))}
                         : DisobedienceMatrix::uniform(n);

  cfg.m_max = j.contains("m_max") ? get_as<double>(j.at("m_max"), "m_max")
                                  : m_max_default(cfg.latency);
  cfg.m_max_override = j.value("m_max_override", false);
  if (j.contains("m_init") && j.contains("theta_init"))
    throw ConfigError("give either 'm_init' or 'theta_init', not both");
  if (j.contains("theta_init")) {
    const double t = get_as<double>(j.at("theta_init"), "theta_init");
    if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("theta_init must lie in [0,1]");
    cfg.m_init = t * cfg.m_max;
  } else {
    cfg.m_init = j.contains("m_init") ? get_as<double>(j.at("m_init"), "m_init") : 0.0;
  }
  cfg.theta_hat_init =
      j.contains("theta_hat_init") ? get_as<double>(j.at("theta_hat_init"), "theta_hat_init") : 0.0;

  if (j.contains("beta")) {
    const json& b = j.at("beta");
    detail::reject_unknown(b, {"min", "max", "value", "sequence"}, "beta");
    const double lo = b.contains("min") ? get_as<double>(b.at("min"), "beta.min") : 0.3;
    const double hi = b.contains("max") ? get_as<double>(b.at("max"), "beta.max") : 0.7;
    if (b.contains("sequence"))
      cfg.beta = BetaSchedule::custom(detail::parse_vector(b.at("sequence"), "beta.sequence"), lo, hi);
    else
      cfg.beta = BetaSchedule::constant_beta(
          b.contains("value") ? get_as<double>(b.at("value"), "beta.value") : 0.5, lo, hi);
  }

  if (j.contains("scenario")) cfg.scenario = detail::parse_scenario(j.at("scenario"));
  if (j.contains("estimator")) cfg.estimator = detail::parse_estimator(j.at("estimator"), n);
  if (j.contains("solver")) {
    const json& s = j.at("solver");
    detail::reject_unknown(s, {"tol", "max_iter"}, "solver");
    if (s.contains("tol")) cfg.solver.tol = get_as<double>(s.at("tol"), "solver.tol");
    if (s.contains("max_iter"))
      cfg.solver.max_iter = get_as<std::size_t>(s.at("max_iter"), "solver.max_iter");
  }
  if (j.contains("rounds")) cfg.rounds = get_as<std::size_t>(j.at("rounds"), "rounds");
  if (j.contains("seed")) cfg.seed = get_as<std::uint64_t>(j.at("seed"), "seed");

  cfg.validate();
  return cfg;
}

/// Parse a config from text; parse errors carry line and column.
inline GameConfig parse_config(const std::string& text, const std::string& origin = "<config>") {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  try {
    return config_from_json(j);
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
}

inline GameConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

/// Fully resolved config, every default made explicit.
inline json config_to_json(const GameConfig& cfg) {
  json j;
  j["states"] = cfg.latency.states;
  std::vector<std::vector<Vector>> tensor(cfg.latency.degree + 1);
  for (std::size_t d = 0; d <= cfg.latency.degree; ++d)
    for (std::size_t w = 0; w < cfg.latency.state_count(); ++w) {
      Vector row(cfg.latency.links);
      for (std::size_t i = 0; i < cfg.latency.links; ++i) row[i] = cfg.latency.coeff(d, w, i);
      tensor[d].push_back(std::move(row));
    }
  j["latency"] = {{"coefficients", tensor}, {"require_strict", cfg.require_strict}};
  j["prior"] = cfg.prior.mu0;
  j["signal"] = {{"nu", cfg.signal.nu}, {"pi", detail::matrix_to_json(cfg.signal.pi)}};
  j["disobedience"] = detail::matrix_to_json(cfg.disobedience.p);
  j["m_max"] = cfg.m_max;
  j["m_max_override"] = cfg.m_max_override;
  j["m_init"] = cfg.m_init;
  j["theta_hat_init"] = cfg.theta_hat_init;
  json beta = {{"min", cfg.beta.beta_min}, {"max", cfg.beta.beta_max}};
  if (cfg.beta.is_constant())
    beta["value"] = cfg.beta.constant;
  else
    beta["sequence"] = *cfg.beta.sequence;
  j["beta"] = beta;
  json scenario = {{"kind", cfg.scenario.name()}};
  if (cfg.scenario.kind == Scenario::Kind::discounted) scenario["lambda"] = cfg.scenario.lambda;
  j["scenario"] = scenario;
  if (cfg.estimator.kind == EstimatorSpec::Kind::luenberger) {
    Vector gain = cfg.estimator.gain.empty() ? Vector(cfg.latency.links, 0.0) : cfg.estimator.gain;
    j["estimator"] = {{"kind", "luenberger"}, {"gain", gain}};
  } else {
    j["estimator"] = {{"kind", "smoothing"}};
  }
  j["solver"] = {{"tol", cfg.solver.tol}, {"max_iter", cfg.solver.max_iter}};
  j["rounds"] = cfg.rounds;
  j["seed"] = cfg.seed;
  return j;
}

/// Compact, key-sorted serialisation; the digest is taken over these bytes.
inline std::string canonical_config_text(const GameConfig& cfg) { return config_to_json(cfg).dump(); }

inline std::string sha256_hex(const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 digest failed");
  std::string hex;
  hex.reserve(2 * len);
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

inline std::string config_digest(const GameConfig& cfg) {
  return sha256_hex(canonical_config_text(cfg));
}

}  // namespace routesignal
