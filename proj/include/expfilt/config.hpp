#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "expfilt/error.hpp"
#include "expfilt/models.hpp"
#include "expfilt/time_grid.hpp"

namespace expfilt {

/// Parsed model/grid configuration. File format is key = value lines,
/// optional [section] headers (cosmetic), '#' comments. Key names are
/// fixed; unknown keys are rejected.
struct ModelConfig {
  double a = 0.0, b = 0.0, c = 0.0, sigma = 0.0;
  double epsilon = 0.0;
  std::vector<double> g_coeffs{0.0};
  double x0_mean = 0.0, x0_var = 0.0;
  double t0 = 0.0, dt = 0.0;
  std::size_t n_steps = 0;

  TimeGrid grid() const { return TimeGrid(t0, dt, n_steps); }

  PerturbedLinearModel perturbed(int degree_cap = PolySpec::kDefaultDegreeCap) const {
    return PerturbedLinearModel(a, b, c, sigma, epsilon,
                                PolySpec(g_coeffs, degree_cap));
  }

  LinearGaussianModel linear(const TimeGrid& g) const {
    return LinearGaussianModel::scalar(a, b, c, sigma, x0_mean, x0_var, g);
  }

  /// Canonical key=value dump (stable order), used for config hashing.
  std::string canonical() const {
    std::ostringstream os;
    os.precision(17);
    os << "a=" << a << "\nb=" << b << "\nc=" << c << "\nsigma=" << sigma
       << "\nepsilon=" << epsilon << "\ng_coeffs=";
    for (std::size_t i = 0; i < g_coeffs.size(); ++i)
      os << (i ? "," : "") << g_coeffs[i];
    os << "\nx0_mean=" << x0_mean << "\nx0_var=" << x0_var << "\nt0=" << t0
       << "\ndt=" << dt << "\nn_steps=" << n_steps << "\n";
    return os.str();
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  auto e = s.find_last_not_of(" \t\r\n");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

inline double parse_num(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: cannot parse value for key '" + key + "': " + v);
  }
}

}  // namespace detail

/// Parses raw key/value pairs from config text; rejects unknown keys,
/// duplicate keys and malformed lines.
inline std::map<std::string, std::string> parse_config_text(
    const std::string& text) {
  static const std::set<std::string> kKnown = {
      "a",  "b",  "c",       "sigma",  "epsilon", "g_coeffs",
      "x0_mean", "x0_var", "t0", "dt", "n_steps"};
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') continue;  // section
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: malformed line " + std::to_string(lineno) +
                        " (expected key = value)");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    if (!kKnown.count(key))
      throw ConfigError("config: unknown key '" + key + "'");
    if (kv.count(key))
      throw ConfigError("config: duplicate key '" + key + "'");
    kv[key] = val;
  }
  return kv;
}

/// Loads and validates a full model configuration. Every key is
/// required except epsilon and g_coeffs, which default to a switched-off
/// perturbation; a missing key is reported by name.
inline ModelConfig load_config_text(const std::string& text) {
  auto kv = parse_config_text(text);
  auto need = [&](const char* key) -> std::string {
    auto it = kv.find(key);
    if (it == kv.end())
      throw ConfigError(std::string("config: missing required key '") + key +
                        "'");
    return it->second;
  };
  ModelConfig cfg;
  cfg.a = detail::parse_num("a", need("a"));
  cfg.b = detail::parse_num("b", need("b"));
  cfg.c = detail::parse_num("c", need("c"));
  cfg.sigma = detail::parse_num("sigma", need("sigma"));
  cfg.x0_mean = detail::parse_num("x0_mean", need("x0_mean"));
  cfg.x0_var = detail::parse_num("x0_var", need("x0_var"));
  cfg.t0 = detail::parse_num("t0", need("t0"));
  cfg.dt = detail::parse_num("dt", need("dt"));
  const double n = detail::parse_num("n_steps", need("n_steps"));
  if (n < 1 || n != std::floor(n))
    throw ConfigError("config: n_steps must be a positive integer");
  cfg.n_steps = static_cast<std::size_t>(n);
  if (kv.count("epsilon"))
    cfg.epsilon = detail::parse_num("epsilon", kv["epsilon"]);
  if (kv.count("g_coeffs")) {
    cfg.g_coeffs.clear();
    std::istringstream gs(kv["g_coeffs"]);
    std::string item;
    while (std::getline(gs, item, ','))
      cfg.g_coeffs.push_back(detail::parse_num("g_coeffs", detail::trim(item)));
    if (cfg.g_coeffs.empty())
      throw ConfigError("config: g_coeffs must list at least one coefficient");
  }
  return cfg;
}

inline ModelConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_config_text(ss.str());
}

}  // namespace expfilt
