#pragma once

// Experiment config files: one experiment per file, `key = value` lines
// grouped under section headers. `#` and `;` start comments.
//
//   [experiment]  name, kind (lss | identity | separable), seed, replications, alpha, dist
//   [model]       n, p, sigma                          (lss, identity)
//   [lss]         functions, centering                 (lss)
//   [identity]    lrt (quasi | l0)                     (identity)
//   [separable]   p1, p2, T, sigma1, rho, lambda       (separable)
//
// Sigma expressions: identity, A, B, C, two_level(1/2, 0.5, 1),
// tridiagonal(2, 1), toeplitz(0.45), kron(<expr>:<dim>, <expr>:<dim>).

#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "spectra/covariance.hpp"
#include "spectra/error.hpp"
#include "spectra/montecarlo.hpp"

namespace spectra {

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// Splits on commas that are not nested inside parentheses.
inline std::vector<std::string> split_top_level(std::string_view s) {
  std::vector<std::string> out;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '(') ++depth;
    if (s[i] == ')') --depth;
    if (s[i] == ',' && depth == 0) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  out.push_back(trim(s.substr(start)));
  return out;
}

inline double parse_double(const std::string& text, const std::string& what) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  if (!text.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || text.empty()) {
    throw ConfigError(what + ": '" + text + "' is not a number");
  }
  return v;
}

inline std::uint64_t parse_uint(const std::string& text, const std::string& what) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ConfigError(what + ": '" + text + "' is not a non-negative integer");
  }
  return v;
}

}  // namespace detail

// Parses a covariance expression for a p x p matrix.
inline CovarianceSpec parse_sigma(const std::string& expr_in, std::size_t p) {
  using detail::parse_double;
  const std::string expr = detail::trim(expr_in);
  if (expr == "identity" || expr == "A") return CovarianceSpec::identity(p);
  if (expr == "B") return CovarianceSpec::two_level(p, 1, 4, 0.5, 1.0);
  if (expr == "C") return CovarianceSpec::two_level(p, 1, 2, 0.5, 1.0);

  const auto open = expr.find('(');
  if (open == std::string::npos || expr.back() != ')') {
    throw ConfigError("sigma: cannot parse '" + expr + "'");
  }
  const std::string head = detail::trim(expr.substr(0, open));
  const auto args = detail::split_top_level(std::string_view(expr).substr(open + 1, expr.size() - open - 2));
  auto want = [&](std::size_t k) {
    if (args.size() != k) {
      throw ConfigError("sigma: " + head + " takes " + std::to_string(k) + " arguments, got " +
                        std::to_string(args.size()));
    }
  };

  if (head == "two_level") {
    want(3);
    const auto slash = args[0].find('/');
    if (slash == std::string::npos) throw ConfigError("sigma: two_level fraction must be written num/den");
    const auto num = detail::parse_uint(detail::trim(args[0].substr(0, slash)), "two_level fraction");
    const auto den = detail::parse_uint(detail::trim(args[0].substr(slash + 1)), "two_level fraction");
    return CovarianceSpec::two_level(p, num, den, parse_double(args[1], "two_level low"),
                                     parse_double(args[2], "two_level high"));
  }
  if (head == "tridiagonal") {
    want(2);
    return CovarianceSpec::tridiagonal(p, parse_double(args[0], "tridiagonal diag"),
                                       parse_double(args[1], "tridiagonal offdiag"));
  }
  if (head == "toeplitz") {
    want(1);
    return CovarianceSpec::toeplitz(p, parse_double(args[0], "toeplitz rho"));
  }
  if (head == "kron") {
    want(2);
    std::vector<CovarianceSpec> factors;
    std::size_t total = 1;
    for (const auto& a : args) {
      const auto colon = a.rfind(':');
      if (colon == std::string::npos) throw ConfigError("sigma: kron factors must be written <expr>:<dim>");
      const auto dim = detail::parse_uint(detail::trim(a.substr(colon + 1)), "kron factor dimension");
      factors.push_back(parse_sigma(a.substr(0, colon), dim));
      total *= dim;
    }
    if (total != p) {
      throw ConfigError("sigma: kron factor dimensions multiply to " + std::to_string(total) +
                        ", expected " + std::to_string(p));
    }
    return CovarianceSpec::kronecker(factors[0], factors[1]);
  }
  throw ConfigError("sigma: unknown form '" + head + "'");
}

inline EntryDistribution parse_distribution(const std::string& name) {
  if (name == "gaussian") return EntryDistribution::gaussian();
  if (name == "gamma42" || name == "shifted_gamma") return EntryDistribution::shifted_gamma();
  throw ConfigError("dist: unknown distribution '" + name + "' (expected gaussian or gamma42)");
}

inline CenteringMode parse_centering(const std::string& name) {
  if (name == "corollary") return CenteringMode::corollary;
  if (name == "contour") return CenteringMode::contour;
  if (name == "q_norm") return CenteringMode::q_norm;
  throw ConfigError("centering: unknown mode '" + name + "' (expected corollary, contour or q_norm)");
}

// Parses config text. `source` names the origin in error messages.
inline ExperimentConfig parse_config_text(const std::string& text, const std::string& source = "<config>") {
  static const std::map<std::string, std::set<std::string>> allowed = {
      {"experiment", {"name", "kind", "seed", "replications", "alpha", "dist"}},
      {"model", {"n", "p", "sigma"}},
      {"lss", {"functions", "centering"}},
      {"identity", {"lrt"}},
      {"separable", {"p1", "p2", "T", "sigma1", "rho", "lambda"}},
  };

  struct Entry {
    std::string value;
    std::size_t line;
  };
  std::map<std::string, Entry> kv;  // "section.key"
  std::set<std::string> seen_sections;
  std::string section;

  std::istringstream in(text);
  std::string raw;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& msg) -> void {
    throw ConfigError(source + ":" + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find_first_of("#;");
    const std::string line = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("malformed section header '" + line + "'");
      section = detail::trim(line.substr(1, line.size() - 2));
      if (!allowed.contains(section)) fail("unknown section [" + section + "]");
      if (!seen_sections.insert(section).second) fail("duplicate section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected 'key = value', got '" + line + "'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (section.empty()) fail("key '" + key + "' appears before any section header");
    if (!allowed.at(section).contains(key)) fail("unknown key '" + key + "' in section [" + section + "]");
    if (value.empty()) fail("key '" + key + "' has an empty value");
    const std::string full = section + "." + key;
    if (kv.contains(full)) {
      fail("duplicate key '" + key + "' in section [" + section + "] (first set on line " +
           std::to_string(kv.at(full).line) + ")");
    }
    kv.emplace(full, Entry{value, lineno});
  }

  auto has = [&](const std::string& k) { return kv.contains(k); };
  auto get = [&](const std::string& k) -> const std::string& {
    if (!has(k)) throw ConfigError(source + ": missing required key '" + k + "'");
    return kv.at(k).value;
  };
  // Errors while interpreting a value carry its line and key.
  auto at = [&](const std::string& k, auto&& fn) {
    try {
      return fn(get(k));
    } catch (const Error& e) {
      if (!has(k)) throw;
      throw ConfigError(source + ":" + std::to_string(kv.at(k).line) + ": key '" + k + "': " + e.what());
    }
  };
  auto as_size = [&](const std::string& k) {
    return at(k, [&](const std::string& v) {
      const auto x = detail::parse_uint(v, k);
      if (x == 0) throw ConfigError("must be positive");
      return static_cast<std::size_t>(x);
    });
  };
  auto as_double = [&](const std::string& k) {
    return at(k, [&](const std::string& v) { return detail::parse_double(v, k); });
  };

  ExperimentConfig cfg;
  const std::string kind = get("experiment.kind");
  if (kind == "lss") {
    cfg.kind = ExperimentKind::lss;
  } else if (kind == "identity") {
    cfg.kind = ExperimentKind::identity;
  } else if (kind == "separable") {
    cfg.kind = ExperimentKind::separable;
  } else {
    throw ConfigError(source + ":" + std::to_string(kv.at("experiment.kind").line) +
                      ": key 'experiment.kind': unknown kind '" + kind + "' (expected lss, identity or separable)");
  }
  if (has("experiment.name")) cfg.name = get("experiment.name");
  cfg.master_seed = at("experiment.seed", [](const std::string& v) { return detail::parse_uint(v, "seed"); });
  if (has("experiment.replications")) cfg.replications = as_size("experiment.replications");
  if (has("experiment.alpha")) {
    cfg.alpha = as_double("experiment.alpha");
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) {
      throw ConfigError(source + ": key 'experiment.alpha': alpha must lie in (0,1)");
    }
  }
  if (has("experiment.dist")) cfg.dist = at("experiment.dist", parse_distribution);

  // Sections that do not belong to the chosen kind are rejected outright.
  auto forbid = [&](const std::string& sec) {
    if (seen_sections.contains(sec)) {
      throw ConfigError(source + ": section [" + sec + "] does not apply to kind '" + kind + "'");
    }
  };

  if (cfg.kind == ExperimentKind::separable) {
    forbid("model");
    forbid("lss");
    forbid("identity");
    cfg.p1 = as_size("separable.p1");
    cfg.p2 = as_size("separable.p2");
    cfg.T = as_size("separable.T");
    if (cfg.T < 2) throw ConfigError(source + ": key 'separable.T': T must be at least 2");
    cfg.sigma1 = has("separable.sigma1")
                     ? at("separable.sigma1", [&](const std::string& v) { return parse_sigma(v, cfg.p1); })
                     : CovarianceSpec::tridiagonal(cfg.p1, 2.0, 1.0);
    cfg.rho = as_double("separable.rho");
    if (!(std::abs(cfg.rho) < 1.0)) throw ConfigError(source + ": key 'separable.rho': |rho| must be < 1");
    cfg.lambda_grid = at("separable.lambda", [](const std::string& v) {
      std::vector<double> grid;
      for (const auto& item : detail::split_top_level(v)) grid.push_back(detail::parse_double(item, "lambda"));
      return grid;
    });
    try {
      validate_lambda_grid(cfg.rho, cfg.lambda_grid);
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(kv.at("separable.lambda").line) +
                        ": key 'separable.lambda': " + e.what());
    }
    return cfg;
  }

  forbid("separable");
  cfg.n = as_size("model.n");
  cfg.p = as_size("model.p");
  cfg.sigma = at("model.sigma", [&](const std::string& v) { return parse_sigma(v, cfg.p); });

  if (cfg.kind == ExperimentKind::lss) {
    forbid("identity");
    if (has("lss.functions")) {
      cfg.functions = at("lss.functions", [](const std::string& v) {
        std::vector<std::string> fs = detail::split_top_level(v);
        for (const auto& f : fs) test_function_by_label(f);
        return fs;
      });
    }
    if (has("lss.centering")) cfg.centering = at("lss.centering", parse_centering);
    return cfg;
  }

  forbid("lss");
  if (has("identity.lrt")) {
    cfg.lrt = at("identity.lrt", [](const std::string& v) {
      if (v == "quasi") return LrtVariant::quasi;
      if (v == "l0") return LrtVariant::l0;
      throw ConfigError("unknown LRT variant '" + v + "' (expected quasi or l0)");
    });
  }
  if (cfg.n < 2) throw ConfigError(source + ": key 'model.n': identity tests need n >= 2");
  if (cfg.lrt == LrtVariant::quasi && cfg.p <= cfg.n) {
    throw ConfigError(source + ": the quasi-LRT needs p > n (got p = " + std::to_string(cfg.p) +
                      ", n = " + std::to_string(cfg.n) + "); set lrt = l0 for p < n");
  }
  if (cfg.lrt == LrtVariant::l0 && cfg.p >= cfg.n) {
    throw ConfigError(source + ": the LRT L0 needs p < n (got p = " + std::to_string(cfg.p) +
                      ", n = " + std::to_string(cfg.n) + ")");
  }
  return cfg;
}

inline ExperimentConfig parse_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_config_text(buf.str(), path);
}

}  // namespace spectra
