#pragma once

// Replicated Monte Carlo experiments: LSS of A_n, the identity tests, and the
// separable covariance test over a grid of alternatives.
//
// Replicate r of an experiment with seed s draws from derive_stream(s, id)
// where id depends only on r (and the grid cell), and results are gathered
// in replicate order, so a summary is bitwise independent of the number of
// worker threads.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "spectra/covariance.hpp"
#include "spectra/error.hpp"
#include "spectra/hypothesis.hpp"
#include "spectra/lss.hpp"
#include "spectra/random.hpp"

namespace spectra {

enum class ExperimentKind { lss, identity, separable };

// Which likelihood-ratio statistic accompanies W in identity experiments.
enum class LrtVariant { quasi, l0 };

inline std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::lss:
      return "lss";
    case ExperimentKind::identity:
      return "identity";
    case ExperimentKind::separable:
      return "separable";
  }
  return "unknown";
}

struct ExperimentConfig {
  std::string name = "experiment";
  ExperimentKind kind = ExperimentKind::lss;

  // lss / identity
  std::size_t n = 0;
  std::size_t p = 0;
  std::optional<CovarianceSpec> sigma;
  LrtVariant lrt = LrtVariant::quasi;

  // separable: null Sigma1 (p1 x p1) and Toeplitz(rho) Sigma2 (p2 x p2); the
  // alternative for grid value lambda replaces rho by rho (1 + lambda).
  std::size_t p1 = 0;
  std::size_t p2 = 0;
  std::size_t T = 0;
  std::optional<CovarianceSpec> sigma1;
  double rho = 0.45;
  std::vector<double> lambda_grid;

  EntryDistribution dist = EntryDistribution::gaussian();
  std::vector<std::string> functions = {"x", "x2", "x3"};
  CenteringMode centering = CenteringMode::corollary;

  std::size_t replications = 2000;
  std::uint64_t master_seed = 42;
  double alpha = 0.05;
};

struct MCCell {
  std::string label;  // function, statistic, or lambda value
  std::optional<double> empirical_mean;
  std::optional<double> empirical_var;
  std::optional<double> empirical_rate;
  std::optional<double> theoretical;
  double mc_stderr = 0.0;
  std::size_t replications = 0;
};

struct MCSummary {
  ExperimentConfig config;
  std::vector<MCCell> cells;
};

struct SampleSummary {
  double mean = 0.0;
  double variance = 0.0;  // divisor R - 1
  double stderr_mean = 0.0;
};

inline SampleSummary summarize(std::span<const double> samples) {
  if (samples.size() < 2) throw DomainError("summarize: need at least two samples");
  const double r = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= r;
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  const double var = ss / (r - 1.0);
  return {mean, var, std::sqrt(var / r)};
}

// Worker count: an explicit request wins; otherwise hardware concurrency,
// capped by SPECTRA_THREADS when set.
inline std::size_t resolve_workers(std::size_t requested = 0) {
  if (requested > 0) return requested;
  std::size_t w = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SPECTRA_THREADS")) {
    char* end = nullptr;
    const unsigned long cap = std::strtoul(env, &end, 10);
    if (end != env && cap > 0) w = std::min<std::size_t>(w, cap);
  }
  return w;
}

// Evaluates fn(r) for r in [0, count) on a pool of workers and returns the
// results indexed by r. The first failure (lowest r) is rethrown with the
// replicate index attached.
template <class Fn>
auto run_replicates(std::size_t count, std::size_t workers, Fn&& fn)
    -> std::vector<decltype(fn(std::size_t{}))> {
  using Result = decltype(fn(std::size_t{}));
  std::vector<Result> results(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t r = next.fetch_add(1); r < count; r = next.fetch_add(1)) {
      try {
        results[r] = fn(r);
      } catch (...) {
        errors[r] = std::current_exception();
      }
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (std::size_t r = 0; r < count; ++r) {
    if (!errors[r]) continue;
    try {
      std::rethrow_exception(errors[r]);
    } catch (const std::exception& e) {
      throw Error("replicate " + std::to_string(r) + ": " + e.what());
    }
  }
  return results;
}

// Named test functions accepted by experiment configs.
inline TestFunction test_function_by_label(const std::string& label) {
  if (label == "x") return TestFunction::monomial(1);
  if (label.size() >= 2 && label[0] == 'x' &&
      std::all_of(label.begin() + 1, label.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    const int k = std::stoi(label.substr(1));
    if (k >= 1 && k <= 12) return TestFunction::monomial(k);
  }
  if (label == "exp") return TestFunction::exponential(1.0);
  if (label == "exp_half") return TestFunction::exponential(0.5);
  throw ConfigError("unknown test function '" + label + "' (expected x, x2 .. x12, exp, exp_half)");
}

// Sigma^{1/2} applied to data, using structure where available.
class CovarianceRoot {
 public:
  explicit CovarianceRoot(const CovarianceSpec& spec) : dim_(spec.dim()) {
    if (std::holds_alternative<cov::Identity>(spec.variant())) {
      kind_ = Kind::identity;
    } else if (spec.is_diagonal()) {
      kind_ = Kind::diagonal;
      diag_ = materialize(spec).diag();
      for (double& d : diag_) d = std::sqrt(d);
    } else if (const auto* k = std::get_if<cov::Kronecker>(&spec.variant())) {
      kind_ = Kind::kronecker;
      left_ = sqrt_psd(materialize(*k->left));
      right_ = sqrt_psd(materialize(*k->right));
    } else {
      kind_ = Kind::dense;
      dense_ = sqrt_psd(materialize(spec)).to_matrix();
    }
  }

  Matrix apply(const Matrix& x) const {
    if (x.rows() != dim_) throw DimensionError("CovarianceRoot: dimension mismatch");
    switch (kind_) {
      case Kind::identity:
        return x;
      case Kind::diagonal: {
        Matrix y = x;
        for (std::size_t j = 0; j < y.cols(); ++j) {
          double* c = y.col(j).data();
          for (std::size_t i = 0; i < dim_; ++i) c[i] *= diag_[i];
        }
        return y;
      }
      case Kind::kronecker: {
        Matrix y(x.rows(), x.cols());
        for (std::size_t j = 0; j < x.cols(); ++j) {
          const std::vector<double> r = kron_apply(left_, right_, x.col(j));
          std::copy(r.begin(), r.end(), y.col(j).begin());
        }
        return y;
      }
      case Kind::dense:
        return multiply(dense_, x);
    }
    return x;
  }

 private:
  enum class Kind { identity, diagonal, kronecker, dense };
  Kind kind_ = Kind::identity;
  std::size_t dim_ = 0;
  std::vector<double> diag_;
  SymMatrix left_, right_;
  Matrix dense_;
};

namespace detail {

// A single replicate still reports its value as the mean; variance needs two.
inline MCCell moment_cell(std::string label, std::span<const double> values,
                          std::optional<double> theoretical) {
  MCCell c;
  c.label = std::move(label);
  c.theoretical = theoretical;
  c.replications = values.size();
  if (values.size() == 1) {
    c.empirical_mean = values[0];
    return c;
  }
  const SampleSummary s = summarize(values);
  c.empirical_mean = s.mean;
  c.empirical_var = s.variance;
  c.mc_stderr = s.stderr_mean;
  return c;
}

inline MCCell rate_cell(std::string label, std::span<const char> rejects,
                        std::optional<double> theoretical) {
  const double r = static_cast<double>(rejects.size());
  double hits = 0.0;
  for (char v : rejects) hits += v ? 1.0 : 0.0;
  const double rate = hits / r;
  MCCell c;
  c.label = std::move(label);
  c.empirical_rate = rate;
  c.theoretical = theoretical;
  c.mc_stderr = std::sqrt(rate * (1.0 - rate) / r);
  c.replications = rejects.size();
  return c;
}

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace detail

// Empirical mean and variance of the standardized LSS for each configured
// function. The theoretical column holds the limiting mean 0.
inline MCSummary run_lss(const ExperimentConfig& cfg, std::size_t workers = 0) {
  detail::require(cfg.kind == ExperimentKind::lss, "run_lss: config kind must be lss");
  detail::require(cfg.sigma.has_value(), "run_lss: sigma is required");
  detail::require(cfg.sigma->dim() == cfg.p, "run_lss: sigma dimension must equal p");
  detail::require(cfg.n >= 1 && cfg.p >= 1, "run_lss: n and p must be positive");
  detail::require(cfg.replications >= 1, "run_lss: replications must be positive");

  const SpectralSummary summary = spectral_summary(*cfg.sigma, cfg.dist);
  const double n = static_cast<double>(cfg.n);
  const double p = static_cast<double>(cfg.p);
  std::vector<TestFunction> fns;
  std::vector<LssCentering> centerings;
  for (const auto& label : cfg.functions) {
    fns.push_back(test_function_by_label(label));
    centerings.push_back(make_centering(fns.back(), summary, n, p, cfg.centering));
  }

  auto per_replicate = [&](std::size_t r) {
    Xoshiro256 rng = derive_stream(cfg.master_seed, r);
    const DataMatrix x = sample_data(cfg.dist, cfg.p, cfg.n, rng);
    const std::vector<double> eigs = sym_eigenvalues(build_An(x, *cfg.sigma, summary));
    std::vector<double> out(fns.size());
    for (std::size_t k = 0; k < fns.size(); ++k) {
      out[k] = apply_centering(fns[k], eigs, centerings[k]).standardized;
    }
    return out;
  };
  const auto results = run_replicates(cfg.replications, resolve_workers(workers), per_replicate);

  MCSummary out{cfg, {}};
  for (std::size_t k = 0; k < fns.size(); ++k) {
    std::vector<double> col(results.size());
    for (std::size_t r = 0; r < results.size(); ++r) col[r] = results[r][k];
    out.cells.push_back(detail::moment_cell(cfg.functions[k], col, 0.0));
  }
  return out;
}

// Size (Sigma = I) or power of the W test, plus the quasi-LRT when p > n or
// the LRT L0 when p < n. Each statistic yields a cell with the empirical
// mean/variance of the standardized statistic and its rejection rate.
inline MCSummary run_identity(const ExperimentConfig& cfg, std::size_t workers = 0) {
  detail::require(cfg.kind == ExperimentKind::identity, "run_identity: config kind must be identity");
  detail::require(cfg.sigma.has_value(), "run_identity: sigma is required");
  detail::require(cfg.sigma->dim() == cfg.p, "run_identity: sigma dimension must equal p");
  detail::require(cfg.n >= 2 && cfg.p >= 2, "run_identity: n and p must be at least 2");
  const bool ultra = cfg.lrt == LrtVariant::quasi;
  if (ultra) {
    detail::require(cfg.p > cfg.n, "run_identity: the quasi-LRT requires p > n");
  } else {
    detail::require(cfg.p < cfg.n, "run_identity: the LRT L0 requires p < n");
  }
  detail::require(cfg.replications >= 1, "run_identity: replications must be positive");

  const SpectralSummary summary = spectral_summary(*cfg.sigma, cfg.dist);
  const CovarianceRoot root(*cfg.sigma);
  const bool is_null = std::holds_alternative<cov::Identity>(cfg.sigma->variant());

  struct Rep {
    double w_std = 0.0;
    char w_rej = 0;
    double l_std = 0.0;
    char l_rej = 0;
  };
  auto per_replicate = [&](std::size_t r) {
    Xoshiro256 rng = derive_stream(cfg.master_seed, r);
    const DataMatrix y = root.apply(sample_data(cfg.dist, cfg.p, cfg.n, rng));
    const TestReport w = identity_test_W(y, cfg.dist.nu4, cfg.alpha);
    const TestReport l = ultra ? quasi_lrt(y, cfg.alpha) : lrt_L0(y, cfg.alpha);
    return Rep{w.standardized, static_cast<char>(w.reject), l.standardized, static_cast<char>(l.reject)};
  };
  const auto reps = run_replicates(cfg.replications, resolve_workers(workers), per_replicate);

  std::vector<double> ws, ls;
  std::vector<char> wr, lr;
  for (const Rep& r : reps) {
    ws.push_back(r.w_std);
    wr.push_back(r.w_rej);
    ls.push_back(r.l_std);
    lr.push_back(r.l_rej);
  }
  const double w_theory = identity_power_W(summary, static_cast<double>(cfg.n), cfg.alpha);
  const std::optional<double> l_theory = is_null ? std::optional<double>(cfg.alpha) : std::nullopt;

  MCSummary out{cfg, {}};
  auto add = [&](std::string label, const std::vector<double>& vals,
                 const std::vector<char>& rej, std::optional<double> theory) {
    MCCell c = detail::rate_cell(label, rej, theory);
    const MCCell m = detail::moment_cell(label, vals, theory);
    c.empirical_mean = m.empirical_mean;
    c.empirical_var = m.empirical_var;
    out.cells.push_back(std::move(c));
  };
  add("W", ws, wr, w_theory);
  add(ultra ? "quasi_lrt" : "lrt_L0", ls, lr, l_theory);
  return out;
}

// Checks |rho (1 + lambda)| < 1 for every grid value.
inline void validate_lambda_grid(double rho, std::span<const double> grid) {
  for (double lambda : grid) {
    if (!(std::abs(rho * (1.0 + lambda)) < 1.0)) {
      throw ConfigError("|rho(1+lambda)| must be < 1 (rho = " + std::to_string(rho) +
                        ", lambda = " + std::to_string(lambda) + ")");
    }
  }
}

// Theoretical power of W* for each lambda in the grid.
inline std::vector<double> separable_power_curve(const ExperimentConfig& cfg) {
  detail::require(cfg.sigma1.has_value(), "separable: sigma1 is required");
  detail::require(cfg.sigma1->dim() == cfg.p1, "separable: sigma1 dimension must equal p1");
  validate_lambda_grid(cfg.rho, cfg.lambda_grid);
  const SeparableSpec null_spec{*cfg.sigma1, CovarianceSpec::toeplitz(cfg.p2, cfg.rho), cfg.T};
  std::vector<double> out;
  for (double lambda : cfg.lambda_grid) {
    out.push_back(separable_power(null_spec, *cfg.sigma1,
                                  CovarianceSpec::toeplitz(cfg.p2, cfg.rho * (1.0 + lambda)),
                                  cfg.dist.nu4, cfg.alpha));
  }
  return out;
}

inline std::string format_lambda(double lambda) {
  std::string s = std::to_string(lambda);
  s.erase(s.find_last_not_of('0') + 1);
  if (!s.empty() && s.back() == '.') s.pop_back();
  return "lambda=" + s;
}

// Empirical rejection rate of W* against Sigma1 kron Toeplitz(rho) when the
// data have covariance Sigma1 kron Toeplitz(rho (1 + lambda)), one cell per
// lambda, paired with the theoretical power.
inline MCSummary run_separable(const ExperimentConfig& cfg, std::size_t workers = 0) {
  detail::require(cfg.kind == ExperimentKind::separable, "run_separable: config kind must be separable");
  detail::require(cfg.p1 >= 1 && cfg.p2 >= 1 && cfg.T >= 2, "run_separable: p1, p2 >= 1 and T >= 2 required");
  detail::require(!cfg.lambda_grid.empty(), "run_separable: lambda grid is empty");
  detail::require(cfg.replications >= 1, "run_separable: replications must be positive");
  const std::vector<double> theory = separable_power_curve(cfg);

  const SeparableSpec null_spec{*cfg.sigma1, CovarianceSpec::toeplitz(cfg.p2, cfg.rho), cfg.T};
  const SeparableWhitener whitener = SeparableWhitener::from(null_spec);
  const SymMatrix gen1 = sqrt_psd(materialize(*cfg.sigma1));
  const std::size_t R = cfg.replications;
  const std::size_t dim = cfg.p1 * cfg.p2;

  MCSummary out{cfg, {}};
  for (std::size_t li = 0; li < cfg.lambda_grid.size(); ++li) {
    const double lambda = cfg.lambda_grid[li];
    const SymMatrix gen2 =
        sqrt_psd(materialize(CovarianceSpec::toeplitz(cfg.p2, cfg.rho * (1.0 + lambda))));
    auto per_replicate = [&](std::size_t r) -> char {
      Xoshiro256 rng = derive_stream(cfg.master_seed, li * R + r);
      Matrix obs(dim, cfg.T);
      std::vector<double> z(dim);
      // vec(E_t) = (S~1 kron S~2)^{1/2} vec(Z_t)
      for (std::size_t t = 0; t < cfg.T; ++t) {
        fill_entries(cfg.dist, z, rng);
        const std::vector<double> e = kron_apply(gen1, gen2, z);
        std::copy(e.begin(), e.end(), obs.col(t).begin());
      }
      return static_cast<char>(separable_test(obs, whitener, cfg.dist.nu4, cfg.alpha).reject);
    };
    const auto rejects = run_replicates(R, resolve_workers(workers), per_replicate);
    out.cells.push_back(detail::rate_cell(format_lambda(lambda), rejects, theory[li]));
  }
  return out;
}

// Theoretical power only, no simulation: one cell per lambda for separable
// configs, a single W cell for identity configs.
inline MCSummary theoretical_power(const ExperimentConfig& cfg) {
  MCSummary out{cfg, {}};
  if (cfg.kind == ExperimentKind::separable) {
    const std::vector<double> theory = separable_power_curve(cfg);
    for (std::size_t i = 0; i < theory.size(); ++i) {
      MCCell c;
      c.label = format_lambda(cfg.lambda_grid[i]);
      c.theoretical = theory[i];
      out.cells.push_back(std::move(c));
    }
    return out;
  }
  if (cfg.kind == ExperimentKind::identity) {
    detail::require(cfg.sigma.has_value(), "theoretical_power: sigma is required");
    MCCell c;
    c.label = "W";
    c.theoretical = identity_power_W(spectral_summary(*cfg.sigma, cfg.dist), static_cast<double>(cfg.n), cfg.alpha);
    out.cells.push_back(std::move(c));
    return out;
  }
  throw ConfigError("power curves are defined for identity and separable experiments, not lss");
}

inline MCSummary run_experiment(const ExperimentConfig& cfg, std::size_t workers = 0) {
  switch (cfg.kind) {
    case ExperimentKind::lss:
      return run_lss(cfg, workers);
    case ExperimentKind::identity:
      return run_identity(cfg, workers);
    case ExperimentKind::separable:
      return run_separable(cfg, workers);
  }
  throw ConfigError("unknown experiment kind");
}

}  // namespace spectra
