#pragma once

// Population covariance models, their normalized trace summaries, entry
// distributions, and the observable matrices built from sampled data.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "spectra/error.hpp"
#include "spectra/linalg.hpp"
#include "spectra/random.hpp"

namespace spectra {

class CovarianceSpec;

namespace cov {

struct Identity {
  std::size_t p;
};

// diag(low, ..., low, high, ..., high) with the first fraction * p entries low.
struct TwoLevelDiagonal {
  std::size_t p;
  std::size_t fraction_num;
  std::size_t fraction_den;
  double low;
  double high;
};

struct Tridiagonal {
  std::size_t p;
  double diag;
  double offdiag;
};

// (rho^{|i-j|})
struct ToeplitzGeometric {
  std::size_t p;
  double rho;
};

struct Kronecker {
  std::shared_ptr<const CovarianceSpec> left;
  std::shared_ptr<const CovarianceSpec> right;
};

struct Explicit {
  SymMatrix matrix;
};

}  // namespace cov

// Structured description of a covariance matrix Sigma_p. Immutable.
class CovarianceSpec {
 public:
  using Variant = std::variant<cov::Identity, cov::TwoLevelDiagonal, cov::Tridiagonal,
                               cov::ToeplitzGeometric, cov::Kronecker, cov::Explicit>;

  static CovarianceSpec identity(std::size_t p) {
    check_dim(p);
    return CovarianceSpec(cov::Identity{p});
  }

  static CovarianceSpec two_level(std::size_t p, std::size_t fraction_num,
                                  std::size_t fraction_den, double low, double high) {
    check_dim(p);
    if (fraction_den == 0 || fraction_num == 0 || fraction_num >= fraction_den) {
      throw DomainError("two_level: fraction must lie strictly between 0 and 1");
    }
    if ((fraction_num * p) % fraction_den != 0) {
      throw DomainError("two_level: fraction * p must be an integer (p = " + std::to_string(p) +
                        ", fraction = " + std::to_string(fraction_num) + "/" +
                        std::to_string(fraction_den) + ")");
    }
    if (!(low > 0.0) || !(high > 0.0)) throw DomainError("two_level: levels must be positive");
    return CovarianceSpec(cov::TwoLevelDiagonal{p, fraction_num, fraction_den, low, high});
  }

  static CovarianceSpec tridiagonal(std::size_t p, double diag, double offdiag) {
    check_dim(p);
    if (!std::isfinite(diag) || !std::isfinite(offdiag)) throw DomainError("tridiagonal: non-finite entry");
    // Extreme eigenvalues are diag -+ 2|offdiag| cos(pi / (p + 1)).
    const double spread = p > 1 ? 2.0 * std::abs(offdiag) * std::cos(std::numbers::pi / (p + 1.0)) : 0.0;
    if (diag - spread < -1e-10 * (std::abs(diag) + spread)) {
      throw NotPsdError("tridiagonal(" + std::to_string(diag) + ", " + std::to_string(offdiag) +
                        ") is not positive semidefinite at p = " + std::to_string(p));
    }
    return CovarianceSpec(cov::Tridiagonal{p, diag, offdiag});
  }

  static CovarianceSpec toeplitz(std::size_t p, double rho) {
    check_dim(p);
    if (!(std::abs(rho) < 1.0)) throw DomainError("toeplitz: |rho| must be < 1");
    return CovarianceSpec(cov::ToeplitzGeometric{p, rho});
  }

  static CovarianceSpec kronecker(CovarianceSpec left, CovarianceSpec right) {
    return CovarianceSpec(cov::Kronecker{std::make_shared<const CovarianceSpec>(std::move(left)),
                                         std::make_shared<const CovarianceSpec>(std::move(right))});
  }

  static CovarianceSpec explicit_matrix(SymMatrix m) {
    const std::vector<double> ev = sym_eigenvalues(m);
    const double norm = std::max(std::abs(ev.front()), std::abs(ev.back()));
    if (ev.back() < -1e-10 * norm) throw NotPsdError("explicit covariance is not positive semidefinite");
    return CovarianceSpec(cov::Explicit{std::move(m)});
  }

  const Variant& variant() const { return v_; }

  std::size_t dim() const {
    return std::visit(
        [](const auto& s) -> std::size_t {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, cov::Kronecker>) {
            return s.left->dim() * s.right->dim();
          } else if constexpr (std::is_same_v<T, cov::Explicit>) {
            return s.matrix.dim();
          } else {
            return s.p;
          }
        },
        v_);
  }

  bool is_diagonal() const {
    return std::holds_alternative<cov::Identity>(v_) ||
           std::holds_alternative<cov::TwoLevelDiagonal>(v_) ||
           (std::holds_alternative<cov::Tridiagonal>(v_) &&
            std::get<cov::Tridiagonal>(v_).offdiag == 0.0);
  }

  // Short human-readable name, also used in CSV output.
  std::string label() const {
    return std::visit(
        [](const auto& s) -> std::string {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, cov::Identity>) {
            return "identity";
          } else if constexpr (std::is_same_v<T, cov::TwoLevelDiagonal>) {
            return "two_level(" + std::to_string(s.fraction_num) + "/" +
                   std::to_string(s.fraction_den) + ";" + fmt_num(s.low) + ";" + fmt_num(s.high) +
                   ")";
          } else if constexpr (std::is_same_v<T, cov::Tridiagonal>) {
            return "tridiagonal(" + fmt_num(s.diag) + ";" + fmt_num(s.offdiag) + ")";
          } else if constexpr (std::is_same_v<T, cov::ToeplitzGeometric>) {
            return "toeplitz(" + fmt_num(s.rho) + ")";
          } else if constexpr (std::is_same_v<T, cov::Kronecker>) {
            return "kron(" + s.left->label() + ";" + s.right->label() + ")";
          } else {
            return "explicit";
          }
        },
        v_);
  }

 private:
  explicit CovarianceSpec(Variant v) : v_(std::move(v)) {}

  static void check_dim(std::size_t p) {
    if (p == 0) throw DimensionError("covariance dimension must be >= 1");
  }

  static std::string fmt_num(double x) {
    std::string s = std::to_string(x);
    s.erase(s.find_last_not_of('0') + 1);
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
  }

  Variant v_;
};

inline constexpr std::size_t kDefaultDimensionCap = 65536;

// Dense Sigma_p.
inline SymMatrix materialize(const CovarianceSpec& spec,
                             std::size_t dimension_cap = kDefaultDimensionCap) {
  const std::size_t p = spec.dim();
  if (p > dimension_cap) {
    throw DimensionError("materialize: dimension " + std::to_string(p) + " exceeds cap " +
                         std::to_string(dimension_cap));
  }
  return std::visit(
      [&](const auto& s) -> SymMatrix {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, cov::Identity>) {
          return SymMatrix::identity(p);
        } else if constexpr (std::is_same_v<T, cov::TwoLevelDiagonal>) {
          std::vector<double> d(p, s.high);
          const std::size_t n_low = s.fraction_num * p / s.fraction_den;
          for (std::size_t i = 0; i < n_low; ++i) d[i] = s.low;
          return SymMatrix::diagonal(d);
        } else if constexpr (std::is_same_v<T, cov::Tridiagonal>) {
          std::vector<double> e(p * p, 0.0);
          for (std::size_t i = 0; i < p; ++i) {
            e[i * p + i] = s.diag;
            if (i + 1 < p) {
              e[i * p + i + 1] = s.offdiag;
              e[(i + 1) * p + i] = s.offdiag;
            }
          }
          return SymMatrix(p, std::move(e));
        } else if constexpr (std::is_same_v<T, cov::ToeplitzGeometric>) {
          std::vector<double> powers(p);
          double r = 1.0;
          for (std::size_t k = 0; k < p; ++k, r *= s.rho) powers[k] = r;
          std::vector<double> e(p * p);
          for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < p; ++j) e[i * p + j] = powers[i > j ? i - j : j - i];
          return SymMatrix(p, std::move(e));
        } else if constexpr (std::is_same_v<T, cov::Kronecker>) {
          const SymMatrix a = materialize(*s.left, dimension_cap);
          const SymMatrix b = materialize(*s.right, dimension_cap);
          const std::size_t p1 = a.dim(), p2 = b.dim();
          std::vector<double> e(p * p);
          for (std::size_t i1 = 0; i1 < p1; ++i1)
            for (std::size_t i2 = 0; i2 < p2; ++i2)
              for (std::size_t j1 = 0; j1 < p1; ++j1)
                for (std::size_t j2 = 0; j2 < p2; ++j2)
                  e[(i1 * p2 + i2) * p + (j1 * p2 + j2)] = a(i1, j1) * b(i2, j2);
          return SymMatrix(p, std::move(e));
        } else {
          return s.matrix;
        }
      },
      spec.variant());
}

// Normalized traces of Sigma_p: a = tr(S)/p, b = tr(S^2)/p, b_tilde = sum
// S_ii^2 / p, c = tr(S^3)/p, d = tr(S^4)/p. gamma/theta/omega are the
// limits of a/b/b_tilde, identified with their finite-p values.
struct SpectralSummary {
  double a = 1.0;
  double b = 1.0;
  double b_tilde = 1.0;
  double c = 1.0;
  double d = 1.0;
  double gamma = 1.0;
  double theta = 1.0;
  double omega = 1.0;
  double nu4 = 3.0;

  // c / (b sqrt(b)), the skewness coefficient that multiplies sqrt(n/p).
  double skew() const { return c / (b * std::sqrt(b)); }
};

enum class EntryKind { standard_gaussian, shifted_gamma, custom };

// Law of the i.i.d. entries X_ij (mean 0, variance 1, fourth moment nu4).
struct EntryDistribution {
  EntryKind kind = EntryKind::standard_gaussian;
  double nu4 = 3.0;
  std::string tag = "gaussian";
  // Only used for EntryKind::custom.
  std::function<double(Xoshiro256&)> sampler;

  static EntryDistribution gaussian() { return {EntryKind::standard_gaussian, 3.0, "gaussian", {}}; }

  // Gamma(shape 4, rate 2) - 2: mean 0, variance 1, fourth moment 4.5.
  static EntryDistribution shifted_gamma() {
    return {EntryKind::shifted_gamma, 4.5, "gamma42", {}};
  }

  // Callers are responsible for the moment conditions of the sampler.
  static EntryDistribution custom(std::string tag, double nu4,
                                  std::function<double(Xoshiro256&)> sampler) {
    if (!(nu4 > 1.0)) throw DomainError("custom distribution: nu4 must exceed 1");
    return {EntryKind::custom, nu4, std::move(tag), std::move(sampler)};
  }
};

namespace detail {

struct MomentVector {
  double t1, t2, t3, t4, diag2;  // all divided by p
};

inline MomentVector dense_moments(const SymMatrix& m) {
  const double p = static_cast<double>(m.dim());
  double diag2 = 0.0;
  for (std::size_t i = 0; i < m.dim(); ++i) diag2 += m(i, i) * m(i, i);
  return {trace_power(m, 1) / p, trace_power(m, 2) / p, trace_power(m, 3) / p,
          trace_power(m, 4) / p, diag2 / p};
}

inline MomentVector moments_of(const CovarianceSpec& spec) {
  return std::visit(
      [&](const auto& s) -> MomentVector {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, cov::Identity>) {
          return {1.0, 1.0, 1.0, 1.0, 1.0};
        } else if constexpr (std::is_same_v<T, cov::TwoLevelDiagonal>) {
          const double f = static_cast<double>(s.fraction_num) / static_cast<double>(s.fraction_den);
          auto avg = [&](int k) { return f * std::pow(s.low, k) + (1.0 - f) * std::pow(s.high, k); };
          return {avg(1), avg(2), avg(3), avg(4), avg(2)};
        } else if constexpr (std::is_same_v<T, cov::Tridiagonal>) {
          // Spectrum: diag + 2 offdiag cos(k pi / (p + 1)), k = 1..p.
          const double p = static_cast<double>(s.p);
          double t[5] = {0, 0, 0, 0, 0};
          for (std::size_t k = 1; k <= s.p; ++k) {
            const double l =
                s.diag + 2.0 * s.offdiag * std::cos(static_cast<double>(k) * std::numbers::pi / (p + 1.0));
            double lk = 1.0;
            for (int j = 1; j <= 4; ++j) {
              lk *= l;
              t[j] += lk;
            }
          }
          return {t[1] / p, t[2] / p, t[3] / p, t[4] / p, s.diag * s.diag};
        } else if constexpr (std::is_same_v<T, cov::Kronecker>) {
          const MomentVector l = moments_of(*s.left);
          const MomentVector r = moments_of(*s.right);
          return {l.t1 * r.t1, l.t2 * r.t2, l.t3 * r.t3, l.t4 * r.t4, l.diag2 * r.diag2};
        } else if constexpr (std::is_same_v<T, cov::Explicit>) {
          return dense_moments(s.matrix);
        } else {
          return dense_moments(materialize(CovarianceSpec::toeplitz(s.p, s.rho)));
        }
      },
      spec.variant());
}

}  // namespace detail

inline SpectralSummary spectral_summary(const CovarianceSpec& spec, const EntryDistribution& dist) {
  const detail::MomentVector m = detail::moments_of(spec);
  SpectralSummary s;
  s.a = m.t1;
  s.b = m.t2;
  s.b_tilde = m.diag2;
  s.c = m.t3;
  s.d = m.t4;
  s.gamma = s.a;
  s.theta = s.b;
  s.omega = s.b_tilde;
  s.nu4 = dist.nu4;
  return s;
}

// p x n data matrix; column j is the j-th observation.
using DataMatrix = Matrix;

// Fills `out` with i.i.d. draws of `dist`.
inline void fill_entries(const EntryDistribution& dist, std::span<double> out, Xoshiro256& rng) {
  switch (dist.kind) {
    case EntryKind::standard_gaussian: {
      std::normal_distribution<double> normal(0.0, 1.0);
      for (double& x : out) x = normal(rng);
      break;
    }
    case EntryKind::shifted_gamma: {
      // std::gamma_distribution is parameterized by scale = 1 / rate.
      std::gamma_distribution<double> gamma(4.0, 0.5);
      for (double& x : out) x = gamma(rng) - 2.0;
      break;
    }
    case EntryKind::custom:
      if (!dist.sampler) throw DomainError("custom distribution has no sampler");
      for (double& x : out) x = dist.sampler(rng);
      break;
  }
}

inline DataMatrix sample_data(const EntryDistribution& dist, std::size_t p, std::size_t n,
                              Xoshiro256& rng) {
  DataMatrix x(p, n);
  fill_entries(dist, x.data(), rng);
  return x;
}

// Sigma_p X, exploiting structure where the covariance has it.
inline Matrix apply_covariance(const CovarianceSpec& spec, const Matrix& x) {
  const std::size_t p = spec.dim();
  if (x.rows() != p) {
    throw DimensionError("apply_covariance: data has " + std::to_string(x.rows()) +
                         " rows, covariance dimension is " + std::to_string(p));
  }
  const std::size_t n = x.cols();
  return std::visit(
      [&](const auto& s) -> Matrix {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, cov::Identity>) {
          return x;
        } else if constexpr (std::is_same_v<T, cov::TwoLevelDiagonal>) {
          Matrix y = x;
          const std::size_t n_low = s.fraction_num * p / s.fraction_den;
          for (std::size_t j = 0; j < n; ++j) {
            double* c = y.col(j).data();
            for (std::size_t i = 0; i < p; ++i) c[i] *= (i < n_low ? s.low : s.high);
          }
          return y;
        } else if constexpr (std::is_same_v<T, cov::Tridiagonal>) {
          Matrix y(p, n);
          for (std::size_t j = 0; j < n; ++j) {
            const double* c = x.col(j).data();
            double* o = y.col(j).data();
            for (std::size_t i = 0; i < p; ++i) {
              double v = s.diag * c[i];
              if (i > 0) v += s.offdiag * c[i - 1];
              if (i + 1 < p) v += s.offdiag * c[i + 1];
              o[i] = v;
            }
          }
          return y;
        } else if constexpr (std::is_same_v<T, cov::Kronecker>) {
          const SymMatrix a = materialize(*s.left);
          const SymMatrix b = materialize(*s.right);
          Matrix y(p, n);
          for (std::size_t j = 0; j < n; ++j) {
            const std::vector<double> r = kron_apply(a, b, x.col(j));
            std::copy(r.begin(), r.end(), y.col(j).begin());
          }
          return y;
        } else {
          return multiply(materialize(spec).to_matrix(), x);
        }
      },
      spec.variant());
}

// A_n = (X^T Sigma X - p a_p I_n) / sqrt(n p b_p).
inline SymMatrix build_An(const DataMatrix& x, const CovarianceSpec& spec,
                          const SpectralSummary& summary) {
  const std::size_t p = x.rows();
  const std::size_t n = x.cols();
  if (spec.dim() != p) {
    throw DimensionError("build_An: covariance dimension " + std::to_string(spec.dim()) +
                         " does not match data dimension " + std::to_string(p));
  }
  const Matrix sx = apply_covariance(spec, x);
  const double pd = static_cast<double>(p);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n) * pd * summary.b);
  std::vector<double> g(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = x.col(i).data();
    for (std::size_t j = i; j < n; ++j) {
      const double* sj = sx.col(j).data();
      double s = 0.0;
      for (std::size_t k = 0; k < p; ++k) s += xi[k] * sj[k];
      if (i == j) s -= pd * summary.a;
      g[i * n + j] = s * scale;
      g[j * n + i] = s * scale;
    }
  }
  return SymMatrix(n, std::move(g));
}

struct GramStatistics {
  double tr_S = 0.0;   // tr(Y Y^T / n)
  double tr_S2 = 0.0;  // tr((Y Y^T / n)^2)
  std::vector<double> eigenvalues;  // of the n x n Gram Y^T Y, descending
};

// Statistics of S_n = Y Y^T / n computed through the n x n Gram Y^T Y.
inline GramStatistics gram_statistics(const DataMatrix& y, bool want_eigenvalues = true) {
  const SymMatrix g = gram(y);
  const double n = static_cast<double>(y.cols());
  GramStatistics out;
  out.tr_S = trace_power(g, 1) / n;
  out.tr_S2 = trace_power(g, 2) / (n * n);
  if (want_eigenvalues) out.eigenvalues = sym_eigenvalues(g);
  return out;
}

}  // namespace spectra
