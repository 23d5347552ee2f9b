#pragma once

// Covariance hypothesis tests built on the ultra-high-dimensional CLT:
// the identity test W, likelihood-ratio statistics L0 and the quasi-LRT L*,
// John's U, and the separable (Kronecker) covariance test W*.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spectra/covariance.hpp"
#include "spectra/error.hpp"
#include "spectra/linalg.hpp"
#include "spectra/normal.hpp"

namespace spectra {

struct TestReport {
  std::string name;
  double statistic = 0.0;
  double standardized = 0.0;
  double p_value = 1.0;
  bool reject = false;
  double alpha = 0.05;
  std::optional<double> theoretical_power;
};

namespace detail {

inline void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
}

// One-sided upper test on a statistic that is N(0,1) under the null.
inline TestReport upper_tail_report(std::string name, double statistic, double standardized,
                                    double alpha) {
  TestReport r;
  r.name = std::move(name);
  r.statistic = statistic;
  r.standardized = standardized;
  r.p_value = normal_sf(standardized);
  r.alpha = alpha;
  r.reject = standardized >= upper_quantile(alpha);
  return r;
}

// 1 - Phi((1/2theta){2 z_a - omega(nu4-3) - theta + n(2gamma - 1 - theta) + (nu4 - 2)})
inline double w_power(double gamma, double theta, double omega, double nu4, double n,
                      double alpha) {
  if (!(theta > 0.0)) throw DomainError("power: theta must be positive");
  const double z = upper_quantile(alpha);
  const double arg = (2.0 * z - omega * (nu4 - 3.0) - theta + n * (2.0 * gamma - 1.0 - theta) +
                      (nu4 - 2.0)) /
                     (2.0 * theta);
  return std::clamp(normal_sf(arg), 0.0, 1.0);
}

}  // namespace detail

// W = (1/p) tr[(S - I)^2] - (p/n) [tr(S)/p]^2 + p/n from the n x n Gram.
// The standardized value (nW - p - (nu4 - 2))/2 is N(0,1) under Sigma = I.
inline TestReport identity_test_W(const DataMatrix& y, double nu4, double alpha) {
  detail::check_alpha(alpha);
  const double p = static_cast<double>(y.rows());
  const double n = static_cast<double>(y.cols());
  if (y.rows() < 2 || y.cols() < 2) throw DomainError("identity_test_W: requires p, n >= 2");
  const GramStatistics g = gram_statistics(y, false);
  const double frob = (g.tr_S2 - 2.0 * g.tr_S + p) / p;
  const double mean_eig = g.tr_S / p;
  const double w = frob - (p / n) * mean_eig * mean_eig + p / n;
  const double standardized = 0.5 * (n * w - p - (nu4 - 2.0));
  return detail::upper_tail_report("W", w, standardized, alpha);
}

// Asymptotic power of the W test against a covariance with limits
// (gamma, theta, omega).
inline double identity_power_W(const SpectralSummary& s, double n, double alpha) {
  detail::check_alpha(alpha);
  return detail::w_power(s.gamma, s.theta, s.omega, s.nu4, n, alpha);
}

// Centering constants of the quasi-LRT for c = p/n > 1.
struct QuasiLrtConstants {
  double F1, mu1, sigma1;
};

inline QuasiLrtConstants quasi_lrt_constants(double c) {
  if (!(c > 1.0)) throw DomainError("quasi-LRT requires p > n");
  const double l = std::log1p(-1.0 / c);
  return {1.0 - (1.0 - c) * l, -0.5 * l, std::sqrt(-2.0 * l - 2.0 / c)};
}

struct LrtConstants {
  double F0, mu0, sigma0;
};

inline LrtConstants lrt_constants(double c) {
  if (!(c > 0.0 && c < 1.0)) throw DomainError("LRT L0 requires p < n");
  const double l = std::log1p(-c);
  return {1.0 - ((c - 1.0) / c) * l, -0.5 * l, std::sqrt(-2.0 * l - 2.0 * c)};
}

// L = tr(S^) - log|S^| - n with S^ = Y^T Y / p, standardized as
// (L - n F1(c) - mu1) / sigma1. Valid for p > n.
inline TestReport quasi_lrt(const DataMatrix& y, double alpha) {
  detail::check_alpha(alpha);
  const double p = static_cast<double>(y.rows());
  const double n = static_cast<double>(y.cols());
  if (!(p > n)) {
    throw DomainError("quasi_lrt: requires p > n (p = " + std::to_string(y.rows()) +
                      ", n = " + std::to_string(y.cols()) + "); use lrt_L0 when p < n");
  }
  const SymMatrix g = gram(y);
  std::vector<double> e(g.entries().begin(), g.entries().end());
  for (double& v : e) v /= p;
  const SymMatrix s_hat(y.cols(), std::move(e));
  double logdet;
  try {
    logdet = log_det_pd(s_hat);
  } catch (const NotPsdError&) {
    throw SingularError("quasi_lrt: Y^T Y / p is rank deficient");
  }
  const double l = trace_power(s_hat, 1) - logdet - n;
  const QuasiLrtConstants k = quasi_lrt_constants(p / n);
  return detail::upper_tail_report("quasi_lrt", l, (l - n * k.F1 - k.mu1) / k.sigma1, alpha);
}

// L0 = tr(S) - log|S| - p with S = Y Y^T / n, for p < n, standardized as
// (L0 - p F0(c) - mu0) / sigma0. The centering scales with the matrix
// dimension p, mirroring n F1 for the n x n quasi-LRT.
inline TestReport lrt_L0(const DataMatrix& y, double alpha) {
  detail::check_alpha(alpha);
  const std::size_t pi = y.rows();
  const double p = static_cast<double>(y.rows());
  const double n = static_cast<double>(y.cols());
  if (!(p < n)) {
    throw DomainError("lrt_L0: requires p < n (p = " + std::to_string(y.rows()) +
                      ", n = " + std::to_string(y.cols()) + "); use quasi_lrt when p > n");
  }
  std::vector<double> s(pi * pi, 0.0);
  for (std::size_t k = 0; k < y.cols(); ++k) {
    const double* yk = y.col(k).data();
    for (std::size_t i = 0; i < pi; ++i) {
      const double a = yk[i] / n;
      for (std::size_t j = i; j < pi; ++j) s[i * pi + j] += a * yk[j];
    }
  }
  for (std::size_t i = 0; i < pi; ++i)
    for (std::size_t j = 0; j < i; ++j) s[i * pi + j] = s[j * pi + i];
  const SymMatrix sm(pi, std::move(s));
  double logdet;
  try {
    logdet = log_det_pd(sm);
  } catch (const NotPsdError&) {
    throw SingularError("lrt_L0: sample covariance is singular");
  }
  const double l0 = trace_power(sm, 1) - logdet - p;
  const LrtConstants k = lrt_constants(p / n);
  return detail::upper_tail_report("lrt_L0", l0, (l0 - p * k.F0 - k.mu0) / k.sigma0, alpha);
}

// John's U = p^{-1} sum (l_i - mean)^2 / mean^2 over the p eigenvalues of
// S_n; the zero eigenvalues beyond rank min(p, n) are included.
inline double johns_U(const DataMatrix& y) {
  const std::size_t p = y.rows();
  const std::size_t n = y.cols();
  if (p < 2 || n < 2) throw DomainError("johns_U: requires p, n >= 2");
  std::vector<double> eig;
  if (p >= n) {
    eig = sym_eigenvalues(gram(y));
  } else {
    eig = sym_eigenvalues(gram(transpose(y)));
  }
  for (double& l : eig) l /= static_cast<double>(n);
  eig.resize(p, 0.0);
  double mean = 0.0;
  for (double l : eig) mean += l;
  mean /= static_cast<double>(p);
  if (!(mean > 0.0)) throw DomainError("johns_U: mean eigenvalue is zero");
  double ss = 0.0;
  for (double l : eig) ss += (l - mean) * (l - mean);
  return ss / static_cast<double>(p) / (mean * mean);
}

// H0: Cov(vec E_t) = Sigma1 kron Sigma2 with Sigma1 p1 x p1, Sigma2 p2 x p2.
struct SeparableSpec {
  CovarianceSpec sigma1;
  CovarianceSpec sigma2;
  std::size_t T = 0;
};

// Per-factor inverse square roots used to whiten vec(E_t).
struct SeparableWhitener {
  SymMatrix w1;  // Sigma1^{-1/2}
  SymMatrix w2;  // Sigma2^{-1/2}

  static SeparableWhitener from(const SeparableSpec& spec) {
    try {
      return {inv_sqrt_psd(materialize(spec.sigma1)), inv_sqrt_psd(materialize(spec.sigma2))};
    } catch (const NotPsdError& e) {
      throw SingularError(std::string("separable whitening: ") + e.what());
    }
  }
};

// Observations are given vectorized: column t of `vec_obs` is vec(E_t) in the
// kron_apply layout, i.e. E_t's p1 columns of length p2 stacked (rows of E_t
// indexed by Sigma2, columns by Sigma1).
inline TestReport separable_test(const Matrix& vec_obs, const SeparableWhitener& whitener,
                                 double nu4, double alpha) {
  const std::size_t p1 = whitener.w1.dim();
  const std::size_t p2 = whitener.w2.dim();
  if (vec_obs.rows() != p1 * p2) {
    throw DimensionError("separable_test: observations have length " +
                         std::to_string(vec_obs.rows()) + ", expected p1*p2 = " +
                         std::to_string(p1 * p2));
  }
  Matrix y(p1 * p2, vec_obs.cols());
  for (std::size_t t = 0; t < vec_obs.cols(); ++t) {
    const std::vector<double> w = kron_apply(whitener.w1, whitener.w2, vec_obs.col(t));
    std::copy(w.begin(), w.end(), y.col(t).begin());
  }
  TestReport r = identity_test_W(y, nu4, alpha);
  r.name = "W_star";
  return r;
}

// Same test on a sequence of p2 x p1 matrices (see the layout note above).
inline TestReport separable_test(std::span<const Matrix> observations, const SeparableSpec& spec,
                                 double nu4, double alpha) {
  const std::size_t p1 = spec.sigma1.dim();
  const std::size_t p2 = spec.sigma2.dim();
  Matrix vec_obs(p1 * p2, observations.size());
  for (std::size_t t = 0; t < observations.size(); ++t) {
    const Matrix& e = observations[t];
    if (e.rows() != p2 || e.cols() != p1) {
      throw DimensionError("separable_test: observation " + std::to_string(t) + " is " +
                           std::to_string(e.rows()) + "x" + std::to_string(e.cols()) +
                           ", expected " + std::to_string(p2) + "x" + std::to_string(p1));
    }
    std::copy(e.data().begin(), e.data().end(), vec_obs.col(t).begin());
  }
  return separable_test(vec_obs, SeparableWhitener::from(spec), nu4, alpha);
}

// Limits (gamma, theta, omega) of the whitened alternative
//   (S~1 kron S~2)^{1/2} (S1 kron S2)^{-1} (S~1 kron S~2)^{1/2}
//   = M1 kron M2,  M_i = S~_i^{1/2} S_i^{-1} S~_i^{1/2}.
struct SeparableAlternativeLimits {
  double gamma, theta, omega;
};

inline SeparableAlternativeLimits separable_alternative_limits(const SeparableSpec& null_spec,
                                                               const CovarianceSpec& alt1,
                                                               const CovarianceSpec& alt2) {
  if (alt1.dim() != null_spec.sigma1.dim() || alt2.dim() != null_spec.sigma2.dim()) {
    throw DimensionError("separable_power: alternative factor dimensions do not match the null");
  }
  auto factor = [](const CovarianceSpec& null_factor, const CovarianceSpec& alt_factor) {
    SymMatrix inv_root;
    try {
      inv_root = inv_sqrt_psd(materialize(null_factor));
    } catch (const NotPsdError& e) {
      throw SingularError(std::string("separable_power: null factor: ") + e.what());
    }
    const Matrix inv = multiply(inv_root, inv_root);
    const Matrix root = sqrt_psd(materialize(alt_factor)).to_matrix();
    const SymMatrix m(multiply(multiply(root, inv), root));
    const double p = static_cast<double>(m.dim());
    double diag2 = 0.0;
    for (std::size_t i = 0; i < m.dim(); ++i) diag2 += m(i, i) * m(i, i);
    return SeparableAlternativeLimits{trace_power(m, 1) / p, trace_power(m, 2) / p, diag2 / p};
  };
  const SeparableAlternativeLimits a = factor(null_spec.sigma1, alt1);
  const SeparableAlternativeLimits b = factor(null_spec.sigma2, alt2);
  return {a.gamma * b.gamma, a.theta * b.theta, a.omega * b.omega};
}

inline double separable_power(const SeparableSpec& null_spec, const CovarianceSpec& alt1,
                              const CovarianceSpec& alt2, double nu4, double alpha) {
  detail::check_alpha(alpha);
  const SeparableAlternativeLimits l = separable_alternative_limits(null_spec, alt1, alt2);
  return detail::w_power(l.gamma, l.theta, l.omega, nu4, static_cast<double>(null_spec.T), alpha);
}

}  // namespace spectra
