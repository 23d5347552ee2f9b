#pragma once

// Analytic self-checks of the limit machinery, each compared against an
// independent closed form.

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "spectra/covariance.hpp"
#include "spectra/hypothesis.hpp"
#include "spectra/lss.hpp"

namespace spectra {

struct CheckResult {
  std::string name;
  double computed = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  bool relative = false;
  bool pass = false;
};

namespace detail {

inline CheckResult make_check(std::string name, double computed, double expected, double tol,
                              bool relative = false) {
  const double err = std::abs(computed - expected);
  const double bound = relative ? tol * std::abs(expected) : tol;
  return {std::move(name), computed, expected, tol, relative, std::isfinite(computed) && err <= bound};
}

// A summary with prescribed omega/theta and nu4; only those enter the limits.
inline SpectralSummary limit_summary(double omega_over_theta, double nu4) {
  SpectralSummary s;
  s.a = s.b = s.c = s.d = 1.0;
  s.gamma = s.theta = 1.0;
  s.b_tilde = s.omega = omega_over_theta;
  s.nu4 = nu4;
  return s;
}

}  // namespace detail

inline std::vector<CheckResult> verify_limits() {
  using detail::make_check;
  std::vector<CheckResult> out;
  const auto x1 = TestFunction::monomial(1);
  const auto x2 = TestFunction::monomial(2);
  const auto x3 = TestFunction::monomial(3);
  const auto x4 = TestFunction::monomial(4);
  const auto ex = TestFunction::exponential(1.0);

  // Chebyshev coefficients of monomials: (2 cos t)^k expands binomially.
  out.push_back(make_check("psi_0(x^2)", psi_k(x2, 0), 2.0, 1e-12));
  out.push_back(make_check("psi_2(x^2)", psi_k(x2, 2), 1.0, 1e-12));
  out.push_back(make_check("psi_1(x^3)", psi_k(x3, 1), 3.0, 1e-12));
  out.push_back(make_check("psi_3(x^3)", psi_k(x3, 3), 1.0, 1e-12));
  out.push_back(make_check("psi_2(x^4)", psi_k(x4, 2), 4.0, 1e-12));
  // Psi_k(e^x) is the modified Bessel function I_k(2).
  for (unsigned k : {0u, 1u, 4u}) {
    out.push_back(make_check("psi_" + std::to_string(k) + "(exp)", psi_k(ex, k), std::cyl_bessel_i(k, 2.0),
                             1e-12));
  }

  // Even semicircle moments are Catalan numbers.
  const double catalan[] = {1.0, 2.0, 5.0, 14.0};
  for (int j = 1; j <= 4; ++j) {
    out.push_back(make_check("semicircle moment " + std::to_string(2 * j),
                             semicircle_integral(TestFunction::monomial(2 * j)), catalan[j - 1], 1e-10));
  }

  // Limiting variances for x, x^2, x^3.
  const auto gauss = detail::limit_summary(1.0, 3.0);
  const auto gamma = detail::limit_summary(1.0, 4.5);
  out.push_back(make_check("var limit x (nu4=3)", limit_cov(x1, x1, gauss), 2.0, 1e-10));
  out.push_back(make_check("var limit x^2 (nu4=3)", limit_cov(x2, x2, gauss), 4.0, 1e-10));
  out.push_back(make_check("var limit x^3 (nu4=3)", limit_cov(x3, x3, gauss), 24.0, 1e-10));
  out.push_back(make_check("var limit x (nu4=4.5)", limit_cov(x1, x1, gamma), 3.5, 1e-10));
  out.push_back(make_check("var limit x^3 (nu4=4.5)", limit_cov(x3, x3, gamma), 37.5, 1e-10));

  // Series against the double integral.
  const auto half = TestFunction::exponential(0.5);
  const auto skewed = detail::limit_summary(1.3, 4.5);
  struct Pair {
    const char* name;
    const TestFunction* f;
    const TestFunction* g;
  };
  for (const Pair& pr : {Pair{"x,x", &x1, &x1}, Pair{"x^2,x^2", &x2, &x2}, Pair{"x^3,x^3", &x3, &x3},
                         Pair{"x,x^3", &x1, &x3}, Pair{"exp(x/2),exp(x/2)", &half, &half}}) {
    out.push_back(make_check(std::string("cov series vs integral (") + pr.name + ")",
                             limit_cov(*pr.f, *pr.g, skewed), limit_cov_integral(*pr.f, *pr.g, skewed), 1e-4,
                             true));
  }

  // Contour correction against the closed forms, Sigma with half its
  // diagonal at 0.5, gamma entries.
  {
    const double n = 200.0, p = 40000.0;
    const auto s = spectral_summary(CovarianceSpec::two_level(40000, 1, 2, 0.5, 1.0),
                                    EntryDistribution::shifted_gamma());
    out.push_back(make_check("contour correction x", contour_correction(x1, s, n, p), 0.0, 1e-2));
    out.push_back(make_check("contour correction x^2", contour_correction(x2, s, n, p),
                             polynomial_mean_correction(2, s, n, p), 0.02, true));
    out.push_back(make_check("contour correction x^3", contour_correction(x3, s, n, p),
                             polynomial_mean_correction(3, s, n, p), 0.02, true));
  }

  // The selected root solves its quadratic.
  {
    const auto s = spectral_summary(CovarianceSpec::two_level(10000, 1, 2, 0.5, 1.0),
                                    EntryDistribution::gaussian());
    const Complex m(0.3, 0.2);
    const Complex x = chi_n(m, s, 100.0, 10000.0);
    const ChiCoefficients q = chi_coefficients(m, s, 100.0, 10000.0);
    out.push_back(make_check("quadratic residual |A X^2 + B X + C|", std::abs((q.A * x + q.B) * x + q.C), 0.0,
                             1e-12));
  }

  // 1/sigma_1 = c - 1/3 + o(1) as c grows.
  out.push_back(make_check("1/sigma_1 at c = 100", 1.0 / quasi_lrt_constants(100.0).sigma1, 99.667,
                           0.01));
  return out;
}

}  // namespace spectra
