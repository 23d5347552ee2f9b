#pragma once

// Linear spectral statistics of A_n: semicircle-law quantities, Chebyshev
// coefficients Psi_k, the finite-sample mean correction obtained from a
// contour integral, and the limiting Gaussian mean and covariance.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spectra/covariance.hpp"
#include "spectra/error.hpp"

namespace spectra {

using Complex = std::complex<double>;

// An analytic function on a neighbourhood of [-2, 2]. The complex evaluator
// is needed by the contour-integral correction; functions built from a real
// evaluator only are restricted to the real-line operations.
class TestFunction {
 public:
  TestFunction(std::string label, std::function<Complex(Complex)> f,
               std::function<Complex(Complex)> df = {},
               std::optional<std::vector<double>> poly = std::nullopt)
      : label_(std::move(label)), f_(std::move(f)), df_(std::move(df)), poly_(std::move(poly)) {}

  static TestFunction real_only(std::string label, std::function<double(double)> f,
                                std::function<double(double)> df = {}) {
    TestFunction t(std::move(label), {}, {});
    t.real_f_ = std::move(f);
    t.real_df_ = std::move(df);
    return t;
  }

  // sum_k coeffs[k] x^k
  static TestFunction polynomial(std::vector<double> coeffs, std::string label = {}) {
    if (coeffs.empty()) coeffs.push_back(0.0);
    if (label.empty()) {
      label = "poly(";
      for (std::size_t k = 0; k < coeffs.size(); ++k) {
        if (k) label += ";";
        label += std::to_string(coeffs[k]);
      }
      label += ")";
    }
    auto c = coeffs;
    auto eval = [c](Complex z) {
      Complex acc = 0.0;
      for (std::size_t k = c.size(); k-- > 0;) acc = acc * z + c[k];
      return acc;
    };
    auto deriv = [c](Complex z) {
      Complex acc = 0.0;
      for (std::size_t k = c.size(); k-- > 1;) acc = acc * z + static_cast<double>(k) * c[k];
      return acc;
    };
    return TestFunction(std::move(label), eval, deriv, std::move(coeffs));
  }

  // x^k, labelled "x", "x2", "x3", ...
  static TestFunction monomial(int k) {
    std::vector<double> c(static_cast<std::size_t>(k) + 1, 0.0);
    c.back() = 1.0;
    return polynomial(std::move(c), k == 1 ? std::string("x") : "x" + std::to_string(k));
  }

  // exp(scale * x)
  static TestFunction exponential(double scale = 1.0) {
    std::string label = scale == 1.0 ? "exp" : "exp(" + std::to_string(scale) + "x)";
    return TestFunction(
        std::move(label), [scale](Complex z) { return std::exp(scale * z); },
        [scale](Complex z) { return scale * std::exp(scale * z); });
  }

  const std::string& label() const { return label_; }
  bool has_complex() const { return static_cast<bool>(f_); }
  const std::optional<std::vector<double>>& polynomial_coefficients() const { return poly_; }

  double operator()(double x) const {
    if (real_f_) return real_f_(x);
    return f_(Complex(x, 0.0)).real();
  }

  Complex operator()(Complex z) const {
    if (!f_) throw DomainError("test function '" + label_ + "' has no complex extension");
    return f_(z);
  }

  // f'(x): analytic when supplied, otherwise a Richardson-refined central
  // difference with h = 1e-5.
  double derivative(double x) const {
    if (df_) return df_(Complex(x, 0.0)).real();
    if (real_df_) return real_df_(x);
    constexpr double h = 1e-5;
    const double d1 = ((*this)(x + h) - (*this)(x - h)) / (2.0 * h);
    const double d2 = ((*this)(x + h / 2) - (*this)(x - h / 2)) / h;
    return (4.0 * d2 - d1) / 3.0;
  }

 private:
  std::string label_;
  std::function<Complex(Complex)> f_;
  std::function<Complex(Complex)> df_;
  std::function<double(double)> real_f_;
  std::function<double(double)> real_df_;
  std::optional<std::vector<double>> poly_;
};

// Stieltjes transform of the semicircle law: the root of m^2 + z m + 1 = 0
// with |m| < 1 (equivalently Im m > 0 for Im z > 0, m ~ -1/z at infinity).
inline Complex semicircle_m(Complex z) {
  if (z.imag() == 0.0 && std::abs(z.real()) <= 2.0) {
    throw DomainError("semicircle_m: z = " + std::to_string(z.real()) + " lies on the cut [-2,2]");
  }
  const Complex s = std::sqrt(z * z - 4.0);
  // Pick the sign that avoids cancellation; that yields the large root, and
  // the roots multiply to 1.
  const Complex big = (std::abs(z + s) >= std::abs(z - s)) ? -(z + s) / 2.0 : -(z - s) / 2.0;
  return 1.0 / big;
}

// Integral of f against the semicircle density sqrt(4 - x^2) / (2 pi) by
// Gauss-Chebyshev quadrature of the second kind (exact for polynomials of
// degree < 2 * nodes).
inline double semicircle_integral(const TestFunction& f, std::size_t nodes = 1024) {
  const double h = std::numbers::pi / static_cast<double>(nodes + 1);
  double acc = 0.0;
  for (std::size_t i = 1; i <= nodes; ++i) {
    const double t = static_cast<double>(i) * h;
    const double s = std::sin(t);
    acc += f(2.0 * std::cos(t)) * s * s;
  }
  return (2.0 / std::numbers::pi) * h * acc;
}

struct PsiOptions {
  std::size_t nodes = 2048;
  std::size_t max_k = 64;
};

// Psi_0 .. Psi_kmax from one pass of the trapezoid rule on
// (1/2pi) int_{-pi}^{pi} f(2 cos t) cos(k t) dt.
inline std::vector<double> psi_all(const TestFunction& f, std::size_t kmax,
                                   std::size_t nodes = 2048) {
  std::vector<double> psi(kmax + 1, 0.0);
  std::vector<double> fv(nodes);
  const double step = 2.0 * std::numbers::pi / static_cast<double>(nodes);
  for (std::size_t j = 0; j < nodes; ++j) {
    fv[j] = f(2.0 * std::cos(-std::numbers::pi + step * static_cast<double>(j)));
  }
  for (std::size_t k = 0; k <= kmax; ++k) {
    double acc = 0.0;
    for (std::size_t j = 0; j < nodes; ++j) {
      acc += fv[j] * std::cos(static_cast<double>(k) * (-std::numbers::pi + step * static_cast<double>(j)));
    }
    psi[k] = acc / static_cast<double>(nodes);
  }
  return psi;
}

inline double psi_k(const TestFunction& f, std::size_t k, const PsiOptions& opt = {}) {
  if (k > opt.max_k) {
    throw DomainError("psi_k: k = " + std::to_string(k) + " exceeds the configured maximum " +
                      std::to_string(opt.max_k));
  }
  return psi_all(f, k, opt.nodes)[k];
}

// Coefficients of the quadratic A X^2 + B X + C = 0 whose small root is the
// finite-sample correction X_n(m).
struct ChiCoefficients {
  Complex A, B, C;
};

inline ChiCoefficients chi_coefficients(Complex m, const SpectralSummary& s, double n, double p) {
  const double r = std::sqrt(n / p);
  const double k = s.skew();
  const Complex m2 = m * m;
  const Complex m3 = m2 * m;
  const Complex m4 = m2 * m2;
  const Complex m5 = m4 * m;
  ChiCoefficients q;
  q.A = m - r * k * (1.0 + m2);
  q.B = m2 - 1.0 - r * k * m * (1.0 + 2.0 * m2);
  q.C = (m3 / n) * (1.0 / (1.0 - m2) + (s.nu4 - 3.0) * s.b_tilde / s.b) - r * k * m4 +
        (n / p) * (-s.c * s.c / (s.b * s.b * s.b) + s.d / (s.b * s.b)) * m5;
  return q;
}

enum class BranchRule {
  // sqrt(B^2 - 4AC) taken with the sign of Im B; ties (Im B == 0) fall back
  // to the smaller root.
  imag_sign,
  // Always the root of smaller modulus (the one that vanishes as n, p grow).
  small_root,
};

// X_n(m) = (-B + sqrt(B^2 - 4AC)) / (2A).
inline Complex chi_n(Complex m, const SpectralSummary& s, double n, double p,
                     BranchRule rule = BranchRule::small_root) {
  if (std::abs(m) == 0.0 || std::abs(m - 1.0) == 0.0 || std::abs(m + 1.0) == 0.0) {
    throw DomainError("chi_n: m must avoid 0 and +-1");
  }
  const ChiCoefficients q = chi_coefficients(m, s, n, p);
  if (std::abs(q.A) < 1e-14) throw DomainError("chi_n: leading coefficient A vanishes (pole)");
  Complex root = std::sqrt(q.B * q.B - 4.0 * q.A * q.C);
  const bool tie = q.B.imag() == 0.0;
  if (rule == BranchRule::imag_sign && !tie) {
    if ((root.imag() < 0.0) != (q.B.imag() < 0.0)) root = -root;
  } else {
    // |-B + root| < |-B - root|  iff  Re(root * conj(B)) > 0.
    if ((root * std::conj(q.B)).real() < 0.0) root = -root;
  }
  return (-q.B + root) / (2.0 * q.A);
}

struct ContourOptions {
  double rho = 0.5;
  std::size_t nodes = 2048;
  BranchRule rule = BranchRule::small_root;
};

// (n / 2 pi i) \oint_{|m| = rho} f(-m - 1/m) X_n(m) (1 - m^2) / m^2 dm by the
// trapezoid rule on m = rho e^{i t}. Returns the real part; the imaginary
// part must vanish to 1e-8 (1 + |real|).
inline double contour_correction(const TestFunction& f, const SpectralSummary& s, double n,
                                 double p, const ContourOptions& opt = {}) {
  if (!(opt.rho > 0.0 && opt.rho < 1.0)) throw DomainError("contour_correction: rho must lie in (0,1)");
  if (opt.nodes < 256) throw DomainError("contour_correction: at least 256 nodes required");
  Complex acc = 0.0;
  const double step = 2.0 * std::numbers::pi / static_cast<double>(opt.nodes);
  // With small_root the branch is followed continuously from the positive
  // real axis, so a modulus crossing of the two roots cannot flip it.
  const bool track = opt.rule == BranchRule::small_root;
  Complex previous = 0.0, first = 0.0;
  for (std::size_t j = 0; j < opt.nodes; ++j) {
    const Complex m = std::polar(opt.rho, step * static_cast<double>(j));
    const ChiCoefficients q = chi_coefficients(m, s, n, p);
    Complex x = chi_n(m, s, n, p, opt.rule);
    if (track && j > 0) {
      const Complex other = -q.B / q.A - x;
      if (std::abs(other - previous) < std::abs(x - previous)) x = other;
    }
    if (j == 0) first = x;
    previous = x;
    const Complex residual = (q.A * x + q.B) * x + q.C;
    const double scale = std::abs(q.A * x * x) + std::abs(q.B * x) + std::abs(q.C);
    if (std::abs(residual) > 1e-8 * std::max(scale, 1e-300)) {
      throw NumericalError("contour_correction: quadratic residual " + std::to_string(std::abs(residual)) +
                           " at node " + std::to_string(j));
    }
    // dm = i m dt cancels the i in 1/(2 pi i).
    acc += f(-m - 1.0 / m) * x * (1.0 - m * m) / m;
  }
  if (track) {
    const ChiCoefficients q = chi_coefficients(opt.rho, s, n, p);
    const Complex other = -q.B / q.A - first;
    const Complex closing = previous;
    if (std::abs(other - closing) < std::abs(first - closing)) {
      throw NumericalError("contour_correction: X_n has a branch point inside |m| = " + std::to_string(opt.rho) +
                           " (n = " + std::to_string(n) + ", p = " + std::to_string(p) + "); use a smaller radius");
    }
  }
  const Complex value = n * acc / static_cast<double>(opt.nodes);
  if (std::abs(value.imag()) >= 1e-8 * (1.0 + std::abs(value.real()))) {
    throw NumericalError("contour_correction: imaginary part " + std::to_string(value.imag()) +
                         " does not vanish; branch selection is inconsistent");
  }
  return value.real();
}

// sqrt(n^3 / p) c_p / (b_p sqrt(b_p)) Psi_3(f).
inline double q_correction(const TestFunction& f, const SpectralSummary& s, double n, double p) {
  return std::sqrt(n * n * n / p) * s.skew() * psi_k(f, 3);
}

// Limiting mean of Q_n(f).
inline double limit_mean(const TestFunction& f, const SpectralSummary& s) {
  const std::vector<double> psi = psi_all(f, 2);
  return 0.25 * (f(2.0) + f(-2.0)) - 0.5 * psi[0] + (s.omega / s.theta) * (s.nu4 - 3.0) * psi[2];
}

inline constexpr std::size_t kCovSeriesCap = 256;

// (omega/theta)(nu4 - 3) Psi_1(f1) Psi_1(f2) + 2 sum_k k Psi_k(f1) Psi_k(f2).
// The series is truncated once the last two increments are below
// 1e-10 (1 + |sum|); k_max is doubled up to 256 otherwise.
inline double limit_cov(const TestFunction& f1, const TestFunction& f2, const SpectralSummary& s,
                        std::size_t k_max = 32) {
  if (k_max < 8) throw DomainError("limit_cov: k_max must be >= 8");
  k_max = std::min(k_max, kCovSeriesCap);
  for (;;) {
    const std::vector<double> a = psi_all(f1, k_max);
    const std::vector<double> b = psi_all(f2, k_max);
    double sum = (s.omega / s.theta) * (s.nu4 - 3.0) * a[1] * b[1];
    double last = 0.0, before_last = 0.0;
    for (std::size_t k = 1; k <= k_max; ++k) {
      const double inc = 2.0 * static_cast<double>(k) * a[k] * b[k];
      sum += inc;
      before_last = last;
      last = inc;
    }
    const double tol = 1e-10 * (1.0 + std::abs(sum));
    if (std::abs(last) < tol && std::abs(before_last) < tol) return sum;
    if (k_max >= kCovSeriesCap) {
      throw NumericalError("limit_cov: series for (" + f1.label() + ", " + f2.label() +
                           ") did not converge by k = " + std::to_string(kCovSeriesCap));
    }
    k_max = std::min(2 * k_max, kCovSeriesCap);
  }
}

namespace detail {

// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(std::size_t n) {
  std::vector<double> x(n), w(n);
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (std::size_t j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * static_cast<double>(j) - 1.0) * z * p2 - (static_cast<double>(j) - 1.0) * p3) /
             static_cast<double>(j);
      }
      pp = static_cast<double>(n) * (z * p1 - p2) / (z * z - 1.0);
      const double dz = p1 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    w[n - 1 - i] = w[i];
  }
  return {x, w};
}

}  // namespace detail

struct CovIntegralOptions {
  std::size_t outer_nodes = 200;
  std::size_t inner_nodes = 96;  // per side of the singular point
};

// (1/4pi^2) \iint f1'(x) f2'(y) H(x, y) dx dy over [-2, 2]^2, evaluated in the
// angular variables x = 2cos(a), y = 2cos(b), where
//   H = (omega/theta)(nu4 - 3) 4 sin a sin b
//       + 4 log|sin((a + b)/2)| - 4 log|sin((a - b)/2)|.
// The inner integral is split at b = a and both halves are graded towards
// the logarithmic singularity, so no node ever sits on the diagonal.
inline double limit_cov_integral(const TestFunction& f1, const TestFunction& f2,
                                 const SpectralSummary& s, const CovIntegralOptions& opt = {}) {
  const double kappa = (s.omega / s.theta) * (s.nu4 - 3.0);
  const auto [xo, wo] = detail::gauss_legendre(opt.outer_nodes);
  const auto [xi, wi] = detail::gauss_legendre(opt.inner_nodes);
  const double pi = std::numbers::pi;

  auto integrand = [&](double a, double sa, double b) {
    const double sb = std::sin(b);
    const double h = kappa * 4.0 * sa * sb + 4.0 * std::log(std::abs(std::sin(0.5 * (a + b)))) -
                     4.0 * std::log(std::abs(std::sin(0.5 * (a - b))));
    return f2.derivative(2.0 * std::cos(b)) * sb * h;
  };

  double outer = 0.0;
  for (std::size_t i = 0; i < opt.outer_nodes; ++i) {
    const double a = 0.5 * pi * (xo[i] + 1.0);
    const double sa = std::sin(a);
    // b = a - a u^3 on [0, a] and b = a + (pi - a) u^3 on [a, pi], u in (0, 1].
    double inner = 0.0;
    for (std::size_t j = 0; j < opt.inner_nodes; ++j) {
      const double u = 0.5 * (xi[j] + 1.0);
      const double jac = 3.0 * u * u * 0.5 * wi[j];
      inner += jac * a * integrand(a, sa, a - a * u * u * u);
      inner += jac * (pi - a) * integrand(a, sa, a + (pi - a) * u * u * u);
    }
    outer += 0.5 * pi * wo[i] * f1.derivative(2.0 * std::cos(a)) * sa * inner;
  }
  return 4.0 * outer / (4.0 * pi * pi);
}

// Closed-form mean corrections for f(x) = x, x^2, x^3:
//   0,  (b~/b)(nu4 - 3) + 1,  c/(b sqrt b) sqrt(n/p) (n + 1 + (b~/b)(nu4 - 3)).
inline double polynomial_mean_correction(int degree, const SpectralSummary& s, double n, double p) {
  const double excess = (s.b_tilde / s.b) * (s.nu4 - 3.0);
  switch (degree) {
    case 1:
      return 0.0;
    case 2:
      return excess + 1.0;
    case 3:
      return s.skew() * std::sqrt(n / p) * (n + 1.0 + excess);
    default:
      throw DomainError("polynomial_mean_correction: degree must be 1, 2 or 3");
  }
}

enum class CenteringMode {
  contour,    // G_n(f) with the contour-integral correction
  q_norm,     // Q_n(f) with the simplified correction and limiting mean
  corollary,  // closed-form corrections for x, x^2, x^3
};

struct LssSample {
  std::vector<double> eigenvalues;
  double raw_sum = 0.0;
  double centered = 0.0;
  double standardized = 0.0;
};

// Deterministic part of the centering for a fixed (f, summary, n, p): the
// subtracted terms and the standard deviation. Computed once per experiment
// and applied to every replicate.
struct LssCentering {
  CenteringMode mode = CenteringMode::contour;
  double semicircle_term = 0.0;  // n * int f dF
  double correction = 0.0;
  double limit_mean = 0.0;       // only nonzero for q_norm
  double limit_sd = 1.0;
};

inline LssCentering make_centering(const TestFunction& f, const SpectralSummary& s, double n,
                                   double p, CenteringMode mode,
                                   const ContourOptions& copt = {}) {
  LssCentering c;
  c.mode = mode;
  c.semicircle_term = n * semicircle_integral(f);
  switch (mode) {
    case CenteringMode::contour:
      c.correction = contour_correction(f, s, n, p, copt);
      break;
    case CenteringMode::q_norm:
      c.correction = q_correction(f, s, n, p);
      c.limit_mean = limit_mean(f, s);
      break;
    case CenteringMode::corollary: {
      const auto& poly = f.polynomial_coefficients();
      int degree = 0;
      bool monomial = poly.has_value();
      if (monomial) {
        degree = static_cast<int>(poly->size()) - 1;
        for (int k = 0; k < degree; ++k) monomial = monomial && (*poly)[static_cast<std::size_t>(k)] == 0.0;
        monomial = monomial && (*poly)[static_cast<std::size_t>(degree)] == 1.0;
      }
      if (!monomial || degree < 1 || degree > 3) {
        throw DomainError("corollary centering applies only to x, x^2, x^3 (got " + f.label() + ")");
      }
      c.correction = polynomial_mean_correction(degree, s, n, p);
      break;
    }
  }
  const double var = limit_cov(f, f, s);
  // Rounding leaves a constant f with a variance near 1e-33, not exactly 0.
  const double level = c.semicircle_term / n;
  if (!(var > 1e-20 * (1.0 + level * level))) throw DomainError("center_lss: limiting variance of " + f.label() + " is not positive");
  c.limit_sd = std::sqrt(var);
  return c;
}

inline LssSample apply_centering(const TestFunction& f, std::span<const double> eigs,
                                 const LssCentering& c) {
  LssSample out;
  out.eigenvalues.assign(eigs.begin(), eigs.end());
  for (double l : eigs) out.raw_sum += f(l);
  out.centered = out.raw_sum - c.semicircle_term - c.correction;
  out.standardized = (out.centered - c.limit_mean) / c.limit_sd;
  return out;
}

inline LssSample center_lss(const TestFunction& f, std::span<const double> eigs,
                            const SpectralSummary& s, double n, double p, CenteringMode mode) {
  return apply_centering(f, eigs, make_centering(f, s, n, p, mode));
}

}  // namespace spectra
