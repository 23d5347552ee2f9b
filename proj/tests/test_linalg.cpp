#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "spectra/error.hpp"
#include "spectra/linalg.hpp"

using namespace spectra;

namespace {

SymMatrix random_symmetric(std::size_t n, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> e(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) e[i * n + j] = e[j * n + i] = u(gen);
  return SymMatrix(n, e);
}

SymMatrix random_pd(std::size_t n, unsigned seed) {
  const SymMatrix r = random_symmetric(n, seed);
  Matrix g = multiply(r, r);
  for (std::size_t i = 0; i < n; ++i) g(i, i) += 0.5;
  return SymMatrix(g);
}

// det(M - x I) by Gaussian elimination with partial pivoting.
double char_poly(const SymMatrix& m, double x) {
  const std::size_t n = m.dim();
  std::vector<double> a(m.entries().begin(), m.entries().end());
  for (std::size_t i = 0; i < n; ++i) a[i * n + i] -= x;
  double det = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a[i * n + k]) > std::abs(a[piv * n + k])) piv = i;
    if (a[piv * n + k] == 0.0) return 0.0;
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a[k * n + j], a[piv * n + j]);
      det = -det;
    }
    det *= a[k * n + k];
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a[i * n + k] / a[k * n + k];
      for (std::size_t j = k; j < n; ++j) a[i * n + j] -= f * a[k * n + j];
    }
  }
  return det;
}

// Roots of the characteristic polynomial: scan for sign changes, then bisect.
std::vector<double> bisection_roots(const SymMatrix& m) {
  const double bound = 1.0 + static_cast<double>(m.dim()) * m.max_abs();
  const int grid = 200000;
  std::vector<double> roots;
  double prev_x = -bound, prev_f = char_poly(m, prev_x);
  for (int g = 1; g <= grid; ++g) {
    const double x = -bound + 2.0 * bound * g / grid;
    const double f = char_poly(m, x);
    if ((prev_f < 0) != (f < 0)) {
      double lo = prev_x, hi = x, flo = prev_f;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = char_poly(m, mid);
        if ((fm < 0) == (flo < 0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      roots.push_back(0.5 * (lo + hi));
    }
    prev_x = x;
    prev_f = f;
  }
  std::sort(roots.rbegin(), roots.rend());
  return roots;
}

std::vector<double> explicit_kron_times(const SymMatrix& a, const SymMatrix& b, const std::vector<double>& v) {
  const std::size_t p1 = a.dim(), p2 = b.dim(), n = p1 * p2;
  std::vector<double> out(n, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) out[r] += a(r / p2, c / p2) * b(r % p2, c % p2) * v[c];
  return out;
}

double frob_diff(const Matrix& x, const Matrix& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.data().size(); ++i) s += std::pow(x.data()[i] - y.data()[i], 2);
  return std::sqrt(s);
}

}  // namespace

TEST(SymMatrix, SymmetrizesOnConstruction) {
  const SymMatrix m(2, {1.0, 2.0, 4.0, 3.0});
  EXPECT_EQ(m(0, 1), 3.0);
  EXPECT_EQ(m(1, 0), 3.0);
}

TEST(SymMatrix, RejectsBadInput) {
  EXPECT_THROW(SymMatrix(0, {}), DimensionError);
  EXPECT_THROW(SymMatrix(2, {1.0, 2.0, 3.0}), DimensionError);
  EXPECT_THROW(SymMatrix(1, {std::nan("")}), DomainError);
  EXPECT_THROW(SymMatrix(Matrix(2, 3)), DimensionError);
}

TEST(SymEigen, DiagonalInputSortedDescending) {
  const auto ed = sym_eigen(SymMatrix::diagonal(std::vector<double>{3.0, 1.0, 2.0}));
  EXPECT_NEAR(ed.values[0], 3.0, 1e-14);
  EXPECT_NEAR(ed.values[1], 2.0, 1e-14);
  EXPECT_NEAR(ed.values[2], 1.0, 1e-14);
}

TEST(SymEigen, SwapMatrix) {
  const auto v = sym_eigenvalues(SymMatrix(2, {0.0, 1.0, 1.0, 0.0}));
  EXPECT_NEAR(v[0], 1.0, 1e-14);
  EXPECT_NEAR(v[1], -1.0, 1e-14);
}

TEST(SymEigen, MatchesBisectionOracle) {
  for (unsigned seed : {1u, 2u, 3u}) {
    const SymMatrix m = random_symmetric(6, seed);
    const auto values = sym_eigenvalues(m);
    const auto roots = bisection_roots(m);
    ASSERT_EQ(roots.size(), 6u);
    for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(values[i], roots[i], 1e-8);
  }
}

TEST(SymEigen, ReconstructionAndOrthonormality) {
  for (std::size_t n : {1u, 2u, 5u, 17u, 60u}) {
    const SymMatrix m = random_symmetric(n, static_cast<unsigned>(n));
    const auto ed = sym_eigen(m);
    EXPECT_TRUE(std::is_sorted(ed.values.rbegin(), ed.values.rend()));
    const Matrix& v = ed.vectors;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double rec = 0.0, dot = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          rec += v(i, k) * ed.values[k] * v(j, k);
          dot += v(k, i) * v(k, j);
        }
        EXPECT_NEAR(rec, m(i, j), 1e-10 * static_cast<double>(n) * m.max_abs());
        EXPECT_NEAR(dot, i == j ? 1.0 : 0.0, 1e-10);
      }
    }
  }
}

TEST(SymEigen, TridiagonalSpectrumClosedForm) {
  const std::size_t p = 30;
  std::vector<double> e(p * p, 0.0);
  for (std::size_t i = 0; i < p; ++i) {
    e[i * p + i] = 2.0;
    if (i + 1 < p) e[i * p + i + 1] = e[(i + 1) * p + i] = 1.0;
  }
  const auto values = sym_eigenvalues(SymMatrix(p, e));
  for (std::size_t k = 1; k <= p; ++k) {
    EXPECT_NEAR(values[k - 1], 2.0 + 2.0 * std::cos(k * M_PI / (p + 1)), 1e-12);
  }
}

TEST(SqrtPsd, IdentityAndDiagonal) {
  const SymMatrix id = sqrt_psd(SymMatrix::identity(3));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(id(i, j), i == j ? 1.0 : 0.0, 1e-14);
  const SymMatrix d = SymMatrix::diagonal(std::vector<double>{4.0, 9.0});
  const SymMatrix r = sqrt_psd(d);
  EXPECT_NEAR(r(0, 0), 2.0, 1e-14);
  EXPECT_NEAR(r(1, 1), 3.0, 1e-14);
  EXPECT_NEAR(r(0, 1), 0.0, 1e-14);
  const SymMatrix ir = inv_sqrt_psd(d);
  EXPECT_NEAR(ir(0, 0), 0.5, 1e-14);
  EXPECT_NEAR(ir(1, 1), 1.0 / 3.0, 1e-14);
}

TEST(SqrtPsd, ToeplitzMultipliesBack) {
  const SymMatrix m(2, {1.0, 0.45, 0.45, 1.0});
  const SymMatrix s = sqrt_psd(m);
  EXPECT_LT(frob_diff(multiply(s, s), m.to_matrix()), 1e-10);
  const SymMatrix is = inv_sqrt_psd(m);
  const Matrix prod = multiply(multiply(is, is), m.to_matrix());
  EXPECT_LT(frob_diff(prod, Matrix::identity(2)), 1e-10);
}

TEST(SqrtPsd, EigenvaluesAreSquareRoots) {
  const SymMatrix m = random_pd(8, 11);
  const auto ev = sym_eigenvalues(m);
  const auto rv = sym_eigenvalues(sqrt_psd(m));
  for (std::size_t i = 0; i < ev.size(); ++i) EXPECT_NEAR(rv[i], std::sqrt(ev[i]), 1e-8);
}

TEST(SqrtPsd, ClipsRoundoffButRejectsIndefinite) {
  EXPECT_NO_THROW(sqrt_psd(SymMatrix::diagonal(std::vector<double>{1.0, -1e-13})));
  EXPECT_THROW(sqrt_psd(SymMatrix::diagonal(std::vector<double>{1.0, -0.1})), NotPsdError);
  EXPECT_THROW(inv_sqrt_psd(SymMatrix::diagonal(std::vector<double>{1.0, 0.0})), SingularError);
}

TEST(LogDet, KnownValues) {
  EXPECT_NEAR(log_det_pd(SymMatrix::identity(7)), 0.0, 1e-15);
  EXPECT_NEAR(log_det_pd(SymMatrix::diagonal(std::vector<double>{2.0, 0.5})), 0.0, 1e-15);
}

TEST(LogDet, MatchesEigenvalues) {
  const SymMatrix m = random_pd(5, 5);
  double expected = 0.0;
  for (double v : sym_eigenvalues(m)) expected += std::log(v);
  EXPECT_NEAR(log_det_pd(m), expected, 1e-8 * std::abs(expected) + 1e-12);
}

TEST(LogDet, InverseCancels) {
  const SymMatrix m = random_pd(6, 21);
  const SymMatrix is = inv_sqrt_psd(m);
  const SymMatrix inv(multiply(is, is));
  EXPECT_NEAR(log_det_pd(m) + log_det_pd(inv), 0.0, 1e-6);
}

TEST(LogDet, RejectsNonPositiveDefinite) {
  EXPECT_THROW(log_det_pd(SymMatrix::diagonal(std::vector<double>{1.0, -1.0})), NotPsdError);
}

TEST(KronApply, IdentityAndScalars) {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
  EXPECT_EQ(kron_apply(SymMatrix::identity(2), SymMatrix::identity(3), v), v);
  const auto r = kron_apply(SymMatrix(1, {2.0}), SymMatrix(1, {3.0}), std::vector<double>{5.0});
  EXPECT_EQ(r, std::vector<double>{30.0});
}

TEST(KronApply, MatchesExplicitKronecker) {
  for (std::size_t p1 = 1; p1 <= 4; ++p1) {
    for (std::size_t p2 = 1; p2 <= 4; ++p2) {
      const SymMatrix a = random_symmetric(p1, static_cast<unsigned>(10 * p1 + p2));
      const SymMatrix b = random_symmetric(p2, static_cast<unsigned>(100 + 10 * p1 + p2));
      // Every basis vector recovers one column of A kron B.
      for (std::size_t c = 0; c < p1 * p2; ++c) {
        std::vector<double> e(p1 * p2, 0.0);
        e[c] = 1.0;
        const auto got = kron_apply(a, b, e);
        const auto want = explicit_kron_times(a, b, e);
        for (std::size_t r = 0; r < got.size(); ++r) EXPECT_NEAR(got[r], want[r], 1e-12);
      }
    }
  }
}

TEST(KronApply, RejectsLengthMismatch) {
  EXPECT_THROW(kron_apply(SymMatrix::identity(2), SymMatrix::identity(2), std::vector<double>(3)),
               DimensionError);
}

TEST(TracePower, KnownValues) {
  for (int k = 1; k <= 4; ++k) EXPECT_DOUBLE_EQ(trace_power(SymMatrix::identity(9), k), 9.0);
  EXPECT_NEAR(trace_power(SymMatrix::diagonal(std::vector<double>{0.5, 1.0}), 3), 1.125, 1e-15);
  EXPECT_THROW(trace_power(SymMatrix::identity(2), 5), DomainError);
  EXPECT_THROW(trace_power(SymMatrix::identity(2), 0), DomainError);
}

TEST(TracePower, MatchesEigenvalues) {
  const SymMatrix tri(3, {2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0});
  for (const SymMatrix& m : {tri, random_symmetric(50, 3)}) {
    const auto ev = sym_eigenvalues(m);
    for (int k = 1; k <= 4; ++k) {
      double expected = 0.0;
      for (double l : ev) expected += std::pow(l, k);
      EXPECT_NEAR(trace_power(m, k), expected, 1e-9 * std::max(1.0, std::abs(expected)));
    }
  }
}

TEST(TracePower, SquareEqualsProductPath) {
  const SymMatrix m = random_symmetric(12, 4);
  const Matrix m2 = multiply(m, m);
  double tr = 0.0;
  for (std::size_t i = 0; i < 12; ++i) tr += m2(i, i);
  EXPECT_NEAR(trace_power(m, 2), tr, 1e-10 * tr);
}

TEST(Gram, EqualsTransposeProduct) {
  Matrix y(5, 3);
  std::mt19937_64 gen(9);
  std::normal_distribution<double> z;
  for (double& v : y.data()) v = z(gen);
  const SymMatrix g = gram(y);
  const Matrix ref = multiply(transpose(y), y);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(g(i, j), ref(i, j), 1e-13);
}
