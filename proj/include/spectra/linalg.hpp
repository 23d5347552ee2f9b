#pragma once

// Dense real linear algebra for the small-to-moderate matrices that appear in
// spectral statistics: Gram matrices (n x n), covariance factors, and their
// square roots. Storage is contiguous std::vector<double>.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spectra/error.hpp"

namespace spectra {

// General dense matrix, column-major.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw DimensionError("Matrix: data length " + std::to_string(data_.size()) +
                           " does not match " + std::to_string(rows_) + "x" +
                           std::to_string(cols_));
    }
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[j * rows_ + i]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[j * rows_ + i]; }

  std::span<double> col(std::size_t j) { return {data_.data() + j * rows_, rows_}; }
  std::span<const double> col(std::size_t j) const { return {data_.data() + j * rows_, rows_}; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Dense symmetric matrix. Construction symmetrizes the input as (M + M^T)/2,
// so entries(i, j) == entries(j, i) holds exactly afterwards.
class SymMatrix {
 public:
  SymMatrix() = default;

  // Entries are read row-major; for a symmetric input row- and column-major
  // coincide.
  SymMatrix(std::size_t dim, std::vector<double> entries) : dim_(dim), data_(std::move(entries)) {
    if (dim_ == 0) throw DimensionError("SymMatrix: dimension must be >= 1");
    if (data_.size() != dim_ * dim_) {
      throw DimensionError("SymMatrix: expected " + std::to_string(dim_ * dim_) +
                           " entries, got " + std::to_string(data_.size()));
    }
    for (std::size_t i = 0; i < dim_; ++i) {
      for (std::size_t j = i + 1; j < dim_; ++j) {
        const double avg = 0.5 * (data_[i * dim_ + j] + data_[j * dim_ + i]);
        data_[i * dim_ + j] = avg;
        data_[j * dim_ + i] = avg;
      }
    }
    for (double v : data_) {
      if (!std::isfinite(v)) throw DomainError("SymMatrix: non-finite entry");
    }
  }

  explicit SymMatrix(const Matrix& m) : SymMatrix(checked_square(m), copy_of(m)) {}

  static SymMatrix identity(std::size_t n) { return diagonal(std::vector<double>(n, 1.0)); }

  static SymMatrix diagonal(std::span<const double> diag) {
    const std::size_t n = diag.size();
    std::vector<double> e(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) e[i * n + i] = diag[i];
    return SymMatrix(n, std::move(e));
  }

  std::size_t dim() const { return dim_; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * dim_ + j]; }
  std::span<const double> entries() const { return data_; }

  // Row i, which is also column i.
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }

  std::vector<double> diag() const {
    std::vector<double> d(dim_);
    for (std::size_t i = 0; i < dim_; ++i) d[i] = (*this)(i, i);
    return d;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  Matrix to_matrix() const { return Matrix(dim_, dim_, data_); }

 private:
  static std::size_t checked_square(const Matrix& m) {
    if (m.rows() != m.cols()) throw DimensionError("SymMatrix: input is not square");
    return m.rows();
  }
  static std::vector<double> copy_of(const Matrix& m) { return {m.data().begin(), m.data().end()}; }

  std::size_t dim_ = 0;
  std::vector<double> data_;
};

struct EigenDecomposition {
  std::vector<double> values;  // descending
  Matrix vectors;              // column k pairs with values[k]; empty if not requested
};

// C = A * B.
inline Matrix multiply(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("multiply: inner dimensions " + std::to_string(a.cols()) + " and " +
                         std::to_string(b.rows()) + " differ");
  }
  Matrix c(a.rows(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j) {
    double* cj = c.col(j).data();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double bkj = b(k, j);
      if (bkj == 0.0) continue;
      const double* ak = a.col(k).data();
      for (std::size_t i = 0; i < a.rows(); ++i) cj[i] += ak[i] * bkj;
    }
  }
  return c;
}

inline Matrix multiply(const SymMatrix& a, const SymMatrix& b) {
  return multiply(a.to_matrix(), b.to_matrix());
}

inline Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t i = 0; i < a.rows(); ++i) t(j, i) = a(i, j);
  return t;
}

// Gram matrix Y^T Y of the columns of y (cols x cols).
inline SymMatrix gram(const Matrix& y) {
  const std::size_t n = y.cols();
  const std::size_t p = y.rows();
  std::vector<double> g(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* yi = y.col(i).data();
    for (std::size_t j = i; j < n; ++j) {
      const double* yj = y.col(j).data();
      double s = 0.0;
      for (std::size_t k = 0; k < p; ++k) s += yi[k] * yj[k];
      g[i * n + j] = s;
      g[j * n + i] = s;
    }
  }
  return SymMatrix(n, std::move(g));
}

namespace detail {

// Householder reduction of a symmetric matrix to tridiagonal form. On exit
// v holds the accumulated orthogonal transform (row-major), d the diagonal
// and e the subdiagonal in e[1..n-1].
inline void householder_tridiagonalize(std::size_t n, std::vector<double>& v,
                                       std::vector<double>& d, std::vector<double>& e) {
  auto V = [&](std::size_t i, std::size_t j) -> double& { return v[i * n + j]; };
  for (std::size_t j = 0; j < n; ++j) d[j] = V(n - 1, j);

  for (std::size_t i = n - 1; i > 0; --i) {
    double scale = 0.0;
    double h = 0.0;
    for (std::size_t k = 0; k < i; ++k) scale += std::abs(d[k]);
    if (scale == 0.0) {
      e[i] = d[i - 1];
      for (std::size_t j = 0; j < i; ++j) {
        d[j] = V(i - 1, j);
        V(i, j) = 0.0;
        V(j, i) = 0.0;
      }
    } else {
      for (std::size_t k = 0; k < i; ++k) {
        d[k] /= scale;
        h += d[k] * d[k];
      }
      double f = d[i - 1];
      double g = std::sqrt(h);
      if (f > 0) g = -g;
      e[i] = scale * g;
      h -= f * g;
      d[i - 1] = f - g;
      for (std::size_t j = 0; j < i; ++j) e[j] = 0.0;

      for (std::size_t j = 0; j < i; ++j) {
        f = d[j];
        V(j, i) = f;
        g = e[j] + V(j, j) * f;
        for (std::size_t k = j + 1; k + 1 <= i; ++k) {
          g += V(k, j) * d[k];
          e[k] += V(k, j) * f;
        }
        e[j] = g;
      }
      f = 0.0;
      for (std::size_t j = 0; j < i; ++j) {
        e[j] /= h;
        f += e[j] * d[j];
      }
      const double hh = f / (h + h);
      for (std::size_t j = 0; j < i; ++j) e[j] -= hh * d[j];
      for (std::size_t j = 0; j < i; ++j) {
        f = d[j];
        g = e[j];
        for (std::size_t k = j; k + 1 <= i; ++k) V(k, j) -= (f * e[k] + g * d[k]);
        d[j] = V(i - 1, j);
        V(i, j) = 0.0;
      }
    }
    d[i] = h;
  }

  for (std::size_t i = 0; i + 1 < n; ++i) {
    V(n - 1, i) = V(i, i);
    V(i, i) = 1.0;
    const double h = d[i + 1];
    if (h != 0.0) {
      for (std::size_t k = 0; k <= i; ++k) d[k] = V(k, i + 1) / h;
      for (std::size_t j = 0; j <= i; ++j) {
        double g = 0.0;
        for (std::size_t k = 0; k <= i; ++k) g += V(k, i + 1) * V(k, j);
        for (std::size_t k = 0; k <= i; ++k) V(k, j) -= g * d[k];
      }
    }
    for (std::size_t k = 0; k <= i; ++k) V(k, i + 1) = 0.0;
  }
  for (std::size_t j = 0; j < n; ++j) {
    d[j] = V(n - 1, j);
    V(n - 1, j) = 0.0;
  }
  V(n - 1, n - 1) = 1.0;
  e[0] = 0.0;
}

// Implicit-shift QL iteration on the tridiagonal (d, e). Rotations are
// accumulated into v when want_vectors is set.
inline void tridiagonal_ql(std::size_t n, std::vector<double>& v, std::vector<double>& d,
                           std::vector<double>& e, bool want_vectors) {
  auto V = [&](std::size_t i, std::size_t j) -> double& { return v[i * n + j]; };
  for (std::size_t i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;

  const double eps = std::ldexp(1.0, -52);
  const std::size_t iteration_cap = 30 * n;
  double f = 0.0;
  double tst1 = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
    std::size_t m = l;
    while (m < n) {
      if (std::abs(e[m]) <= eps * tst1) break;
      ++m;
    }
    if (m > l) {
      std::size_t iter = 0;
      do {
        if (++iter > iteration_cap) {
          throw NotConvergedError("sym_eigen: QL iteration did not converge for a " +
                                  std::to_string(n) + "x" + std::to_string(n) + " matrix");
        }
        double g = d[l];
        double p = (d[l + 1] - g) / (2.0 * e[l]);
        double r = std::hypot(p, 1.0);
        if (p < 0) r = -r;
        d[l] = e[l] / (p + r);
        d[l + 1] = e[l] * (p + r);
        const double dl1 = d[l + 1];
        double h = g - d[l];
        for (std::size_t i = l + 2; i < n; ++i) d[i] -= h;
        f += h;

        p = d[m];
        double c = 1.0, c2 = 1.0, c3 = 1.0;
        const double el1 = e[l + 1];
        double s = 0.0, s2 = 0.0;
        for (std::size_t ii = m; ii-- > l;) {
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e[ii];
          h = c * p;
          r = std::hypot(p, e[ii]);
          e[ii + 1] = s * r;
          s = e[ii] / r;
          c = p / r;
          p = c * d[ii] - s * g;
          d[ii + 1] = h + s * (c * g + s * d[ii]);
          if (want_vectors) {
            for (std::size_t k = 0; k < n; ++k) {
              h = V(k, ii + 1);
              V(k, ii + 1) = s * V(k, ii) + c * h;
              V(k, ii) = c * V(k, ii) - s * h;
            }
          }
        }
        p = -s * s2 * c3 * el1 * e[l] / dl1;
        e[l] = s * p;
        d[l] = c * p;
      } while (std::abs(e[l]) > eps * tst1);
    }
    d[l] += f;
    e[l] = 0.0;
  }
}

}  // namespace detail

// Eigendecomposition of a symmetric matrix by Householder tridiagonalization
// followed by implicit QL. Values are returned in descending order.
inline EigenDecomposition sym_eigen(const SymMatrix& m, bool want_vectors = true) {
  const std::size_t n = m.dim();
  std::vector<double> v(m.entries().begin(), m.entries().end());
  std::vector<double> d(n), e(n);
  detail::householder_tridiagonalize(n, v, d, e);
  detail::tridiagonal_ql(n, v, d, e, want_vectors);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return d[a] > d[b]; });

  EigenDecomposition out;
  out.values.resize(n);
  for (std::size_t k = 0; k < n; ++k) out.values[k] = d[order[k]];
  if (want_vectors) {
    out.vectors = Matrix(n, n);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v[i * n + order[k]];
  }
  return out;
}

inline std::vector<double> sym_eigenvalues(const SymMatrix& m) {
  return sym_eigen(m, false).values;
}

namespace detail {

// V * diag(g(lambda)) * V^T.
template <class Fn>
SymMatrix spectral_map(const EigenDecomposition& ed, Fn&& g) {
  const std::size_t n = ed.values.size();
  std::vector<double> gv(n);
  for (std::size_t k = 0; k < n; ++k) gv[k] = g(ed.values[k]);
  std::vector<double> out(n * n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    if (gv[k] == 0.0) continue;
    const double* vk = ed.vectors.col(k).data();
    for (std::size_t i = 0; i < n; ++i) {
      const double a = gv[k] * vk[i];
      double* row = out.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += a * vk[j];
    }
  }
  return SymMatrix(n, std::move(out));
}

inline double spectral_norm_of(const EigenDecomposition& ed) {
  double norm = 0.0;
  for (double l : ed.values) norm = std::max(norm, std::abs(l));
  return norm;
}

}  // namespace detail

// Principal square root of a positive semidefinite matrix. Eigenvalues down to
// -1e-10 * ||M|| are treated as numerical noise and clipped to zero.
inline SymMatrix sqrt_psd(const SymMatrix& m) {
  const EigenDecomposition ed = sym_eigen(m);
  const double tol = 1e-10 * detail::spectral_norm_of(ed);
  if (ed.values.back() < -tol) {
    throw NotPsdError("sqrt_psd: eigenvalue " + std::to_string(ed.values.back()) +
                      " is negative beyond tolerance");
  }
  return detail::spectral_map(ed, [](double l) { return std::sqrt(std::max(l, 0.0)); });
}

// M^{-1/2}; requires min eigenvalue > 1e-12 * ||M||.
inline SymMatrix inv_sqrt_psd(const SymMatrix& m) {
  const EigenDecomposition ed = sym_eigen(m);
  const double norm = detail::spectral_norm_of(ed);
  if (ed.values.back() < -1e-10 * norm) {
    throw NotPsdError("inv_sqrt_psd: eigenvalue " + std::to_string(ed.values.back()) +
                      " is negative beyond tolerance");
  }
  if (!(ed.values.back() > 1e-12 * norm)) {
    throw SingularError("inv_sqrt_psd: matrix is singular (min eigenvalue " +
                        std::to_string(ed.values.back()) + ")");
  }
  return detail::spectral_map(ed, [](double l) { return 1.0 / std::sqrt(l); });
}

// log|M| through a Cholesky factorization.
inline double log_det_pd(const SymMatrix& m) {
  const std::size_t n = m.dim();
  std::vector<double> l(n * n, 0.0);  // lower factor, row-major
  double logdet = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double diag = m(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= l[j * n + k] * l[j * n + k];
    if (!(diag > 0.0)) {
      throw NotPsdError("log_det_pd: Cholesky pivot " + std::to_string(j) +
                        " is not positive; matrix is not positive definite");
    }
    const double ljj = std::sqrt(diag);
    l[j * n + j] = ljj;
    logdet += 2.0 * std::log(ljj);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = m(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l[i * n + k] * l[j * n + k];
      l[i * n + j] = s / ljj;
    }
  }
  return logdet;
}

// (A kron B) v without forming the Kronecker product. v = vec(E) where E is
// p2 x p1 and column j of E occupies v[j*p2 .. j*p2 + p2 - 1]; the result is
// vec(B E A^T) in the same layout.
inline std::vector<double> kron_apply(const SymMatrix& a, const SymMatrix& b,
                                      std::span<const double> v) {
  const std::size_t p1 = a.dim();
  const std::size_t p2 = b.dim();
  if (v.size() != p1 * p2) {
    throw DimensionError("kron_apply: vector length " + std::to_string(v.size()) +
                         " does not match " + std::to_string(p1) + "*" + std::to_string(p2));
  }
  // BE, column by column: (BE)_{:,k} = sum_l E(l,k) B_{:,l}; B symmetric so
  // its columns are its rows.
  std::vector<double> be(p1 * p2, 0.0);
  for (std::size_t k = 0; k < p1; ++k) {
    double* out = be.data() + k * p2;
    for (std::size_t l = 0; l < p2; ++l) {
      const double elk = v[k * p2 + l];
      if (elk == 0.0) continue;
      const double* bl = b.row(l).data();
      for (std::size_t i = 0; i < p2; ++i) out[i] += elk * bl[i];
    }
  }
  // (BE) A^T: column j = sum_k A(j,k) (BE)_{:,k}.
  std::vector<double> result(p1 * p2, 0.0);
  for (std::size_t j = 0; j < p1; ++j) {
    double* out = result.data() + j * p2;
    for (std::size_t k = 0; k < p1; ++k) {
      const double ajk = a(j, k);
      if (ajk == 0.0) continue;
      const double* src = be.data() + k * p2;
      for (std::size_t i = 0; i < p2; ++i) out[i] += ajk * src[i];
    }
  }
  return result;
}

// tr(M^k) for k in 1..4 by repeated multiplication.
inline double trace_power(const SymMatrix& m, int k) {
  if (k < 1 || k > 4) throw DomainError("trace_power: k must be in {1,2,3,4}");
  const std::size_t n = m.dim();
  if (k == 1) {
    double t = 0.0;
    for (std::size_t i = 0; i < n; ++i) t += m(i, i);
    return t;
  }
  if (k == 2) {
    double t = 0.0;
    for (double v : m.entries()) t += v * v;
    return t;
  }
  const Matrix mm = m.to_matrix();
  const Matrix m2 = multiply(mm, mm);
  double t = 0.0;
  if (k == 3) {
    // tr(M^2 M) = sum_ij (M^2)_ij M_ji
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < n; ++i) t += m2(i, j) * mm(j, i);
  } else {
    for (double v : m2.data()) t += v * v;
  }
  return t;
}

}  // namespace spectra
