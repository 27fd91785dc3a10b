#pragma once

// Dense matrices and the handful of kernels the estimator needs: sample
// covariance, Cholesky, SPD inversion, a cyclic Jacobi eigensolver and the
// matrix norms (l1, l-infinity, spectrum, Frobenius).
//
// Storage is row-major. Every summation runs in a fixed index order so
// results are bitwise reproducible.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "slasso/error.hpp"

namespace slasso {

class Matrix {
 public:
  Matrix() = default;

  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    if (!std::isfinite(fill)) throw NonFinite("Matrix: non-finite fill value");
  }

  Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
      : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (data_.size() != rows_ * cols_) {
      detail::throw_dims("Matrix: entry count " + std::to_string(data_.size()) +
                         " does not match " + std::to_string(rows_) + "x" +
                         std::to_string(cols_));
    }
    for (double v : data_) {
      if (!std::isfinite(v)) throw NonFinite("Matrix: non-finite entry");
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Matrix diagonal(std::span<const double> d) {
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double operator()(std::size_t i, std::size_t j) const noexcept {
    return data_[i * cols_ + j];
  }
  double& operator()(std::size_t i, std::size_t j) noexcept {
    return data_[i * cols_ + j];
  }

  std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<double> row(std::size_t i) noexcept {
    return {data_.data() + i * cols_, cols_};
  }

  std::span<const double> data() const noexcept { return data_; }

  std::vector<double> column(std::size_t j) const {
    std::vector<double> c(rows_);
    for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
  }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  /// Exact (bitwise) symmetry.
  bool is_symmetric() const noexcept {
    if (!square()) return false;
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = i + 1; j < cols_; ++j)
        if ((*this)(i, j) != (*this)(j, i)) return false;
    return true;
  }

  bool all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// A real symmetric matrix. Symmetry is exact: entry (i,j) and (j,i) are the
/// same double.
class SymMatrix {
 public:
  SymMatrix() = default;

  explicit SymMatrix(std::size_t p, double diag = 0.0) : m_(p, p) {
    for (std::size_t i = 0; i < p; ++i) m_(i, i) = diag;
  }

  /// Throws NotSymmetric unless `m` is exactly symmetric.
  explicit SymMatrix(Matrix m) : m_(std::move(m)) {
    if (!m_.square()) detail::throw_dims("SymMatrix: matrix is not square");
    if (!m_.all_finite()) throw NonFinite("SymMatrix: non-finite entry");
    if (!m_.is_symmetric()) throw NotSymmetric("SymMatrix: matrix is not exactly symmetric");
  }

  /// Builds a symmetric matrix from the upper triangle of `m`.
  static SymMatrix from_upper(const Matrix& m) {
    if (!m.square()) detail::throw_dims("SymMatrix::from_upper: matrix is not square");
    Matrix s = m;
    for (std::size_t i = 0; i < s.rows(); ++i)
      for (std::size_t j = i + 1; j < s.cols(); ++j) s(j, i) = s(i, j);
    return SymMatrix(std::move(s));
  }

  static SymMatrix identity(std::size_t p) { return SymMatrix(p, 1.0); }

  static SymMatrix diagonal(std::span<const double> d) {
    return SymMatrix(Matrix::diagonal(d));
  }

  std::size_t dim() const noexcept { return m_.rows(); }
  double operator()(std::size_t i, std::size_t j) const noexcept { return m_(i, j); }

  void set(std::size_t i, std::size_t j, double v) {
    if (!std::isfinite(v)) throw NonFinite("SymMatrix::set: non-finite value");
    m_(i, j) = v;
    m_(j, i) = v;
  }

  std::span<const double> row(std::size_t i) const noexcept { return m_.row(i); }
  std::vector<double> diag() const {
    std::vector<double> d(dim());
    for (std::size_t i = 0; i < dim(); ++i) d[i] = m_(i, i);
    return d;
  }

  const Matrix& matrix() const noexcept { return m_; }
  operator const Matrix&() const noexcept { return m_; }

  friend bool operator==(const SymMatrix&, const SymMatrix&) = default;

 private:
  Matrix m_;
};

struct EigenDecomposition {
  std::vector<double> values;  ///< ascending
  Matrix vectors;              ///< column k pairs with values[k]
};

//---------------------------------------------------------------------------//
// Elementary arithmetic
//---------------------------------------------------------------------------//

inline Matrix multiply(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) detail::throw_dims("multiply: inner dimensions differ");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

inline Matrix operator-(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) detail::throw_dims("subtract: shapes differ");
  Matrix c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = a(i, j) - b(i, j);
  return c;
}

inline Matrix operator+(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) detail::throw_dims("add: shapes differ");
  Matrix c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = a(i, j) + b(i, j);
  return c;
}

inline SymMatrix operator-(const SymMatrix& a, const SymMatrix& b) {
  return SymMatrix(a.matrix() - b.matrix());
}

inline double max_abs(const Matrix& m) noexcept {
  double r = 0.0;
  for (double v : m.data()) r = std::max(r, std::abs(v));
  return r;
}

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// x' A x for symmetric A.
inline double quadratic_form(const SymMatrix& a, std::span<const double> x) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    if (x[i] == 0.0) continue;
    s += x[i] * dot(a.row(i), x);
  }
  return s;
}

//---------------------------------------------------------------------------//
// Sample covariance
//---------------------------------------------------------------------------//

/// X'X/n, or the column-centered (X - xbar)'(X - xbar)/n when `center` is set.
inline SymMatrix sample_covariance(const Matrix& data, bool center = false) {
  const std::size_t n = data.rows();
  const std::size_t p = data.cols();
  if (n == 0 || p == 0) detail::throw_dims("sample_covariance: empty data matrix");
  if (!data.all_finite()) throw NonFinite("sample_covariance: non-finite data");

  std::vector<double> mean(p, 0.0);
  if (center) {
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t j = 0; j < p; ++j) mean[j] += data(r, j);
    for (double& m : mean) m /= static_cast<double>(n);
  }

  Matrix s(p, p);
  std::vector<double> x(p);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < p; ++j) x[j] = data(r, j) - mean[j];
    for (std::size_t i = 0; i < p; ++i) {
      const double xi = x[i];
      if (xi == 0.0) continue;
      for (std::size_t j = i; j < p; ++j) s(i, j) += xi * x[j];
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i; j < p; ++j) s(i, j) *= inv_n;
  return SymMatrix::from_upper(s);
}

//---------------------------------------------------------------------------//
// Cholesky and SPD inversion
//---------------------------------------------------------------------------//

/// Lower-triangular L with L L' = a. A pivot at or below
/// p * machine-epsilon * max diagonal raises NotPositiveDefinite.
inline Matrix cholesky(const SymMatrix& a) {
  const std::size_t p = a.dim();
  double max_diag = 0.0;
  for (std::size_t i = 0; i < p; ++i) max_diag = std::max(max_diag, a(i, i));
  if (!(max_diag > 0.0)) throw NotPositiveDefinite("cholesky: no positive diagonal entry");
  const double tol = static_cast<double>(p) * std::numeric_limits<double>::epsilon() * max_diag;

  Matrix l(p, p);
  for (std::size_t j = 0; j < p; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > tol)) {
      throw NotPositiveDefinite("cholesky: pivot " + std::to_string(j) + " is " +
                                std::to_string(d) + ", matrix is singular or indefinite");
    }
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < p; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

/// Inverse of a lower-triangular matrix with nonzero diagonal.
inline Matrix invert_lower(const Matrix& l) {
  const std::size_t p = l.rows();
  Matrix inv(p, p);
  for (std::size_t j = 0; j < p; ++j) {
    inv(j, j) = 1.0 / l(j, j);
    for (std::size_t i = j + 1; i < p; ++i) {
      double s = 0.0;
      for (std::size_t k = j; k < i; ++k) s -= l(i, k) * inv(k, j);
      inv(i, j) = s / l(i, i);
    }
  }
  return inv;
}

/// Inverse of a symmetric positive definite matrix through its Cholesky factor.
inline SymMatrix invert_spd(const SymMatrix& a) {
  const Matrix linv = invert_lower(cholesky(a));
  const std::size_t p = a.dim();
  // a^{-1} = L^{-T} L^{-1}
  Matrix r(p, p);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i; j < p; ++j) {
      double s = 0.0;
      for (std::size_t k = j; k < p; ++k) s += linv(k, i) * linv(k, j);
      r(i, j) = s;
    }
  }
  return SymMatrix::from_upper(r);
}

//---------------------------------------------------------------------------//
// Symmetric eigendecomposition (cyclic Jacobi)
//---------------------------------------------------------------------------//

inline constexpr int kJacobiMaxSweeps = 50;

inline EigenDecomposition sym_eigen(const SymMatrix& input) {
  const std::size_t p = input.dim();
  Matrix a = input.matrix();
  Matrix v = Matrix::identity(p);

  double norm2 = 0.0;
  for (double x : a.data()) norm2 += x * x;
  const double eps = std::numeric_limits<double>::epsilon();
  const double off_tol = 16.0 * eps * eps * norm2;

  bool converged = false;
  for (int sweep = 0; sweep < kJacobiMaxSweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = i + 1; j < p; ++j) off += a(i, j) * a(i, j);
    if (off <= off_tol) {
      converged = true;
      break;
    }

    for (std::size_t ip = 0; ip + 1 < p; ++ip) {
      for (std::size_t iq = ip + 1; iq < p; ++iq) {
        const double apq = a(ip, iq);
        if (apq == 0.0) continue;
        const double app = a(ip, ip);
        const double aqq = a(iq, iq);
        // Negligible relative to both diagonals: annihilate without rotating.
        if (sweep > 3 && std::abs(apq) <= eps * 0.5 * std::abs(app) &&
            std::abs(apq) <= eps * 0.5 * std::abs(aqq)) {
          a(ip, iq) = 0.0;
          a(iq, ip) = 0.0;
          continue;
        }
        const double theta = (aqq - app) / (2.0 * apq);
        double t;
        if (std::abs(theta) > 1e150) {
          t = 0.5 / theta;
        } else {
          t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        }
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        a(ip, ip) = app - t * apq;
        a(iq, iq) = aqq + t * apq;
        a(ip, iq) = 0.0;
        a(iq, ip) = 0.0;
        for (std::size_t k = 0; k < p; ++k) {
          if (k == ip || k == iq) continue;
          const double akp = a(k, ip);
          const double akq = a(k, iq);
          const double nkp = c * akp - s * akq;
          const double nkq = s * akp + c * akq;
          a(k, ip) = nkp;
          a(ip, k) = nkp;
          a(k, iq) = nkq;
          a(iq, k) = nkq;
        }
        for (std::size_t k = 0; k < p; ++k) {
          const double vkp = v(k, ip);
          const double vkq = v(k, iq);
          v(k, ip) = c * vkp - s * vkq;
          v(k, iq) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (!converged) {
    double off = 0.0;
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = i + 1; j < p; ++j) off += a(i, j) * a(i, j);
    if (off > off_tol) {
      throw NonConvergence("sym_eigen: Jacobi iteration did not converge in " +
                           std::to_string(kJacobiMaxSweeps) + " sweeps");
    }
  }

  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });

  EigenDecomposition out{std::vector<double>(p), Matrix(p, p)};
  for (std::size_t k = 0; k < p; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t i = 0; i < p; ++i) out.vectors(i, k) = v(i, order[k]);
  }
  return out;
}

//---------------------------------------------------------------------------//
// Norms
//---------------------------------------------------------------------------//

/// Maximum absolute column sum.
inline double matrix_l1_norm(const Matrix& m) noexcept {
  double best = 0.0;
  for (std::size_t j = 0; j < m.cols(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) s += std::abs(m(i, j));
    best = std::max(best, s);
  }
  return best;
}

/// Maximum absolute row sum.
inline double matrix_linf_norm(const Matrix& m) noexcept {
  double best = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) s += std::abs(m(i, j));
    best = std::max(best, s);
  }
  return best;
}

inline double frobenius_norm(const Matrix& m) noexcept {
  double s = 0.0;
  for (double v : m.data()) s += v * v;
  return std::sqrt(s);
}

/// Largest singular value. Exactly symmetric input uses the eigenvalues of
/// `m` directly; anything else goes through the smaller Gram product.
inline double spectrum_norm(const Matrix& m) {
  if (m.empty()) return 0.0;
  if (m.is_symmetric()) {
    const auto eig = sym_eigen(SymMatrix(m));
    return std::max(std::abs(eig.values.front()), std::abs(eig.values.back()));
  }
  const bool tall = m.rows() >= m.cols();
  const std::size_t k = tall ? m.cols() : m.rows();
  Matrix g(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < k; ++j) {
      double s = 0.0;
      if (tall) {
        for (std::size_t r = 0; r < m.rows(); ++r) s += m(r, i) * m(r, j);
      } else {
        for (std::size_t c = 0; c < m.cols(); ++c) s += m(i, c) * m(j, c);
      }
      g(i, j) = s;
    }
  }
  const auto eig = sym_eigen(SymMatrix::from_upper(g));
  return std::sqrt(std::max(0.0, eig.values.back()));
}

}  // namespace slasso
