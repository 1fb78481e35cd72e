#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "context.hpp"

namespace spartra {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kSqrt2 = 1.41421356237309504880;

inline int tri_index(int i, int j) {
  if (i < j) std::swap(i, j);
  return i * (i + 1) / 2 + j;
}

inline int tri_size(int n) { return n * (n + 1) / 2; }

// Inverse of tri_size; -1 when len is not a triangular number.
inline int tri_order(std::size_t len) {
  int n = static_cast<int>(std::lround((std::sqrt(8.0 * static_cast<double>(len) + 1.0) - 1.0) / 2.0));
  return tri_size(n) == static_cast<int>(len) ? n : -1;
}

class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(int n) : n_(n), a_(static_cast<std::size_t>(tri_size(n)), 0.0) {
    if (n < 0) throw DimensionError("SymMatrix: negative order");
  }

  static SymMatrix from_lower(int n, std::vector<double> lower) {
    if (n < 0 || static_cast<int>(lower.size()) != tri_size(n))
      throw DimensionError("SymMatrix: lower-triangle length does not match order");
    SymMatrix m;
    m.n_ = n;
    m.a_ = std::move(lower);
    m.check_finite();
    return m;
  }

  static SymMatrix from_dense(const Mat& d) {
    if (d.rows() != d.cols()) throw DimensionError("SymMatrix: dense input not square");
    const int n = static_cast<int>(d.rows());
    SymMatrix m(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) m.a_[tri_index(i, j)] = 0.5 * (d(i, j) + d(j, i));
    m.check_finite();
    return m;
  }

  static SymMatrix identity(int n) {
    SymMatrix m(n);
    for (int i = 0; i < n; ++i) m.a_[tri_index(i, i)] = 1.0;
    return m;
  }

  static SymMatrix diagonal(const Vec& d) {
    SymMatrix m(static_cast<int>(d.size()));
    for (int i = 0; i < m.n_; ++i) m.set(i, i, d(i));
    return m;
  }

  static SymMatrix outer(const Vec& x) {
    const int n = static_cast<int>(x.size());
    SymMatrix m(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) m.a_[tri_index(i, j)] = x(i) * x(j);
    m.check_finite();
    return m;
  }

  int size() const { return n_; }
  const std::vector<double>& lower() const { return a_; }

  double operator()(int i, int j) const { return a_[tri_index(i, j)]; }

  void set(int i, int j, double v) {
    if (!std::isfinite(v)) throw DomainError("SymMatrix: non-finite entry");
    a_[tri_index(i, j)] = v;
  }
  void add(int i, int j, double v) { set(i, j, (*this)(i, j) + v); }

  Mat dense() const {
    Mat d(n_, n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j <= i; ++j) d(i, j) = d(j, i) = a_[tri_index(i, j)];
    return d;
  }

  Vec diag() const {
    Vec d(n_);
    for (int i = 0; i < n_; ++i) d(i) = a_[tri_index(i, i)];
    return d;
  }

  double trace() const { return diag().sum(); }

  double dot(const SymMatrix& b) const {
    require_same(b);
    double s = 0.0;
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j <= i; ++j) s += (i == j ? 1.0 : 2.0) * a_[tri_index(i, j)] * b.a_[tri_index(i, j)];
    return s;
  }

  double quad(const Vec& x) const {
    if (x.size() != n_) throw DimensionError("SymMatrix::quad: length mismatch");
    return x.dot(dense() * x);
  }

  SymMatrix& operator+=(const SymMatrix& b) {
    require_same(b);
    for (std::size_t t = 0; t < a_.size(); ++t) a_[t] += b.a_[t];
    return *this;
  }
  SymMatrix& operator-=(const SymMatrix& b) {
    require_same(b);
    for (std::size_t t = 0; t < a_.size(); ++t) a_[t] -= b.a_[t];
    return *this;
  }
  SymMatrix& operator*=(double s) {
    for (double& v : a_) v *= s;
    check_finite();
    return *this;
  }
  friend SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
  friend SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }
  friend SymMatrix operator*(double s, SymMatrix a) { return a *= s; }
  friend SymMatrix operator*(SymMatrix a, double s) { return a *= s; }
  SymMatrix operator-() const { return (*this) * -1.0; }

  bool operator==(const SymMatrix& b) const { return n_ == b.n_ && a_ == b.a_; }

 private:
  void require_same(const SymMatrix& b) const {
    if (b.n_ != n_) throw DimensionError("SymMatrix: order mismatch");
  }
  void check_finite() const {
    for (double v : a_)
      if (!std::isfinite(v)) throw DomainError("SymMatrix: non-finite entry");
  }

  int n_ = 0;
  std::vector<double> a_;
};

struct EigDecomp {
  Vec values;   // ascending
  Mat vectors;  // columns
};

inline EigDecomp eig_dense(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(m);
  if (es.info() != Eigen::Success) throw NumericalError("eig_sym: eigensolver did not converge");
  return {es.eigenvalues(), es.eigenvectors()};
}

inline EigDecomp eig_sym(const SymMatrix& m) { return eig_dense(m.dense()); }

inline Vec eigvals_dense(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("eig_sym: eigensolver did not converge");
  return es.eigenvalues();
}

inline double lambda_min(const SymMatrix& m) { return eigvals_dense(m.dense())(0); }
inline double lambda_max(const SymMatrix& m) { return eigvals_dense(m.dense())(m.size() - 1); }

inline Vec svec(const SymMatrix& m) {
  const int n = m.size();
  Vec v(tri_size(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) v(tri_index(i, j)) = (i == j ? 1.0 : kSqrt2) * m(i, j);
  return v;
}

inline SymMatrix smat(const Vec& v) {
  const int n = tri_order(static_cast<std::size_t>(v.size()));
  if (n < 0) throw DimensionError("smat: length is not a triangular number");
  std::vector<double> lower(static_cast<std::size_t>(v.size()));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) lower[tri_index(i, j)] = (i == j ? 1.0 : 1.0 / kSqrt2) * v(tri_index(i, j));
  return SymMatrix::from_lower(n, std::move(lower));
}

inline Mat proj_psd_dense(const Mat& m) {
  const EigDecomp e = eig_dense(m);
  const Vec d = e.values.cwiseMax(0.0);
  return e.vectors * d.asDiagonal() * e.vectors.transpose();
}

inline SymMatrix proj_psd(const SymMatrix& m) { return SymMatrix::from_dense(proj_psd_dense(m.dense())); }

// k diag(Z) - Z
inline SymMatrix dop(const SymMatrix& z, int k) {
  if (k < 1) throw DomainError("dop: k must be >= 1");
  SymMatrix r = -z;
  for (int i = 0; i < z.size(); ++i) r.set(i, i, (k - 1) * z(i, i));
  return r;
}

struct Norms {
  double l1_entrywise = 0;
  double linf_entrywise = 0;
  double spectral = 0;
  double frobenius = 0;
  double trace = 0;
};

inline Norms norms(const SymMatrix& m) {
  Norms r;
  const int n = m.size();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double a = std::abs(m(i, j));
      r.l1_entrywise += a;
      r.linf_entrywise = std::max(r.linf_entrywise, a);
      r.frobenius += a * a;
    }
  r.frobenius = std::sqrt(r.frobenius);
  r.trace = m.trace();
  if (n > 0) r.spectral = eigvals_dense(m.dense()).cwiseAbs().maxCoeff();
  return r;
}

inline double spectral_norm(const SymMatrix& m) {
  return m.size() == 0 ? 0.0 : eigvals_dense(m.dense()).cwiseAbs().maxCoeff();
}

inline SymMatrix principal_submatrix(const SymMatrix& m, const std::vector<int>& s) {
  if (s.empty()) throw DimensionError("principal_submatrix: empty index set");
  for (int i : s)
    if (i < 0 || i >= m.size()) throw DimensionError("principal_submatrix: index out of range");
  const int k = static_cast<int>(s.size());
  SymMatrix r(k);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b <= a; ++b) r.set(a, b, m(s[a], s[b]));
  return r;
}

inline Mat principal_dense(const Mat& m, const std::vector<int>& s) {
  const int k = static_cast<int>(s.size());
  Mat r(k, k);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) r(a, b) = m(s[a], s[b]);
  return r;
}

// Perron root of an entrywise nonnegative square matrix. Power iteration on
// M + I from the all-ones vector; Collatz-Wielandt bounds decide convergence.
inline double spectral_radius_nonneg(const Mat& m, double rel_tol = 1e-9, int max_iter = 2000000) {
  if (m.rows() != m.cols()) throw DimensionError("spectral_radius_nonneg: not square");
  if (m.size() == 0) return 0.0;
  if ((m.array() < 0.0).any()) throw DomainError("spectral_radius_nonneg: negative entry");
  if (!m.allFinite()) throw DomainError("spectral_radius_nonneg: non-finite entry");
  const int n = static_cast<int>(m.rows());
  const double scale = m.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  const Mat b = m / scale;
  Vec v = Vec::Ones(n) / std::sqrt(static_cast<double>(n));
  double prev_upper = std::numeric_limits<double>::infinity();
  int still = 0;
  for (int it = 0; it < max_iter; ++it) {
    const Vec w = b * v;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (int i = 0; i < n; ++i) {
      const double r = w(i) / v(i);
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    if (hi - lo <= rel_tol * std::max(hi, 1e-300)) return scale * 0.5 * (hi + lo);
    if (std::abs(prev_upper - hi) <= 1e-3 * rel_tol * std::max(hi, 1e-300)) {
      if (++still >= 50) return scale * hi;
    } else {
      still = 0;
    }
    prev_upper = hi;
    Vec nv = w + v;
    v = nv / nv.norm();
  }
  throw NumericalError("spectral_radius_nonneg: iteration cap exceeded");
}

// Number of eigenvalues within rel*scale of the target value.
inline int count_close(const Vec& values, double target, double abs_tol) {
  int c = 0;
  for (int i = 0; i < values.size(); ++i)
    if (std::abs(values(i) - target) <= abs_tol) ++c;
  return c;
}

}  // namespace spartra
