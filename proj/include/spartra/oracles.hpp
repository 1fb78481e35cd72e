#pragma once

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "combinatorics.hpp"
#include "context.hpp"
#include "relaxations.hpp"
#include "support.hpp"
#include "symmat.hpp"

namespace spartra {

struct OracleResult {
  double value = 0.0;
  std::vector<int> support;
  Vec x;
  Vec v;  // second factor for CCA
  std::vector<int> support2;
  long long enumerated = 0;
  bool rank_deficient = false;
};

// Ties keep the lexicographically first support because replacement needs strict improvement.
inline OracleResult spca_exact(const SymMatrix& Sigma, int k, long long guard = default_context().enumeration_guard) {
  const int n = Sigma.size();
  detail::check_k(k, n, "spca_exact");
  require_enumerable(binomial(n, k), guard, "spca_exact");
  const Mat d = Sigma.dense();
  OracleResult r;
  r.value = -std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Mat> es;
  for_each_combination(n, k, [&](const std::vector<int>& S) {
    ++r.enumerated;
    es.compute(principal_dense(d, S));
    const double v = es.eigenvalues()(k - 1);
    if (v > r.value) {
      r.value = v;
      r.support = S;
      r.x = embed(es.eigenvectors().col(k - 1), S, n);
    }
  });
  return r;
}

inline OracleResult ridge_exact(const Mat& A, const Vec& y, double alpha, int k,
                                long long guard = default_context().enumeration_guard) {
  const int n = static_cast<int>(A.cols());
  if (y.size() != A.rows()) throw DimensionError("ridge_exact: y length differs from the row count of A");
  if (alpha < 0) throw DomainError("ridge_exact: alpha must be >= 0");
  detail::check_k(k, n, "ridge_exact");
  require_enumerable(binomial(n, k), guard, "ridge_exact");
  OracleResult r;
  r.value = std::numeric_limits<double>::infinity();
  for_each_combination(n, k, [&](const std::vector<int>& S) {
    ++r.enumerated;
    const Vec x = ridge_restricted(A, y, alpha, S);
    const double v = ridge_objective(A, y, alpha, x);
    if (v < r.value) {
      r.value = v;
      r.support = S;
      r.x = x;
    }
  });
  return r;
}

struct RipExact {
  double delta_plus_star = 0.0;
  double delta_minus_star = 0.0;
  double upper = 0.0;  // 1 + delta_plus_star
  double lower = 0.0;  // 1 - delta_minus_star
  std::vector<int> support_plus, support_minus;
  long long enumerated = 0;
};

inline RipExact rip_exact(const Mat& A, int k, long long guard = default_context().enumeration_guard) {
  const int n = static_cast<int>(A.cols());
  detail::check_k(k, n, "rip_exact");
  require_enumerable(binomial(n, k), guard, "rip_exact");
  const Mat G = A.transpose() * A;
  RipExact r;
  r.upper = -std::numeric_limits<double>::infinity();
  r.lower = std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Mat> es;
  for_each_combination(n, k, [&](const std::vector<int>& S) {
    ++r.enumerated;
    es.compute(principal_dense(G, S), Eigen::EigenvaluesOnly);
    if (es.eigenvalues()(k - 1) > r.upper) {
      r.upper = es.eigenvalues()(k - 1);
      r.support_plus = S;
    }
    if (es.eigenvalues()(0) < r.lower) {
      r.lower = es.eigenvalues()(0);
      r.support_minus = S;
    }
  });
  r.delta_plus_star = r.upper - 1.0;
  r.delta_minus_star = 1.0 - r.lower;
  return r;
}

namespace detail {

struct InvSqrt {
  Mat m;
  bool deficient = false;
};

// Symmetric pseudo-inverse square root.
inline InvSqrt inv_sqrt_psd(const Mat& s) {
  Eigen::SelfAdjointEigenSolver<Mat> es(s);
  const Vec& ev = es.eigenvalues();
  const double cut = 1e-12 * std::max(1.0, std::abs(ev(ev.size() - 1)));
  Vec d(ev.size());
  InvSqrt r;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) > cut) {
      d(i) = 1.0 / std::sqrt(ev(i));
    } else {
      d(i) = 0.0;
      r.deficient = true;
    }
  }
  r.m = es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
  return r;
}

}  // namespace detail

inline OracleResult cca_exact(const SymMatrix& Sxx, const SymMatrix& Syy, const Mat& Sxy, int k1, int k2,
                              long long guard = default_context().enumeration_guard) {
  const int n1 = Sxx.size(), n2 = Syy.size();
  if (Sxy.rows() != n1 || Sxy.cols() != n2) throw DimensionError("cca_exact: Sxy shape differs from the covariance orders");
  detail::check_k(k1, n1, "cca_exact");
  detail::check_k(k2, n2, "cca_exact");
  const long long c1 = binomial(n1, k1), c2 = binomial(n2, k2);
  const long long total = (c1 > 0 && c2 > std::numeric_limits<long long>::max() / c1)
                              ? std::numeric_limits<long long>::max()
                              : c1 * c2;
  require_enumerable(total, guard, "cca_exact");
  const Mat dx = Sxx.dense(), dy = Syy.dense();
  std::vector<std::vector<int>> Ss, Ts;
  std::vector<detail::InvSqrt> Kx, Ky;
  for_each_combination(n1, k1, [&](const std::vector<int>& S) {
    Ss.push_back(S);
    Kx.push_back(detail::inv_sqrt_psd(principal_dense(dx, S)));
  });
  for_each_combination(n2, k2, [&](const std::vector<int>& T) {
    Ts.push_back(T);
    Ky.push_back(detail::inv_sqrt_psd(principal_dense(dy, T)));
  });
  OracleResult r;
  r.value = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < Ss.size(); ++a)
    for (std::size_t b = 0; b < Ts.size(); ++b) {
      ++r.enumerated;
      Mat sub(k1, k2);
      for (int i = 0; i < k1; ++i)
        for (int j = 0; j < k2; ++j) sub(i, j) = Sxy(Ss[a][i], Ts[b][j]);
      const Mat M = Kx[a].m * sub * Ky[b].m;
      Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
      const double v = svd.singularValues()(0);
      if (v > r.value) {
        r.value = v;
        r.support = Ss[a];
        r.support2 = Ts[b];
        r.x = embed(Kx[a].m * svd.matrixU().col(0), Ss[a], n1);
        r.v = embed(Ky[b].m * svd.matrixV().col(0), Ts[b], n2);
        r.rank_deficient = Kx[a].deficient || Ky[b].deficient;
      }
    }
  return r;
}

// Single-constraint QCQP restricted to each support, solved by the generalized eigenproblem.
inline OracleResult qcqp_exact_restricted(const SparseQcqp& p, long long guard = default_context().enumeration_guard) {
  p.validate();
  if (p.m() > 1) throw ScopeError("qcqp_exact_restricted: only m <= 1 constraints are supported");
  const int n = p.n(), k = p.k;
  require_enumerable(binomial(n, k), guard, "qcqp_exact_restricted");
  const double sg = p.sense == Sense::Max ? -1.0 : 1.0;
  const Mat C = p.C.dense();
  OracleResult r;
  r.value = std::numeric_limits<double>::infinity();
  if (p.m() == 0) {
    Eigen::SelfAdjointEigenSolver<Mat> es;
    for_each_combination(n, k, [&](const std::vector<int>& S) {
      ++r.enumerated;
      es.compute(sg * principal_dense(C, S), Eigen::EigenvaluesOnly);
      if (es.eigenvalues()(0) < -1e-12 * (1.0 + es.eigenvalues().cwiseAbs().maxCoeff()))
        throw DomainError("qcqp_exact_restricted: unconstrained problem is unbounded on a support");
    });
    r.value = 0.0;
    r.x = Vec::Zero(n);
    return r;
  }
  const Mat A = p.constraints[0].A.dense();
  const double b = p.constraints[0].b;
  if (b < 0) throw DomainError("qcqp_exact_restricted: b must be >= 0 when A is positive definite");
  double best = std::numeric_limits<double>::infinity();
  for_each_combination(n, k, [&](const std::vector<int>& S) {
    ++r.enumerated;
    const Mat as = principal_dense(A, S);
    Eigen::LLT<Mat> llt(as);
    if (llt.info() != Eigen::Success)
      throw PreconditionError("qcqp_exact_restricted: constraint matrix is not positive definite on a support");
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ges(sg * principal_dense(C, S), as);
    const double v = ges.eigenvalues()(0) * b;
    if (v < best) {
      best = v;
      Vec xs = ges.eigenvectors().col(0);
      xs *= std::sqrt(b / xs.dot(as * xs));
      r.value = sg * v;
      r.support = S;
      r.x = embed(xs, S, n);
    }
  });
  return r;
}

}  // namespace spartra
