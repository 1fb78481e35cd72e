#pragma once

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "context.hpp"
#include "relaxations.hpp"
#include "support.hpp"
#include "symmat.hpp"

namespace spartra {

struct MultiplierResult {
  Vec lambda;
  double residual = 0.0;
  bool rank_deficient = false;
};

// Least-squares lambda with (C x)_S = sum_i lambda_i (A_i x)_S.
inline MultiplierResult lagrange_multiplier(const SparseQcqp& p, const Vec& x, double feas_tol = 1e-8) {
  p.validate();
  if (x.size() != p.n()) throw DimensionError("lagrange_multiplier: x length differs from n");
  for (int i = 0; i < p.m(); ++i) {
    const double g = p.constraints[i].A.quad(x) - p.constraints[i].b;
    if (std::abs(g) > feas_tol * (1.0 + std::abs(p.constraints[i].b)))
      throw PreconditionError("lagrange_multiplier: x violates constraint " + std::to_string(i) + " by " +
                              std::to_string(g));
  }
  const std::vector<int> S = support_of(x);
  const int s = static_cast<int>(S.size());
  Vec rhs(s);
  const Vec cx = p.C.dense() * x;
  for (int j = 0; j < s; ++j) rhs(j) = cx(S[j]);
  MultiplierResult r;
  if (p.m() == 0) {
    r.lambda = Vec();
    r.residual = rhs.norm();
    return r;
  }
  Mat B(s, p.m());
  for (int i = 0; i < p.m(); ++i) {
    const Vec ax = p.constraints[i].A.dense() * x;
    for (int j = 0; j < s; ++j) B(j, i) = ax(S[j]);
  }
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(B);
  r.lambda = cod.solve(rhs);
  r.rank_deficient = cod.rank() < p.m();
  r.residual = (rhs - B * r.lambda).norm();
  return r;
}

struct Certificate {
  Vec lambda;
  SymMatrix Z{0}, Q{0};
  double complementarity = 0.0;
  double min_eig_Q = 0.0;
  int corank = 0;
  double gap = 0.0;
  bool degenerate = false;  // p = 0, so Z = 0
  bool valid = false;
  std::string detail;
};

// Dual certificate from a sparse candidate: Z = zeta zeta', zeta = a x^{-1} - p / (k a).
// Max-sense problems are certified in their negated min form.
inline Certificate stability_certificate(const SparseQcqp& p, const Vec& x, const Vec& lambda, double tol = 1e-6,
                                         double corank_rel = default_context().corank_rel) {
  p.validate();
  if (x.size() != p.n()) throw DimensionError("stability_certificate: x length differs from n");
  if (lambda.size() != p.m()) throw DimensionError("stability_certificate: lambda length differs from m");
  const std::vector<int> S = support_of(x);
  const int k = p.k;
  if (static_cast<int>(S.size()) != k)
    throw PreconditionError("stability_certificate: x must have exactly k nonzero entries");
  const int n = p.n();
  const double sg = p.sense == Sense::Max ? -1.0 : 1.0;
  Mat P = p.C.dense();
  for (int i = 0; i < p.m(); ++i) P -= lambda(i) * p.constraints[i].A.dense();
  P *= sg;
  const Vec pv = P * x;
  double cx = std::numeric_limits<double>::infinity();
  for (int i : S) cx = std::min(cx, std::abs(x(i)));
  const double pinf = pv.cwiseAbs().maxCoeff();
  Certificate c;
  c.lambda = lambda;
  Mat Z = Mat::Zero(n, n);
  if (pinf <= 1e-14 * (1.0 + P.norm() * x.norm())) {
    c.degenerate = true;
  } else {
    const double a = std::sqrt(cx * pinf / k);
    Vec zeta = -pv / (k * a);
    for (int i : S) zeta(i) += a / x(i);
    Z = zeta * zeta.transpose();
  }
  c.Z = SymMatrix::from_dense(Z);
  c.Q = SymMatrix::from_dense(P) - dop(c.Z, k);
  const Mat Qd = c.Q.dense();
  const Vec ev = eigvals_dense(Qd);
  const double qn = std::max(std::abs(ev(0)), std::abs(ev(n - 1)));
  c.min_eig_Q = ev(0);
  c.corank = 0;
  for (int i = 0; i < n; ++i)
    if (std::abs(ev(i)) <= corank_rel * qn) ++c.corank;
  c.complementarity = std::abs(x.dot(Qd * x));
  double bl = 0.0;
  for (int i = 0; i < p.m(); ++i) bl += lambda(i) * p.constraints[i].b;
  c.gap = std::abs(p.C.quad(x) - bl);
  const double scale = 1.0 + qn * x.squaredNorm();
  const double zmin = eigvals_dense(Z)(0);
  c.valid = c.complementarity <= tol * scale && c.min_eig_Q >= -tol * (1.0 + qn) && zmin >= -tol * (1.0 + Z.norm()) &&
            c.gap <= tol * (1.0 + std::abs(p.C.quad(x)));
  if (!c.valid) c.detail = "min eigenvalue of Q " + std::to_string(c.min_eig_Q) + ", complementarity " +
                           std::to_string(c.complementarity) + ", gap " + std::to_string(c.gap);
  return c;
}

struct ExactRegionInputs {
  double nu2 = 0.0;
  double eta = 1.0;
  double sigma_s = 0.0;
  double norm_A = 0.0;
  double norm_xbar = 0.0;
  double norm_dC = 0.0;
  double c_x = 0.0;
  double norm_x = 0.0;
  double norm_x_minus_xbar = 0.0;
  double norm_Qbar = 0.0;
};

inline double exact_region_rhs(const ExactRegionInputs& in) {
  if (in.c_x <= 0 || in.sigma_s <= 0) throw PreconditionError("exact_region_predicate: c_x and sigma_s must be positive");
  return in.eta * ((1.0 + in.norm_A * in.norm_xbar / in.sigma_s) * (1.0 + in.norm_x / in.c_x) * in.norm_dC +
                   in.norm_Qbar * in.norm_x_minus_xbar / in.c_x);
}

inline bool exact_region_predicate(const ExactRegionInputs& in) { return in.nu2 > exact_region_rhs(in); }

// Inputs from an unperturbed problem pbar with optimum xbar and multiplier lambda_bar (Z = 0),
// a perturbation dC, and the perturbed optimum x.
inline ExactRegionInputs exact_region_inputs(const SparseQcqp& pbar, const Vec& xbar, const Vec& lambda_bar,
                                             const SymMatrix& dC, const Vec& x,
                                             double multiplicity_rel = default_context().multiplicity_rel) {
  pbar.validate();
  const int n = pbar.n(), m = pbar.m();
  const double sg = pbar.sense == Sense::Max ? -1.0 : 1.0;
  Mat Qb = pbar.C.dense();
  for (int i = 0; i < m; ++i) Qb -= lambda_bar(i) * pbar.constraints[i].A.dense();
  Qb *= sg;
  const EigDecomp e = eig_dense(Qb);
  ExactRegionInputs in;
  in.norm_Qbar = std::max(std::abs(e.values(0)), std::abs(e.values(n - 1)));
  in.nu2 = n > 1 ? e.values(1) : 0.0;
  const double xx = x.dot(xbar);
  // eta over the nu2 eigenspace; the largest value is the conservative one
  in.eta = 1.0;
  for (int i = 1; i < n; ++i) {
    if (std::abs(e.values(i) - in.nu2) > multiplicity_rel * std::max(1.0, in.norm_Qbar)) continue;
    const double z = x.dot(e.vectors.col(i));
    in.eta = std::max(in.eta, 1.0 + xbar.squaredNorm() * z * z / (xx * xx));
  }
  const std::vector<int> S = support_of(xbar);
  if (m > 0) {
    Mat J(m, static_cast<Eigen::Index>(S.size()));
    for (int i = 0; i < m; ++i) {
      const Vec ax = 2.0 * (pbar.constraints[i].A.dense() * xbar);
      for (std::size_t j = 0; j < S.size(); ++j) J(i, static_cast<Eigen::Index>(j)) = ax(S[j]);
    }
    Eigen::JacobiSVD<Mat> svd(J);
    const Vec sv = svd.singularValues();
    double smin = 0.0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv(i) > 1e-12 * sv(0)) smin = sv(i);
    in.sigma_s = smin;
    if (m == 1) {
      in.norm_A = spectral_norm(pbar.constraints[0].A);
    } else {
      // Frobenius upper bound of the operator norm of lambda -> sum lambda_i A_i
      Mat V(tri_size(n), m);
      for (int i = 0; i < m; ++i) V.col(i) = svec(pbar.constraints[i].A);
      in.norm_A = Eigen::JacobiSVD<Mat>(V).singularValues()(0);
    }
  }
  in.norm_xbar = xbar.norm();
  in.norm_dC = spectral_norm(dC);
  double cx = std::numeric_limits<double>::infinity();
  for (int i : support_of(x)) cx = std::min(cx, std::abs(x(i)));
  in.c_x = std::isfinite(cx) ? cx : 0.0;
  in.norm_x = x.norm();
  in.norm_x_minus_xbar = (x - xbar).norm();
  return in;
}

struct SpcaThreshold {
  bool holds = false;
  double nu = 0.0;
  double lhs = 0.0;
  double c = 0.0;
};

inline double spca_nu(double c) {
  return std::min(0.5 / (1.5 + (3.0 + 4.0 * kSqrt2) / c), c * c / 4.0);
}

inline SpcaThreshold spca_threshold(const SymMatrix& Sigma, const Vec& xbar, double beta) {
  const int n = Sigma.size();
  if (xbar.size() != n) throw DimensionError("spca_threshold: xbar length differs from n");
  if (std::abs(xbar.norm() - 1.0) > 1e-8) throw PreconditionError("spca_threshold: xbar must have unit norm");
  const std::vector<int> S = support_of(xbar);
  if (S.size() < 2) throw PreconditionError("spca_threshold: xbar must have at least two nonzeros");
  SpcaThreshold r;
  r.c = std::numeric_limits<double>::infinity();
  for (int i : S) r.c = std::min(r.c, std::abs(xbar(i)));
  r.nu = spca_nu(r.c);
  Mat D = Sigma.dense() - beta * xbar * xbar.transpose();
  D.diagonal().array() -= D.trace() / n;
  const Vec ev = eigvals_dense(D);
  r.lhs = std::max(std::abs(ev(0)), std::abs(ev(n - 1)));
  r.holds = r.lhs < r.nu * beta;
  return r;
}

struct RidgeThreshold {
  bool holds = false;
  double eta = 0.0;
  double sigma_min = 0.0;
  double noise_norm = 0.0;
};

inline RidgeThreshold ridge_threshold(const Mat& A, const Vec& xbar, const Vec& eps) {
  if (xbar.size() != A.cols() || eps.size() != A.rows()) throw DimensionError("ridge_threshold: shapes inconsistent");
  const Vec sv = Eigen::JacobiSVD<Mat>(A).singularValues();
  const double smin = sv(sv.size() - 1);
  if (smin <= 0 || A.rows() < A.cols()) throw PreconditionError("ridge_threshold: sigma_min(A) must be positive");
  const std::vector<int> S = support_of(xbar);
  if (S.empty()) throw PreconditionError("ridge_threshold: xbar must be nonzero");
  double c = std::numeric_limits<double>::infinity();
  for (int i : S) c = std::min(c, std::abs(xbar(i)));
  const double nx = xbar.norm();
  const double kappa = sv(0) / smin;
  const double q = (1.0 + 0.5 * nx) * (1.0 + 4.0 * (2.0 - kSqrt2) * nx / c);
  const double p = kappa * (q + 2.0 * kappa / c);
  RidgeThreshold r;
  r.eta = std::min({(std::sqrt(p * p + 4.0 * q) - p) / (2.0 * q), c / 2.0, (3.0 - 2.0 * kSqrt2) * nx});
  r.sigma_min = smin;
  r.noise_norm = eps.norm();
  r.holds = r.noise_norm < r.eta * smin;
  return r;
}

inline int numerical_rank(const Vec& eigenvalues, double rel) {
  const double top = eigenvalues.cwiseAbs().maxCoeff();
  int r = 0;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i)
    if (std::abs(eigenvalues(i)) > rel * top) ++r;
  return r;
}

inline double spca_ratio_bound(const SymMatrix& Sigma, int k, double rel = default_context().multiplicity_rel) {
  const int n = Sigma.size();
  detail::check_k(k, n, "spca_ratio_bound");
  const Vec ev = eigvals_dense(Sigma.dense());
  const double top = ev.cwiseAbs().maxCoeff();
  if (ev(0) < -rel * std::max(top, 1e-300))
    throw ScopeError("spca_ratio_bound: Sigma is indefinite, use spca_shifted_bound");
  const int r = numerical_rank(ev, rel);
  return std::min({static_cast<double>(k), static_cast<double>(n) / k, static_cast<double>(r)});
}

inline double spca_shifted_bound(const SymMatrix& Sigma, int k, double vstar,
                                 double rel = default_context().multiplicity_rel) {
  const int n = Sigma.size();
  detail::check_k(k, n, "spca_shifted_bound");
  const Vec ev = eigvals_dense(Sigma.dense());
  const double tau = ev(0);
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  const int r = n - count_close(ev, tau, rel * scale);
  const double q = std::min({static_cast<double>(k), static_cast<double>(n) / k, static_cast<double>(r)});
  return q * vstar - (q - 1.0) * tau;
}

struct RankOneDual {
  SymMatrix Z{0};
  double rho = 0.0;
  double min_eig = 0.0;
  bool feasible = false;
};

// Closed-form dual point for Sigma = sigma sigma'.  The construction works on coordinates
// sorted by decreasing |sigma_i| and is permuted back.
inline RankOneDual rank_one_dual_certificate(const Vec& sigma, int k, double tol = 1e-6, double delta_tau = 1e-6) {
  const int n = static_cast<int>(sigma.size());
  detail::check_k(k, n, "rank_one_dual_certificate");
  std::vector<int> ord(static_cast<std::size_t>(n));
  std::iota(ord.begin(), ord.end(), 0);
  std::stable_sort(ord.begin(), ord.end(), [&](int a, int b) { return std::abs(sigma(a)) > std::abs(sigma(b)); });
  Vec s(n);
  for (int i = 0; i < n; ++i) s(i) = sigma(ord[i]);
  if (k < n && !(std::abs(s(k - 1)) > std::abs(s(k))))
    throw ScopeError("rank_one_dual_certificate: |sigma_k| must strictly exceed |sigma_{k+1}|");
  const double w = s.head(k).squaredNorm();
  const double tau = std::abs(s(k - 1)) * (1.0 - delta_tau);
  Vec u = Vec::Zero(n);
  if (tau > 0) {
    for (int i = 0; i < k; ++i) u(i) = tau / s(i);
    for (int i = k; i < n; ++i) u(i) = s(i) / tau;
    u *= std::sqrt(w / k);
  }
  Vec ub(n);
  for (int i = 0; i < n; ++i) ub(ord[i]) = u(i);
  RankOneDual r;
  r.Z = SymMatrix::outer(ub);
  r.rho = w;
  Mat M = -dop(r.Z, k).dense() - sigma * sigma.transpose();
  M.diagonal().array() += w;
  r.min_eig = eigvals_dense(M)(0);
  r.feasible = r.min_eig >= -tol * std::max(1.0, w);
  return r;
}

struct RidgeGapBounds {
  double lower = 0.0;
  double alpha_bar = 0.0;
  double gap_bound = 0.0;
  double tau = 0.0;
  double eta = 0.0;
  double L = 0.0;
};

inline double coherence(const Mat& A) {
  const int n = static_cast<int>(A.cols());
  Mat B = A;
  for (int j = 0; j < n; ++j) {
    const double nj = A.col(j).norm();
    if (nj == 0.0) throw DomainError("coherence: column " + std::to_string(j) + " is zero");
    B.col(j) /= nj;
  }
  double mu = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j) mu = std::max(mu, std::abs(B.col(i).dot(B.col(j))));
  return mu;
}

// rstar0 and xstar0_norm2 come from the sparse least-squares optimum (alpha = 0).
inline RidgeGapBounds ridge_gap_bounds(const Mat& A, const Vec& y, double alpha, int k, double rstar0,
                                       double xstar0_norm2) {
  if (y.size() != A.rows()) throw DimensionError("ridge_gap_bounds: y length differs from the row count of A");
  const double m = static_cast<double>(A.rows());
  RidgeGapBounds g;
  g.tau = 1.0 + (k - 1) * coherence(A);
  g.L = A.colwise().norm().maxCoeff();
  const double lmin = eigvals_dense(A.transpose() * A)(0);
  const double L2 = g.L * g.L;
  g.eta = L2 / (lmin + m * alpha);
  g.lower = (1.0 - g.tau * g.eta) * y.squaredNorm() / m + g.tau * g.eta * rstar0;
  g.alpha_bar = g.tau * L2 / m - lmin / m;
  g.gap_bound = k * (L2 / m) * xstar0_norm2;
  return g;
}

}  // namespace spartra
