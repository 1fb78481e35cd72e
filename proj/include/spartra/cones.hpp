#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "combinatorics.hpp"
#include "conic_solver.hpp"
#include "symmat.hpp"

namespace spartra {

enum class Membership { Member, NonMember, Inconclusive };

inline const char* membership_name(Membership m) {
  switch (m) {
    case Membership::Member: return "member";
    case Membership::NonMember: return "non_member";
    case Membership::Inconclusive: return "inconclusive";
  }
  return "?";
}

struct ConeVerdict {
  Membership status = Membership::Inconclusive;
  double margin = 0.0;
  std::optional<Vec> witness_vector;
  std::optional<SymMatrix> witness_matrix;
  std::vector<int> witness_support;
  std::string detail;
  bool member() const { return status == Membership::Member; }
};

namespace detail {

inline ConeVerdict eig_verdict(const Mat& m, double scale, double tol, const std::string& what) {
  const EigDecomp e = eig_dense(m);
  ConeVerdict v;
  v.margin = e.values(0) / scale;
  if (v.margin >= -tol) {
    v.status = Membership::Member;
  } else {
    v.status = Membership::NonMember;
    v.witness_vector = e.vectors.col(0);
    v.detail = what + " has eigenvalue " + std::to_string(e.values(0));
  }
  return v;
}

inline double member_scale(const SymMatrix& x) { return 1.0 + spectral_norm(x); }

}  // namespace detail

inline ConeVerdict in_Q_rank_one(const Vec& x, int k, double tol = 1e-6) {
  if (k < 1) throw DomainError("in_Q_rank_one: k must be >= 1");
  const double cut = tol * x.norm();
  std::vector<int> supp;
  for (int i = 0; i < x.size(); ++i)
    if (std::abs(x(i)) > cut) supp.push_back(i);
  const int s = static_cast<int>(supp.size());
  ConeVerdict v;
  v.margin = static_cast<double>(k - s);
  v.witness_support = supp;
  if (s <= k) {
    v.status = Membership::Member;
    return v;
  }
  v.status = Membership::NonMember;
  Vec y = Vec::Zero(x.size());
  for (int i : supp) y(i) = 1.0 / x(i);
  v.witness_vector = y;
  v.detail = "support size " + std::to_string(s) + " exceeds k";
  return v;
}

// Value of y'(k diag(xx') - xx')y, the defining inequality for rank-one members.
inline double rank_one_condition(const Vec& x, const Vec& y, int k) {
  const Vec xy = x.cwiseProduct(y);
  return k * xy.squaredNorm() - xy.sum() * xy.sum();
}

inline ConeVerdict in_spartrahedron(const SymMatrix& X, int k, double tol = 1e-8) {
  if (k < 1) throw DomainError("in_spartrahedron: k must be >= 1");
  const double s = detail::member_scale(X);
  ConeVerdict a = detail::eig_verdict(X.dense(), s, tol, "X");
  ConeVerdict b = detail::eig_verdict(dop(X, k).dense(), s, tol, "k diag(X) - X");
  if (!a.member()) return a;
  if (!b.member()) return b;
  a.margin = std::min(a.margin, b.margin);
  return a;
}

inline ConeVerdict in_Sone(const SymMatrix& X, int k, double tol = 1e-8) {
  if (k < 1) throw DomainError("in_Sone: k must be >= 1");
  const double s = detail::member_scale(X);
  ConeVerdict psd = detail::eig_verdict(X.dense(), s, tol, "X");
  if (!psd.member()) return psd;
  const Norms nm = norms(X);
  const double slack = (k * nm.trace - nm.l1_entrywise) / s;
  ConeVerdict v;
  v.margin = std::min(psd.margin, slack);
  if (slack >= -tol) {
    v.status = Membership::Member;
    return v;
  }
  v.status = Membership::NonMember;
  SymMatrix w(X.size());
  for (int i = 0; i < X.size(); ++i)
    for (int j = 0; j <= i; ++j) {
      const double sg = X(i, j) > 0 ? 1.0 : (X(i, j) < 0 ? -1.0 : 0.0);
      w.set(i, j, (i == j ? k : 0.0) - sg);
    }
  v.witness_matrix = w;
  v.margin = slack;
  v.detail = "entrywise l1 norm exceeds k tr(X)";
  return v;
}

namespace detail {

// Feasibility of  l <= z <= t, sum z = k t, z >= 0  through the conic solver.
inline ConeVerdict budget_lp(const Vec& lower, double t, int k, double tol, const SolveOptions& opts) {
  const int n = static_cast<int>(lower.size());
  ProgramBuilder pb;
  const int Z = pb.add_block(ConeKind::NonNeg, n);
  const int W = pb.add_block(ConeKind::NonNeg, n);
  const int U = pb.add_block(ConeKind::NonNeg, n);
  for (int i = 0; i < n; ++i) {
    const int r1 = pb.add_row(lower(i) - tol);
    pb.coef(r1, Z, i, 1.0);
    pb.coef(r1, W, i, -1.0);
    const int r2 = pb.add_row(t);
    pb.coef(r2, Z, i, 1.0);
    pb.coef(r2, U, i, 1.0);
  }
  const int rs = pb.add_row(k * t);
  for (int i = 0; i < n; ++i) pb.coef(rs, Z, i, 1.0);
  const SolveResult r = solve(pb.build(), opts);
  ConeVerdict v;
  if (r.status == SolveStatus::Optimal || (r.status == SolveStatus::MaxIter && r.residuals.max() <= 10 * opts.eps)) {
    v.status = Membership::Member;
    v.witness_vector = r.x.head(n);
    v.detail = "feasible budget vector z found";
  } else if (r.status == SolveStatus::PrimalInfeasibleCert) {
    v.status = Membership::NonMember;
    v.witness_vector = r.ray_y;
    v.margin = -1.0 / r.ray_y.norm();
    v.detail = "Farkas ray for the budget system";
  } else {
    // l <= z <= t with sum z = k t is feasible iff max l <= t and sum l <= k t <= n t.
    const double over = std::max({lower.maxCoeff() - t, lower.sum() - k * t, k * t - n * t});
    if (over <= tol) {
      Vec z = lower;
      double rest = k * t - z.sum();
      for (int i = 0; i < n && rest > 0; ++i) {
        const double add = std::min(rest, t - z(i));
        z(i) += add;
        rest -= add;
      }
      v.status = Membership::Member;
      v.witness_vector = z;
    } else {
      v.status = Membership::NonMember;
      v.margin = -over;
    }
    v.detail = std::string("solver status ") + status_name(r.status) + ", decided by interval bounds";
  }
  return v;
}

}  // namespace detail

// Lower bounds on z_i implied by the row-norm and row-l1 constraints for fixed X.
inline Vec sz_lower_bounds(const SymMatrix& X, int k, double tol) {
  const int n = X.size();
  const Mat d = X.dense();
  const double s = 1.0 + spectral_norm(X);
  Vec l = Vec::Zero(n);
  for (int i = 0; i < n; ++i) {
    const double xii = d(i, i);
    if (xii <= tol * s) continue;
    const double r2 = d.row(i).squaredNorm();
    const double r1 = d.row(i).cwiseAbs().sum();
    l(i) = std::max(r2 / xii, r1 * r1 / (k * xii));
  }
  return l;
}

inline Vec sbs_lower_bounds(const SymMatrix& X, double tol) {
  const int n = X.size();
  const Mat d = X.dense();
  const double s = 1.0 + spectral_norm(X);
  Vec l = Vec::Zero(n);
  for (int i = 0; i < n; ++i) {
    double li = 0.0;
    for (int j = 0; j < n; ++j) li = std::max(li, (i == j ? 1.0 : 2.0) * d(i, j));
    const double xii = d(i, i);
    if (xii > tol * s) li = std::max(li, d.row(i).squaredNorm() / xii);
    l(i) = li;
  }
  return l;
}

inline ConeVerdict in_Sz(const SymMatrix& X, int k, double tol = 1e-8, const SolveOptions& opts = {}) {
  if (k < 1) throw DomainError("in_Sz: k must be >= 1");
  const double s = detail::member_scale(X);
  ConeVerdict psd = detail::eig_verdict(X.dense(), s, tol, "X");
  if (!psd.member()) return psd;
  const double t = X.trace();
  if (t <= tol * s) {
    psd.detail = "zero matrix";
    return psd;
  }
  const SymMatrix Xn = X * (1.0 / t);
  return detail::budget_lp(sz_lower_bounds(Xn, k, tol), 1.0, k, tol, opts);
}

inline ConeVerdict in_Sbs(const SymMatrix& X, int k, double tol = 1e-8, const SolveOptions& opts = {}) {
  ConeVerdict one = in_Sone(X, k, tol);
  if (!one.member()) return one;
  const double s = detail::member_scale(X);
  const double t = X.trace();
  if (t <= tol * s) return one;
  const SymMatrix Xn = X * (1.0 / t);
  return detail::budget_lp(sbs_lower_bounds(Xn, tol), 1.0, k, tol, opts);
}

inline ConeVerdict in_convQ2(const SymMatrix& X, double tol = 1e-8) {
  const int n = X.size();
  const double s = detail::member_scale(X);
  ConeVerdict psd = detail::eig_verdict(X.dense(), s, tol, "X");
  if (!psd.member()) return psd;
  const Mat d = X.dense();
  std::vector<int> keep;
  for (int i = 0; i < n; ++i) {
    if (d(i, i) > tol * s) {
      keep.push_back(i);
      continue;
    }
    for (int j = 0; j < n; ++j)
      if (j != i && std::abs(d(i, j)) > tol * s) {
        ConeVerdict v;
        v.status = Membership::NonMember;
        v.margin = -std::abs(d(i, j)) / s;
        Vec y = Vec::Zero(n);
        y(i) = 1.0;
        v.witness_vector = y;
        v.detail = "zero diagonal entry " + std::to_string(i) + " with nonzero off-diagonal in its row";
        return v;
      }
  }
  const int p = static_cast<int>(keep.size());
  ConeVerdict v;
  if (p <= 1) {
    v.status = Membership::Member;
    v.margin = 1.0;
    return v;
  }
  Mat ratio(p, p), sym(p, p);
  for (int a = 0; a < p; ++a)
    for (int b = 0; b < p; ++b) {
      const double off = a == b ? 0.0 : std::abs(d(keep[a], keep[b]));
      ratio(a, b) = off / d(keep[a], keep[a]);
      sym(a, b) = off / std::sqrt(d(keep[a], keep[a]) * d(keep[b], keep[b]));
    }
  const double rho = spectral_radius_nonneg(ratio);
  v.margin = 1.0 - rho;
  if (rho <= 1.0 + tol) {
    v.status = Membership::Member;
    return v;
  }
  v.status = Membership::NonMember;
  // Y_ii = q_i^2, Y_ij = -sign(X_ij) q_i q_j has PSD 2x2 minors and Y.X = 1 - rho.
  const EigDecomp e = eig_dense(sym);
  const Vec pv = e.vectors.col(p - 1).cwiseAbs();
  SymMatrix w(n);
  for (int a = 0; a < p; ++a) {
    const double qa = pv(a) / std::sqrt(d(keep[a], keep[a]));
    for (int b = 0; b <= a; ++b) {
      const double qb = pv(b) / std::sqrt(d(keep[b], keep[b]));
      const double x = d(keep[a], keep[b]);
      const double sg = x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0);
      w.set(keep[a], keep[b], a == b ? qa * qa : -sg * qa * qb);
    }
  }
  v.witness_matrix = w;
  v.detail = "scaled off-diagonal Perron root " + std::to_string(rho) + " exceeds 1";
  return v;
}

inline ConeVerdict in_dual_spartrahedron(const SymMatrix& W, int k, double tol = 1e-8, const SolveOptions& opts = {}) {
  if (k < 1) throw DomainError("in_dual_spartrahedron: k must be >= 1");
  const int n = W.size();
  const double s = detail::member_scale(W);
  ConeVerdict psd = detail::eig_verdict(W.dense(), s, tol, "W");
  if (psd.member()) {
    psd.detail = "W is PSD (Z = 0)";
    return psd;
  }
  const SymMatrix Wn = W * (1.0 / s);
  ProgramBuilder pb;
  const int Y = pb.add_block(ConeKind::PSD, n);
  const int Z = pb.add_block(ConeKind::PSD, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      const int r = pb.add_row((i == j ? 1.0 : kSqrt2) * Wn(i, j));
      pb.coef(r, Y, tri_index(i, j), 1.0);
      pb.coef(r, Z, tri_index(i, j), i == j ? k - 1.0 : -1.0);
    }
  const SolveResult r = solve(pb.build(), opts);
  ConeVerdict v;
  if (r.status == SolveStatus::Optimal || (r.status == SolveStatus::MaxIter && r.residuals.max() <= 10 * opts.eps)) {
    v.status = Membership::Member;
    v.witness_matrix = block_matrix(r.x, tri_size(n), n);
    v.detail = "decomposition W = Y + dop(Z) found";
  } else if (r.status == SolveStatus::PrimalInfeasibleCert) {
    v.status = Membership::NonMember;
    SymMatrix x = -smat(r.ray_y);
    x *= 1.0 / norms(x).frobenius;
    v.witness_matrix = x;
    v.margin = W.dot(x) / s;
    v.detail = "separating matrix in the spartrahedron";
  } else {
    v.status = Membership::Inconclusive;
    v.detail = std::string("solver status ") + status_name(r.status);
  }
  return v;
}

inline ConeVerdict in_dual_convQ(const SymMatrix& W, int k, double tol = 1e-8,
                                 long long guard = default_context().enumeration_guard) {
  if (k < 1) throw DomainError("in_dual_convQ: k must be >= 1");
  const int n = W.size();
  const int kk = std::min(k, n);
  require_enumerable(binomial(n, kk), guard, "in_dual_convQ");
  const double s = detail::member_scale(W);
  const Mat d = W.dense();
  double worst = std::numeric_limits<double>::infinity();
  std::vector<int> worst_s;
  Vec worst_v;
  for_each_combination(n, kk, [&](const std::vector<int>& S) {
    const EigDecomp e = eig_dense(principal_dense(d, S));
    if (e.values(0) < worst) {
      worst = e.values(0);
      worst_s = S;
      worst_v = e.vectors.col(0);
    }
  });
  ConeVerdict v;
  v.margin = worst / s;
  if (v.margin >= -tol) {
    v.status = Membership::Member;
    return v;
  }
  v.status = Membership::NonMember;
  Vec y = Vec::Zero(n);
  for (int a = 0; a < kk; ++a) y(worst_s[a]) = worst_v(a);
  v.witness_vector = y;
  v.witness_support = worst_s;
  v.detail = "principal submatrix with negative eigenvalue";
  return v;
}

struct ExtremeRayCheck {
  bool conditions_hold = false;
  std::optional<bool> outside_hull;  // certified only for k = 2
  bool extreme = false;
  std::string detail;
};

inline ExtremeRayCheck extreme_ray_rank2_check(const Vec& u1, const Vec& u2, int k, double tol = 1e-9) {
  if (u1.size() != u2.size()) throw DimensionError("extreme_ray_rank2_check: length mismatch");
  if (std::abs(u1.norm() - 1.0) > tol || std::abs(u2.norm() - 1.0) > tol || std::abs(u1.dot(u2)) > tol)
    throw PreconditionError("extreme_ray_rank2_check: inputs must be orthonormal");
  const Vec a = u1.cwiseProduct(u1), b = u2.cwiseProduct(u2);
  const Vec rowsq = a + b;
  const double c1 = u1.cwiseProduct(u2).cwiseProduct(rowsq).sum();
  const double f1 = a.squaredNorm(), f2 = b.squaredNorm();
  const double c3 = rowsq.squaredNorm();
  ExtremeRayCheck r;
  const bool ok1 = std::abs(c1) <= tol;
  const bool ok2 = std::abs(f1 - f2) <= tol && f1 < 1.0 / k - tol;
  const bool ok3 = std::abs(c3 - 2.0 / k) <= tol;
  const bool ok4 = (rowsq.maxCoeff() - rowsq.minCoeff()) <= tol;
  r.conditions_hold = ok1 && ok2 && ok3 && ok4;
  if (!r.conditions_hold) {
    r.detail = std::string("failed:") + (ok1 ? "" : " cross-moment") + (ok2 ? "" : " fourth-moments") +
               (ok3 ? "" : " row-square-sum") + (ok4 ? "" : " constant-row-norm");
    return r;
  }
  if (k == 2) {
    const SymMatrix X = SymMatrix::outer(u1) + SymMatrix::outer(u2);
    r.outside_hull = !in_convQ2(X, tol).member();
    r.extreme = *r.outside_hull;
    r.detail = r.extreme ? "conditions hold, outside conv(Q)" : "conditions hold but matrix lies in conv(Q)";
  } else {
    r.detail = "conditions hold, hull exclusion unchecked";
  }
  return r;
}

struct SzPerturbation {
  bool in_S0 = false;
  bool in_Sz = false;
  bool condition_holds = false;
  bool eps_admissible = false;
  Membership sz_status = Membership::Inconclusive;
};

inline SzPerturbation sz_perturbation_check(const Vec& x, const Vec& w, double eps, int k, double tol = 1e-8,
                                            const SolveOptions& opts = {}) {
  const int n = static_cast<int>(x.size());
  if (w.size() != n) throw DimensionError("sz_perturbation_check: length mismatch");
  if (2 * k >= n) throw PreconditionError("sz_perturbation_check: requires 2k < n");
  std::vector<int> supp;
  for (int i = 0; i < n; ++i)
    if (x(i) != 0.0) supp.push_back(i);
  if (static_cast<int>(supp.size()) != k) throw PreconditionError("sz_perturbation_check: x must have exactly k nonzeros");
  for (int i = 0; i < n; ++i)
    if (w(i) == 0.0) throw PreconditionError("sz_perturbation_check: w must be dense");
  bool identical = true;
  for (int i : supp) identical = identical && x(i) == x(supp[0]);
  if (identical) throw PreconditionError("sz_perturbation_check: nonzeros of x must not all be identical");
  if (eps < 0) throw PreconditionError("sz_perturbation_check: eps must be nonnegative");
  SzPerturbation r;
  double cond = 0.0, budget = 0.0;
  for (int i : supp) {
    cond += std::pow(1.0 - std::abs(w(i) / x(i)), 2);
    budget += std::pow(std::abs(x(i)) - std::abs(w(i)), 2) / (x(i) * x(i) + eps * w(i) * w(i));
  }
  r.condition_holds = cond > n - k;
  r.eps_admissible = budget >= n - k;
  const SymMatrix U = SymMatrix::outer(x) + eps * SymMatrix::outer(w);
  r.in_S0 = in_spartrahedron(U, k, tol).member();
  const ConeVerdict sz = in_Sz(U, k, tol, opts);
  r.sz_status = sz.status;
  r.in_Sz = sz.member();
  return r;
}

}  // namespace spartra
