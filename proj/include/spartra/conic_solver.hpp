#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "conic_program.hpp"

namespace spartra {

enum class SolveStatus { Optimal, MaxIter, PrimalInfeasibleCert, DualInfeasibleCert };

inline const char* status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::MaxIter: return "max_iter";
    case SolveStatus::PrimalInfeasibleCert: return "primal_infeasible";
    case SolveStatus::DualInfeasibleCert: return "dual_infeasible";
  }
  return "?";
}

struct SolveOptions {
  double eps = 1e-7;
  int max_iter = 50000;
  bool scaling = true;
  double eps_infeas = 1e-7;
  double relaxation = 1.5;
  double rho_x = 1e-3;
  double scale = 1.0;
  int check_every = 5;
  int adapt_every = 50;  // 0 disables primal/dual rebalancing
  double adapt_band = 10.0;
  double adapt_growth = 1.5;  // interval multiplier after each rescale that fires
};

struct Residuals {
  double primal = std::numeric_limits<double>::infinity();
  double dual = std::numeric_limits<double>::infinity();
  double gap = std::numeric_limits<double>::infinity();
  double max() const { return std::max({primal, dual, gap}); }
};

// Primal: min c'x s.t. Ax = b, x in K.  Dual: max b'y s.t. c - A'y = z, z in K*.
struct SolveResult {
  SolveStatus status = SolveStatus::MaxIter;
  Vec x, y, z;
  double primal_objective = std::numeric_limits<double>::quiet_NaN();
  double dual_objective = std::numeric_limits<double>::quiet_NaN();
  Residuals residuals;
  int iterations = 0;
  // PrimalInfeasibleCert: b'ray_y = 1, z = ray_z in K*, |A'ray_y + ray_z| = certificate_residual.
  // DualInfeasibleCert: c'ray_x = -1, ray_x in K, |A ray_x| = certificate_residual.
  Vec ray_y, ray_z, ray_x;
  double certificate_residual = std::numeric_limits<double>::infinity();
};

using SpMat = Eigen::SparseMatrix<double>;

namespace detail {

struct BlockInfo {
  ConeKind kind;
  int offset;
  int dim;
  int len;
};

inline void proj_soc(double* v, int d) {
  if (d == 1) {
    v[0] = std::max(v[0], 0.0);
    return;
  }
  const double t = v[0];
  double nw = 0.0;
  for (int i = 1; i < d; ++i) nw += v[i] * v[i];
  nw = std::sqrt(nw);
  if (nw <= t) return;
  if (nw <= -t) {
    for (int i = 0; i < d; ++i) v[i] = 0.0;
    return;
  }
  const double a = 0.5 * (t + nw);
  v[0] = a;
  for (int i = 1; i < d; ++i) v[i] *= a / nw;
}

class PsdProjector {
 public:
  explicit PsdProjector(int n) : n_(n), m_(n, n), es_(n) {}
  void project(double* v) {
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j <= i; ++j) {
        const double a = v[tri_index(i, j)] * (i == j ? 1.0 : 1.0 / kSqrt2);
        m_(i, j) = a;
        m_(j, i) = a;
      }
    es_.compute(m_);
    if (es_.info() != Eigen::Success) throw NumericalError("PSD projection: eigensolver failed");
    const Vec& ev = es_.eigenvalues();
    const Mat& V = es_.eigenvectors();
    int first = 0;
    while (first < n_ && ev(first) <= 0.0) ++first;
    const int r = n_ - first;
    if (r == 0) {
      for (int t = 0; t < tri_size(n_); ++t) v[t] = 0.0;
      return;
    }
    if (r == n_) return;
    Mat W = V.rightCols(r) * ev.tail(r).cwiseSqrt().asDiagonal();
    m_.noalias() = W * W.transpose();
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j <= i; ++j) v[tri_index(i, j)] = m_(i, j) * (i == j ? 1.0 : kSqrt2);
  }

 private:
  int n_;
  Mat m_;
  Eigen::SelfAdjointEigenSolver<Mat> es_;
};

}  // namespace detail

class ConicSolver {
 public:
  ConicSolver(const ConicProgram& prog, SolveOptions opts) : opts_(opts) {
    prog.validate();
    N_ = prog.num_vars();
    M_ = prog.num_rows();
    const auto off = prog.offsets();
    for (std::size_t i = 0; i < prog.blocks.size(); ++i) {
      const auto& bl = prog.blocks[i];
      blocks_.push_back({bl.kind == ConeKind::RSOC ? ConeKind::SOC : bl.kind, off[i], bl.dim, bl.size()});
      if (bl.kind == ConeKind::RSOC) rsoc_offsets_.push_back(off[i]);
      if (bl.kind == ConeKind::PSD) psd_.emplace_back(bl.dim);
    }
    // Rotate RSOC blocks into SOC form: x_rsoc = R x_soc with R symmetric orthogonal.
    std::vector<int> rsoc_lead(static_cast<std::size_t>(N_), -1);
    for (int o : rsoc_offsets_) {
      rsoc_lead[o] = o;
      rsoc_lead[o + 1] = o;
    }
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(prog.triplets.size() * 2);
    for (const auto& t : prog.triplets) {
      const int col = off[t.block] + t.index;
      const int lead = rsoc_lead[col];
      if (lead < 0) {
        trip.emplace_back(t.row, col, t.value);
      } else {
        const double h = t.value / kSqrt2;
        trip.emplace_back(t.row, lead, h);
        trip.emplace_back(t.row, lead + 1, col == lead ? h : -h);
      }
    }
    A_.resize(M_, N_);
    A_.setFromTriplets(trip.begin(), trip.end());
    A_.makeCompressed();
    b_ = Eigen::Map<const Vec>(prog.b.data(), M_);
    c_ = rotate(Eigen::Map<const Vec>(prog.objective.data(), N_));
    norm_b_ = b_.norm();
    norm_c_ = c_.norm();
    equilibrate();
  }

  SolveResult solve() {
    SolveResult res;
    const int n = N_, my = M_ + N_, L = n + my + 1;
    const int it_tau = L - 1;
    Vec u = Vec::Zero(L), v = Vec::Zero(L);
    u(it_tau) = 1.0;
    v(it_tau) = 1.0;
    Vec w(L), ut(L), ur(L);
    const double alpha = opts_.relaxation;
    int it = 0;
    double interval = opts_.adapt_every;
    long next_adapt = opts_.adapt_every;
    for (; it < opts_.max_iter; ++it) {
      w = u + v;
      solve_linear(w, ut);
      ur = alpha * ut + (1.0 - alpha) * u;
      u = ur - v;
      project_C(u);
      v += u - ur;
      const bool last = (it + 1 == opts_.max_iter);
      if ((it + 1) % opts_.check_every == 0 || last) {
        if (check(u, v, res)) {
          res.iterations = it + 1;
          return res;
        }
        if (opts_.adapt_every > 0 && it + 1 >= next_adapt) {
          if (rebalance(u, v, res.residuals)) interval *= opts_.adapt_growth;
          next_adapt = it + 1 + std::lround(interval);
        }
      }
    }
    res.status = SolveStatus::MaxIter;
    res.iterations = it;
    return res;
  }

 private:
  Vec rotate(const Vec& x) const {
    Vec r = x;
    for (int o : rsoc_offsets_) {
      const double a = x(o), b = x(o + 1);
      r(o) = (a + b) / kSqrt2;
      r(o + 1) = (a - b) / kSqrt2;
    }
    return r;
  }

  // Rescales b against c when primal and dual residuals drift apart; iterates are mapped onto the new scaling.
  bool rebalance(Vec& u, Vec& v, const Residuals& r) {
    if (!(r.primal > 0) || !(r.dual > 0) || !std::isfinite(r.primal) || !std::isfinite(r.dual)) return false;
    const double ratio = r.primal / r.dual;
    if (ratio < opts_.adapt_band && ratio * opts_.adapt_band > 1.0) return false;
    const double f = std::clamp(std::sqrt(ratio), 1e-2, 1e2);
    if (sigma_b_ * f > 1e6 || sigma_b_ * f < 1e-6) return false;
    sigma_b_ *= f;
    bs_ *= f;
    u.head(N_) *= f;
    v.segment(N_ + M_, N_) *= f;
    v(v.size() - 1) *= f;
    set_h();
    return true;
  }

  void set_h() {
    Vec h(N_ + M_ + N_);
    h << cs_, bs_, Vec::Zero(N_);
    g_.resize(h.size());
    apply_MR_inverse(h.head(N_), h.tail(M_ + N_), g_);
    hg_ = 1.0 + h.dot(g_);
    h_ = h;
  }

  void equilibrate() {
    D_ = Vec::Ones(M_);
    E_ = Vec::Ones(N_);
    sigma_b_ = sigma_c_ = 1.0;
    if (opts_.scaling && M_ > 0) {
      SpMat S = A_;
      for (int pass = 0; pass < 25; ++pass) {
        Vec rn = Vec::Zero(M_), cn = Vec::Zero(N_);
        for (int k = 0; k < S.outerSize(); ++k)
          for (SpMat::InnerIterator itr(S, k); itr; ++itr) {
            const double a = std::abs(itr.value());
            rn(itr.row()) = std::max(rn(itr.row()), a);
            cn(itr.col()) = std::max(cn(itr.col()), a);
          }
        for (const auto& bl : blocks_) {
          if (bl.kind == ConeKind::SOC || bl.kind == ConeKind::PSD) {
            const double mx = cn.segment(bl.offset, bl.len).maxCoeff();
            cn.segment(bl.offset, bl.len).setConstant(mx);
          }
        }
        Vec dr = Vec::Ones(M_), dc = Vec::Ones(N_);
        for (int i = 0; i < M_; ++i)
          if (rn(i) > 0) dr(i) = 1.0 / std::sqrt(rn(i));
        for (int j = 0; j < N_; ++j)
          if (cn(j) > 0) dc(j) = 1.0 / std::sqrt(cn(j));
        D_ = (D_.cwiseProduct(dr)).cwiseMax(1e-4).cwiseMin(1e4);
        E_ = (E_.cwiseProduct(dc)).cwiseMax(1e-4).cwiseMin(1e4);
        S = D_.asDiagonal() * A_ * E_.asDiagonal();
      }
    }
    As_ = D_.asDiagonal() * A_ * E_.asDiagonal();
    As_.makeCompressed();
    bs_ = D_.cwiseProduct(b_);
    cs_ = E_.cwiseProduct(c_);
    if (opts_.scaling) {
      const double nb = bs_.norm(), nc = cs_.norm();
      sigma_b_ = opts_.scale / std::max(nb, 1e-4);
      sigma_c_ = opts_.scale / std::max(nc, 1e-4);
      if (nb == 0.0) sigma_b_ = 1.0;
      if (nc == 0.0) sigma_c_ = 1.0;
    }
    bs_ *= sigma_b_;
    cs_ *= sigma_c_;
    SpMat K = SpMat(As_.transpose()) * As_;
    SpMat I(N_, N_);
    I.setIdentity();
    K += (opts_.rho_x + 1.0) * I;
    llt_.compute(K);
    if (llt_.info() != Eigen::Success) throw NumericalError("conic solver: factorization failed");
    // g = M_R^{-1} h with h = (c, b_hat)
    set_h();
  }

  // Solves [[rho I, Ahat'], [-Ahat, I]] z = (a, d) with Ahat = [As; -I].
  void apply_MR_inverse(const Vec& a, const Vec& d, Vec& out) const {
    const auto deq = d.head(M_);
    const auto dk = d.tail(N_);
    Vec rhs = a - (As_.transpose() * deq - dk);
    Vec zx = llt_.solve(rhs);
    out.resize(N_ + M_ + N_);
    out.head(N_) = zx;
    out.segment(N_, M_) = deq + As_ * zx;
    out.tail(N_) = dk - zx;
  }

  void solve_linear(const Vec& w, Vec& out) const {
    const int L = static_cast<int>(w.size());
    Vec a = opts_.rho_x * w.head(N_);
    Vec z;
    apply_MR_inverse(a, w.segment(N_, M_ + N_), z);
    const double tau = (w(L - 1) + h_.dot(z)) / hg_;
    out.resize(L);
    out.head(L - 1) = z - tau * g_;
    out(L - 1) = tau;
  }

  void project_C(Vec& u) {
    double* yk = u.data() + N_ + M_;
    std::size_t p = 0;
    for (const auto& bl : blocks_) {
      double* s = yk + bl.offset;
      switch (bl.kind) {
        case ConeKind::Zero: break;
        case ConeKind::Free:
          for (int i = 0; i < bl.len; ++i) s[i] = 0.0;
          break;
        case ConeKind::NonNeg:
          for (int i = 0; i < bl.len; ++i) s[i] = std::max(s[i], 0.0);
          break;
        case ConeKind::SOC: detail::proj_soc(s, bl.len); break;
        case ConeKind::PSD: psd_[p++].project(s); break;
        case ConeKind::RSOC: break;
      }
    }
    const int t = static_cast<int>(u.size()) - 1;
    u(t) = std::max(u(t), 0.0);
  }

  // Converts scaled iterates into original-space quantities and tests termination.
  bool check(const Vec& u, const Vec& v, SolveResult& res) {
    const int L = static_cast<int>(u.size());
    const double tau = u(L - 1);
    const Vec sK = v.segment(N_ + M_, N_);
    const Vec yeq = u.segment(N_, M_);
    const Vec yK = u.segment(N_ + M_, N_);
    if (tau > 0) {
      Vec x = E_.cwiseProduct(sK) / (tau * sigma_b_);
      Vec lam = -D_.cwiseProduct(yeq) / (tau * sigma_c_);
      Vec z = yK.cwiseQuotient(E_) / (tau * sigma_c_);
      Residuals r;
      r.primal = (A_ * x - b_).norm() / (1.0 + norm_b_);
      r.dual = (A_.transpose() * lam + z - c_).norm() / (1.0 + norm_c_);
      const double pobj = c_.dot(x), dobj = b_.dot(lam);
      r.gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
      res.x = rotate(x);
      res.y = lam;
      res.z = rotate(z);
      res.primal_objective = pobj;
      res.dual_objective = dobj;
      res.residuals = r;
      if (r.max() <= opts_.eps) {
        res.status = SolveStatus::Optimal;
        return true;
      }
    }
    {
      Vec lam = -D_.cwiseProduct(yeq);
      Vec z = yK.cwiseQuotient(E_);
      const double by = b_.dot(lam);
      if (by > 0) {
        lam /= by;
        z /= by;
        const double r = (A_.transpose() * lam + z).norm();
        if (r <= opts_.eps_infeas) {
          res.status = SolveStatus::PrimalInfeasibleCert;
          res.ray_y = lam;
          res.ray_z = rotate(z);
          res.certificate_residual = r;
          return true;
        }
      }
    }
    {
      Vec x = E_.cwiseProduct(sK);
      const double cx = c_.dot(x);
      if (cx < 0) {
        x /= -cx;
        const double r = (A_ * x).norm();
        if (r <= opts_.eps_infeas) {
          res.status = SolveStatus::DualInfeasibleCert;
          res.ray_x = rotate(x);
          res.certificate_residual = r;
          return true;
        }
      }
    }
    return false;
  }

  SolveOptions opts_;
  int N_ = 0, M_ = 0;
  std::vector<detail::BlockInfo> blocks_;
  std::vector<int> rsoc_offsets_;
  std::vector<detail::PsdProjector> psd_;
  SpMat A_, As_;
  Vec b_, c_, bs_, cs_, D_, E_, g_, h_;
  double norm_b_ = 0, norm_c_ = 0, sigma_b_ = 1, sigma_c_ = 1, hg_ = 1;
  Eigen::SimplicialLLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> llt_;
};

inline SolveResult solve(const ConicProgram& prog, const SolveOptions& opts = {}) {
  ConicSolver s(prog, opts);
  return s.solve();
}

struct VerifyReport {
  bool pass = true;
  Residuals residuals;
  std::vector<std::string> violations;
};

// Independent recomputation of residuals and cone memberships from the raw program.
inline VerifyReport verify_solution(const ConicProgram& prog, const SolveResult& r, double tol) {
  VerifyReport rep;
  prog.validate();
  const int N = prog.num_vars(), M = prog.num_rows();
  if (r.x.size() != N || r.y.size() != M || r.z.size() != N) {
    rep.pass = false;
    rep.violations.push_back("solution vectors have wrong length");
    return rep;
  }
  const auto off = prog.offsets();
  Vec ax = Vec::Zero(M), aty = Vec::Zero(N);
  for (const auto& t : prog.triplets) {
    const int col = off[t.block] + t.index;
    ax(t.row) += t.value * r.x(col);
    aty(col) += t.value * r.y(t.row);
  }
  const Vec b = Eigen::Map<const Vec>(prog.b.data(), M);
  const Vec c = Eigen::Map<const Vec>(prog.objective.data(), N);
  const Vec pres = ax - b;
  const Vec dres = aty + r.z - c;
  rep.residuals.primal = pres.norm() / (1.0 + b.norm());
  rep.residuals.dual = dres.norm() / (1.0 + c.norm());
  const double po = c.dot(r.x), dobj = b.dot(r.y);
  rep.residuals.gap = std::abs(po - dobj) / (1.0 + std::abs(po) + std::abs(dobj));
  auto fail = [&](const std::string& s) {
    rep.pass = false;
    rep.violations.push_back(s);
  };
  if (rep.residuals.primal > tol) {
    Eigen::Index row;
    pres.cwiseAbs().maxCoeff(&row);
    std::ostringstream os;
    os << "equality row " << row << " residual " << pres(row);
    fail(os.str());
  }
  if (rep.residuals.dual > tol) {
    Eigen::Index col;
    dres.cwiseAbs().maxCoeff(&col);
    std::ostringstream os;
    os << "dual stationarity at variable " << col << " residual " << dres(col);
    fail(os.str());
  }
  if (rep.residuals.gap > tol) fail("duality gap " + std::to_string(rep.residuals.gap));
  for (std::size_t i = 0; i < prog.blocks.size(); ++i) {
    const auto& bl = prog.blocks[i];
    const Vec xs = r.x.segment(off[i], bl.size());
    const Vec zs = r.z.segment(off[i], bl.size());
    const std::string tag = "block " + std::to_string(i) + " (" + cone_name(bl.kind) + ")";
    auto check_member = [&](const Vec& s, bool dual, const char* what) {
      const double sc = 1.0 + s.norm();
      double viol = 0.0;
      ConeKind k = bl.kind;
      if (dual && k == ConeKind::Zero) k = ConeKind::Free;
      else if (dual && k == ConeKind::Free) k = ConeKind::Zero;
      switch (k) {
        case ConeKind::Free: break;
        case ConeKind::Zero: viol = s.cwiseAbs().maxCoeff(); break;
        case ConeKind::NonNeg: viol = std::max(0.0, -s.minCoeff()); break;
        case ConeKind::SOC: viol = std::max(0.0, s.tail(s.size() - 1).norm() - s(0)); break;
        case ConeKind::RSOC:
          viol = std::max({0.0, -s(0), -s(1), s.tail(s.size() - 2).squaredNorm() - 2.0 * s(0) * s(1)});
          break;
        case ConeKind::PSD: viol = std::max(0.0, -eig_sym(smat(s)).values(0)); break;
      }
      if (viol > tol * sc) fail(tag + " " + what + " violation " + std::to_string(viol));
    };
    check_member(xs, false, "primal cone");
    check_member(zs, true, "dual cone");
  }
  return rep;
}

}  // namespace spartra
