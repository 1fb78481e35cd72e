#pragma once

#include <Eigen/Eigenvalues>

#include <cmath>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "cones.hpp"
#include "conic_program.hpp"
#include "conic_solver.hpp"
#include "support.hpp"
#include "symmat.hpp"

namespace spartra {

enum class Sense { Min, Max };
enum class Method { Q, Qplus, S1, Sbs };

inline const char* sense_name(Sense s) { return s == Sense::Min ? "min" : "max"; }
inline Sense sense_from_name(const std::string& s) {
  if (s == "min") return Sense::Min;
  if (s == "max") return Sense::Max;
  throw ValidationError("unknown sense '" + s + "'");
}

inline const char* method_name(Method m) {
  switch (m) {
    case Method::Q: return "Q";
    case Method::Qplus: return "Qplus";
    case Method::S1: return "S1";
    case Method::Sbs: return "Sbs";
  }
  return "?";
}
inline Method method_from_name(const std::string& s) {
  if (s == "Q") return Method::Q;
  if (s == "Qplus") return Method::Qplus;
  if (s == "S1") return Method::S1;
  if (s == "Sbs") return Method::Sbs;
  throw ValidationError("unknown relaxation method '" + s + "'");
}

struct QuadConstraint {
  SymMatrix A;
  double b = 0.0;
};

struct SparseQcqp {
  SymMatrix C{0};
  std::vector<QuadConstraint> constraints;
  int k = 1;
  Sense sense = Sense::Min;

  int n() const { return C.size(); }
  int m() const { return static_cast<int>(constraints.size()); }
  void validate() const {
    if (n() < 1) throw DimensionError("qcqp: empty objective matrix");
    for (const auto& c : constraints)
      if (c.A.size() != n()) throw DimensionError("qcqp: constraint matrix order differs from objective order");
    if (k < 1 || k > n()) throw DomainError("qcqp: k must satisfy 1 <= k <= n");
  }
};

struct SpcaProblem {
  SymMatrix Sigma{0};
  int k = 1;
};
struct RidgeProblem {
  Mat A;
  Vec y;
  double alpha = 0.0;
  int k = 1;
};
struct SlrProblem {
  Mat A;
  Vec y;
  int k = 1;
};
struct SccaProblem {
  SymMatrix Sxx{0}, Syy{0};
  Mat Sxy;
  int k1 = 1, k2 = 1;
};
struct RipProblem {
  Mat A;
  int k = 1;
};

using Problem = std::variant<SparseQcqp, SpcaProblem, RidgeProblem, SlrProblem, SccaProblem, RipProblem>;

inline const char* problem_name(const Problem& p) {
  static const char* names[] = {"qcqp", "spca", "ridge", "slr", "scca", "rip"};
  return names[p.index()];
}

struct ConeAttachment {
  int offset = 0;
  int order = 0;
  int k = 1;
  int y_block = -1;
  int coupling_row = -1;
};

struct RelaxationLayout {
  Method method = Method::Q;
  Sense sense = Sense::Min;
  int main_block = 0;
  int main_order = 0;
  bool bordered = false;
  std::vector<int> lambda_rows;
  std::vector<ConeAttachment> attachments;
  std::string tag;
};

struct BuiltRelaxation {
  ConicProgram program;
  RelaxationLayout layout;
};

namespace detail {

inline void check_k(int k, int n, const char* what) {
  if (k < 1 || k > n) throw DomainError(std::string(what) + ": k must satisfy 1 <= k <= " + std::to_string(n));
}

inline void trace_coefs(ProgramBuilder& pb, int row, int blk, int off, int ord, double v) {
  for (int i = 0; i < ord; ++i) pb.entry(row, blk, i + off, i + off, v);
}

// Y = k diag(X_sub) - X_sub with Y a separate PSD block.
inline void attach_S0(ProgramBuilder& pb, int blk, ConeAttachment& a) {
  a.y_block = pb.add_block(ConeKind::PSD, a.order);
  a.coupling_row = pb.rows();
  for (int i = 0; i < a.order; ++i)
    for (int j = 0; j <= i; ++j) {
      const int r = pb.add_row(0.0);
      pb.coef(r, a.y_block, tri_index(i, j), 1.0);
      pb.coef(r, blk, tri_index(i + a.offset, j + a.offset), i == j ? -(a.k - 1.0) : 1.0);
    }
}

struct AbsSplit {
  int P = -1, N = -1;
};

inline int pair_index(int i, int j) { return i * (i - 1) / 2 + j; }

// P - N = X_ij on the strict lower triangle, so P + N >= |X_ij|.
inline AbsSplit abs_split(ProgramBuilder& pb, int blk, int off, int ord) {
  AbsSplit s;
  if (ord < 2) return s;
  const int pairs = ord * (ord - 1) / 2;
  s.P = pb.add_block(ConeKind::NonNeg, pairs);
  s.N = pb.add_block(ConeKind::NonNeg, pairs);
  for (int i = 0; i < ord; ++i)
    for (int j = 0; j < i; ++j) {
      const int r = pb.add_row(0.0);
      pb.entry(r, blk, i + off, j + off, 1.0);
      pb.coef(r, s.P, pair_index(i, j), -1.0);
      pb.coef(r, s.N, pair_index(i, j), 1.0);
    }
  return s;
}

// |X|_1 <= k tr X
inline void l1_budget(ProgramBuilder& pb, int blk, int off, int ord, int k, const AbsSplit& s) {
  const int slack = pb.add_block(ConeKind::NonNeg, 1);
  const int r = pb.add_row(0.0);
  trace_coefs(pb, r, blk, off, ord, 1.0 - k);
  for (int p = 0; s.P >= 0 && p < ord * (ord - 1) / 2; ++p) {
    pb.coef(r, s.P, p, 2.0);
    pb.coef(r, s.N, p, 2.0);
  }
  pb.coef(r, slack, 0, 1.0);
}

// 0 <= z_i <= tr X, sum z = k tr X, |X_i,:|^2 <= X_ii z_i.  Returns the z block.
inline int budget_and_rows(ProgramBuilder& pb, int blk, int off, int ord, int k) {
  const int z = pb.add_block(ConeKind::NonNeg, ord);
  const int u = pb.add_block(ConeKind::NonNeg, ord);
  for (int i = 0; i < ord; ++i) {
    const int r = pb.add_row(0.0);
    pb.coef(r, z, i, 1.0);
    pb.coef(r, u, i, 1.0);
    trace_coefs(pb, r, blk, off, ord, -1.0);
  }
  const int r = pb.add_row(0.0);
  for (int i = 0; i < ord; ++i) pb.coef(r, z, i, 1.0);
  trace_coefs(pb, r, blk, off, ord, -static_cast<double>(k));
  for (int i = 0; i < ord; ++i) {
    const int q = pb.add_block(ConeKind::RSOC, ord + 2);
    int row = pb.add_row(0.0);
    pb.coef(row, q, 0, 1.0);
    pb.entry(row, blk, i + off, i + off, -1.0);
    row = pb.add_row(0.0);
    pb.coef(row, q, 1, 1.0);
    pb.coef(row, z, i, -0.5);
    for (int j = 0; j < ord; ++j) {
      row = pb.add_row(0.0);
      pb.coef(row, q, 2 + j, 1.0);
      pb.entry(row, blk, std::max(i, j) + off, std::min(i, j) + off, -1.0);
    }
  }
  return z;
}

inline void attach_Sz(ProgramBuilder& pb, int blk, const ConeAttachment& a) {
  const AbsSplit s = abs_split(pb, blk, a.offset, a.order);
  const int z = budget_and_rows(pb, blk, a.offset, a.order, a.k);
  // (sum_j |X_ij|)^2 <= k X_ii z_i
  for (int i = 0; i < a.order; ++i) {
    const int q = pb.add_block(ConeKind::RSOC, 3);
    int row = pb.add_row(0.0);
    pb.coef(row, q, 0, 1.0);
    pb.entry(row, blk, i + a.offset, i + a.offset, -1.0);
    row = pb.add_row(0.0);
    pb.coef(row, q, 1, 1.0);
    pb.coef(row, z, i, -0.5 * a.k);
    row = pb.add_row(0.0);
    pb.coef(row, q, 2, 1.0);
    pb.entry(row, blk, i + a.offset, i + a.offset, -1.0);
    for (int j = 0; j < a.order; ++j) {
      if (j == i) continue;
      const int p = pair_index(std::max(i, j), std::min(i, j));
      pb.coef(row, s.P, p, -1.0);
      pb.coef(row, s.N, p, -1.0);
    }
  }
}

inline void attach_S1(ProgramBuilder& pb, int blk, const ConeAttachment& a) {
  const AbsSplit s = abs_split(pb, blk, a.offset, a.order);
  l1_budget(pb, blk, a.offset, a.order, a.k, s);
}

// X_ij <= M_ij z_i with M_ii = 1, M_ij = 1/2, inside S1.
inline void attach_Sbs(ProgramBuilder& pb, int blk, const ConeAttachment& a) {
  attach_S1(pb, blk, a);
  const int z = budget_and_rows(pb, blk, a.offset, a.order, a.k);
  const int s = pb.add_block(ConeKind::NonNeg, a.order * a.order);
  for (int i = 0; i < a.order; ++i)
    for (int j = 0; j < a.order; ++j) {
      const int r = pb.add_row(0.0);
      pb.coef(r, z, i, i == j ? 1.0 : 0.5);
      pb.entry(r, blk, std::max(i, j) + a.offset, std::min(i, j) + a.offset, -1.0);
      pb.coef(r, s, i * a.order + j, -1.0);
    }
}

// Q always carries the spartrahedron; the other methods add their own cone lists.
inline void attach(ProgramBuilder& pb, int blk, Method method, ConeAttachment& a) {
  switch (method) {
    case Method::Q: attach_S0(pb, blk, a); break;
    case Method::Qplus:
      attach_S0(pb, blk, a);
      attach_Sz(pb, blk, a);
      break;
    case Method::S1: attach_S1(pb, blk, a); break;
    case Method::Sbs: attach_Sbs(pb, blk, a); break;
  }
}

inline SymMatrix gram_bordered(const Mat& A, const Vec& y, double scale, double alpha) {
  if (y.size() != A.rows()) throw DimensionError("regression: y length differs from the row count of A");
  Mat B(A.rows(), A.cols() + 1);
  B.col(0) = y;
  B.rightCols(A.cols()) = -A;
  Mat C = B.transpose() * B * scale;
  C.diagonal().tail(A.cols()).array() += alpha;
  return SymMatrix::from_dense(C);
}

}  // namespace detail

inline BuiltRelaxation build_relaxation(const SparseQcqp& p, Method method) {
  p.validate();
  ProgramBuilder pb;
  RelaxationLayout L;
  L.method = method;
  L.sense = p.sense;
  L.main_order = p.n();
  L.main_block = pb.add_block(ConeKind::PSD, p.n());
  L.tag = std::string(method_name(method)) + "-qcqp";
  pb.obj_inner(L.main_block, p.C, p.sense == Sense::Max ? -1.0 : 1.0);
  for (const auto& c : p.constraints) {
    const int r = pb.add_row(c.b);
    pb.inner(r, L.main_block, c.A);
    L.lambda_rows.push_back(r);
  }
  ConeAttachment a{0, p.n(), p.k};
  detail::attach(pb, L.main_block, method, a);
  L.attachments.push_back(a);
  return {pb.build(), L};
}

inline BuiltRelaxation build_Q(const SparseQcqp& p) { return build_relaxation(p, Method::Q); }
inline BuiltRelaxation build_Qplus(const SparseQcqp& p) { return build_relaxation(p, Method::Qplus); }
inline BuiltRelaxation build_QK(const SparseQcqp& p, Method cone) {
  if (cone != Method::S1 && cone != Method::Sbs) throw DomainError("build_QK: cone must be S1 or Sbs");
  return build_relaxation(p, cone);
}

inline BuiltRelaxation build_spca(const SymMatrix& Sigma, int k, Method method = Method::Q) {
  detail::check_k(k, Sigma.size(), "build_spca");
  ProgramBuilder pb;
  RelaxationLayout L;
  L.method = method;
  L.sense = Sense::Max;
  L.main_order = Sigma.size();
  L.main_block = pb.add_block(ConeKind::PSD, L.main_order);
  L.tag = std::string(method_name(method)) + "-spca";
  pb.obj_inner(L.main_block, Sigma, -1.0);
  const int r = pb.add_row(1.0);
  detail::trace_coefs(pb, r, L.main_block, 0, L.main_order, 1.0);
  L.lambda_rows.push_back(r);
  ConeAttachment a{0, L.main_order, k};
  detail::attach(pb, L.main_block, method, a);
  L.attachments.push_back(a);
  return {pb.build(), L};
}

inline BuiltRelaxation build_sridge(const Mat& A, const Vec& y, double alpha, int k, Method method = Method::Q) {
  if (alpha < 0) throw DomainError("build_sridge: alpha must be >= 0");
  const int n = static_cast<int>(A.cols());
  detail::check_k(k, n, "build_sridge");
  const SymMatrix C = detail::gram_bordered(A, y, 1.0 / static_cast<double>(A.rows()), alpha);
  ProgramBuilder pb;
  RelaxationLayout L;
  L.method = method;
  L.sense = Sense::Min;
  L.bordered = true;
  L.main_order = n + 1;
  L.main_block = pb.add_block(ConeKind::PSD, n + 1);
  L.tag = std::string(method_name(method)) + "-ridge";
  pb.obj_inner(L.main_block, C);
  const int r = pb.add_row(1.0);
  pb.entry(r, L.main_block, 0, 0, 1.0);
  L.lambda_rows.push_back(r);
  ConeAttachment a{1, n, k};
  detail::attach(pb, L.main_block, method, a);
  L.attachments.push_back(a);
  return {pb.build(), L};
}

inline SparseQcqp slr_as_qcqp(const Mat& A, const Vec& y, int k) {
  const int n = static_cast<int>(A.cols());
  detail::check_k(k, n, "slr");
  SparseQcqp p;
  p.C = detail::gram_bordered(A, y, 1.0, 0.0);
  SymMatrix E(n + 1);
  E.set(0, 0, 1.0);
  p.constraints.push_back({E, 1.0});
  p.k = k + 1;
  p.sense = Sense::Min;
  return p;
}

inline SparseQcqp spca_as_qcqp(const SymMatrix& Sigma, int k) {
  SparseQcqp p;
  p.C = Sigma;
  p.constraints.push_back({SymMatrix::identity(Sigma.size()), 1.0});
  p.k = k;
  p.sense = Sense::Max;
  return p;
}

inline BuiltRelaxation build_slr_homogenized(const Mat& A, const Vec& y, int k, Method method = Method::Q) {
  BuiltRelaxation b = build_relaxation(slr_as_qcqp(A, y, k), method);
  b.layout.bordered = true;
  b.layout.tag = std::string(method_name(method)) + "-slr";
  return b;
}

inline BuiltRelaxation build_scca(const SymMatrix& Sxx, const SymMatrix& Syy, const Mat& Sxy, int k1, int k2,
                                  Method method = Method::Q) {
  const int n1 = Sxx.size(), n2 = Syy.size();
  if (Sxy.rows() != n1 || Sxy.cols() != n2) throw DimensionError("build_scca: Sxy shape differs from the covariance orders");
  detail::check_k(k1, n1, "build_scca");
  detail::check_k(k2, n2, "build_scca");
  ProgramBuilder pb;
  RelaxationLayout L;
  L.method = method;
  L.sense = Sense::Max;
  L.main_order = n1 + n2;
  L.main_block = pb.add_block(ConeKind::PSD, n1 + n2);
  L.tag = std::string(method_name(method)) + "-scca";
  for (int i = 0; i < n2; ++i)
    for (int j = 0; j < n1; ++j) pb.obj_entry(L.main_block, n1 + i, j, -Sxy(j, i));
  const int slack = pb.add_block(ConeKind::NonNeg, 2);
  int r = pb.add_row(1.0);
  pb.inner(r, L.main_block, Sxx, 1.0, 0);
  pb.coef(r, slack, 0, 1.0);
  L.lambda_rows.push_back(r);
  r = pb.add_row(1.0);
  pb.inner(r, L.main_block, Syy, 1.0, n1);
  pb.coef(r, slack, 1, 1.0);
  L.lambda_rows.push_back(r);
  ConeAttachment a1{0, n1, k1}, a2{n1, n2, k2};
  detail::attach(pb, L.main_block, method, a1);
  detail::attach(pb, L.main_block, method, a2);
  L.attachments.push_back(a1);
  L.attachments.push_back(a2);
  return {pb.build(), L};
}

inline BuiltRelaxation build_problem(const Problem& p, Method method) {
  return std::visit(
      [&](const auto& q) -> BuiltRelaxation {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, SparseQcqp>) return build_relaxation(q, method);
        if constexpr (std::is_same_v<T, SpcaProblem>) return build_spca(q.Sigma, q.k, method);
        if constexpr (std::is_same_v<T, RidgeProblem>) return build_sridge(q.A, q.y, q.alpha, q.k, method);
        if constexpr (std::is_same_v<T, SlrProblem>) return build_slr_homogenized(q.A, q.y, q.k, method);
        if constexpr (std::is_same_v<T, SccaProblem>) return build_scca(q.Sxx, q.Syy, q.Sxy, q.k1, q.k2, method);
        if constexpr (std::is_same_v<T, RipProblem>)
          return build_spca(SymMatrix::from_dense(q.A.transpose() * q.A), q.k, method);
      },
      p);
}

struct RelaxedSolution {
  SolveStatus status = SolveStatus::MaxIter;
  Residuals residuals;
  int iterations = 0;
  Sense sense = Sense::Min;
  SymMatrix X{0};
  Vec border;
  double value = 0.0;
  double dual_value = 0.0;
  Vec lambda;
  std::vector<SymMatrix> Z;
  std::string source;

  bool optimal() const { return status == SolveStatus::Optimal; }
};

inline RelaxedSolution extract(const BuiltRelaxation& b, const SolveResult& r) {
  const auto off = b.program.offsets();
  const RelaxationLayout& L = b.layout;
  RelaxedSolution s;
  s.status = r.status;
  s.residuals = r.residuals;
  s.iterations = r.iterations;
  s.sense = L.sense;
  s.source = L.tag;
  if (r.status != SolveStatus::Optimal && r.status != SolveStatus::MaxIter) return s;
  const double sg = L.sense == Sense::Max ? -1.0 : 1.0;
  s.X = block_matrix(r.x, off[L.main_block], L.main_order);
  if (L.bordered) {
    const Mat d = s.X.dense();
    s.border = d.col(0).tail(L.main_order - 1);
  }
  s.value = sg * r.primal_objective;
  s.dual_value = sg * r.dual_objective;
  s.lambda.resize(static_cast<Eigen::Index>(L.lambda_rows.size()));
  for (std::size_t i = 0; i < L.lambda_rows.size(); ++i) s.lambda(static_cast<Eigen::Index>(i)) = sg * r.y(L.lambda_rows[i]);
  for (const auto& a : L.attachments) {
    if (a.coupling_row < 0) continue;
    s.Z.push_back(smat(-r.y.segment(a.coupling_row, tri_size(a.order))));
  }
  return s;
}

inline RelaxedSolution solve_relaxation(const BuiltRelaxation& b, const SolveOptions& opts = {}) {
  return extract(b, solve(b.program, opts));
}

// Dual (D) as a standalone program: C - sum lambda_i A_i - dop(Z, k) = Q, Z, Q PSD.
struct BuiltDual {
  ConicProgram program;
  Sense sense = Sense::Min;
  int n = 0, m = 0, k = 1;
  int lambda_block = -1, z_block = -1, q_block = -1;
};

struct DualSolution {
  SolveStatus status = SolveStatus::MaxIter;
  Residuals residuals;
  int iterations = 0;
  double value = 0.0;
  Vec lambda;
  SymMatrix Z{0}, Q{0};
};

inline BuiltDual build_dual_D(const SparseQcqp& p) {
  p.validate();
  BuiltDual d;
  d.sense = p.sense;
  d.n = p.n();
  d.m = p.m();
  d.k = p.k;
  ProgramBuilder pb;
  if (d.m > 0) d.lambda_block = pb.add_block(ConeKind::Free, d.m);
  d.z_block = pb.add_block(ConeKind::PSD, d.n);
  d.q_block = pb.add_block(ConeKind::PSD, d.n);
  const double sg = p.sense == Sense::Max ? -1.0 : 1.0;
  for (int l = 0; l < d.m; ++l) pb.obj(d.lambda_block, l, -p.constraints[l].b);
  for (int i = 0; i < d.n; ++i)
    for (int j = 0; j <= i; ++j) {
      const double off = i == j ? 1.0 : kSqrt2;
      const int r = pb.add_row(sg * off * p.C(i, j));
      for (int l = 0; l < d.m; ++l) pb.coef(r, d.lambda_block, l, off * p.constraints[l].A(i, j));
      pb.coef(r, d.z_block, tri_index(i, j), i == j ? p.k - 1.0 : -1.0);
      pb.coef(r, d.q_block, tri_index(i, j), 1.0);
    }
  d.program = pb.build();
  return d;
}

inline DualSolution solve_dual(const BuiltDual& d, const SolveOptions& opts = {}) {
  const SolveResult r = solve(d.program, opts);
  DualSolution s;
  s.status = r.status;
  s.residuals = r.residuals;
  s.iterations = r.iterations;
  if (r.status != SolveStatus::Optimal && r.status != SolveStatus::MaxIter) return s;
  const auto off = d.program.offsets();
  // The builder maximizes b'lambda as min -b'lambda over sign-adjusted C.
  s.value = (d.sense == Sense::Min ? -1.0 : 1.0) * r.primal_objective;
  s.lambda = d.m > 0 ? Vec(r.x.segment(off[d.lambda_block], d.m)) : Vec();
  if (d.sense == Sense::Max) s.lambda = -s.lambda;
  s.Z = block_matrix(r.x, off[d.z_block], d.n);
  s.Q = block_matrix(r.x, off[d.q_block], d.n);
  return s;
}

// min rho s.t. rho I - dop(Z, k) - Q = Sigma.
inline BuiltDual build_spca_dual(const SymMatrix& Sigma, int k) {
  detail::check_k(k, Sigma.size(), "build_spca_dual");
  BuiltDual d;
  d.sense = Sense::Max;
  d.n = Sigma.size();
  d.m = 1;
  d.k = k;
  ProgramBuilder pb;
  d.lambda_block = pb.add_block(ConeKind::Free, 1);
  d.z_block = pb.add_block(ConeKind::PSD, d.n);
  d.q_block = pb.add_block(ConeKind::PSD, d.n);
  pb.obj(d.lambda_block, 0, 1.0);
  for (int i = 0; i < d.n; ++i)
    for (int j = 0; j <= i; ++j) {
      const int r = pb.add_row((i == j ? 1.0 : kSqrt2) * Sigma(i, j));
      if (i == j) pb.coef(r, d.lambda_block, 0, 1.0);
      pb.coef(r, d.z_block, tri_index(i, j), i == j ? -(k - 1.0) : 1.0);
      pb.coef(r, d.q_block, tri_index(i, j), -1.0);
    }
  d.program = pb.build();
  return d;
}

inline DualSolution solve_spca_dual(const BuiltDual& d, const SolveOptions& opts = {}) {
  const SolveResult r = solve(d.program, opts);
  DualSolution s;
  s.status = r.status;
  s.residuals = r.residuals;
  s.iterations = r.iterations;
  if (r.status != SolveStatus::Optimal && r.status != SolveStatus::MaxIter) return s;
  const auto off = d.program.offsets();
  s.value = r.primal_objective;
  s.lambda = r.x.segment(off[d.lambda_block], 1);
  s.Z = block_matrix(r.x, off[d.z_block], d.n);
  s.Q = block_matrix(r.x, off[d.q_block], d.n);
  return s;
}

inline BuiltDual build_slr_dual(const Mat& A, const Vec& y, int k) { return build_dual_D(slr_as_qcqp(A, y, k)); }

struct RipBounds {
  double delta_plus_bar = 0.0;
  double delta_minus_bar = 0.0;
  double upper = 0.0;  // 1 + delta_plus_bar
  double lower = 0.0;  // 1 - delta_minus_bar
  RelaxedSolution plus, minus;
};

inline RipBounds rip_bounds(const Mat& A, int k, const SolveOptions& opts = {}, Method method = Method::Q) {
  const SymMatrix G = SymMatrix::from_dense(A.transpose() * A);
  RipBounds rb;
  rb.plus = solve_relaxation(build_spca(G, k, method), opts);
  rb.minus = solve_relaxation(build_spca(G * -1.0, k, method), opts);
  rb.upper = rb.plus.value;
  rb.lower = -rb.minus.value;
  rb.delta_plus_bar = rb.upper - 1.0;
  rb.delta_minus_bar = 1.0 - rb.lower;
  return rb;
}

struct RankOneCheck {
  bool exact = false;
  double ratio = 1.0;
  std::optional<Vec> x;
  std::string diagnostic;
};

// lambda_2 / lambda_1 <= tol, then sqrt(lambda_1) v_1 must be k-sparse.
inline RankOneCheck rank_one_exactness(const SymMatrix& X, int k, double tol = 1e-5, double support_tol = 1e-6) {
  RankOneCheck c;
  const int n = X.size();
  if (n == 0) {
    c.diagnostic = "empty matrix";
    return c;
  }
  const EigDecomp e = eig_sym(X);
  const double l1 = e.values(n - 1);
  if (l1 <= 0.0) {
    c.diagnostic = "no positive eigenvalue";
    return c;
  }
  c.ratio = n > 1 ? std::max(e.values(n - 2), 0.0) / l1 : 0.0;
  if (c.ratio > tol) {
    c.diagnostic = "eigenvalue ratio " + std::to_string(c.ratio) + " above tolerance";
    return c;
  }
  Vec x = std::sqrt(l1) * e.vectors.col(n - 1);
  Eigen::Index imax;
  x.cwiseAbs().maxCoeff(&imax);
  if (x(imax) < 0) x = -x;
  const ConeVerdict q = in_Q_rank_one(x, k, support_tol);
  if (!q.member()) {
    c.diagnostic = "rank one but factor is not " + std::to_string(k) + "-sparse: " + q.detail;
    return c;
  }
  c.exact = true;
  c.x = x;
  return c;
}

struct RoundedPoint {
  Vec x;
  Vec v;  // second block for CCA
  std::vector<int> support;
  std::vector<int> support2;
  double value = 0.0;
};

namespace detail {

inline Vec leading_direction(const SymMatrix& X) {
  const EigDecomp e = eig_sym(X);
  const int n = X.size();
  if (n == 0 || e.values(n - 1) <= 1e-12 * (1.0 + std::abs(e.values(0))))
    throw DegenerateSolutionError("rounding: relaxed matrix has no positive leading eigenvalue");
  return e.vectors.col(n - 1);
}

inline Vec orient(Vec x, const Vec& ref) {
  if (x.dot(ref) < 0) x = -x;
  return x;
}

// Best point of (x' C x, x' A x = b) on support S via the generalized eigenproblem; A_S must be PD.
inline std::optional<Vec> restricted_single_constraint(const SymMatrix& C, const SymMatrix& A, double b, Sense sense,
                                                       const std::vector<int>& S) {
  const Mat cs = principal_dense(C.dense(), S);
  const Mat as = principal_dense(A.dense(), S);
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ges(cs, as);
  if (ges.info() != Eigen::Success || b <= 0) return std::nullopt;
  const Eigen::Index j = sense == Sense::Max ? cs.rows() - 1 : 0;
  Vec xs = ges.eigenvectors().col(j);
  const double q = xs.dot(as * xs);
  if (q <= 0) return std::nullopt;
  xs *= std::sqrt(b / q);
  return embed(xs, S, C.size());
}


// Entries below a relative noise floor count as zero; those slots go to the largest diagonal of Sigma.
inline std::vector<int> spca_support(const Vec& v, const SymMatrix& Sigma, int k, double floor = 1e-4) {
  const double cut = floor * v.cwiseAbs().maxCoeff();
  Vec score(v.size());
  for (int i = 0; i < v.size(); ++i) score(i) = std::abs(v(i)) > cut ? std::abs(v(i)) : 0.0;
  std::vector<int> idx(static_cast<std::size_t>(v.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (score(a) != score(b)) return score(a) > score(b);
    return Sigma(a, a) > Sigma(b, b);
  });
  idx.resize(static_cast<std::size_t>(k));
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace detail

inline RoundedPoint round_spca(const RelaxedSolution& sol, const SymMatrix& Sigma, int k) {
  const Vec v = detail::leading_direction(sol.X);
  RoundedPoint p;
  p.support = detail::spca_support(v, Sigma, k);
  const Vec xs = top_eigenvector(principal_dense(Sigma.dense(), p.support));
  p.x = detail::orient(embed(xs, p.support, Sigma.size()), v);
  p.value = Sigma.quad(p.x);
  return p;
}

inline RoundedPoint round_ridge(const RelaxedSolution& sol, const Mat& A, const Vec& y, double alpha, int k) {
  if (sol.border.size() != A.cols()) throw DimensionError("round_ridge: solution has no border vector of length n");
  RoundedPoint p;
  if (sol.border.norm() == 0.0) throw DegenerateSolutionError("round_ridge: border vector is zero");
  p.support = top_k_support(sol.border, k);
  p.x = ridge_restricted(A, y, alpha, p.support);
  p.value = ridge_objective(A, y, alpha, p.x);
  return p;
}

// Value on the (Q-slr) scale |Ax - y|^2.
inline RoundedPoint round_slr(const RelaxedSolution& sol, const Mat& A, const Vec& y, int k) {
  if (sol.border.size() != A.cols()) throw DimensionError("round_slr: solution has no border vector of length n");
  RoundedPoint p;
  if (sol.border.norm() == 0.0) throw DegenerateSolutionError("round_slr: border vector is zero");
  p.support = top_k_support(sol.border, k);
  p.x = ridge_restricted(A, y, 0.0, p.support);
  p.value = (A * p.x - y).squaredNorm();
  return p;
}

inline RoundedPoint round_scca(const RelaxedSolution& sol, const SymMatrix& Sxx, const SymMatrix& Syy, const Mat& Sxy,
                               int k1, int k2) {
  const int n1 = Sxx.size(), n2 = Syy.size();
  const Mat d = sol.X.dense();
  const Vec u0 = detail::leading_direction(SymMatrix::from_dense(d.topLeftCorner(n1, n1)));
  const Vec v0 = detail::leading_direction(SymMatrix::from_dense(d.bottomRightCorner(n2, n2)));
  RoundedPoint p;
  p.support = top_k_support(u0, k1);
  p.support2 = top_k_support(v0, k2);
  Vec u = truncate_k(u0, k1), v = truncate_k(v0, k2);
  const double qu = Sxx.quad(u), qv = Syy.quad(v);
  if (qu <= 0 || qv <= 0) throw DegenerateSolutionError("round_scca: truncated block has zero covariance norm");
  u /= std::sqrt(qu);
  v /= std::sqrt(qv);
  if (u.dot(Sxy * v) < 0) v = -v;
  p.x = u;
  p.v = v;
  p.value = u.dot(Sxy * v);
  return p;
}

inline RoundedPoint round_qcqp(const RelaxedSolution& sol, const SparseQcqp& q) {
  if (q.m() > 1) throw ScopeError("round_qcqp: rounding is implemented for at most one constraint");
  const EigDecomp e = eig_sym(sol.X);
  const int n = q.n();
  if (e.values(n - 1) <= 0) throw DegenerateSolutionError("round_qcqp: relaxed matrix is zero");
  const Vec v = std::sqrt(e.values(n - 1)) * e.vectors.col(n - 1);
  RoundedPoint p;
  p.support = top_k_support(v, q.k);
  if (q.m() == 0) {
    p.x = truncate_k(v, q.k);
  } else {
    auto r = detail::restricted_single_constraint(q.C, q.constraints[0].A, q.constraints[0].b, q.sense, p.support);
    if (r) {
      p.x = detail::orient(*r, v);
    } else {
      Vec x = truncate_k(v, q.k);
      const double a = q.constraints[0].A.quad(x);
      if (a == 0.0 || q.constraints[0].b / a < 0)
        throw DegenerateSolutionError("round_qcqp: truncated point cannot be scaled onto the constraint");
      p.x = x * std::sqrt(q.constraints[0].b / a);
    }
  }
  p.value = q.C.quad(p.x);
  return p;
}

inline RoundedPoint round_truncate(const RelaxedSolution& sol, const Problem& prob) {
  return std::visit(
      [&](const auto& q) -> RoundedPoint {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, SparseQcqp>) return round_qcqp(sol, q);
        if constexpr (std::is_same_v<T, SpcaProblem>) return round_spca(sol, q.Sigma, q.k);
        if constexpr (std::is_same_v<T, RidgeProblem>) return round_ridge(sol, q.A, q.y, q.alpha, q.k);
        if constexpr (std::is_same_v<T, SlrProblem>) return round_slr(sol, q.A, q.y, q.k);
        if constexpr (std::is_same_v<T, SccaProblem>) return round_scca(sol, q.Sxx, q.Syy, q.Sxy, q.k1, q.k2);
        if constexpr (std::is_same_v<T, RipProblem>)
          return round_spca(sol, SymMatrix::from_dense(q.A.transpose() * q.A), q.k);
      },
      prob);
}

}  // namespace spartra
