#include <gtest/gtest.h>

#include "spartra/combinatorics.hpp"
#include "spartra/conic_solver.hpp"
#include "spartra/io.hpp"
#include "util.hpp"

using namespace spartra;

namespace {

constexpr double kEps = 1e-7;

ConicProgram trace_min() {
  ProgramBuilder pb;
  const int X = pb.add_block(ConeKind::PSD, 2);
  pb.obj_inner(X, SymMatrix::identity(2));
  pb.entry(pb.add_row(1.0), X, 0, 0, 1.0);
  return pb.build();
}

ConicProgram lmax_program(const SymMatrix& S) {
  ProgramBuilder pb;
  const int X = pb.add_block(ConeKind::PSD, S.size());
  pb.obj_inner(X, S, -1.0);
  pb.inner(pb.add_row(1.0), X, SymMatrix::identity(S.size()));
  return pb.build();
}

// Bounded feasible standard-form LP: c > 0, b = A x0 with x0 > 0.
ConicProgram random_lp(std::mt19937_64& g, int n, int m, Mat& A, Vec& b, Vec& c) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  A = tu::randn(g, m, n);
  Vec x0(n);
  for (int i = 0; i < n; ++i) x0(i) = u(g);
  b = A * x0;
  c.resize(n);
  for (int i = 0; i < n; ++i) c(i) = u(g);
  ProgramBuilder pb;
  const int X = pb.add_block(ConeKind::NonNeg, n);
  for (int i = 0; i < n; ++i) pb.obj(X, i, c(i));
  for (int r = 0; r < m; ++r) {
    const int row = pb.add_row(b(r));
    for (int i = 0; i < n; ++i) pb.coef(row, X, i, A(r, i));
  }
  return pb.build();
}

double vertex_oracle(const Mat& A, const Vec& b, const Vec& c) {
  const int m = static_cast<int>(A.rows()), n = static_cast<int>(A.cols());
  double best = std::numeric_limits<double>::infinity();
  for_each_combination(n, m, [&](const std::vector<int>& B) {
    Mat AB(m, m);
    for (int j = 0; j < m; ++j) AB.col(j) = A.col(B[j]);
    Eigen::FullPivLU<Mat> lu(AB);
    if (!lu.isInvertible()) return;
    const Vec xb = lu.solve(b);
    if (xb.minCoeff() < -1e-12) return;
    double v = 0;
    for (int j = 0; j < m; ++j) v += c(B[j]) * xb(j);
    best = std::min(best, v);
  });
  return best;
}

}  // namespace

TEST(Solve, TraceMinimization) {
  const SolveResult r = solve(trace_min());
  ASSERT_EQ(r.status, SolveStatus::Optimal);
  EXPECT_NEAR(r.primal_objective, 1.0, 1e-6);
  const SymMatrix X = block_matrix(r.x, 0, 2);
  EXPECT_NEAR(X(0, 0), 1.0, 1e-6);
  EXPECT_NEAR(X(1, 1), 0.0, 1e-6);
  EXPECT_NEAR(X(0, 1), 0.0, 1e-5);
}

TEST(Solve, LambdaMaxSdp) {
  const SolveResult r = solve(lmax_program(SymMatrix::diagonal((Vec(3) << 1, 2, 3).finished())));
  ASSERT_EQ(r.status, SolveStatus::Optimal);
  EXPECT_NEAR(-r.primal_objective, 3.0, 1e-5);
  auto& g = tu::gen(20);
  for (int t = 0; t < 5; ++t) {
    const SymMatrix S = tu::rand_sym(g, 6);
    const SolveResult q = solve(lmax_program(S));
    ASSERT_EQ(q.status, SolveStatus::Optimal);
    EXPECT_NEAR(-q.primal_objective, lambda_max(S), 1e-5 * (1 + spectral_norm(S)));
  }
}

TEST(Solve, RandomLpMatchesVertexEnumeration) {
  auto& g = tu::gen(21);
  for (int t = 0; t < 20; ++t) {
    const int n = 3 + t % 4, m = 1 + t % 3;
    Mat A;
    Vec b, c;
    const ConicProgram p = random_lp(g, n, m, A, b, c);
    const SolveResult r = solve(p);
    ASSERT_EQ(r.status, SolveStatus::Optimal) << t;
    EXPECT_NEAR(r.primal_objective, vertex_oracle(A, b, c), 1e-5 * (1 + std::abs(r.primal_objective))) << t;
  }
}

TEST(Solve, SecondOrderCones) {
  ProgramBuilder pb;
  const int S = pb.add_block(ConeKind::SOC, 3);
  pb.obj(S, 0, 1.0);
  pb.coef(pb.add_row(3.0), S, 1, 1.0);
  pb.coef(pb.add_row(4.0), S, 2, 1.0);
  const SolveResult r = solve(pb.build());
  ASSERT_EQ(r.status, SolveStatus::Optimal);
  EXPECT_NEAR(r.primal_objective, 5.0, 1e-5);

  ProgramBuilder rb;
  const int R = rb.add_block(ConeKind::RSOC, 3);
  rb.obj(R, 0, 1.0);
  rb.obj(R, 1, 1.0);
  rb.coef(rb.add_row(2.0), R, 2, 1.0);
  const SolveResult q = solve(rb.build());
  ASSERT_EQ(q.status, SolveStatus::Optimal);
  EXPECT_NEAR(q.primal_objective, 2.0 * std::sqrt(2.0), 1e-5);
}

TEST(Solve, InfeasibilityCertificates) {
  ProgramBuilder pb;
  const int X = pb.add_block(ConeKind::NonNeg, 2);
  const int r = pb.add_row(-1.0);
  pb.coef(r, X, 0, 1.0);
  pb.coef(r, X, 1, 1.0);
  const SolveResult a = solve(pb.build());
  ASSERT_EQ(a.status, SolveStatus::PrimalInfeasibleCert);
  EXPECT_NEAR(a.ray_y.dot(Vec::Constant(1, -1.0)), 1.0, 1e-9);

  ProgramBuilder ub;
  const int Y = ub.add_block(ConeKind::NonNeg, 2);
  ub.obj(Y, 0, -1.0);
  const int s = ub.add_row(0.0);
  ub.coef(s, Y, 0, 1.0);
  ub.coef(s, Y, 1, -1.0);
  const SolveResult b = solve(ub.build());
  ASSERT_EQ(b.status, SolveStatus::DualInfeasibleCert);
  EXPECT_GE(b.ray_x.minCoeff(), -1e-9);
}

TEST(Solve, StructuralErrors) {
  ConicProgram p = trace_min();
  p.triplets.push_back({0, 0, 7, 1.0});
  EXPECT_THROW(solve(p), ValidationError);
  ConicProgram q = trace_min();
  q.b[0] = std::nan("");
  EXPECT_THROW(solve(q), ValidationError);
  EXPECT_THROW(solve(ConicProgram{}), ValidationError);
}

TEST(Verify, OptimalPassesCorruptedFails) {
  const ConicProgram p = lmax_program(SymMatrix::diagonal((Vec(3) << 1, 2, 3).finished()));
  SolveResult r = solve(p);
  ASSERT_EQ(r.status, SolveStatus::Optimal);
  EXPECT_TRUE(verify_solution(p, r, 10 * kEps).pass);
  r.x(0) += 1.0;
  const VerifyReport bad = verify_solution(p, r, 10 * kEps);
  EXPECT_FALSE(bad.pass);
  ASSERT_FALSE(bad.violations.empty());
  EXPECT_NE(bad.violations[0].find("equality row 0"), std::string::npos);
}

TEST(Properties, WeakDualityAndHomogeneity) {
  auto& g = tu::gen(22);
  for (int t = 0; t < 6; ++t) {
    Mat A;
    Vec b, c;
    ConicProgram p = random_lp(g, 5, 2, A, b, c);
    const SolveResult r = solve(p);
    ASSERT_EQ(r.status, SolveStatus::Optimal);
    const double scale = 1 + std::abs(r.primal_objective);
    EXPECT_LE(r.dual_objective, r.primal_objective + 10 * kEps * scale);
    const double gam = 3.5;
    for (double& v : p.objective) v *= gam;
    for (double& v : p.b) v *= gam;
    const SolveResult s = solve(p);
    ASSERT_EQ(s.status, SolveStatus::Optimal);
    EXPECT_NEAR(s.primal_objective, gam * gam * r.primal_objective, 10 * kEps * gam * gam * scale);
  }
}

TEST(Properties, Determinism) {
  auto& g = tu::gen(23);
  const ConicProgram p = lmax_program(tu::rand_sym(g, 7));
  const SolveResult a = solve(p), b = solve(p);
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_EQ(a.primal_objective, b.primal_objective);
  EXPECT_TRUE(a.x == b.x);
}

TEST(Properties, ProjectionMoreau) {
  auto& g = tu::gen(24);
  for (int t = 0; t < 20; ++t) {
    Vec v = tu::randn(g, 5);
    Vec p = v;
    detail::proj_soc(p.data(), 5);
    const Vec d = p - v;  // must lie in K* = K for SOC
    EXPECT_GE(d(0) + 1e-12, d.tail(4).norm());
    EXPECT_NEAR(p.dot(d), 0.0, 1e-12 * (1 + v.squaredNorm()));

    Vec s = tu::randn(g, tri_size(4));
    Vec q = s;
    detail::PsdProjector(4).project(q.data());
    const SymMatrix D = smat(q - s);
    EXPECT_GE(lambda_min(D), -1e-12 * (1 + s.norm()));
    EXPECT_GE(lambda_min(smat(q)), -1e-12 * (1 + s.norm()));
    EXPECT_NEAR(q.dot(q - s), 0.0, 1e-11 * (1 + s.squaredNorm()));
  }
}

TEST(Serialization, ProgramRoundTrip) {
  auto& g = tu::gen(25);
  Mat A;
  Vec b, c;
  const ConicProgram p = random_lp(g, 4, 2, A, b, c);
  const json j = to_json(p);
  const ConicProgram q = program_from_json(j);
  EXPECT_EQ(to_json(q).dump(), j.dump());
  EXPECT_EQ(solve(p).primal_objective, solve(q).primal_objective);
}
