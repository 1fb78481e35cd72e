#include <gtest/gtest.h>

#include <cstdio>

#include "spartra/certify.hpp"
#include "spartra/instances.hpp"
#include "spartra/oracles.hpp"
#include "spartra/relaxations.hpp"
#include "util.hpp"

using namespace spartra;

namespace {

constexpr double kEps = 1e-7;

SymMatrix sub(const SymMatrix& S, const std::vector<int>& idx) {
  const int s = static_cast<int>(idx.size());
  SymMatrix R(s);
  for (int i = 0; i < s; ++i)
    for (int j = 0; j <= i; ++j) R.set(i, j, S(idx[i], idx[j]));
  return R;
}

Vec lift(const Vec& v, const std::vector<int>& idx, int n) {
  Vec x = Vec::Zero(n);
  for (std::size_t i = 0; i < idx.size(); ++i) x(idx[i]) = v(static_cast<Eigen::Index>(i));
  return x;
}

// Sigma, k -> certificate at the oracle optimum
Certificate spca_cert(const SymMatrix& S, int k, Vec* xout = nullptr) {
  const SparseQcqp p = spca_as_qcqp(S, k);
  const OracleResult o = spca_exact(S, k);
  const MultiplierResult m = lagrange_multiplier(p, o.x);
  if (xout) *xout = o.x;
  return stability_certificate(p, o.x, m.lambda);
}

}  // namespace

TEST(Multiplier, SpcaEigenvectorIffZeroResidual) {
  auto& g = tu::gen(100);
  for (int t = 0; t < 10; ++t) {
    const SymMatrix S = tu::rand_sym(g, 7);
    const std::vector<int> idx = {0, 2, 5};
    const SymMatrix SS = sub(S, idx);
    const Eigen::SelfAdjointEigenSolver<Mat> es(SS.dense());
    const Vec x = lift(es.eigenvectors().col(t % 3), idx, 7);
    const MultiplierResult r = lagrange_multiplier(spca_as_qcqp(S, 3), x);
    ASSERT_EQ(r.lambda.size(), 1);
    EXPECT_NEAR(r.lambda(0), x.dot(S.dense() * x), 1e-12);
    EXPECT_LE(r.residual, 1e-12);
    EXPECT_FALSE(r.rank_deficient);

    const Vec w = lift((Vec(3) << 1, -2, 0.5).finished().normalized(), idx, 7);
    const MultiplierResult q = lagrange_multiplier(spca_as_qcqp(S, 3), w);
    EXPECT_NEAR(q.lambda(0), w.dot(S.dense() * w), 1e-12);
    const Vec sw = SS.dense() * (Vec(3) << 1, -2, 0.5).finished().normalized();
    const double off = (sw - q.lambda(0) * (Vec(3) << 1, -2, 0.5).finished().normalized()).norm();
    EXPECT_NEAR(q.residual, off, 1e-12);
    EXPECT_GT(q.residual, 1e-6);
  }
}

TEST(Multiplier, NoiselessSlrAndEdgeCases) {
  auto& g = tu::gen(101);
  const Mat A = tu::randn(g, 10, 6);
  Vec xb = Vec::Zero(6);
  xb(1) = 0.7;
  xb(4) = -1.3;
  const Vec y = A * xb;
  Vec z(7);
  z << 1.0, xb;
  const MultiplierResult r = lagrange_multiplier(slr_as_qcqp(A, y, 2), z);
  EXPECT_NEAR(r.lambda(0), 0.0, 1e-10);
  EXPECT_LE(r.residual, 1e-10);

  SparseQcqp free;
  free.C = tu::rand_sym(g, 4);
  free.k = 2;
  const Vec x = (Vec(4) << 0, 1, 0, 2).finished();
  const MultiplierResult e = lagrange_multiplier(free, x);
  EXPECT_EQ(e.lambda.size(), 0);
  const Vec cx = free.C.dense() * x;
  EXPECT_NEAR(e.residual, std::hypot(cx(1), cx(3)), 1e-12);

  SparseQcqp twice = spca_as_qcqp(free.C, 2);
  twice.constraints.push_back(twice.constraints[0]);
  EXPECT_TRUE(lagrange_multiplier(twice, x.normalized()).rank_deficient);
  EXPECT_THROW(lagrange_multiplier(spca_as_qcqp(free.C, 2), x), PreconditionError);
}

TEST(Stability, NoiselessSlrIsValidWithCorankOne) {
  auto& g = tu::gen(102);
  for (int t = 0; t < 5; ++t) {
    const Mat A = tu::randn(g, 15, 8);
    Vec xb = Vec::Zero(8);
    const std::vector<int> p = tu::rand_perm(g, 8);
    for (int i = 0; i < 3; ++i) xb(p[i]) = 1.0 + i;
    const Vec y = A * xb;
    Vec z(9);
    z << 1.0, xb;
    const SparseQcqp q = slr_as_qcqp(A, y, 3);
    const Certificate c = stability_certificate(q, z, lagrange_multiplier(q, z).lambda);
    EXPECT_TRUE(c.valid) << c.detail;
    EXPECT_EQ(c.corank, 1);
    EXPECT_LE(c.Z.dense().norm(), 1e-8);
    EXPECT_GT(c.min_eig_Q, -1e-8);
  }
}

TEST(Stability, SpikedWignerFrequency) {
  int valid = 0;
  const int runs = 10;
  for (int s = 0; s < runs; ++s) {
    const Instance in = spiked_wigner(20, 5, 12.0, 500 + s);
    Vec x;
    const Certificate c = spca_cert(in.Sigma, 5, &x);
    EXPECT_TRUE(c.Z.dense().allFinite());
    if (!c.valid) continue;
    ++valid;
    const RelaxedSolution r = solve_relaxation(build_spca(in.Sigma, 5));
    ASSERT_TRUE(r.optimal());
    const double v = in.Sigma.quad(x);
    EXPECT_NEAR(r.value, v, 100 * kEps * (1 + std::abs(v))) << s;
  }
  std::printf("spiked wigner n=20 k=5 beta=12: %d/%d certificates valid\n", valid, runs);
  EXPECT_GT(valid, 0);
}

TEST(Stability, RelaxationGapForcesInvalid) {
  auto& g = tu::gen(103);
  int checked = 0;
  for (int t = 0; t < 10; ++t) {
    const SymMatrix S = tu::rand_sym(g, 8);
    const double vstar = spca_exact(S, 3).value;
    const RelaxedSolution r = solve_relaxation(build_spca(S, 3));
    ASSERT_TRUE(r.optimal());
    if (r.value - vstar < 1e-3 * (1 + std::abs(vstar))) continue;
    ++checked;
    const Certificate c = spca_cert(S, 3);
    EXPECT_FALSE(c.valid);
    EXPECT_LT(c.min_eig_Q, 0.0);
  }
  EXPECT_GT(checked, 0);

  // a large perturbation of a valid spiked instance
  const Instance in = spiked_wigner(12, 3, 12.0, 7);
  ASSERT_TRUE(spca_cert(in.Sigma, 3).valid);
  const SymMatrix big = in.Sigma + tu::rand_sym(g, 12) * 20.0;
  const Certificate bad = spca_cert(big, 3);
  EXPECT_FALSE(bad.valid);
  EXPECT_LT(bad.min_eig_Q, 0.0);
}

TEST(Stability, Preconditions) {
  const SymMatrix S = SymMatrix::identity(4);
  const Vec x = (Vec(4) << 1, 0, 0, 0).finished();
  EXPECT_THROW(stability_certificate(spca_as_qcqp(S, 2), x, Vec::Ones(1)), PreconditionError);
  EXPECT_THROW(stability_certificate(spca_as_qcqp(S, 1), x, Vec::Ones(2)), DimensionError);
  const Certificate c = stability_certificate(spca_as_qcqp(S, 1), x, Vec::Ones(1));
  EXPECT_TRUE(c.degenerate);
}

TEST(ExactRegion, UnperturbedAndScaled) {
  auto& g = tu::gen(104);
  const int n = 10;
  Vec xb = Vec::Zero(n);
  xb.head(3) << 1, -1, 1;
  xb.normalize();
  const double beta = 5.0;
  const SymMatrix Sb = SymMatrix::outer(xb) * beta;
  const SparseQcqp p = spca_as_qcqp(Sb, 3);
  const Vec lam = Vec::Constant(1, beta);
  const SymMatrix zero(n);

  const ExactRegionInputs in = exact_region_inputs(p, xb, lam, zero, xb);
  EXPECT_NEAR(in.nu2, beta, 1e-10);
  EXPECT_NEAR(in.sigma_s, 2.0, 1e-12);
  EXPECT_NEAR(in.norm_A, 1.0, 1e-12);
  EXPECT_NEAR(exact_region_rhs(in), 0.0, 1e-12);
  EXPECT_TRUE(exact_region_predicate(in));

  const SymMatrix W = tu::rand_sym(g, n);
  const SymMatrix dC = W * (2.0 * in.nu2 / in.eta / spectral_norm(W));
  EXPECT_FALSE(exact_region_predicate(exact_region_inputs(p, xb, lam, dC, xb)));

  ExactRegionInputs bad = in;
  bad.c_x = 0.0;
  EXPECT_THROW(exact_region_rhs(bad), PreconditionError);
  bad = in;
  bad.sigma_s = -1.0;
  EXPECT_THROW(exact_region_rhs(bad), PreconditionError);
}

TEST(ExactRegion, MonotoneInPerturbation) {
  ExactRegionInputs in;
  in.nu2 = 1.0;
  in.eta = 1.3;
  in.sigma_s = 2.0;
  in.norm_A = 1.0;
  in.norm_xbar = 1.0;
  in.c_x = 0.4;
  in.norm_x = 1.0;
  in.norm_x_minus_xbar = 0.01;
  in.norm_Qbar = 3.0;
  double prev = -1.0;
  for (int i = 0; i < 50; ++i) {
    in.norm_dC = 0.02 * i;
    const double r = exact_region_rhs(in);
    EXPECT_GT(r, prev);
    prev = r;
  }
  // printed form evaluated by hand
  in.norm_dC = 0.1;
  const double want = 1.3 * ((1 + 1.0 * 1.0 / 2.0) * (1 + 1.0 / 0.4) * 0.1 + 3.0 * 0.01 / 0.4);
  EXPECT_NEAR(exact_region_rhs(in), want, 1e-14);
  EXPECT_TRUE(exact_region_predicate(in));
  in.norm_dC = 0.2;
  EXPECT_FALSE(exact_region_predicate(in));
}

TEST(ExactRegion, SpcaThresholdInstanceSatisfiesPredicate) {
  auto& g = tu::gen(106);
  const int n = 12, k = 4;
  const double beta = 10.0;
  int tried = 0;
  for (int t = 0; t < 10; ++t) {
    Vec xb = Vec::Zero(n);
    const std::vector<int> p = tu::rand_perm(g, n);
    for (int i = 0; i < k; ++i) xb(p[i]) = 1.0 + 0.3 * i;
    xb.normalize();
    const SymMatrix Sb = SymMatrix::outer(xb) * beta;
    const SymMatrix W = tu::rand_sym(g, n);
    const SymMatrix S = Sb + W * (1e-4 / spectral_norm(W));
    const SpcaThreshold th = spca_threshold(S, xb, beta);
    if (!th.holds) continue;
    ++tried;
    Vec x = spca_exact(S, k).x;
    if (x.dot(xb) < 0) x = -x;
    const ExactRegionInputs in = exact_region_inputs(spca_as_qcqp(Sb, k), xb, Vec::Constant(1, beta), S - Sb, x);
    EXPECT_TRUE(exact_region_predicate(in)) << t << " rhs " << exact_region_rhs(in) << " nu2 " << in.nu2;
  }
  EXPECT_GT(tried, 0);
}

TEST(SpcaThreshold, ExactModelAndArithmetic) {
  const int n = 9;
  Vec xb = Vec::Zero(n);
  xb.segment(2, 4).setConstant(0.5);
  SymMatrix S = SymMatrix::outer(xb) * 6.0;
  for (int i = 0; i < n; ++i) S.set(i, i, S(i, i) + 1.7);
  const SpcaThreshold r = spca_threshold(S, xb, 6.0);
  EXPECT_NEAR(r.lhs, 0.0, 1e-12);
  EXPECT_TRUE(r.holds);
  EXPECT_DOUBLE_EQ(r.c, 0.5);
  const double want = std::min(0.5 / (1.5 + (3 + 4 * std::sqrt(2.0)) * 2), 1.0 / 16);
  EXPECT_NEAR(r.nu, want, 1e-15);
  EXPECT_GT(r.nu, 0.0);
  EXPECT_NEAR(r.nu, 0.5 / 18.81370849898476, 1e-13);

  Vec one = Vec::Zero(n);
  one(3) = 1.0;
  EXPECT_THROW(spca_threshold(S, one, 6.0), PreconditionError);
  EXPECT_THROW(spca_threshold(S, 2.0 * xb, 6.0), PreconditionError);
}

TEST(SpcaThreshold, ImpliesRankOneOnSpikedFamily) {
  // identity-free noise small enough that the threshold holds
  auto& g = tu::gen(107);
  const int n = 15, k = 3;
  int holds = 0;
  for (int t = 0; t < 6; ++t) {
    Vec xb = Vec::Zero(n);
    const std::vector<int> p = tu::rand_perm(g, n);
    for (int i = 0; i < k; ++i) xb(p[i]) = i % 2 ? -1.0 : 1.0;
    xb.normalize();
    const double beta = 20.0;
    const SymMatrix W = tu::rand_sym(g, n);
    const SymMatrix S = SymMatrix::outer(xb) * beta + W * (0.05 * t / spectral_norm(W));
    const SpcaThreshold th = spca_threshold(S, xb, beta);
    if (!th.holds) continue;
    ++holds;
    const RelaxedSolution r = solve_relaxation(build_spca(S, k));
    ASSERT_TRUE(r.optimal());
    EXPECT_TRUE(rank_one_exactness(r.X, k).exact) << t;
  }
  EXPECT_GT(holds, 0);
}

TEST(RidgeThreshold, ZeroNoiseAndFormula) {
  auto& g = tu::gen(108);
  const Mat A = tu::randn(g, 20, 6);
  Vec xb = Vec::Zero(6);
  xb(0) = 1.0;
  xb(3) = -2.0;
  const RidgeThreshold r = ridge_threshold(A, xb, Vec::Zero(20));
  EXPECT_TRUE(r.holds);
  EXPECT_GT(r.eta, 0.0);

  const Vec sv = Eigen::JacobiSVD<Mat>(A).singularValues();
  const double kap = sv(0) / sv(5), c = 1.0, nx = std::sqrt(5.0);
  const double q = (1 + 0.5 * nx) * (1 + 4 * (2 - std::sqrt(2.0)) * nx / c);
  const double p = kap * (q + 2 * kap / c);
  const double eta = std::min({(std::sqrt(p * p + 4 * q) - p) / (2 * q), c / 2, (3 - 2 * std::sqrt(2.0)) * nx});
  EXPECT_NEAR(r.eta, eta, 1e-14);
  EXPECT_NEAR(r.sigma_min, sv(5), 1e-12);

  Mat D = A;
  D.col(2) = D.col(1);
  EXPECT_THROW(ridge_threshold(D.leftCols(6).topRows(5), xb, Vec::Zero(5)), PreconditionError);
}

TEST(RidgeThreshold, NoiseTailFrequency) {
  // P{|eps| >= delta sqrt(m) + t} <= exp(-t^2 / (2 delta^2))
  auto& g = tu::gen(109);
  const int m = 30, draws = 4000;
  const double delta = 0.3, t = 0.25;
  int hit = 0;
  for (int i = 0; i < draws; ++i)
    if (tu::randn(g, m).norm() * delta >= delta * std::sqrt(m) + t) ++hit;
  const double bound = std::exp(-t * t / (2 * delta * delta));
  EXPECT_LE(static_cast<double>(hit) / draws, bound + 3 * std::sqrt(bound / draws));
}

TEST(RidgeThreshold, HoldsImpliesSlrExact) {
  int holds = 0;
  for (int s = 0; s < 5; ++s) {
    const Instance in = regression_instance(40, 8, 2, 1e-5, 900 + s);
    const RidgeThreshold th = ridge_threshold(in.A, in.xbar, in.noise);
    if (!th.holds) continue;
    ++holds;
    const RelaxedSolution r = solve_relaxation(build_slr_homogenized(in.A, in.y, 2));
    ASSERT_TRUE(r.optimal());
    EXPECT_TRUE(rank_one_exactness(r.X, 3, 1e-5, 1e-3).exact) << s;
  }
  EXPECT_GT(holds, 0);
}

TEST(RatioBound, Examples) {
  for (int k = 1; k <= 5; ++k) EXPECT_GE(spca_ratio_bound(SymMatrix::identity(5), k), 1.0);
  auto& g = tu::gen(110);
  const Vec s = tu::randn(g, 9);
  for (int k = 1; k <= 9; ++k) EXPECT_DOUBLE_EQ(spca_ratio_bound(SymMatrix::outer(s), k), 1.0);
  EXPECT_DOUBLE_EQ(spca_ratio_bound(SymMatrix::identity(12), 3), 3.0);
  EXPECT_DOUBLE_EQ(spca_ratio_bound(SymMatrix::identity(12), 5), 12.0 / 5);
  EXPECT_THROW(spca_ratio_bound(SymMatrix::diagonal((Vec(3) << 1, 0, -1).finished()), 2), ScopeError);
}

TEST(RatioBound, AboveMeasuredRatio) {
  auto& g = tu::gen(111);
  for (int t = 0; t < 100; ++t) {
    const SymMatrix S = tu::rand_psd(g, 10, 1 + t % 10);
    const double vstar = spca_exact(S, 3).value;
    const RelaxedSolution r = solve_relaxation(build_spca(S, 3));
    ASSERT_TRUE(r.optimal()) << t;
    EXPECT_LE(r.value / vstar, spca_ratio_bound(S, 3) * (1 + 10 * kEps)) << t;
  }
}

TEST(ShiftedBound, IndefiniteInstances) {
  auto& g = tu::gen(112);
  for (int t = 0; t < 20; ++t) {
    const SymMatrix S = tu::rand_sym(g, 8);
    const int k = 2 + t % 3;
    const double vstar = spca_exact(S, k).value;
    const RelaxedSolution r = solve_relaxation(build_spca(S, k));
    ASSERT_TRUE(r.optimal());
    EXPECT_LE(r.value, spca_shifted_bound(S, k, vstar) + 10 * kEps * (1 + std::abs(r.value))) << t;
  }
  // shifting by the identity recovers the ratio bound on the PSD shift
  const SymMatrix P = tu::rand_psd(g, 8, 8);
  const double lmin = lambda_min(P);
  const double vstar = spca_exact(P, 2).value;
  const double q = spca_ratio_bound(P, 2);
  EXPECT_NEAR(spca_shifted_bound(P, 2, vstar), q * vstar - (q - 1) * lmin, 1e-10);
}

TEST(RankOneDual, Examples) {
  const RankOneDual a = rank_one_dual_certificate((Vec(4) << 1, 0, 0, 0).finished(), 1);
  EXPECT_DOUBLE_EQ(a.rho, 1.0);
  EXPECT_TRUE(a.feasible);
  EXPECT_LE(a.Z.dense().norm(), 1e-12 + std::abs(a.Z(0, 0)));

  const Vec s = (Vec(3) << 2, 1, 0.5).finished();
  const RankOneDual b = rank_one_dual_certificate(s, 2);
  EXPECT_DOUBLE_EQ(b.rho, 5.0);
  EXPECT_TRUE(b.feasible);
  const Mat Zd = b.Z.dense();
  Mat M = 5.0 * Mat::Identity(3, 3) - s * s.transpose();
  M -= 2.0 * Mat(Zd.diagonal().asDiagonal()) - Zd;
  EXPECT_NEAR(tu::jacobi_eigvals(M).minCoeff(), b.min_eig, 1e-10);
  EXPECT_GE(tu::jacobi_eigvals(M).minCoeff(), -1e-6 * 5.0);

  EXPECT_THROW(rank_one_dual_certificate((Vec(3) << 2, 1, -1).finished(), 2), ScopeError);
}

TEST(RankOneDual, MatchesOracleAndBoundsRelaxation) {
  auto& g = tu::gen(113);
  double worst = 0.0;
  for (int t = 0; t < 30; ++t) {
    const Vec s = tu::randn(g, 10);
    const int k = 1 + t % 6;
    const RankOneDual d = rank_one_dual_certificate(s, k);
    worst = std::min(worst, d.min_eig / std::max(1.0, d.rho));
    EXPECT_TRUE(d.feasible) << t << " min_eig " << d.min_eig;
    EXPECT_NEAR(d.rho, spca_exact(SymMatrix::outer(s), k).value, 1e-10 * d.rho);
    if (t < 10) {
      const RelaxedSolution r = solve_relaxation(build_spca(SymMatrix::outer(s), k));
      ASSERT_TRUE(r.optimal());
      EXPECT_LE(r.value, d.rho + 10 * kEps * (1 + d.rho));
    }
  }
  std::printf("rank-one dual: worst relative min eigenvalue %.3g\n", worst);
}

TEST(RidgeGap, OrthonormalColumnsAreTight) {
  auto& g = tu::gen(114);
  const Mat Q = Eigen::HouseholderQR<Mat>(tu::randn(g, 12, 6)).householderQ() * Mat::Identity(12, 6);
  const Vec y = tu::randn(g, 12);
  const OracleResult o = ridge_exact(Q, y, 0.0, 2);
  const RidgeGapBounds b = ridge_gap_bounds(Q, y, 0.0, 2, o.value, o.x.squaredNorm());
  EXPECT_NEAR(b.tau, 1.0, 1e-12);
  EXPECT_NEAR(b.eta, 1.0, 1e-12);
  EXPECT_NEAR(b.L, 1.0, 1e-12);
  EXPECT_NEAR(b.lower, o.value, 1e-12);
  EXPECT_NEAR(b.alpha_bar, 0.0, 1e-12);
  EXPECT_NEAR(b.gap_bound, 2.0 / 12 * o.x.squaredNorm(), 1e-12);
}

TEST(RidgeGap, SandwichOnRandomInstances) {
  auto& g = tu::gen(115);
  for (int t = 0; t < 10; ++t) {
    const Mat A = tu::randn(g, 12, 8);
    const Vec y = tu::randn(g, 12);
    const double alpha = 0.1 * (1 + t % 3);
    const OracleResult o0 = ridge_exact(A, y, 0.0, 3);
    const RidgeGapBounds b = ridge_gap_bounds(A, y, alpha, 3, o0.value, o0.x.squaredNorm());
    const double vstar = ridge_exact(A, y, alpha, 3).value;
    const RelaxedSolution r = solve_relaxation(build_sridge(A, y, alpha, 3));
    ASSERT_TRUE(r.optimal()) << t;
    const double tol = 10 * kEps * (1 + std::abs(vstar));
    EXPECT_LE(b.lower, r.value + tol) << t;
    EXPECT_LE(r.value, vstar + tol) << t;
  }
  const Mat A = tu::randn(g, 12, 8);
  EXPECT_DOUBLE_EQ(ridge_gap_bounds(A, Vec::Zero(12), 0.1, 3, 0.0, 0.0).lower, 0.0);
}

TEST(Coherence, Examples) {
  EXPECT_DOUBLE_EQ(coherence(Mat::Identity(4, 3)), 0.0);
  Mat D(3, 3);
  D << 1, 2, 1, 0, 1, 0, 3, 0, 3;
  EXPECT_NEAR(coherence(D), 1.0, 1e-15);
  Mat U(2, 2);
  U << 1, 1, 0, 1;
  EXPECT_NEAR(coherence(U), 1.0 / std::sqrt(2.0), 1e-15);
  U.col(1).setZero();
  EXPECT_THROW(coherence(U), DomainError);
  auto& g = tu::gen(116);
  const Mat R = tu::randn(g, 6, 4);
  const Mat Rs = R * Vec(4).setLinSpaced(0.5, 3.0).asDiagonal();
  EXPECT_NEAR(coherence(Rs), coherence(R), 1e-14);
}
