#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "spartra/cones.hpp"
#include "spartra/instances.hpp"

using namespace spartra;

namespace {

std::string temp_file(const std::string& name, const std::string& body) {
  const auto p = std::filesystem::temp_directory_path() / ("spartra_inst_" + name);
  std::ofstream(p) << body;
  return p.string();
}

int nnz(const Vec& x) { return static_cast<int>((x.array() != 0.0).count()); }

}  // namespace

TEST(Wigner, ShapeSpikeAndDeterminism) {
  for (int k = 3; k <= 6; ++k) {
    const Instance a = spiked_wigner(50, k, 12.0, 40 + k), b = spiked_wigner(50, k, 12.0, 40 + k);
    EXPECT_TRUE(a.Sigma.lower() == b.Sigma.lower());
    EXPECT_TRUE(a.xbar == b.xbar);
    EXPECT_EQ(a.Sigma.size(), 50);
    EXPECT_EQ(nnz(a.xbar), k);
    EXPECT_NEAR(a.xbar.norm(), 1.0, 1e-14);
    EXPECT_NEAR((a.Sigma_bar.dense() - 12.0 * a.xbar * a.xbar.transpose()).norm(), 0.0, 1e-13);
  }
  EXPECT_FALSE(spiked_wigner(10, 2, 1.0, 1).Sigma.lower() == spiked_wigner(10, 2, 1.0, 2).Sigma.lower());
}

TEST(Wigner, NoiseNormAndVariances) {
  const int n = 50, seeds = 20;
  double mean = 0.0, diag2 = 0.0, off2 = 0.0;
  for (int s = 0; s < seeds; ++s) {
    const Instance in = spiked_wigner(n, 3, 0.0, 1000 + s);
    const SymMatrix W = in.Sigma * std::sqrt(static_cast<double>(n));
    mean += spectral_norm(W) / seeds;
    for (int i = 0; i < n; ++i) {
      diag2 += W(i, i) * W(i, i) / (n * seeds);
      for (int j = 0; j < i; ++j) off2 += W(i, j) * W(i, j) / (n * (n - 1) / 2.0 * seeds);
    }
  }
  std::printf("mean ||W|| / (2 sqrt n) = %.4f\n", mean / (2 * std::sqrt(n)));
  EXPECT_LE(mean, 2 * std::sqrt(n));
  // 1000 diagonal and 24500 off-diagonal samples
  EXPECT_NEAR(diag2, 2.0, 4 * std::sqrt(8.0 / 1000));
  EXPECT_NEAR(off2, 1.0, 4 * std::sqrt(2.0 / 24500));
}

TEST(Wishart, PsdAndConcentration) {
  const Instance a = spiked_wishart(50, 2000, 1.5, 5, 3), b = spiked_wishart(50, 2000, 1.5, 5, 3);
  EXPECT_TRUE(a.Sigma.lower() == b.Sigma.lower());
  EXPECT_GE(lambda_min(a.Sigma), -1e-14 * spectral_norm(a.Sigma));
  Mat bar = 1.5 * a.xbar * a.xbar.transpose();
  bar.diagonal().array() += 1.0;
  EXPECT_NEAR((a.Sigma_bar.dense() - bar).norm(), 0.0, 1e-13);
  EXPECT_EQ(nnz(a.xbar), 5);

  double prev = 1e300;
  for (int N : {50, 500, 5000}) {
    double err = 0.0;
    for (int s = 0; s < 4; ++s) {
      const Instance in = spiked_wishart(20, N, 1.5, 4, 70 + s);
      err += spectral_norm(in.Sigma - in.Sigma_bar) / 4;
    }
    std::printf("wishart N=%d mean ||Sigma - Sigma_bar|| = %.4f\n", N, err);
    EXPECT_LT(err, prev);
    prev = err;
  }
}

TEST(Regression, NoiselessAndConfiguration) {
  const Instance a = regression_instance(30, 50, 10, 0.0, 11);
  EXPECT_TRUE(a.y == a.A * a.xbar);
  EXPECT_TRUE(a.noise.isZero(0));
  const Instance b = regression_instance(30, 50, 10, 3.0, 11), c = regression_instance(30, 50, 10, 3.0, 11);
  EXPECT_EQ(b.A.rows(), 30);
  EXPECT_EQ(b.A.cols(), 50);
  EXPECT_EQ(nnz(b.xbar), 10);
  EXPECT_TRUE(b.y == c.y && b.A == c.A);
  EXPECT_TRUE(b.A == a.A);
  EXPECT_NEAR((b.y - b.A * b.xbar - b.noise).norm(), 0.0, 1e-12);
  EXPECT_NEAR(b.noise.norm() / std::sqrt(30.0), 3.0, 3.0);
  EXPECT_THROW(regression_instance(30, 5, 10, 1.0, 1), DomainError);
}

TEST(Rip, Distributions) {
  const Mat B2 = rip_matrix(30, 80, RipDist::Bern2, 5);
  for (int j = 0; j < 80; ++j) EXPECT_NEAR(B2.col(j).norm(), 1.0, 1e-14);

  const int m = 30, n = 2000;
  const Mat B3 = rip_matrix(m, n, RipDist::Bern3, 6);
  const double total = static_cast<double>(m) * n;
  const double zeros = static_cast<double>((B3.array() == 0.0).count());
  EXPECT_NEAR(zeros / total, 2.0 / 3, 3 * std::sqrt(2.0 / 9 / total));
  const double s = 1 / std::sqrt(static_cast<double>(m));
  EXPECT_TRUE(((B3.array() == 0.0) || (B3.array().abs() == s)).all());

  const Mat G = rip_matrix(m, n, RipDist::Gaussian, 7);
  const double mean = G.colwise().squaredNorm().mean();
  EXPECT_NEAR(mean, 1.0, 4 * std::sqrt(2.0 / m / n));

  EXPECT_TRUE(rip_matrix(30, 80, RipDist::Gaussian, 9) == rip_matrix(30, 80, RipDist::Gaussian, 9));
  EXPECT_THROW(rip_dist_from_name("bern4"), ValidationError);
  EXPECT_EQ(rip_dist_from_name(rip_dist_name(RipDist::Bern3)), RipDist::Bern3);
}

TEST(Cca, ToeplitzPlantAndConcentration) {
  const int n1 = 25, n2 = 20;
  Mat Pxx(n1, n1), Pyy(n2, n2);
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n1; ++j) Pxx(i, j) = std::pow(0.7, std::abs(i - j));
  for (int i = 0; i < n2; ++i)
    for (int j = 0; j < n2; ++j) Pyy(i, j) = std::pow(0.7, std::abs(i - j));

  double prev = 1e300;
  for (int ms : {300, 3000, 30000}) {
    const Instance in = cca_instance(CcaModel::Toeplitz, n1, n2, 5, 5, 0.7, 0.7, ms, 21);
    EXPECT_EQ(nnz(in.u), 5);
    EXPECT_EQ(nnz(in.v), 5);
    EXPECT_NEAR(in.u.dot(Pxx * in.u), 1.0, 1e-12);
    EXPECT_NEAR(in.v.dot(Pyy * in.v), 1.0, 1e-12);
    EXPECT_GT(in.rho, 0.0);
    EXPECT_LT(in.rho, 1.0);
    EXPECT_TRUE(in.Sxx.dense().allFinite());
    const Mat Pxy = in.rho * Pxx * in.u * in.v.transpose() * Pyy;
    const double err = (in.Sxx.dense() - Pxx).norm() + (in.Syy.dense() - Pyy).norm() + 2 * (in.Sxy - Pxy).norm();
    std::printf("cca m=%d population error %.4f\n", ms, err);
    EXPECT_LT(err, prev);
    prev = err;
  }
  const Instance a = cca_instance(CcaModel::Spiked, 6, 5, 2, 2, 0, 0, 100, 4),
                 b = cca_instance(CcaModel::Spiked, 6, 5, 2, 2, 0, 0, 100, 4);
  EXPECT_TRUE(a.Sxy == b.Sxy);
  EXPECT_TRUE(a.Sxx.lower() == b.Sxx.lower());
  EXPECT_THROW(cca_model_from_name("wishart"), ValidationError);
}

TEST(Paley, ConferenceIdentityAndCones) {
  for (int q : {5, 13, 17}) {
    const SymMatrix C = paley_conference(q);
    const int n = q + 1;
    ASSERT_EQ(C.size(), n);
    const Mat D = C.dense();
    for (int i = 0; i < n; ++i) {
      EXPECT_EQ(D(i, i), 0.0);
      for (int j = 0; j < n; ++j) {
        if (i != j) {
          EXPECT_EQ(std::abs(D(i, j)), 1.0);
        }
      }
    }
    EXPECT_TRUE(D.transpose() * D == (n - 1.0) * Mat::Identity(n, n));
    EXPECT_NEAR(spectral_norm(C), std::sqrt(n - 1.0), 1e-12);
    const SymMatrix X = std::sqrt(n - 1.0) * SymMatrix::identity(n) + C;
    for (int k = 2; k < std::sqrt(n - 1.0) + 1; ++k) {
      EXPECT_TRUE(in_spartrahedron(X, k).member()) << q << " " << k;
      EXPECT_FALSE(in_Sone(X, k).member()) << q << " " << k;
    }
  }
  EXPECT_THROW(paley_conference(7), DomainError);
  EXPECT_THROW(paley_conference(9), DomainError);
  EXPECT_THROW(paley_conference(1), DomainError);
}

TEST(LoadCovariance, Formats) {
  const LoadedCovariance a = load_covariance(temp_file("id.csv", "a,b,c\n1,0,0\n0,1,0\n0,0,1\n"));
  EXPECT_TRUE(a.Sigma.dense() == Mat::Identity(3, 3));
  EXPECT_TRUE(a.warning.empty());
  const LoadedCovariance b = load_covariance(temp_file("id.json", R"({"Sigma": [[1,0],[0,1]]})"));
  EXPECT_TRUE(b.Sigma.dense() == Mat::Identity(2, 2));
  const LoadedCovariance c = load_covariance(temp_file("ws.txt", "2 0.5\n0.5000000001 1\n"));
  EXPECT_NEAR(c.Sigma(0, 1), 0.50000000005, 1e-15);
  EXPECT_FALSE(load_covariance(temp_file("indef.csv", "0,1\n1,0\n")).warning.empty());
}

TEST(LoadCovariance, Errors) {
  EXPECT_THROW(load_covariance(temp_file("rect.csv", "1,2,3\n4,5,6\n")), DimensionError);
  EXPECT_THROW(load_covariance(temp_file("asym.csv", "1,0.2\n0.1,1\n")), ValidationError);
  EXPECT_THROW(load_covariance(temp_file("bad.csv", "1,x\n0,1\n")), ValidationError);
  EXPECT_THROW(load_covariance(temp_file("empty.csv", "")), DimensionError);
  EXPECT_THROW(load_covariance("/nonexistent/spartra.csv"), ValidationError);
}
