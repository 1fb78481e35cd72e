#pragma once

#include <Eigen/Cholesky>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "context.hpp"
#include "rng.hpp"
#include "support.hpp"
#include "symmat.hpp"

#include "json.hpp"

namespace spartra {

struct Instance {
  std::string kind;
  std::uint64_t seed = 0;
  std::map<std::string, double> params;
  SymMatrix Sigma{0};
  SymMatrix Sigma_bar{0};
  Mat A;
  Vec y;
  Vec xbar;
  Vec noise;
  SymMatrix Sxx{0}, Syy{0};
  Mat Sxy;
  Vec u, v;
  double beta = 0.0;
  double rho = 0.0;
};

namespace detail {

inline Vec normal_vec(CounterRng& g, int n) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = g.normal();
  return v;
}

inline Mat normal_mat(CounterRng& g, int r, int c) {
  Mat m(r, c);
  for (int j = 0; j < c; ++j)
    for (int i = 0; i < r; ++i) m(i, j) = g.normal();
  return m;
}

// Unit spike with k Gaussian nonzeros on a uniform random support.
inline Vec sparse_spike(CounterRng& g, int n, int k) {
  const std::vector<int> S = g.subset(n, k);
  Vec x = Vec::Zero(n);
  for (int i : S) x(i) = g.normal();
  const double nx = x.norm();
  if (nx == 0.0) throw NumericalError("spike generation produced a zero vector");
  return x / nx;
}

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw DomainError(msg);
}

}  // namespace detail

// Sigma = beta x x' + W / sqrt(n), W from the GOE (N(0,2) diagonal, N(0,1) off-diagonal).
inline Instance spiked_wigner(int n, int k, double beta, std::uint64_t seed) {
  detail::require(n >= 1 && k >= 1 && k <= n, "spiked_wigner: need 1 <= k <= n");
  CounterRng spike(seed, 1), noise(seed, 2);
  Instance in;
  in.kind = "spiked_wigner";
  in.seed = seed;
  in.params = {{"n", n}, {"k", k}, {"beta", beta}};
  in.beta = beta;
  in.xbar = detail::sparse_spike(spike, n, k);
  in.Sigma = SymMatrix(n);
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      const double w = i == j ? kSqrt2 * noise.normal() : noise.normal();
      in.Sigma.set(i, j, beta * in.xbar(i) * in.xbar(j) + s * w);
    }
  in.Sigma_bar = SymMatrix::outer(in.xbar) * beta;
  return in;
}

// Sigma = X X' / N with columns N(0, I + beta x x').
inline Instance spiked_wishart(int n, int N, double beta, int k, std::uint64_t seed) {
  detail::require(n >= 1 && N >= 1 && k >= 1 && k <= n && beta >= 0, "spiked_wishart: invalid parameters");
  CounterRng spike(seed, 1), noise(seed, 2);
  Instance in;
  in.kind = "spiked_wishart";
  in.seed = seed;
  in.params = {{"n", n}, {"N", N}, {"beta", beta}, {"k", k}};
  in.beta = beta;
  in.xbar = detail::sparse_spike(spike, n, k);
  Mat X = detail::normal_mat(noise, n, N);
  const double a = std::sqrt(1.0 + beta) - 1.0;
  const Eigen::RowVectorXd proj = in.xbar.transpose() * X;
  X += a * in.xbar * proj;
  in.Sigma = SymMatrix::from_dense(X * X.transpose() / static_cast<double>(N));
  Mat bar = beta * in.xbar * in.xbar.transpose();
  bar.diagonal().array() += 1.0;
  in.Sigma_bar = SymMatrix::from_dense(bar);
  return in;
}

// y = A xbar + sigma * eps with standard Gaussian A, xbar nonzeros and eps.
inline Instance regression_instance(int m, int n, int k, double sigma, std::uint64_t seed) {
  detail::require(m >= 1 && n >= 1 && k >= 1 && k <= n && sigma >= 0, "regression_instance: invalid parameters");
  CounterRng ga(seed, 1), gx(seed, 2), ge(seed, 3);
  Instance in;
  in.kind = "regression";
  in.seed = seed;
  in.params = {{"m", m}, {"n", n}, {"k", k}, {"sigma", sigma}};
  in.A = detail::normal_mat(ga, m, n);
  const std::vector<int> S = gx.subset(n, k);
  in.xbar = Vec::Zero(n);
  for (int i : S) in.xbar(i) = gx.normal();
  in.noise = sigma * detail::normal_vec(ge, m);
  in.y = in.A * in.xbar + in.noise;
  return in;
}

enum class RipDist { Gaussian, Bern2, Bern3 };

inline RipDist rip_dist_from_name(const std::string& s) {
  if (s == "gaussian") return RipDist::Gaussian;
  if (s == "bern2") return RipDist::Bern2;
  if (s == "bern3") return RipDist::Bern3;
  throw ValidationError("unknown rip distribution '" + s + "'");
}

inline const char* rip_dist_name(RipDist d) {
  switch (d) {
    case RipDist::Gaussian: return "gaussian";
    case RipDist::Bern2: return "bern2";
    case RipDist::Bern3: return "bern3";
  }
  return "?";
}

inline Mat rip_matrix(int m, int n, RipDist dist, std::uint64_t seed) {
  detail::require(m >= 1 && n >= 1, "rip_matrix: invalid shape");
  CounterRng g(seed, 1);
  const double s = 1.0 / std::sqrt(static_cast<double>(m));
  Mat A(m, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < m; ++i) {
      switch (dist) {
        case RipDist::Gaussian: A(i, j) = s * g.normal(); break;
        case RipDist::Bern2: A(i, j) = g.uniform() < 0.5 ? s : -s; break;
        case RipDist::Bern3: {
          const double u = g.uniform();
          A(i, j) = u < 1.0 / 6.0 ? s : (u < 5.0 / 6.0 ? 0.0 : -s);
          break;
        }
      }
    }
  return A;
}

enum class CcaModel { Spiked, Toeplitz };

inline CcaModel cca_model_from_name(const std::string& s) {
  if (s == "spiked") return CcaModel::Spiked;
  if (s == "toeplitz") return CcaModel::Toeplitz;
  throw ValidationError("unknown cca model '" + s + "'");
}

inline Instance cca_instance(CcaModel model, int n1, int n2, int k1, int k2, double r1, double r2, int m_samples,
                             std::uint64_t seed, int max_retries = 20) {
  detail::require(n1 >= 1 && n2 >= 1 && k1 >= 1 && k1 <= n1 && k2 >= 1 && k2 <= n2 && m_samples >= 1,
                  "cca_instance: invalid parameters");
  CounterRng gc(seed, 1), gv(seed, 2), gr(seed, 3), gs(seed, 4);
  Mat Sxx(n1, n1), Syy(n2, n2);
  if (model == CcaModel::Spiked) {
    const Mat X = detail::normal_mat(gc, n1, n1), Y = detail::normal_mat(gc, n2, n2);
    Sxx = X * X.transpose();
    Syy = Y * Y.transpose();
    Sxx.diagonal().array() += 1.0;
    Syy.diagonal().array() += 1.0;
  } else {
    for (int i = 0; i < n1; ++i)
      for (int j = 0; j < n1; ++j) Sxx(i, j) = std::pow(r1, std::abs(i - j));
    for (int i = 0; i < n2; ++i)
      for (int j = 0; j < n2; ++j) Syy(i, j) = std::pow(r2, std::abs(i - j));
  }
  Vec u = truncate_k(detail::normal_vec(gv, n1), k1);
  Vec v = truncate_k(detail::normal_vec(gv, n2), k2);
  u /= std::sqrt(u.dot(Sxx * u));
  v /= std::sqrt(v.dot(Syy * v));
  const int n = n1 + n2;
  Mat full(n, n);
  double rho = 0.0;
  bool ok = false;
  for (int t = 0; t < max_retries && !ok; ++t) {
    rho = gr.uniform();
    const Mat Sxy = rho * Sxx * u * v.transpose() * Syy;
    full << Sxx, Sxy, Sxy.transpose(), Syy;
    ok = Eigen::LLT<Mat>(full).info() == Eigen::Success;
  }
  if (!ok) throw NumericalError("cca_instance: population covariance not positive definite after retries");
  const Mat L = Eigen::LLT<Mat>(full).matrixL();
  Mat emp = Mat::Zero(n, n);
  for (int s = 0; s < m_samples; ++s) {
    const Vec z = L * detail::normal_vec(gs, n);
    emp.selfadjointView<Eigen::Lower>().rankUpdate(z);
  }
  emp = emp.selfadjointView<Eigen::Lower>();
  emp /= static_cast<double>(m_samples);
  Instance in;
  in.kind = "cca";
  in.seed = seed;
  in.params = {{"model", model == CcaModel::Spiked ? 0 : 1}, {"n1", n1}, {"n2", n2}, {"k1", k1}, {"k2", k2},
               {"r1", r1}, {"r2", r2}, {"m_samples", m_samples}};
  in.Sxx = SymMatrix::from_dense(emp.topLeftCorner(n1, n1));
  in.Syy = SymMatrix::from_dense(emp.bottomRightCorner(n2, n2));
  in.Sxy = emp.topRightCorner(n1, n2);
  in.u = u;
  in.v = v;
  in.rho = rho;
  return in;
}

inline bool is_prime(int q) {
  if (q < 2) return false;
  for (int d = 2; d * d <= q; ++d)
    if (q % d == 0) return false;
  return true;
}

// Symmetric conference matrix of order q + 1 from quadratic residues mod q.
inline SymMatrix paley_conference(int q) {
  if (!is_prime(q)) throw DomainError("paley_conference: q must be prime");
  if (q % 4 != 1) throw DomainError("paley_conference: q must be 1 mod 4");
  std::vector<int> chi(static_cast<std::size_t>(q), -1);
  chi[0] = 0;
  for (int a = 1; a < q; ++a) chi[static_cast<std::size_t>((static_cast<long long>(a) * a) % q)] = 1;
  const int n = q + 1;
  std::vector<std::vector<int>> C(n, std::vector<int>(n, 0));
  for (int j = 1; j < n; ++j) C[0][j] = C[j][0] = 1;
  for (int i = 1; i < n; ++i)
    for (int j = 1; j < n; ++j) C[i][j] = chi[static_cast<std::size_t>(((i - j) % q + q) % q)];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      long long s = 0;
      for (int t = 0; t < n; ++t) s += static_cast<long long>(C[t][i]) * C[t][j];
      if (s != (i == j ? n - 1 : 0) || C[i][j] != C[j][i])
        throw NumericalError("paley_conference: construction failed the conference identity");
    }
  SymMatrix m(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) m.set(i, j, C[i][j]);
  return m;
}

struct LoadedCovariance {
  SymMatrix Sigma{0};
  std::string warning;
};

namespace detail {

inline std::vector<std::vector<double>> read_numeric_rows(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  const bool is_json = path.size() >= 5 && path.substr(path.size() - 5) == ".json";
  if (is_json) {
    nlohmann::json j = nlohmann::json::parse(f);
    if (j.is_object()) {
      for (const char* key : {"Sigma", "matrix", "covariance"})
        if (j.contains(key)) {
          j = j[key];
          break;
        }
    }
    if (!j.is_array()) throw ValidationError("'" + path + "' does not hold a matrix");
    for (const auto& r : j) rows.push_back(r.get<std::vector<double>>());
    return rows;
  }
  std::string line;
  while (std::getline(f, line)) {
    for (char& c : line)
      if (c == ',' || c == ';' || c == '\t') c = ' ';
    std::istringstream ss(line);
    std::vector<double> r;
    std::string tok;
    while (ss >> tok) {
      try {
        std::size_t used = 0;
        r.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        if (rows.empty() && r.empty()) {
          r.clear();
          break;  // header line
        }
        throw ValidationError("'" + path + "' has a non-numeric entry '" + tok + "'");
      }
    }
    if (!r.empty()) rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace detail

inline LoadedCovariance load_covariance(const std::string& path, double asym_tol = 1e-6) {
  const auto rows = detail::read_numeric_rows(path);
  const int n = static_cast<int>(rows.size());
  if (n == 0) throw DimensionError("load_covariance: empty matrix");
  Mat d(n, n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(rows[i].size()) != n) throw DimensionError("load_covariance: matrix is not square");
    for (int j = 0; j < n; ++j) d(i, j) = rows[i][j];
  }
  const double asym = (d - d.transpose()).cwiseAbs().maxCoeff();
  if (asym > asym_tol) throw ValidationError("load_covariance: asymmetry " + std::to_string(asym) + " exceeds tolerance");
  LoadedCovariance c;
  c.Sigma = SymMatrix::from_dense(d);
  const double lmin = lambda_min(c.Sigma);
  if (lmin < -1e-8 * (1.0 + spectral_norm(c.Sigma)))
    c.warning = "matrix is not positive semidefinite (min eigenvalue " + std::to_string(lmin) + ")";
  return c;
}

}  // namespace spartra
