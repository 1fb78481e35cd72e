#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "context.hpp"
#include "rng.hpp"
#include "support.hpp"
#include "symmat.hpp"

namespace spartra {

struct HeuristicConfig {
  int max_iter = 1000;
  double tol = 1e-10;
  int restarts = 10;
  std::uint64_t seed = 0;
  double step = 0.0;  // 0 picks the default step

  void validate() const {
    if (max_iter < 1 || restarts < 1) throw DomainError("heuristic config: max_iter and restarts must be positive");
    if (step < 0 || !(tol >= 0)) throw DomainError("heuristic config: step and tol must be nonnegative");
  }
};

enum class HeuristicStatus { Converged, MaxIter, Diverged };

inline const char* heuristic_status_name(HeuristicStatus s) {
  switch (s) {
    case HeuristicStatus::Converged: return "converged";
    case HeuristicStatus::MaxIter: return "max_iter";
    case HeuristicStatus::Diverged: return "diverged";
  }
  return "?";
}

struct HeuristicResult {
  Vec x;
  double value = 0.0;
  HeuristicStatus status = HeuristicStatus::Converged;
  int iterations = 0;
};

namespace detail {

inline Vec unit_or_zero(const Vec& v) {
  const double n = v.norm();
  return n > 0 ? Vec(v / n) : v;
}

inline Vec canonical_sign(Vec x) {
  Eigen::Index i;
  if (x.size() > 0 && x.cwiseAbs().maxCoeff(&i) > 0 && x(i) < 0) x = -x;
  return x;
}

}  // namespace detail

inline HeuristicResult tpca(const SymMatrix& Sigma, int k) {
  if (k < 1 || k > Sigma.size()) throw DomainError("tpca: k must satisfy 1 <= k <= n");
  HeuristicResult r;
  r.x = detail::canonical_sign(detail::unit_or_zero(truncate_k(top_eigenvector(Sigma.dense()), k)));
  r.value = Sigma.quad(r.x);
  return r;
}

// Truncated power iteration on Sigma + shift I; restart 0 starts from the tpca point.
inline HeuristicResult tpower(const SymMatrix& Sigma, int k, const HeuristicConfig& cfg = {}) {
  cfg.validate();
  const int n = Sigma.size();
  if (k < 1 || k > n) throw DomainError("tpower: k must satisfy 1 <= k <= n");
  const Mat S = Sigma.dense();
  const double shift = std::max(0.0, -eigvals_dense(S)(0));
  HeuristicResult best;
  best.value = -std::numeric_limits<double>::infinity();
  CounterRng base(cfg.seed, 0x7470);
  for (int rs = 0; rs < cfg.restarts; ++rs) {
    Vec x;
    if (rs == 0) {
      x = tpca(Sigma, k).x;
    } else {
      CounterRng g = base.split(static_cast<std::uint64_t>(rs));
      Vec v(n);
      for (int i = 0; i < n; ++i) v(i) = g.normal();
      x = detail::unit_or_zero(truncate_k(v, k));
    }
    HeuristicResult cur;
    cur.status = HeuristicStatus::MaxIter;
    for (int it = 1; it <= cfg.max_iter; ++it) {
      const Vec nx = detail::unit_or_zero(truncate_k(S * x + shift * x, k));
      cur.iterations = it;
      const double d = (nx - x).norm();
      x = nx;
      if (d <= cfg.tol || x.norm() == 0.0) {
        cur.status = HeuristicStatus::Converged;
        break;
      }
    }
    cur.x = detail::canonical_sign(x);
    cur.value = Sigma.quad(cur.x);
    if (cur.value > best.value) best = cur;
  }
  return best;
}

namespace detail {

inline double default_ridge_step(const Mat& A, double alpha) {
  const double m = static_cast<double>(A.rows());
  const double lmax = eigvals_dense(A.transpose() * A)(A.cols() - 1);
  return 1.0 / (2.0 * (lmax / m + alpha));
}

inline Vec ridge_gradient(const Mat& A, const Vec& y, double alpha, const Vec& x) {
  return (2.0 / static_cast<double>(A.rows())) * (A.transpose() * (A * x - y)) + 2.0 * alpha * x;
}

// Shared loop of IHT and HTP; refit switches to the restricted closed form on each support.
inline HeuristicResult thresholding(const Mat& A, const Vec& y, double alpha, int k, const HeuristicConfig& cfg,
                                    bool refit) {
  cfg.validate();
  const int n = static_cast<int>(A.cols());
  if (y.size() != A.rows()) throw DimensionError("thresholding: y length differs from the row count of A");
  if (k < 1 || k > n) throw DomainError("thresholding: k must satisfy 1 <= k <= n");
  if (alpha < 0) throw DomainError("thresholding: alpha must be >= 0");
  const double step = cfg.step > 0 ? cfg.step : default_ridge_step(A, alpha);
  HeuristicResult best;
  best.value = std::numeric_limits<double>::infinity();
  CounterRng base(cfg.seed, 0x696874);
  for (int rs = 0; rs < cfg.restarts; ++rs) {
    Vec x = Vec::Zero(n);
    if (rs > 0) {
      CounterRng g = base.split(static_cast<std::uint64_t>(rs));
      const auto S = g.subset(n, k);
      x = refit ? ridge_restricted(A, y, alpha, S) : Vec::Zero(n);
      if (!refit)
        for (int i : S) x(i) = g.normal();
    }
    HeuristicResult cur;
    cur.status = HeuristicStatus::MaxIter;
    Vec bx = x;
    double bv = ridge_objective(A, y, alpha, x), prev = bv;
    int growth = 0;
    std::vector<int> supp = top_k_support(x, k);
    for (int it = 1; it <= cfg.max_iter; ++it) {
      cur.iterations = it;
      Vec g = x - step * ridge_gradient(A, y, alpha, x);
      const std::vector<int> ns = top_k_support(g, k);
      Vec nx = refit ? ridge_restricted(A, y, alpha, ns) : truncate_k(g, k);
      const double v = ridge_objective(A, y, alpha, nx);
      const double d = (nx - x).norm();
      const bool same = ns == supp;
      x = nx;
      supp = ns;
      if (v < bv) {
        bv = v;
        bx = x;
      }
      growth = v > prev ? growth + 1 : 0;
      prev = v;
      if (growth >= 10) {
        cur.status = HeuristicStatus::Diverged;
        break;
      }
      if (same && (refit || d <= cfg.tol * (1.0 + x.norm()))) {
        cur.status = HeuristicStatus::Converged;
        break;
      }
    }
    cur.x = bx;
    cur.value = ridge_objective(A, y, alpha, bx);
    if (cur.value < best.value) best = cur;
  }
  return best;
}

}  // namespace detail

inline HeuristicResult iht(const Mat& A, const Vec& y, double alpha, int k, const HeuristicConfig& cfg = {}) {
  return detail::thresholding(A, y, alpha, k, cfg, false);
}

inline HeuristicResult htp(const Mat& A, const Vec& y, double alpha, int k, const HeuristicConfig& cfg = {}) {
  return detail::thresholding(A, y, alpha, k, cfg, true);
}

// Forward selection with an exact restricted refit per candidate; ties go to the lower index.
inline HeuristicResult greedy_regression(const Mat& A, const Vec& y, double alpha, int k) {
  const int n = static_cast<int>(A.cols());
  if (y.size() != A.rows()) throw DimensionError("greedy_regression: y length differs from the row count of A");
  if (k < 1 || k > n) throw DomainError("greedy_regression: k must satisfy 1 <= k <= n");
  std::vector<int> S;
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  HeuristicResult r;
  r.x = Vec::Zero(n);
  r.value = ridge_objective(A, y, alpha, r.x);
  for (int step = 0; step < k; ++step) {
    int pick = -1;
    double pv = std::numeric_limits<double>::infinity();
    Vec px;
    for (int j = 0; j < n; ++j) {
      if (used[j]) continue;
      std::vector<int> T = S;
      T.insert(std::upper_bound(T.begin(), T.end(), j), j);
      const Vec x = ridge_restricted(A, y, alpha, T);
      const double v = ridge_objective(A, y, alpha, x);
      if (v < pv) {
        pv = v;
        pick = j;
        px = x;
      }
    }
    used[pick] = true;
    S.insert(std::upper_bound(S.begin(), S.end(), pick), pick);
    r.x = px;
    r.value = pv;
    r.iterations = step + 1;
  }
  return r;
}

}  // namespace spartra
