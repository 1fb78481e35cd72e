#pragma once

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "symmat.hpp"

namespace spartra {

// Indices of the k largest |v_i|, ties to the lower index, returned sorted.
inline std::vector<int> top_k_support(const Vec& v, int k) {
  std::vector<int> idx(static_cast<std::size_t>(v.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return std::abs(v(a)) > std::abs(v(b)); });
  idx.resize(static_cast<std::size_t>(std::min<Eigen::Index>(k, v.size())));
  std::sort(idx.begin(), idx.end());
  return idx;
}

inline Vec truncate_k(const Vec& v, int k) {
  Vec r = Vec::Zero(v.size());
  for (int i : top_k_support(v, k)) r(i) = v(i);
  return r;
}

inline std::vector<int> support_of(const Vec& x, double rel_tol = 0.0) {
  std::vector<int> s;
  const double cut = rel_tol * x.norm();
  for (int i = 0; i < x.size(); ++i)
    if (std::abs(x(i)) > cut) s.push_back(i);
  return s;
}

inline Mat columns(const Mat& a, const std::vector<int>& s) {
  Mat r(a.rows(), static_cast<Eigen::Index>(s.size()));
  for (std::size_t j = 0; j < s.size(); ++j) r.col(static_cast<Eigen::Index>(j)) = a.col(s[j]);
  return r;
}

inline Vec embed(const Vec& xs, const std::vector<int>& s, int n) {
  Vec x = Vec::Zero(n);
  for (std::size_t j = 0; j < s.size(); ++j) x(s[j]) = xs(static_cast<Eigen::Index>(j));
  return x;
}

// (1/m)|Ax - y|^2 + alpha |x|^2
inline double ridge_objective(const Mat& a, const Vec& y, double alpha, const Vec& x) {
  return (a * x - y).squaredNorm() / static_cast<double>(a.rows()) + alpha * x.squaredNorm();
}

// Minimizer of the ridge objective over vectors supported on s.
// At alpha = 0 the minimum-norm least-squares solution is used.
inline Vec ridge_restricted(const Mat& a, const Vec& y, double alpha, const std::vector<int>& s) {
  const int n = static_cast<int>(a.cols());
  if (s.empty()) return Vec::Zero(n);
  const double m = static_cast<double>(a.rows());
  const Mat as = columns(a, s);
  Vec xs;
  if (alpha > 0) {
    Mat g = as.transpose() * as / m;
    g.diagonal().array() += alpha;
    xs = g.ldlt().solve(as.transpose() * y / m);
  } else {
    xs = as.completeOrthogonalDecomposition().solve(y);
  }
  return embed(xs, s, n);
}

inline Vec top_eigenvector(const Mat& m) {
  const EigDecomp e = eig_dense(m);
  return e.vectors.col(m.rows() - 1);
}

}  // namespace spartra
