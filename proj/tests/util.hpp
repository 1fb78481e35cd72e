#pragma once

#include <random>

#include "spartra/symmat.hpp"

namespace tu {

using spartra::Mat;
using spartra::SymMatrix;
using spartra::Vec;

// Test-side generator, independent of the library RNG.
inline std::mt19937_64& gen(unsigned s) {
  static thread_local std::mt19937_64 g;
  g.seed(s);
  return g;
}

inline Vec randn(std::mt19937_64& g, int n) {
  std::normal_distribution<double> d;
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = d(g);
  return v;
}

inline Mat randn(std::mt19937_64& g, int r, int c) {
  std::normal_distribution<double> d;
  Mat m(r, c);
  for (int j = 0; j < c; ++j)
    for (int i = 0; i < r; ++i) m(i, j) = d(g);
  return m;
}

inline SymMatrix rand_sym(std::mt19937_64& g, int n) {
  const Mat a = randn(g, n, n);
  return SymMatrix::from_dense(a + a.transpose());
}

inline SymMatrix rand_psd(std::mt19937_64& g, int n, int rank = -1) {
  const Mat a = randn(g, n, rank < 0 ? n : rank);
  return SymMatrix::from_dense(a * a.transpose());
}

// Dense eigenvalues via Jacobi rotations, a separate route from the library eigensolver.
inline Vec jacobi_eigvals(Mat a) {
  const int n = static_cast<int>(a.rows());
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) off += a(i, j) * a(i, j);
    if (off < 1e-26 * (1 + a.squaredNorm())) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double th = 0.5 * std::atan2(2 * a(p, q), a(q, q) - a(p, p));
        const double c = std::cos(th), s = std::sin(th);
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
  }
  Vec d = a.diagonal();
  std::sort(d.data(), d.data() + n);
  return d;
}

inline Mat perm_matrix(const std::vector<int>& p) {
  const int n = static_cast<int>(p.size());
  Mat P = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) P(i, p[i]) = 1;
  return P;
}

inline std::vector<int> rand_perm(std::mt19937_64& g, int n) {
  std::vector<int> p(n);
  for (int i = 0; i < n; ++i) p[i] = i;
  std::shuffle(p.begin(), p.end(), g);
  return p;
}

}  // namespace tu
