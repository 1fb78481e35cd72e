#pragma once

#include <limits>
#include <string>
#include <vector>

#include "context.hpp"

namespace spartra {

// C(n, k), saturating at the largest long long.
inline long long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  long double r = 1;
  for (int i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;
    if (r > static_cast<long double>(std::numeric_limits<long long>::max())) return std::numeric_limits<long long>::max();
  }
  return static_cast<long long>(r + 0.5L);
}

inline void require_enumerable(long long count, long long guard, const std::string& what) {
  if (count > guard)
    throw EnumerationGuardError(what + ": " + std::to_string(count) + " supports exceed the enumeration guard of " +
                                std::to_string(guard));
}

// Visits every k-subset of {0..n-1} in lexicographic order.
template <class F>
void for_each_combination(int n, int k, F&& f) {
  if (k < 0 || k > n) return;
  std::vector<int> s(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) s[i] = i;
  while (true) {
    f(static_cast<const std::vector<int>&>(s));
    int i = k - 1;
    while (i >= 0 && s[i] == n - k + i) --i;
    if (i < 0) return;
    ++s[i];
    for (int j = i + 1; j < k; ++j) s[j] = s[j - 1] + 1;
  }
}

}  // namespace spartra
