#include "spotsim/rng.hpp"

#include <numeric>
#include <stdexcept>

namespace spotsim {

std::vector<int> sample_distinct(int n, int k, Rng& rng) {
  if (k < 0 || k > n) throw std::invalid_argument("sample_distinct: k out of range");
  std::vector<int> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  // Partial Fisher-Yates: the first k entries end up a uniform k-subset.
  for (int i = 0; i < k; ++i) {
    int j = i + static_cast<int>(rng.below(static_cast<uint64_t>(n - i)));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace spotsim
