#include "spotsim/preemption.hpp"

#include <algorithm>
#include <limits>

#include "spotsim/rng.hpp"

namespace spotsim {

uint64_t scenario_count(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  // C(n, k) with saturation.
  long double c = 1.0L;
  const long double cap = 9.22e18L;
  for (int i = 1; i <= k; ++i) {
    c = c * (n - k + i) / i;
    if (c > cap) return static_cast<uint64_t>(cap);
  }
  return static_cast<uint64_t>(c + 0.5L);
}

std::vector<PreemptionVector> enumerate_vectors(int n, int n_minus) {
  if (n_minus < 0 || n_minus > n) throw std::invalid_argument("enumerate_vectors: bad n_minus");
  const uint64_t count = scenario_count(n, n_minus);
  if (count > kEnumerationCap)
    throw std::invalid_argument("enumerate_vectors: scenario space too large, sample instead");
  std::vector<PreemptionVector> out;
  out.reserve(count);
  std::vector<int> idx(n_minus);
  for (int i = 0; i < n_minus; ++i) idx[i] = i;
  while (true) {
    PreemptionVector v(n, 0);
    for (int i : idx) v[i] = 1;
    out.push_back(std::move(v));
    if (n_minus == 0) break;
    // Next combination in lexicographic order.
    int i = n_minus - 1;
    while (i >= 0 && idx[i] == n - n_minus + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < n_minus; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

std::vector<PreemptionVector> sample_vectors(int n, int n_minus, int trials, uint64_t seed) {
  if (n_minus < 0 || n_minus > n) throw std::invalid_argument("sample_vectors: bad n_minus");
  if (trials < 1) throw std::invalid_argument("sample_vectors: trials must be >= 1");
  std::vector<PreemptionVector> out;
  out.reserve(trials);
  for (int t = 0; t < trials; ++t) {
    Rng rng(mix_seed(seed, static_cast<uint64_t>(t)));
    PreemptionVector v(n, 0);
    for (int i : sample_distinct(n, n_minus, rng)) v[i] = 1;
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<int> stage_survivors(const Topology& topo, const PreemptionVector& v) {
  std::vector<int> s(topo.stages, 0);
  for (int k = 0; k < topo.assigned(); ++k)
    if (!v[k]) ++s[k % topo.stages];
  return s;
}

int surviving_pipelines(const Topology& topo, const PreemptionVector& v, bool allow_intra_stage) {
  if (static_cast<int>(v.size()) != topo.total())
    throw std::invalid_argument("surviving_pipelines: vector/topology size mismatch");
  if (topo.pipelines == 0 || topo.stages == 0) return 0;
  if (!allow_intra_stage) {
    int intact = 0;
    for (int d = 0; d < topo.pipelines; ++d) {
      bool alive = true;
      for (int p = 0; p < topo.stages; ++p) alive &= !v[d * topo.stages + p];
      intact += alive;
    }
    return intact;
  }
  const std::vector<int> s = stage_survivors(topo, v);
  int m = topo.pipelines;
  for (int p = 0; p < topo.stages; ++p) m = std::min(m, s[p]);
  return m;
}

double conditional_throughput(const Topology& topo, const PreemptionVector& v,
                              const WorkloadProfile& w) {
  const int d = surviving_pipelines(topo, v, true);
  if (d == 0) return 0.0;
  return throughput({d, topo.stages}, w);
}

double expected_liveput(const ParallelConfig& cfg, int n, int n_minus, const WorkloadProfile& w,
                        const EvalMode& mode) {
  if (cfg.instances() > n) throw std::invalid_argument("expected_liveput: config exceeds n");
  const Topology topo{cfg.pipelines, cfg.stages, n - cfg.instances()};
  double sum = 0.0;
  size_t count = 0;
  if (mode.exact) {
    for (const PreemptionVector& v : enumerate_vectors(n, n_minus)) {
      sum += conditional_throughput(topo, v, w);
      ++count;
    }
  } else {
    for (const PreemptionVector& v : sample_vectors(n, n_minus, mode.trials, mode.seed)) {
      sum += conditional_throughput(topo, v, w);
      ++count;
    }
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

}  // namespace spotsim
