#include <map>
#include <set>

#include "doctest.h"
#include "spotsim/preemption.hpp"
#include "support/fixtures.hpp"
#include "support/stats.hpp"

using namespace spotsim;
using namespace spotsim::testing;

TEST_CASE("enumerate_vectors counts") {
  CHECK(enumerate_vectors(4, 4).size() == 1);
  CHECK(enumerate_vectors(2, 1).size() == 2);
  CHECK(enumerate_vectors(6, 2).size() == 15);
  CHECK(enumerate_vectors(5, 0).size() == 1);
  CHECK(scenario_count(32, 8) == 10518300ULL);
  CHECK_THROWS_AS(enumerate_vectors(64, 16), std::invalid_argument);
}

TEST_CASE("each enumerated vector has the right weight and is unique") {
  auto vectors = enumerate_vectors(7, 3);
  std::set<std::vector<uint8_t>> seen;
  for (const auto& v : vectors) {
    int ones = 0;
    for (uint8_t b : v) ones += b;
    CHECK(ones == 3);
    seen.insert(v);
  }
  CHECK(seen.size() == vectors.size());
}

TEST_CASE("sample_vectors determinism and forced cases") {
  auto a = sample_vectors(8, 3, 50, 42);
  auto b = sample_vectors(8, 3, 50, 42);
  CHECK(a == b);
  auto c = sample_vectors(8, 3, 50, 43);
  CHECK(a != c);

  for (const auto& v : sample_vectors(5, 0, 10, 1))
    for (uint8_t bit : v) CHECK(bit == 0);
}

TEST_CASE("sampled scenarios are uniform") {
  // N=2, k=1: each of the two scenarios should appear about half the time.
  std::map<std::vector<uint8_t>, long long> freq;
  const int trials = 10000;
  for (const auto& v : sample_vectors(2, 1, trials, 7)) ++freq[v];
  CHECK(freq.size() == 2);
  for (const auto& [v, count] : freq)
    CHECK(std::abs(count / static_cast<double>(trials) - 0.5) < 0.02);
}

TEST_CASE("surviving_pipelines with and without rerouting") {
  const Topology topo{2, 3, 0};
  PreemptionVector none(6, 0);
  CHECK(surviving_pipelines(topo, none, false) == 2);
  CHECK(surviving_pipelines(topo, none, true) == 2);

  // Stage 1 of pipeline 0 and stage 2 of pipeline 1.
  PreemptionVector v(6, 0);
  v[0 * 3 + 1] = 1;
  v[1 * 3 + 2] = 1;
  CHECK(surviving_pipelines(topo, v, false) == 0);
  CHECK(surviving_pipelines(topo, v, true) == 1);

  // Two preemptions at the same stage of different pipelines, D=3, P=2.
  const Topology t32{3, 2, 0};
  PreemptionVector u(6, 0);
  u[0 * 2 + 1] = 1;
  u[1 * 2 + 1] = 1;
  CHECK(surviving_pipelines(t32, u, true) == 1);
}

TEST_CASE("surviving_pipelines matches brute-force assembly") {
  Rng rng(31337);
  for (int trial = 0; trial < 300; ++trial) {
    const int d = 1 + static_cast<int>(rng.below(4));
    const int p = 1 + static_cast<int>(rng.below(4));
    const int spares = static_cast<int>(rng.below(3));
    const Topology topo{d, p, spares};
    PreemptionVector v(topo.total(), 0);
    for (auto& bit : v) bit = rng.below(3) == 0;
    CHECK(surviving_pipelines(topo, v, true) == brute_force_max_pipelines(topo, v));
    CHECK(surviving_pipelines(topo, v, true) >= surviving_pipelines(topo, v, false));
    CHECK(surviving_pipelines(topo, v, true) <= d);
  }
}

TEST_CASE("spares absorb preemptions but never form pipelines") {
  const Topology topo{2, 2, 2};
  PreemptionVector v(6, 0);
  v[4] = v[5] = 1;  // both spares die
  CHECK(surviving_pipelines(topo, v, true) == 2);
}

TEST_CASE("six-instance oracle: conditional throughput expectations") {
  const WorkloadProfile w = fig_oracle_profile();

  // One preemption among six: every scenario leaves one complete pipeline
  // for (2,3) and two for (3,2).
  double sum23 = 0, sum32 = 0;
  for (const auto& v : enumerate_vectors(6, 1)) {
    sum23 += conditional_throughput({2, 3, 0}, v, w);
    sum32 += conditional_throughput({3, 2, 0}, v, w);
  }
  CHECK(sum23 / 6 == 50.0);
  CHECK(sum32 / 6 == 60.0);

  // Two preemptions: the shorter pipelines win.
  CHECK(expected_liveput({2, 3}, 6, 2, w, EvalMode::Exact()) == 40.0);
  CHECK(expected_liveput({3, 2}, 6, 2, w, EvalMode::Exact()) == 48.0);
}

TEST_CASE("liveput equals throughput without preemptions and zero when all die") {
  const WorkloadProfile w = fig_oracle_profile();
  CHECK(expected_liveput({2, 3}, 6, 0, w, EvalMode::Exact()) == throughput({2, 3}, w));
  CHECK(expected_liveput({3, 2}, 6, 0, w, EvalMode::Exact()) == throughput({3, 2}, w));
  CHECK(expected_liveput({2, 3}, 6, 6, w, EvalMode::Exact()) == 0.0);
}

TEST_CASE("liveput is non-increasing in the preemption count") {
  const WorkloadProfile profiles[] = {fig_oracle_profile(), gpt2ish_profile()};
  for (const auto& w : profiles) {
    for (const ParallelConfig& cfg : enumerate_configs(8, w)) {
      double prev = std::numeric_limits<double>::infinity();
      for (int k = 0; k <= 8; ++k) {
        const double lv = expected_liveput(cfg, 8, k, w, EvalMode::Exact());
        CHECK(lv <= prev + 1e-12);
        prev = lv;
      }
    }
  }
}

TEST_CASE("monte carlo estimate tracks exact enumeration") {
  const WorkloadProfile w = fig_oracle_profile();
  const double exact = expected_liveput({3, 2}, 6, 2, w, EvalMode::Exact());
  const double mc = expected_liveput({3, 2}, 6, 2, w, EvalMode::MC(10000, 9));
  CHECK(std::abs(mc - exact) / exact < 0.02);
}
