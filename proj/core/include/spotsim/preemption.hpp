#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "spotsim/perf_model.hpp"

namespace spotsim {

// Placement of instances on the D x P grid plus unassigned spares.
// Instance k < D*P sits at pipeline k / P, stage k % P; spares follow.
struct Topology {
  int pipelines = 0;
  int stages = 0;
  int spares = 0;

  int assigned() const { return pipelines * stages; }
  int total() const { return assigned() + spares; }
};

// v[k] = 1 when instance k is preempted in this scenario.
using PreemptionVector = std::vector<uint8_t>;

inline constexpr uint64_t kEnumerationCap = 1'000'000;

// C(n, k), saturating at 2^63.
uint64_t scenario_count(int n, int k);

// All C(n, n_minus) preemption vectors, each exactly once. Throws
// std::invalid_argument when the count exceeds kEnumerationCap; use
// sample_vectors instead.
std::vector<PreemptionVector> enumerate_vectors(int n, int n_minus);

// `trials` vectors, each a uniform n_minus-subset of [0, n). Deterministic
// under seed; trial t depends only on (seed, t).
std::vector<PreemptionVector> sample_vectors(int n, int n_minus, int trials, uint64_t seed);

// Survivor count per stage over the assigned grid (spares excluded).
std::vector<int> stage_survivors(const Topology& topo, const PreemptionVector& v);

// Number of complete pipelines after the scenario. Without intra-stage
// migration only untouched pipelines count; with it, same-stage survivors
// from broken pipelines can be rerouted, so the bound is the per-stage
// survivor minimum capped at D. Spares hold no model state and never count.
int surviving_pipelines(const Topology& topo, const PreemptionVector& v, bool allow_intra_stage);

// Throughput of the configuration the scenario leaves behind (intra-stage
// recovery assumed); 0 when no complete pipeline survives.
double conditional_throughput(const Topology& topo, const PreemptionVector& v,
                              const WorkloadProfile& w);

struct EvalMode {
  bool exact = true;
  int trials = 1000;
  uint64_t seed = 0;

  static EvalMode Exact() { return {true, 0, 0}; }
  static EvalMode MC(int trials, uint64_t seed) { return {false, trials, seed}; }
};

// Expected throughput over uniform preemption scenarios with n_minus
// preempted among n allocated instances.
double expected_liveput(const ParallelConfig& cfg, int n, int n_minus, const WorkloadProfile& w,
                        const EvalMode& mode);

}  // namespace spotsim
