#pragma once

#include <optional>
#include <unordered_map>
#include <vector>

#include "spotsim/migration.hpp"
#include "spotsim/perf_model.hpp"
#include "spotsim/preemption.hpp"

namespace spotsim {

struct PlannerOptions {
  double interval_s = 60.0;
  int lookahead = 12;            // I
  int mc_trials = 200;           // scenario ensemble size per transition
  uint64_t exact_cap = 2000;     // enumerate scenarios when C(N, N-) is at most this
  uint64_t mc_seed = 0x5eedULL;  // scenario sampling is keyed by (seed, N, N-)
  double rollback_penalty_s = 30.0;
  // When set, the throughput term inside phi is conditioned on the
  // scenario's surviving pipelines instead of the planned configuration.
  bool strict_conditional = false;
};

// One planned interval. config == nullopt means training is suspended.
struct PlanStep {
  int interval_index = 0;
  std::optional<ParallelConfig> config;
  double expected_committed = 0.0;
  double expected_mig_cost_s = 0.0;
};

// Throughput-optimized choice for the current availability; nullopt when no
// feasible configuration exists. Ties prefer more pipelines, then fewer
// stages.
std::optional<ParallelConfig> reactive_plan(int n_now, const WorkloadProfile& w);

// Availability-aware configuration planner. Holds the scenario/transition
// caches, so reuse one instance per (profile, cost table) for speed; the
// cached values depend only on their keys, never on call order.
class Planner {
 public:
  Planner(WorkloadProfile w, CostTable costs, PlannerOptions opt = {});

  const WorkloadProfile& workload() const { return workload_; }
  const CostTable& costs() const { return costs_; }
  const PlannerOptions& options() const { return options_; }

  struct PhiValue {
    double committed = 0.0;   // expected samples committed in the interval
    double mig_cost_s = 0.0;  // expected migration seconds
  };

  // Expected committed samples in the next interval when transitioning
  // prev -> next while availability moves n_now -> n_next. nullopt configs
  // stand for the suspended state.
  PhiValue phi(const std::optional<ParallelConfig>& prev, const std::optional<ParallelConfig>& next,
               int n_now, int n_next);

  // Maximizes total expected committed samples over the horizon given the
  // availability sequence n_seq = [N_i, N_{i+1}, ..., N_{i+I}] (I+1 values);
  // returns one step per future interval. Ties prefer lower total migration
  // cost, then larger D, then smaller P.
  std::vector<PlanStep> dp_optimize(const std::optional<ParallelConfig>& current,
                                    const std::vector<int>& n_seq);

  // Objective value of a fixed configuration sequence (sequence[j] executes
  // in interval j+1), using the same phi as the DP.
  double sequence_value(const std::optional<ParallelConfig>& current,
                        const std::vector<std::optional<ParallelConfig>>& sequence,
                        const std::vector<int>& n_seq);

  size_t cache_size() const { return phi_cache_.size(); }

 private:
  PhiValue phi_uncached(const std::optional<ParallelConfig>& prev,
                        const std::optional<ParallelConfig>& next, int n_now, int n_next);

  // Distribution of the per-stage survivor minimum for `prev` under uniform
  // scenarios with n_minus preemptions among n_now instances; index 0..D.
  const std::vector<double>& survivor_histogram(const ParallelConfig& prev, int n_now,
                                                int n_minus);

  WorkloadProfile workload_;
  CostTable costs_;
  PlannerOptions options_;
  std::unordered_map<uint64_t, PhiValue> phi_cache_;
  std::unordered_map<uint64_t, std::vector<double>> hist_cache_;
  std::unordered_map<int, std::vector<ParallelConfig>> config_cache_;

  const std::vector<ParallelConfig>& configs_for(int n);
};

}  // namespace spotsim
