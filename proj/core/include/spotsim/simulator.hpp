#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spotsim/migration.hpp"
#include "spotsim/optimizer.hpp"
#include "spotsim/perf_model.hpp"
#include "spotsim/predictor.hpp"
#include "spotsim/trace.hpp"

namespace spotsim {

enum class PolicyKind {
  proactive,   // forecast-driven liveput DP (Algorithm-1 style loop)
  ideal,       // same loop fed the true future availability
  reactive,    // per-interval throughput argmax with adaptation
  checkpoint,  // periodic-checkpoint baseline: restart + roll back on preemption
  redundancy,  // fixed-depth replicated-computation baseline
};

std::string to_string(PolicyKind k);

struct CheckpointParams {
  int period_intervals = 5;
  double save_cost_s = 10.0;
  double restore_cost_s = 30.0;
  double restart_cost_s = 30.0;
};

struct RedundancyParams {
  int fixed_stages = 4;
  double slowdown_factor = 0.75;  // throughput multiplier paid for redundancy
};

struct Policy {
  PolicyKind kind = PolicyKind::reactive;
  int lookahead = 12;                           // proactive / ideal
  PredictMethod method = PredictMethod::arima;  // proactive
  int history = 12;                             // proactive
  CheckpointParams checkpoint;
  RedundancyParams redundancy;

  static Policy Proactive(int lookahead = 12, PredictMethod m = PredictMethod::arima,
                          int history = 12) {
    Policy p;
    p.kind = PolicyKind::proactive;
    p.lookahead = lookahead;
    p.method = m;
    p.history = history;
    return p;
  }
  static Policy Ideal(int lookahead = 12) {
    Policy p;
    p.kind = PolicyKind::ideal;
    p.lookahead = lookahead;
    return p;
  }
  static Policy Reactive() { return Policy{}; }
  static Policy Checkpoint(CheckpointParams c = {}) {
    Policy p;
    p.kind = PolicyKind::checkpoint;
    p.checkpoint = c;
    return p;
  }
  static Policy Redundancy(int fixed_stages, double slowdown = 0.75) {
    Policy p;
    p.kind = PolicyKind::redundancy;
    p.redundancy = {fixed_stages, slowdown};
    return p;
  }
};

Policy parse_policy(const std::string& name);

struct SimOptions {
  int epoch_samples = 0;  // 0 -> 64 minibatches
  PlannerOptions planner;
  CostTable costs;
};

// Instance-seconds by category; their sum equals total allocated
// instance-seconds for every run.
struct Ledger {
  double effective_s = 0.0;
  double migration_s = 0.0;
  double checkpoint_s = 0.0;
  double wasted_rollback_s = 0.0;
  double idle_s = 0.0;

  double total() const {
    return effective_s + migration_s + checkpoint_s + wasted_rollback_s + idle_s;
  }
};

struct IntervalLog {
  int interval = 0;
  int available = 0;
  int pipelines = 0;  // 0 when suspended
  int stages = 0;
  double throughput = 0.0;
  long long committed = 0;     // net samples committed in this interval
  long long rolled_back = 0;   // samples later revoked by a rollback
  MigrationKind migration = MigrationKind::none;
  Ledger ledger;               // this interval's share
};

struct SimReport {
  std::string policy;
  uint64_t seed = 0;
  std::vector<IntervalLog> intervals;
  long long committed_samples = 0;
  double wall_time_s = 0.0;
  Ledger ledger;
  double instance_seconds = 0.0;
  double instance_hours = 0.0;
  double spot_cost = 0.0;
  double ondemand_cost = 0.0;
  std::optional<double> cost_per_sample;  // empty when nothing committed
  int epochs_completed = 0;
  int rollback_events = 0;
  int suspended_intervals = 0;
  bool sample_accounting_ok = true;  // every sample committed exactly once per epoch
};

// Drops pipelines (preserving depth) until the planned configuration fits
// N_actual; re-partitions to the deepest feasible single pipeline when even
// one pipeline of the planned depth no longer fits. nullopt = suspend.
std::optional<ParallelConfig> adjust_config(const std::optional<ParallelConfig>& planned,
                                            int n_actual, const WorkloadProfile& w);

// Replays a policy against an availability trace. Deterministic for fixed
// (series, profile, policy, seed). `shared_planner` may inject a warm
// Planner for the same (profile, costs); pass nullptr to use a private one.
SimReport run(const IntervalSeries& series, const WorkloadProfile& w, const Policy& policy,
              uint64_t seed, const SimOptions& options = {}, Planner* shared_planner = nullptr);

}  // namespace spotsim
