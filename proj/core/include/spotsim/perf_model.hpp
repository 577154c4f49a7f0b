#pragma once

#include <map>
#include <string>
#include <vector>

namespace spotsim {

// D data-parallel pipelines, each a P-stage pipeline over P instances.
struct ParallelConfig {
  int pipelines = 1;  // D
  int stages = 1;     // P

  int instances() const { return pipelines * stages; }
  bool operator==(const ParallelConfig&) const = default;
};

// Linear per-stage memory model: fixed + per_stage / P.
struct MemoryModel {
  double fixed_bytes = 0.0;
  double per_stage_bytes = 0.0;

  double stage_bytes(int stages) const { return fixed_bytes + per_stage_bytes / stages; }
};

struct WorkloadProfile {
  std::string name;
  double compute_per_microbatch_s = 0.0;  // fwd+bwd, all layers, one microbatch
  double param_bytes = 0.0;
  double activation_bytes = 0.0;          // per stage boundary, per microbatch
  int minibatch_size = 1;
  int microbatch_size = 1;
  double device_memory_bytes = 0.0;
  MemoryModel memory;
  double alpha_s = 0.0;           // per-message latency
  double beta_s_per_byte = 0.0;   // inverse bandwidth
  double spot_price_per_hour = 0.0;
  double ondemand_price_per_hour = 0.0;
  // Optional profiled per-pipeline rates (samples/s) keyed by depth. When a
  // depth is present here it overrides the analytic pipeline time; gradient
  // sync costs still apply on top.
  std::map<int, double> pipeline_rates;

  int microbatches_per_pipeline(int data_parallel) const {
    long long per = static_cast<long long>(data_parallel) * microbatch_size;
    long long m = (minibatch_size + per - 1) / per;
    return static_cast<int>(m < 1 ? 1 : m);
  }
};

bool depth_feasible(int stages, const WorkloadProfile& w);
bool feasible(const ParallelConfig& cfg, const WorkloadProfile& w);

// Samples/second of a fixed configuration absent preemptions; 0 when the
// configuration is infeasible.
double throughput(const ParallelConfig& cfg, const WorkloadProfile& w);

// All (D, P) with D*P <= n and P memory-feasible, ordered by ascending P
// then descending D.
std::vector<ParallelConfig> enumerate_configs(int n, const WorkloadProfile& w);

}  // namespace spotsim
