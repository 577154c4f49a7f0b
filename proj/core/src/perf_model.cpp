#include "spotsim/perf_model.hpp"

namespace spotsim {

bool depth_feasible(int stages, const WorkloadProfile& w) {
  if (stages < 1) return false;
  return w.memory.stage_bytes(stages) <= w.device_memory_bytes;
}

bool feasible(const ParallelConfig& cfg, const WorkloadProfile& w) {
  return cfg.pipelines >= 1 && depth_feasible(cfg.stages, w);
}

double throughput(const ParallelConfig& cfg, const WorkloadProfile& w) {
  if (!feasible(cfg, w)) return 0.0;
  const int D = cfg.pipelines;
  const int P = cfg.stages;
  const long long B = w.minibatch_size;
  const long long M = w.microbatches_per_pipeline(D);
  const long long u = w.microbatch_size;

  double sync = 0.0;
  if (D > 1) {
    // Ring all-reduce of each stage's gradients across its D replicas.
    sync = 2.0 * (D - 1) / D * (w.param_bytes / P) * w.beta_s_per_byte + 2.0 * (D - 1) * w.alpha_s;
  }

  auto it = w.pipeline_rates.find(P);
  if (it != w.pipeline_rates.end()) {
    // Profiled per-pipeline rate. The sync-free case is kept multiplicative
    // so a rate table reproduces its calibration exactly.
    if (sync == 0.0) return it->second * static_cast<double>(B) / static_cast<double>(M * u);
    const double t_pipe = static_cast<double>(M * u) / it->second;
    return static_cast<double>(B) / (t_pipe + sync);
  }

  // Fill-drain schedule over P uniform stages.
  const double t_stage = w.compute_per_microbatch_s / P;
  const double t_pipe = static_cast<double>(M + P - 1) * t_stage +
                        2.0 * (P - 1) * (w.alpha_s + w.activation_bytes * w.beta_s_per_byte);
  return static_cast<double>(B) / (t_pipe + sync);
}

std::vector<ParallelConfig> enumerate_configs(int n, const WorkloadProfile& w) {
  std::vector<ParallelConfig> out;
  if (n <= 0) return out;
  for (int p = 1; p <= n; ++p) {
    if (!depth_feasible(p, w)) continue;
    for (int d = n / p; d >= 1; --d) out.push_back({d, p});
  }
  return out;
}

}  // namespace spotsim
