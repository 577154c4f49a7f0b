#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "spotsim/migration.hpp"
#include "spotsim/optimizer.hpp"
#include "spotsim/perf_model.hpp"
#include "spotsim/preemption.hpp"
#include "spotsim/rng.hpp"
#include "spotsim/trace.hpp"

namespace spotsim::testing {

// Toy six-instance workload calibrated from profiled per-pipeline rates:
// a depth-3 pipeline runs at 50 samples/s and a depth-2 pipeline at 30, with
// no sync cost, so Throughput(D, P) = D * rate(P) exactly. Depth 1 is
// memory-infeasible.
inline WorkloadProfile fig_oracle_profile() {
  WorkloadProfile w;
  w.name = "toy-rate-table";
  w.compute_per_microbatch_s = 1.0;
  w.param_bytes = 0.0;
  w.activation_bytes = 0.0;
  w.minibatch_size = 6;
  w.microbatch_size = 1;
  w.device_memory_bytes = 1.0;
  w.memory = {0.0, 2.0};  // feasible depths: P >= 2
  w.alpha_s = 0.0;
  w.beta_s_per_byte = 0.0;
  w.spot_price_per_hour = 0.918;
  w.ondemand_price_per_hour = 3.06;
  w.pipeline_rates = {{2, 30.0}, {3, 50.0}};
  return w;
}

// 1.5B-parameter decoder-style workload on 16 GB devices; needs at least a
// depth-7 pipeline.
inline WorkloadProfile gpt2ish_profile() {
  WorkloadProfile w;
  w.name = "lm-1.5b";
  w.compute_per_microbatch_s = 1.0;
  w.param_bytes = 3.0e9;  // fp16 weights
  w.activation_bytes = 4.0e7;
  w.minibatch_size = 128;
  w.microbatch_size = 1;
  w.device_memory_bytes = 16.0e9;
  w.memory = {1.5e9, 88.0e9};
  w.alpha_s = 5e-3;
  w.beta_s_per_byte = 2.5e-9;
  w.spot_price_per_hour = 0.918;
  w.ondemand_price_per_hour = 3.06;
  return w;
}

// 6.7B-parameter workload; infeasible below depth 20.
inline WorkloadProfile gpt3ish_profile() {
  WorkloadProfile w = gpt2ish_profile();
  w.name = "lm-6.7b";
  w.compute_per_microbatch_s = 4.0;
  w.param_bytes = 13.4e9;
  w.minibatch_size = 64;
  w.memory = {1.0e9, 290.0e9};
  return w;
}

// Randomized small workload + cost table for brute-force comparisons.
inline WorkloadProfile random_profile(Rng& rng) {
  WorkloadProfile w;
  w.name = "random";
  w.compute_per_microbatch_s = 0.05 + rng.unit() * 2.0;
  w.param_bytes = rng.unit() * 4e9;
  w.activation_bytes = rng.unit() * 1e7;
  w.microbatch_size = 1 + static_cast<int>(rng.below(4));
  w.minibatch_size = w.microbatch_size * (1 + static_cast<int>(rng.below(32)));
  w.device_memory_bytes = 16.0;
  const int min_depth = 1 + static_cast<int>(rng.below(3));
  w.memory = {0.0, 16.0 * min_depth};  // feasible iff P >= min_depth
  w.alpha_s = rng.unit() * 0.01;
  w.beta_s_per_byte = rng.unit() * 2e-9;
  w.spot_price_per_hour = 1.0;
  w.ondemand_price_per_hour = 3.0;
  return w;
}

inline CostTable random_costs(Rng& rng) {
  CostTable c;
  c.start_process_s = rng.unit();
  c.rendezvous_s = rng.unit() * 10.0;
  c.cuda_context_s = rng.unit() * 10.0;
  c.load_data_s = rng.unit() * 10.0;
  c.build_model_s = rng.unit() * 10.0;
  c.update_comm_groups_s = rng.unit() * 20.0;
  return c;
}

// Availability trace with exactly `loss_events` losing intervals and
// `gain_events` gaining intervals, arranged in multi-interval episodes the
// way real clusters drain and refill. Counts stay within [floor_level, cap].
inline IntervalSeries episodic_trace(uint64_t seed, int cap, int length, int loss_events,
                                     int gain_events, int floor_level = 16,
                                     int min_episode = 2, int max_episode = 4) {
  Rng rng(mix_seed(seed, 0xE9150DE5ULL));
  for (int attempt = 0; attempt < 64; ++attempt) {
    IntervalSeries s;
    s.interval_seconds = 60.0;
    s.capacity = cap;
    s.counts.assign(length, cap - 2);
    int level = cap - 2;
    int losses = 0, gains = 0;
    size_t i = 1;
    int stalls = 0;
    // Alternate loss and gain episodes of 1-4 intervals until both budgets
    // are spent, spacing them with short quiet stretches.
    bool losing = true;
    while (i < static_cast<size_t>(length) && (losses < loss_events || gains < gain_events) &&
           stalls < 4) {
      const int remaining = (losing ? loss_events - losses : gain_events - gains);
      if (remaining <= 0) {
        losing = !losing;
        ++stalls;
        continue;
      }
      const int budget_left = (loss_events - losses) + (gain_events - gains);
      const int slack = length - static_cast<int>(i) - budget_left;
      if (slack > 4 && rng.below(3) == 0) i += 1 + rng.below(2);  // quiet gap
      int episode = min_episode + static_cast<int>(rng.below(max_episode - min_episode + 1));
      episode = std::min(episode, remaining);
      episode = std::min<int>(episode, length - static_cast<int>(i));
      bool advanced = false;
      for (int e = 0; e < episode && i < static_cast<size_t>(length); ++e) {
        int mag = 1 + static_cast<int>(rng.below(3));
        if (losing)
          mag = std::min(mag, level - floor_level);
        else
          mag = std::min(mag, cap - level);
        if (mag < 1) break;
        level += losing ? -mag : mag;
        (losing ? losses : gains) += 1;
        for (size_t j = i; j < static_cast<size_t>(length); ++j) s.counts[j] = level;
        ++i;
        advanced = true;
      }
      stalls = advanced ? 0 : stalls + 1;
      losing = !losing;
    }
    if (losses == loss_events && gains == gain_events) return s;
  }
  throw std::runtime_error("episodic_trace: could not honour the event budget");
}

// Reference for surviving_pipelines: brute-force assembly of complete
// pipelines from the survivor grid, trying every per-stage assignment count.
inline int brute_force_max_pipelines(const Topology& topo, const PreemptionVector& v) {
  std::vector<int> per_stage(topo.stages, 0);
  for (int k = 0; k < topo.assigned(); ++k)
    if (!v[k]) ++per_stage[k % topo.stages];
  for (int target = topo.pipelines; target >= 1; --target) {
    bool ok = true;
    for (int p = 0; p < topo.stages; ++p) ok &= (per_stage[p] >= target);
    if (ok) return target;
  }
  return 0;
}

// Exhaustive search over all configuration sequences, sharing the planner's
// phi; reference for the DP.
inline double exhaustive_plan_value(Planner& planner, const std::optional<ParallelConfig>& current,
                                    const std::vector<int>& n_seq) {
  const int horizon = static_cast<int>(n_seq.size()) - 1;
  std::vector<std::vector<std::optional<ParallelConfig>>> choices(horizon);
  for (int j = 0; j < horizon; ++j) {
    for (const ParallelConfig& c : enumerate_configs(n_seq[j + 1], planner.workload()))
      choices[j].emplace_back(c);
    choices[j].emplace_back(std::nullopt);
  }
  double best = -1.0;
  std::vector<std::optional<ParallelConfig>> seq(horizon);
  std::function<void(int, double, std::optional<ParallelConfig>)> rec =
      [&](int j, double acc, std::optional<ParallelConfig> prev) {
        if (j == horizon) {
          best = std::max(best, acc);
          return;
        }
        for (const auto& c : choices[j]) {
          const double step = planner.phi(prev, c, n_seq[j], n_seq[j + 1]).committed;
          rec(j + 1, acc + step, c);
        }
      };
  rec(0, 0.0, current);
  return best;
}

}  // namespace spotsim::testing
