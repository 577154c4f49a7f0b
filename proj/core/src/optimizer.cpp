#include "spotsim/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spotsim/rng.hpp"

namespace spotsim {

std::optional<ParallelConfig> reactive_plan(int n_now, const WorkloadProfile& w) {
  std::optional<ParallelConfig> best;
  double best_tput = 0.0;
  for (const ParallelConfig& cfg : enumerate_configs(n_now, w)) {
    const double t = throughput(cfg, w);
    if (t <= 0.0) continue;
    if (!best || t > best_tput ||
        (t == best_tput && (cfg.pipelines > best->pipelines ||
                            (cfg.pipelines == best->pipelines && cfg.stages < best->stages)))) {
      best = cfg;
      best_tput = t;
    }
  }
  return best;
}

Planner::Planner(WorkloadProfile w, CostTable costs, PlannerOptions opt)
    : workload_(std::move(w)), costs_(costs), options_(opt) {}

const std::vector<ParallelConfig>& Planner::configs_for(int n) {
  auto it = config_cache_.find(n);
  if (it == config_cache_.end())
    it = config_cache_.emplace(n, enumerate_configs(n, workload_)).first;
  return it->second;
}

namespace {

uint64_t phi_key(const std::optional<ParallelConfig>& prev, const std::optional<ParallelConfig>& next,
                 int n_now, int n_next) {
  auto pack = [](const std::optional<ParallelConfig>& c) -> uint64_t {
    if (!c) return 0;  // suspended
    return (static_cast<uint64_t>(c->pipelines) << 8) | static_cast<uint64_t>(c->stages);
  };
  uint64_t k = pack(prev);
  k = (k << 16) | pack(next);
  k = (k << 16) | static_cast<uint64_t>(n_now & 0xffff);
  k = (k << 16) | static_cast<uint64_t>(n_next & 0xffff);
  return k;
}

}  // namespace

Planner::PhiValue Planner::phi(const std::optional<ParallelConfig>& prev,
                               const std::optional<ParallelConfig>& next, int n_now, int n_next) {
  const uint64_t key = phi_key(prev, next, n_now, n_next);
  auto it = phi_cache_.find(key);
  if (it != phi_cache_.end()) return it->second;
  PhiValue v = phi_uncached(prev, next, n_now, n_next);
  phi_cache_.emplace(key, v);
  return v;
}

const std::vector<double>& Planner::survivor_histogram(const ParallelConfig& prev, int n_now,
                                                       int n_minus) {
  const uint64_t key = (static_cast<uint64_t>(prev.pipelines) << 48) |
                       (static_cast<uint64_t>(prev.stages) << 32) |
                       (static_cast<uint64_t>(n_now & 0xffff) << 16) |
                       static_cast<uint64_t>(n_minus & 0xffff);
  auto it = hist_cache_.find(key);
  if (it != hist_cache_.end()) return it->second;

  const Topology topo{prev.pipelines, prev.stages, n_now - prev.instances()};
  std::vector<double> hist(prev.pipelines + 1, 0.0);
  size_t count = 0;
  auto tally = [&](const PreemptionVector& v) {
    const std::vector<int> survivors = stage_survivors(topo, v);
    int m = prev.pipelines;
    for (int s : survivors) m = std::min(m, s);
    hist[m] += 1.0;
    ++count;
  };
  if (scenario_count(n_now, n_minus) <= options_.exact_cap) {
    for (const PreemptionVector& v : enumerate_vectors(n_now, n_minus)) tally(v);
  } else {
    for (const PreemptionVector& v :
         sample_vectors(n_now, n_minus, options_.mc_trials,
                        mix_seed(options_.mc_seed, static_cast<uint64_t>(n_now),
                                 static_cast<uint64_t>(n_minus))))
      tally(v);
  }
  for (double& h : hist) h /= static_cast<double>(count);
  return hist_cache_.emplace(key, std::move(hist)).first->second;
}

Planner::PhiValue Planner::phi_uncached(const std::optional<ParallelConfig>& prev,
                                        const std::optional<ParallelConfig>& next, int n_now,
                                        int n_next) {
  PhiValue out;
  if (!next) return out;  // suspended: nothing committed, nothing moved
  if (!feasible(*next, workload_) || next->instances() > n_next) return out;

  const double T = options_.interval_s;
  const double tput = throughput(*next, workload_);
  const int n_minus = std::max(0, n_now - n_next);
  const int fresh = std::max(0, n_next - n_now);

  if (!prev) {
    // Resuming from suspension: every instance loads state from the
    // checkpoint store.
    const double cost = resume_cost(*next, workload_, costs_);
    out.mig_cost_s = cost;
    out.committed = tput * std::max(0.0, T - cost);
    return out;
  }

  const std::vector<double>& hist = survivor_histogram(*prev, n_now, n_minus);
  double committed = 0.0;
  double cost_sum = 0.0;
  for (int m = 0; m < static_cast<int>(hist.size()); ++m) {
    const double p = hist[m];
    if (p == 0.0) continue;
    TransitionOutcome tr = transition_outcome_min(m, *prev, *next, fresh, workload_, costs_);
    double cost = tr.cost_s;
    if (tr.rollback) cost += options_.rollback_penalty_s;
    const double t_eff = std::max(0.0, T - cost);
    double rate = tput;
    if (options_.strict_conditional) {
      const int alive = std::min(next->pipelines, m);
      rate = alive > 0 ? throughput({alive, next->stages}, workload_) : 0.0;
    }
    committed += p * rate * t_eff;
    cost_sum += p * cost;
  }
  out.committed = committed;
  out.mig_cost_s = cost_sum;
  return out;
}

std::vector<PlanStep> Planner::dp_optimize(const std::optional<ParallelConfig>& current,
                                           const std::vector<int>& n_seq) {
  if (n_seq.size() < 2) throw std::invalid_argument("dp_optimize: need at least N_i and N_{i+1}");
  const int horizon = static_cast<int>(n_seq.size()) - 1;

  struct Node {
    std::optional<ParallelConfig> config;
    double value = -std::numeric_limits<double>::infinity();
    double mig_total = 0.0;
    int parent = -1;
    double step_committed = 0.0;
    double step_mig = 0.0;
  };

  std::vector<std::vector<Node>> levels(horizon + 1);
  levels[0].push_back({current, 0.0, 0.0, -1, 0.0, 0.0});

  for (int j = 0; j < horizon; ++j) {
    std::vector<std::optional<ParallelConfig>> candidates;
    for (const ParallelConfig& c : configs_for(n_seq[j + 1])) candidates.emplace_back(c);
    candidates.emplace_back(std::nullopt);  // suspension is always reachable

    for (const auto& cand : candidates) {
      Node best;
      best.config = cand;
      for (int pi = 0; pi < static_cast<int>(levels[j].size()); ++pi) {
        const Node& p = levels[j][pi];
        if (!std::isfinite(p.value)) continue;
        const PhiValue step = phi(p.config, cand, n_seq[j], n_seq[j + 1]);
        const double value = p.value + step.committed;
        const double mig = p.mig_total + step.mig_cost_s;
        const bool take = best.parent < 0 || value > best.value ||
                          (value == best.value && mig < best.mig_total);
        if (take) {
          best.value = value;
          best.mig_total = mig;
          best.parent = pi;
          best.step_committed = step.committed;
          best.step_mig = step.mig_cost_s;
        }
      }
      if (best.parent >= 0) levels[j + 1].push_back(best);
    }
  }

  // Final pick: highest value, then lower migration total, then larger D,
  // then smaller P; suspension loses every tie.
  const std::vector<Node>& last = levels[horizon];
  int best_idx = 0;
  auto rank = [](const Node& n) {
    const int d = n.config ? n.config->pipelines : -1;
    const int p = n.config ? -n.config->stages : 0;
    return std::tuple<double, double, int, int>(n.value, -n.mig_total, d, p);
  };
  for (int i = 1; i < static_cast<int>(last.size()); ++i)
    if (rank(last[i]) > rank(last[best_idx])) best_idx = i;

  std::vector<PlanStep> plan(horizon);
  int idx = best_idx;
  for (int j = horizon; j >= 1; --j) {
    const Node& node = levels[j][idx];
    plan[j - 1] = {j, node.config, node.step_committed, node.step_mig};
    idx = node.parent;
  }
  return plan;
}

double Planner::sequence_value(const std::optional<ParallelConfig>& current,
                               const std::vector<std::optional<ParallelConfig>>& sequence,
                               const std::vector<int>& n_seq) {
  if (sequence.size() + 1 != n_seq.size())
    throw std::invalid_argument("sequence_value: sequence/N length mismatch");
  double value = 0.0;
  std::optional<ParallelConfig> prev = current;
  for (size_t j = 0; j < sequence.size(); ++j) {
    value += phi(prev, sequence[j], n_seq[j], n_seq[j + 1]).committed;
    prev = sequence[j];
  }
  return value;
}

}  // namespace spotsim
