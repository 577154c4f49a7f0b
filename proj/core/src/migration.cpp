#include "spotsim/migration.hpp"

#include <algorithm>
#include <numeric>

namespace spotsim {

std::string to_string(MigrationKind k) {
  switch (k) {
    case MigrationKind::none: return "none";
    case MigrationKind::intra_stage: return "intra_stage";
    case MigrationKind::inter_stage: return "inter_stage";
    case MigrationKind::pipeline: return "pipeline";
  }
  return "?";
}

namespace {

// Rounds of source-doubling replication until `sources` copies have grown to
// cover `sources + transfers` holders.
int replication_rounds(int sources, int transfers) {
  int rounds = 0;
  long long have = sources;
  while (have < static_cast<long long>(sources) + transfers) {
    have *= 2;
    ++rounds;
  }
  return rounds;
}

double pipeline_transfer_s(int target_stages, const WorkloadProfile& w) {
  return w.param_bytes * w.beta_s_per_byte + target_stages * w.alpha_s;
}

// Per-hole stage-shard transfers run in parallel across stages; within a
// stage they serialize into replication rounds. Never worse than a full
// repartition broadcast.
double inter_transfer_s(int rounds, int stages, const WorkloadProfile& w) {
  const double unit = (w.param_bytes / stages) * w.beta_s_per_byte + w.alpha_s;
  return std::min(rounds * unit, pipeline_transfer_s(stages, w));
}

}  // namespace

// The per-stage survivor minimum is a sufficient statistic for costing: the
// serialization rounds grow as a stage's survivor count shrinks, and a fully
// lost stage means rollback.
TransitionOutcome transition_outcome_min(int min_survivor, const ParallelConfig& source,
                                         const ParallelConfig& target, int fresh_instances,
                                         const WorkloadProfile& w, const CostTable& costs) {
  TransitionOutcome out;
  if (min_survivor == 0) {
    // A whole stage is gone: no parameter source survives, restore from
    // checkpoint and repartition.
    out.rollback = true;
    out.kind = MigrationKind::pipeline;
    out.cost_s = (fresh_instances > 0 ? costs.fresh_fixed_s() : 0.0) + costs.build_model_s +
                 costs.update_comm_groups_s + pipeline_transfer_s(target.stages, w);
    return out;
  }

  if (target.stages != source.stages) {
    out.kind = MigrationKind::pipeline;
    out.cost_s = (fresh_instances > 0 ? costs.fresh_fixed_s() : 0.0) + costs.build_model_s +
                 costs.update_comm_groups_s + pipeline_transfer_s(target.stages, w);
    return out;
  }

  const int transfers = std::max(0, target.pipelines - min_survivor);
  const int rounds = replication_rounds(min_survivor, transfers);
  const bool assigned_dead = min_survivor < source.pipelines;

  if (rounds == 0 && !assigned_dead && target == source) {
    out.kind = MigrationKind::none;
    return out;  // nothing changed, nothing to pay
  }

  const double base = (fresh_instances > 0 ? costs.fresh_fixed_s() : 0.0) + costs.build_model_s +
                      costs.update_comm_groups_s;
  if (rounds == 0) {
    out.kind = MigrationKind::intra_stage;
    out.cost_s = base;
  } else {
    out.kind = MigrationKind::inter_stage;
    out.cost_s = base + inter_transfer_s(rounds, target.stages, w);
  }
  return out;
}

TransitionOutcome transition_outcome(const std::vector<int>& survivors_per_stage,
                                     const ParallelConfig& source, const ParallelConfig& target,
                                     int fresh_instances, const WorkloadProfile& w,
                                     const CostTable& costs) {
  int min_survivor = source.pipelines;
  for (int s : survivors_per_stage) min_survivor = std::min(min_survivor, s);
  return transition_outcome_min(min_survivor, source, target, fresh_instances, w, costs);
}

double resume_cost(const ParallelConfig& target, const WorkloadProfile& w,
                   const CostTable& costs) {
  return costs.fresh_fixed_s() + costs.build_model_s + costs.update_comm_groups_s +
         pipeline_transfer_s(target.stages, w);
}

MigrationPlan plan_migration(const Topology& topo, const PreemptionVector& v,
                             const ParallelConfig& target, const WorkloadProfile& w,
                             const CostTable& costs) {
  if (static_cast<int>(v.size()) != topo.total())
    throw std::invalid_argument("plan_migration: vector/topology size mismatch");
  const ParallelConfig source{topo.pipelines, topo.stages};
  const std::vector<int> survivors = stage_survivors(topo, v);
  MigrationPlan plan;
  plan.source = source;
  plan.target = target;

  for (int s : survivors)
    if (s == 0 && target.pipelines >= 1)
      throw RollbackRequired("stage fully preempted, no parameter source survives");

  if (target.stages != source.stages) {
    plan.kind = MigrationKind::pipeline;
    plan.est_cost_s = migration_cost(plan, w, costs, 0);
    return plan;
  }

  const int P = topo.stages;
  // Keep the pipelines with the most survivors intact; they need the fewest
  // fills.
  std::vector<int> order(topo.pipelines);
  std::iota(order.begin(), order.end(), 0);
  std::vector<int> alive_count(topo.pipelines, 0);
  for (int d = 0; d < topo.pipelines; ++d)
    for (int p = 0; p < P; ++p)
      if (!v[d * P + p]) ++alive_count[d];
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return alive_count[a] > alive_count[b]; });

  const int kept = std::min(target.pipelines, topo.pipelines);
  std::vector<bool> is_base(topo.pipelines, false);
  for (int i = 0; i < kept; ++i) is_base[order[i]] = true;

  // Spare survivors and cross-stage surplus serve as bodies for transfers.
  std::vector<int> spare_bodies;
  for (int k = topo.assigned(); k < topo.total(); ++k)
    if (!v[k]) spare_bodies.push_back(k);

  std::vector<std::vector<int>> donors(P);  // surviving non-base instances per stage
  for (int d = 0; d < topo.pipelines; ++d) {
    if (is_base[d]) continue;
    for (int p = 0; p < P; ++p)
      if (!v[d * P + p]) donors[p].push_back(d * P + p);
  }

  int transfer_rounds = 0;
  std::vector<int> surplus_bodies;  // donors left over after intra fills
  std::vector<std::pair<int, int>> transfer_holes;  // (target pipeline, stage)

  std::vector<int> base_alive(P, 0);
  for (int p = 0; p < P; ++p) {
    int filled = 0;
    for (int i = 0; i < kept; ++i)
      if (!v[order[i] * P + p]) ++filled;
    base_alive[p] = filled;
  }
  for (int p = 0; p < P; ++p) {
    int holes = target.pipelines - base_alive[p];
    size_t donor_idx = 0;
    // Broken-pipeline survivors first: rerouting only, no parameter bytes.
    int row_cursor = 0;
    auto next_hole_row = [&]() {
      // Holes live in bases whose slot at p is dead, then in new rows.
      while (row_cursor < kept && !v[order[row_cursor] * P + p]) ++row_cursor;
      int row = row_cursor < kept ? order[row_cursor] : topo.pipelines + (row_cursor - kept);
      ++row_cursor;
      return row;
    };
    while (holes > 0 && donor_idx < donors[p].size()) {
      const int inst = donors[p][donor_idx++];
      plan.moves.push_back({inst, inst / P, p, next_hole_row(), p, false});
      --holes;
    }
    for (; donor_idx < donors[p].size(); ++donor_idx)
      surplus_bodies.push_back(donors[p][donor_idx]);
    const int transfers = std::max(0, holes);
    for (int t = 0; t < transfers; ++t) transfer_holes.emplace_back(next_hole_row(), p);
    if (transfers > 0)
      transfer_rounds = std::max(transfer_rounds, replication_rounds(survivors[p], transfers));
  }

  for (auto [row, p] : transfer_holes) {
    int body;
    if (!spare_bodies.empty()) {
      body = spare_bodies.back();
      spare_bodies.pop_back();
      plan.moves.push_back({body, -1, -1, row, p, true});
    } else if (!surplus_bodies.empty()) {
      body = surplus_bodies.back();
      surplus_bodies.pop_back();
      plan.moves.push_back({body, body / P, body % P, row, p, true});
    } else {
      throw std::invalid_argument("plan_migration: not enough instances for target");
    }
  }

  plan.transfer_rounds = transfer_rounds;
  bool any_transfer = !transfer_holes.empty();
  bool any_move = !plan.moves.empty();
  if (any_transfer)
    plan.kind = MigrationKind::inter_stage;
  else if (any_move || target.pipelines != topo.pipelines)
    plan.kind = MigrationKind::intra_stage;
  else
    plan.kind = MigrationKind::none;
  plan.est_cost_s = migration_cost(plan, w, costs, 0);
  return plan;
}

double migration_cost(const MigrationPlan& plan, const WorkloadProfile& w, const CostTable& costs,
                      int fresh_instances) {
  if (plan.kind == MigrationKind::none) return 0.0;
  double cost = costs.build_model_s + costs.update_comm_groups_s;
  if (fresh_instances > 0) cost += costs.fresh_fixed_s();
  switch (plan.kind) {
    case MigrationKind::none:
    case MigrationKind::intra_stage:
      break;
    case MigrationKind::inter_stage:
      cost += inter_transfer_s(std::max(1, plan.transfer_rounds), plan.target.stages, w);
      break;
    case MigrationKind::pipeline:
      cost += pipeline_transfer_s(plan.target.stages, w);
      break;
  }
  return cost;
}

}  // namespace spotsim
