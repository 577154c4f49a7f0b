#include "doctest.h"
#include "spotsim/migration.hpp"
#include "support/fixtures.hpp"

using namespace spotsim;
using namespace spotsim::testing;

TEST_CASE("no preemptions and an unchanged target is free") {
  const WorkloadProfile w = gpt2ish_profile();
  const CostTable costs;
  const Topology topo{3, 4, 0};
  PreemptionVector v(12, 0);
  MigrationPlan plan = plan_migration(topo, v, {3, 4}, w, costs);
  CHECK(plan.kind == MigrationKind::none);
  CHECK(plan.moves.empty());
  CHECK(plan.est_cost_s == 0.0);
  CHECK(migration_cost(plan, w, costs, 0) == 0.0);
}

TEST_CASE("two losses in different pipelines resolve with one reroute") {
  const WorkloadProfile w = gpt2ish_profile();
  const CostTable costs;
  const Topology topo{3, 4, 0};
  PreemptionVector v(12, 0);
  v[0 * 4 + 0] = 1;  // pipeline 0, stage 0
  v[1 * 4 + 1] = 1;  // pipeline 1, stage 1
  MigrationPlan plan = plan_migration(topo, v, {2, 4}, w, costs);
  CHECK(plan.kind == MigrationKind::intra_stage);
  CHECK(plan.moves.size() == 1);
  CHECK_FALSE(plan.moves.front().transfers_params);
  for (const Move& m : plan.moves) CHECK_FALSE(v[m.instance]);
}

TEST_CASE("a fully preempted stage forces a rollback") {
  const WorkloadProfile w = gpt2ish_profile();
  const CostTable costs;
  const Topology topo{2, 3, 0};
  PreemptionVector v(6, 0);
  v[0 * 3 + 1] = 1;
  v[1 * 3 + 1] = 1;  // both replicas of stage 1
  CHECK_THROWS_AS(plan_migration(topo, v, {1, 3}, w, costs), RollbackRequired);
}

TEST_CASE("inter-stage transfer time follows the alpha-beta model") {
  WorkloadProfile w = gpt2ish_profile();
  w.param_bytes = 3.0e9;  // 1.5e9 fp16 parameters
  w.alpha_s = 1e-3;
  w.beta_s_per_byte = 1.0 / 10e9;
  CostTable costs;

  const Topology topo{2, 8, 1};
  PreemptionVector v(17, 0);
  v[0 * 8 + 3] = 1;  // one hole at stage 3; the spare fills it
  MigrationPlan plan = plan_migration(topo, v, {2, 8}, w, costs);
  CHECK(plan.kind == MigrationKind::inter_stage);
  CHECK(plan.transfer_rounds == 1);
  const double cost = migration_cost(plan, w, costs, 0);
  const double transfer = (3.0e9 / 8) * (1.0 / 10e9) + 1e-3;
  CHECK(cost == doctest::Approx(costs.build_model_s + costs.update_comm_groups_s + transfer));
  CHECK(transfer == doctest::Approx(0.0385).epsilon(1e-3));
  CHECK(transfer <= 60.0);  // stays within the profiled transfer range
}

TEST_CASE("pipeline migration dominates same-scenario alternatives") {
  const WorkloadProfile w = gpt2ish_profile();
  const CostTable costs;
  const Topology topo{4, 8, 0};
  PreemptionVector v(32, 0);
  v[3] = 1;
  MigrationPlan same_depth = plan_migration(topo, v, {3, 8}, w, costs);
  MigrationPlan pipe = plan_migration(topo, v, {3, 7}, w, costs);
  CHECK(pipe.kind == MigrationKind::pipeline);
  CHECK(pipe.est_cost_s > same_depth.est_cost_s);
}

TEST_CASE("cost ordering none <= intra <= inter <= pipeline") {
  Rng rng(777);
  for (int trial = 0; trial < 200; ++trial) {
    WorkloadProfile w = random_profile(rng);
    w.memory = {0.0, 0.0};
    w.device_memory_bytes = 1.0;  // all depths feasible for this check
    const CostTable costs = random_costs(rng);
    const int d = 2 + static_cast<int>(rng.below(3));
    const int p = 2 + static_cast<int>(rng.below(3));
    const Topology topo{d, p, static_cast<int>(rng.below(3))};

    PreemptionVector none(topo.total(), 0);
    PreemptionVector one = none;
    one[static_cast<size_t>(rng.below(topo.assigned()))] = 1;

    const MigrationPlan keep = plan_migration(topo, none, {d, p}, w, costs);
    const MigrationPlan intra = plan_migration(topo, one, {d - 1, p}, w, costs);
    const MigrationPlan pipe = plan_migration(topo, none, {d, p + 1}, w, costs);
    const double c_none = migration_cost(keep, w, costs, 0);
    const double c_intra = migration_cost(intra, w, costs, 0);
    const double c_pipe = migration_cost(pipe, w, costs, 0);
    CHECK(c_none == 0.0);
    CHECK(c_none <= c_intra);
    CHECK(c_intra <= c_pipe + 1e-12);

    if (topo.spares > 0) {
      const MigrationPlan inter = plan_migration(topo, one, {d, p}, w, costs);
      const double c_inter = migration_cost(inter, w, costs, 0);
      CHECK(c_intra <= c_inter + 1e-12);
      CHECK(c_inter <= c_pipe + 1e-12);
    }
  }
}

TEST_CASE("plans only ever move survivors") {
  Rng rng(4242);
  const WorkloadProfile w = gpt2ish_profile();
  const CostTable costs;
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 2 + static_cast<int>(rng.below(4));
    const int p = 2 + static_cast<int>(rng.below(4));
    const int spares = static_cast<int>(rng.below(4));
    const Topology topo{d, p, spares};
    PreemptionVector v(topo.total(), 0);
    for (auto& bit : v) bit = rng.below(4) == 0;
    std::vector<int> survivors = stage_survivors(topo, v);
    int alive = spares + topo.assigned();
    for (uint8_t bit : v) alive -= bit;
    const int target_d = std::min(*std::min_element(survivors.begin(), survivors.end()),
                                  alive / p);
    if (target_d < 1) continue;
    MigrationPlan plan = plan_migration(topo, v, {target_d, p}, w, costs);
    for (const Move& m : plan.moves) CHECK_FALSE(v[m.instance]);
  }
}

TEST_CASE("transition_outcome agrees with plan costing") {
  Rng rng(909);
  const WorkloadProfile w = gpt2ish_profile();
  const CostTable costs;
  for (int trial = 0; trial < 300; ++trial) {
    const int d = 1 + static_cast<int>(rng.below(4));
    const int p = 2 + static_cast<int>(rng.below(4));
    const int spares = static_cast<int>(rng.below(3));
    const Topology topo{d, p, spares};
    PreemptionVector v(topo.total(), 0);
    for (auto& bit : v) bit = rng.below(5) == 0;
    std::vector<int> survivors = stage_survivors(topo, v);
    int alive = topo.total();
    for (uint8_t bit : v) alive -= bit;
    const int target_d =
        std::min(*std::min_element(survivors.begin(), survivors.end()), alive / p);
    if (target_d < 1) continue;
    const ParallelConfig target{target_d, p};
    const TransitionOutcome out = transition_outcome(survivors, {d, p}, target, 0, w, costs);
    CHECK_FALSE(out.rollback);
    MigrationPlan plan = plan_migration(topo, v, target, w, costs);
    CHECK(plan.kind == out.kind);
    CHECK(migration_cost(plan, w, costs, 0) == doctest::Approx(out.cost_s));
  }
}
