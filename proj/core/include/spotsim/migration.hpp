#pragma once

#include <stdexcept>
#include <vector>

#include "spotsim/perf_model.hpp"
#include "spotsim/preemption.hpp"

namespace spotsim {

enum class MigrationKind { none, intra_stage, inter_stage, pipeline };

std::string to_string(MigrationKind k);

// Point costs in seconds for the fixed parts of a migration.
struct CostTable {
  double start_process_s = 1.0;
  double rendezvous_s = 5.0;
  double cuda_context_s = 5.0;
  double load_data_s = 5.0;
  double build_model_s = 5.0;
  double update_comm_groups_s = 10.0;

  double fresh_fixed_s() const {
    return start_process_s + rendezvous_s + cuda_context_s + load_data_s;
  }
};

struct Move {
  int instance = 0;  // surviving instance being rerouted or retargeted
  int from_pipeline = 0, from_stage = 0;
  int to_pipeline = 0, to_stage = 0;
  bool transfers_params = false;
};

struct MigrationPlan {
  MigrationKind kind = MigrationKind::none;
  std::vector<Move> moves;
  ParallelConfig source;
  ParallelConfig target;
  int transfer_rounds = 0;  // serialized replication rounds for inter-stage transfers
  double est_cost_s = 0.0;
};

// Both intra- and inter-stage recovery need at least one same-stage
// survivor as a parameter source; a fully preempted stage forces a restore
// from the latest checkpoint.
struct RollbackRequired : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Plans the transition to `target` under scenario v. Same-depth targets
// prefer intra-stage reassignment per hole and fall back to parameter
// transfers; depth changes are pipeline migrations. Throws RollbackRequired
// when some stage has no surviving parameter source.
MigrationPlan plan_migration(const Topology& topo, const PreemptionVector& v,
                             const ParallelConfig& target, const WorkloadProfile& w,
                             const CostTable& costs);

// T_mig for an executed plan. fresh_instances adds the one-time process
// startup terms.
double migration_cost(const MigrationPlan& plan, const WorkloadProfile& w, const CostTable& costs,
                      int fresh_instances);

// Stats-level transition costing shared by the optimizer hot path and the
// simulator; equivalent to plan_migration + migration_cost but without
// materializing moves.
struct TransitionOutcome {
  double cost_s = 0.0;
  MigrationKind kind = MigrationKind::none;
  bool rollback = false;
};

TransitionOutcome transition_outcome(const std::vector<int>& survivors_per_stage,
                                     const ParallelConfig& source, const ParallelConfig& target,
                                     int fresh_instances, const WorkloadProfile& w,
                                     const CostTable& costs);

// Same costing from the per-stage survivor minimum alone (it is a
// sufficient statistic for the cost model).
TransitionOutcome transition_outcome_min(int min_survivor, const ParallelConfig& source,
                                         const ParallelConfig& target, int fresh_instances,
                                         const WorkloadProfile& w, const CostTable& costs);

// Cold resume: every instance loads state from the checkpoint store.
double resume_cost(const ParallelConfig& target, const WorkloadProfile& w, const CostTable& costs);

}  // namespace spotsim
