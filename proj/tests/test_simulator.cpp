#include "doctest.h"
#include "spotsim/io.hpp"
#include "spotsim/simulator.hpp"
#include "support/fixtures.hpp"

using namespace spotsim;
using namespace spotsim::testing;

namespace {

IntervalSeries constant_series(int level, int intervals, int capacity) {
  IntervalSeries s;
  s.interval_seconds = 60.0;
  s.capacity = capacity;
  s.counts.assign(intervals, level);
  return s;
}

void check_conservation(const SimReport& r) {
  const double total = r.ledger.total();
  CHECK(std::abs(total - r.instance_seconds) <= 1e-6 * std::max(1.0, r.instance_seconds));
  for (const IntervalLog& log : r.intervals) {
    const double expect = static_cast<double>(log.available) * 60.0;
    CHECK(std::abs(log.ledger.total() - expect) <= 1e-6 * std::max(1.0, expect));
  }
}

}  // namespace

TEST_CASE("adjust_config examples") {
  WorkloadProfile w = gpt2ish_profile();
  w.memory = {0.0, 4.0 * 16e9};  // feasible depths: P >= 4
  CHECK(*adjust_config(ParallelConfig{4, 8}, 34, w) == ParallelConfig{4, 8});
  CHECK(*adjust_config(ParallelConfig{4, 8}, 30, w) == ParallelConfig{3, 8});
  CHECK(*adjust_config(ParallelConfig{4, 8}, 6, w) == ParallelConfig{1, 6});
  CHECK_FALSE(adjust_config(ParallelConfig{4, 8}, 3, w).has_value());
}

TEST_CASE("reactive on a constant trace commits at full throughput") {
  const WorkloadProfile w = fig_oracle_profile();
  SimReport r = run(constant_series(6, 10, 6), w, Policy::Reactive(), 1);
  // (2,3) at 100 samples/s for 10 intervals of 60 s.
  CHECK(r.committed_samples == 10 * 60 * 100);
  CHECK(r.ledger.migration_s == 0.0);
  CHECK(r.ledger.wasted_rollback_s == 0.0);
  CHECK(r.ledger.checkpoint_s == 0.0);
  CHECK(r.sample_accounting_ok);
  check_conservation(r);
}

TEST_CASE("an empty cluster suspends with empty ledger") {
  const WorkloadProfile w = fig_oracle_profile();
  IntervalSeries s = constant_series(6, 6, 6);
  s.counts[3] = 0;
  SimReport r = run(s, w, Policy::Reactive(), 3);
  const IntervalLog& dead = r.intervals[3];
  CHECK(dead.pipelines == 0);
  CHECK(dead.committed == 0);
  CHECK(dead.ledger.total() == 0.0);
  CHECK(r.suspended_intervals == 1);
  check_conservation(r);
}

TEST_CASE("checkpoint policy without preemptions never rolls back") {
  const WorkloadProfile w = fig_oracle_profile();
  SimReport r = run(constant_series(6, 20, 6), w, Policy::Checkpoint(), 5);
  CHECK(r.ledger.wasted_rollback_s == 0.0);
  CHECK(r.rollback_events == 0);
  CHECK(r.ledger.checkpoint_s > 0.0);  // periodic saves still charged
  check_conservation(r);
}

TEST_CASE("checkpoint policy rolls back to the last save on preemption") {
  const WorkloadProfile w = fig_oracle_profile();
  IntervalSeries s = constant_series(6, 12, 6);
  s.counts[7] = 5;
  SimReport r = run(s, w, Policy::Checkpoint(), 5);
  CHECK(r.rollback_events == 1);
  CHECK(r.ledger.wasted_rollback_s > 0.0);
  long long rolled = 0;
  for (const auto& log : r.intervals) rolled += log.rolled_back;
  CHECK(rolled > 0);
  check_conservation(r);
}

TEST_CASE("redundancy suspends below its fixed depth") {
  WorkloadProfile w = gpt2ish_profile();
  w.memory = {0.0, 0.0};
  w.device_memory_bytes = 1.0;
  SimReport r = run(constant_series(15, 4, 32), w, Policy::Redundancy(16), 2);
  CHECK(r.committed_samples == 0);
  CHECK(r.suspended_intervals == 4);
  check_conservation(r);
}

TEST_CASE("redundancy pays exactly its slowdown on preemption-free traces") {
  const WorkloadProfile w = fig_oracle_profile();
  SimReport reactive = run(constant_series(6, 10, 6), w, Policy::Reactive(), 4);
  SimReport redundant = run(constant_series(6, 10, 6), w, Policy::Redundancy(3, 0.6), 4);
  CHECK(redundant.committed_samples * 10 == reactive.committed_samples * 6);
  check_conservation(redundant);
}

TEST_CASE("simulation is deterministic") {
  const WorkloadProfile w = fig_oracle_profile();
  IntervalSeries s = gen_synthetic(17, 6, 30, 6, 5, 1, 2);
  for (const Policy& p : {Policy::Reactive(), Policy::Proactive(4), Policy::Ideal(4),
                          Policy::Checkpoint(), Policy::Redundancy(2)}) {
    SimOptions opt;
    opt.planner.mc_trials = 64;
    SimReport a = run(s, w, p, 11, opt);
    SimReport b = run(s, w, p, 11, opt);
    CHECK(report_to_json(a) == report_to_json(b));
  }
}

TEST_CASE("every policy conserves the ledger on random traces") {
  Rng rng(31);
  const WorkloadProfile w = fig_oracle_profile();
  for (int trial = 0; trial < 10; ++trial) {
    IntervalSeries s = gen_synthetic(rng.next(), 6, 24, 5, 4, 1, 2);
    for (const Policy& p : {Policy::Reactive(), Policy::Proactive(4), Policy::Ideal(4),
                            Policy::Checkpoint(), Policy::Redundancy(2)}) {
      SimOptions opt;
      opt.planner.mc_trials = 32;
      SimReport r = run(s, w, p, rng.next(), opt);
      check_conservation(r);
      CHECK(r.sample_accounting_ok);
    }
  }
}

TEST_CASE("rollbacks return samples to the pool exactly once") {
  const WorkloadProfile w = fig_oracle_profile();
  Rng rng(77);
  for (int trial = 0; trial < 12; ++trial) {
    IntervalSeries s = gen_synthetic(rng.next(), 6, 40, 10, 8, 1, 3);
    SimOptions opt;
    opt.epoch_samples = 16 * w.minibatch_size;  // frequent epoch turnover
    opt.planner.mc_trials = 32;
    SimReport r = run(s, w, Policy::Proactive(4), rng.next(), opt);
    CHECK(r.sample_accounting_ok);
    SimReport rc = run(s, w, Policy::Checkpoint(), rng.next(), opt);
    CHECK(rc.sample_accounting_ok);
  }
}

TEST_CASE("ideal lookahead dominates the forecast-driven policy") {
  const WorkloadProfile w = fig_oracle_profile();
  Rng rng(123);
  SimOptions opt;
  opt.planner.mc_trials = 64;
  for (int trial = 0; trial < 6; ++trial) {
    IntervalSeries s = gen_synthetic(rng.next(), 6, 40, 8, 7, 1, 3);
    const uint64_t seed = rng.next();
    SimReport ideal = run(s, w, Policy::Ideal(6), seed, opt);
    SimReport fore = run(s, w, Policy::Proactive(6), seed, opt);
    CHECK(ideal.committed_samples >= fore.committed_samples);
  }
}

TEST_CASE("reports carry cost accounting") {
  const WorkloadProfile w = fig_oracle_profile();
  SimReport r = run(constant_series(6, 10, 6), w, Policy::Reactive(), 1);
  CHECK(r.instance_hours == doctest::Approx(6 * 10 * 60.0 / 3600.0));
  CHECK(r.spot_cost == doctest::Approx(0.918 * r.instance_hours));
  CHECK(r.ondemand_cost == doctest::Approx(3.06 * r.instance_hours));
  REQUIRE(r.cost_per_sample.has_value());
  CHECK(*r.cost_per_sample == doctest::Approx(r.spot_cost / r.committed_samples));

  SimReport empty = run(constant_series(0, 3, 6), w, Policy::Reactive(), 1);
  CHECK_FALSE(empty.cost_per_sample.has_value());
}
