#include "spotsim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "spotsim/rng.hpp"

namespace spotsim {

std::string to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::proactive: return "proactive";
    case PolicyKind::ideal: return "ideal";
    case PolicyKind::reactive: return "reactive";
    case PolicyKind::checkpoint: return "checkpoint";
    case PolicyKind::redundancy: return "redundancy";
  }
  return "?";
}

Policy parse_policy(const std::string& name) {
  if (name == "proactive") return Policy::Proactive();
  if (name == "ideal") return Policy::Ideal();
  if (name == "reactive") return Policy::Reactive();
  if (name == "checkpoint") return Policy::Checkpoint();
  if (name == "redundancy") return Policy::Redundancy(4);
  throw std::invalid_argument("unknown policy: " + name);
}

std::optional<ParallelConfig> adjust_config(const std::optional<ParallelConfig>& planned,
                                            int n_actual, const WorkloadProfile& w) {
  if (planned) {
    if (n_actual >= planned->instances()) return planned;
    const int d = n_actual / planned->stages;
    if (d >= 1) return ParallelConfig{d, planned->stages};
  }
  // Not even one pipeline of the planned depth fits: deepest feasible
  // single pipeline, if any.
  for (int p = n_actual; p >= 1; --p)
    if (depth_feasible(p, w)) return ParallelConfig{1, p};
  return std::nullopt;
}

namespace {

constexpr uint64_t kPlacementStream = 0xD00D;
constexpr uint64_t kShuffleStream = 0x5AFE;

// Tracks which sample indices of the current epoch are committed, so
// rollbacks can return exactly the right samples to the pending pool.
class SampleManager {
 public:
  SampleManager(int epoch_samples, uint64_t seed)
      : epoch_samples_(epoch_samples), seed_(seed), seen_(epoch_samples, 0) {
    refill();
  }

  // Draws `count` samples and records them as committed in `out`.
  void commit(long long count, std::vector<int>& out, bool& accounting_ok) {
    for (long long i = 0; i < count; ++i) {
      if (pending_.empty()) refill();
      const int idx = pending_.back();
      pending_.pop_back();
      if (seen_[idx]) accounting_ok = false;
      seen_[idx] = 1;
      ++committed_in_epoch_;
      out.push_back(idx);
      if (committed_in_epoch_ == epoch_samples_) finish_epoch(accounting_ok);
    }
  }

  void revoke(const std::vector<int>& samples) {
    for (int idx : samples) {
      if (!seen_[idx]) {
        // The epoch that contained this sample already closed; the revoked
        // work is wasted time but sample accounting restarts per epoch.
        continue;
      }
      seen_[idx] = 0;
      --committed_in_epoch_;
      pending_.push_back(idx);
    }
  }

  int epochs_completed() const { return epochs_completed_; }

 private:
  void refill() {
    pending_.resize(epoch_samples_);
    std::iota(pending_.begin(), pending_.end(), 0);
    Rng rng(mix_seed(seed_, kShuffleStream, static_cast<uint64_t>(epochs_completed_)));
    shuffle(pending_, rng);
  }

  void finish_epoch(bool& accounting_ok) {
    for (uint8_t s : seen_) accounting_ok &= (s == 1);
    std::fill(seen_.begin(), seen_.end(), 0);
    committed_in_epoch_ = 0;
    ++epochs_completed_;
    refill();
  }

  int epoch_samples_;
  uint64_t seed_;
  std::vector<uint8_t> seen_;
  std::vector<int> pending_;
  int committed_in_epoch_ = 0;
  int epochs_completed_ = 0;
};

struct CommitRecord {
  std::vector<int> samples;
  double seconds = 0.0;  // instance-seconds spent computing them
};

}  // namespace

SimReport run(const IntervalSeries& series, const WorkloadProfile& w, const Policy& policy,
              uint64_t seed, const SimOptions& options, Planner* shared_planner) {
  if (series.empty()) throw std::invalid_argument("run: empty series");
  const double T = series.interval_seconds;
  const int B = w.minibatch_size;
  const int epoch_samples = options.epoch_samples > 0 ? options.epoch_samples : 64 * B;

  PlannerOptions popt = options.planner;
  popt.interval_s = T;
  popt.rollback_penalty_s = policy.checkpoint.restore_cost_s;
  Planner local_planner(w, options.costs, popt);
  Planner& planner = shared_planner ? *shared_planner : local_planner;
  const bool needs_plan = policy.kind == PolicyKind::proactive || policy.kind == PolicyKind::ideal;

  SimReport report;
  report.policy = to_string(policy.kind);
  report.seed = seed;
  report.intervals.reserve(series.size());

  SampleManager samples(epoch_samples, seed);
  std::vector<CommitRecord> commits_by_interval(series.size());

  std::optional<ParallelConfig> cfg;  // active configuration, nullopt = suspended
  int alive = 0;
  std::optional<ParallelConfig> planned_next;
  std::vector<int> history;
  int last_save_interval = 0;  // checkpoint policy

  auto revoke_interval = [&](int j, IntervalLog& log_j) {
    CommitRecord& rec = commits_by_interval[j];
    if (rec.samples.empty()) return;
    samples.revoke(rec.samples);
    log_j.rolled_back += static_cast<long long>(rec.samples.size());
    log_j.committed -= static_cast<long long>(rec.samples.size());
    const double moved = std::min(rec.seconds, log_j.ledger.effective_s);
    log_j.ledger.effective_s -= moved;
    log_j.ledger.wasted_rollback_s += moved;
    rec.samples.clear();
    rec.seconds = 0.0;
  };

  for (size_t i = 0; i < series.size(); ++i) {
    const int n = series.counts[i];
    const int k_dead = std::max(0, alive - n);
    const int fresh = std::max(0, n - alive);

    // The trace fixes how many instances die; which ones is uniform among
    // the currently allocated, drawn from a per-interval stream so every
    // policy under the same seed sees the same draw.
    std::vector<int> dead;
    if (k_dead > 0) {
      Rng rng(mix_seed(seed, kPlacementStream, static_cast<uint64_t>(i)));
      dead = sample_distinct(alive, k_dead, rng);
    }

    std::vector<int> survivors;  // per stage of the outgoing config
    bool stage_wiped = false;
    if (cfg) {
      survivors.assign(cfg->stages, cfg->pipelines);
      for (int idx : dead)
        if (idx < cfg->instances()) --survivors[idx % cfg->stages];
      for (int s : survivors) stage_wiped |= (s == 0);
    }

    // Target configuration for this interval.
    std::optional<ParallelConfig> target;
    switch (policy.kind) {
      case PolicyKind::reactive:
      case PolicyKind::checkpoint:
        target = reactive_plan(n, w);
        break;
      case PolicyKind::redundancy: {
        const int d = n / policy.redundancy.fixed_stages;
        if (d >= 1 && depth_feasible(policy.redundancy.fixed_stages, w))
          target = ParallelConfig{d, policy.redundancy.fixed_stages};
        break;
      }
      case PolicyKind::proactive:
      case PolicyKind::ideal:
        target = (i == 0) ? reactive_plan(n, w) : adjust_config(planned_next, n, w);
        break;
    }

    IntervalLog log;
    log.interval = static_cast<int>(i);
    log.available = n;

    // Rollback detection. The in-memory checkpoint is one interval old, so
    // losing a whole stage revokes the previous interval's commits; the
    // checkpoint baseline instead rolls back to its last periodic save on
    // any preemption.
    bool rollback_event = false;
    double restore_due_s = 0.0;
    if (policy.kind == PolicyKind::checkpoint) {
      if (k_dead > 0 && i > 0) {
        rollback_event = true;
        for (size_t j = static_cast<size_t>(last_save_interval); j < i; ++j)
          revoke_interval(static_cast<int>(j), report.intervals[j]);
      }
    } else if (policy.kind != PolicyKind::redundancy) {
      if (cfg && stage_wiped && i > 0) {
        rollback_event = true;
        revoke_interval(static_cast<int>(i - 1), report.intervals[i - 1]);
        restore_due_s = policy.checkpoint.restore_cost_s;
      }
    }
    if (rollback_event) ++report.rollback_events;

    // Migration cost into the target.
    double mig_due_s = 0.0;
    MigrationKind mig_kind = MigrationKind::none;
    if (i > 0 && target && policy.kind != PolicyKind::redundancy &&
        policy.kind != PolicyKind::checkpoint) {
      if (!cfg || stage_wiped) {
        mig_due_s = resume_cost(*target, w, options.costs);
        mig_kind = MigrationKind::pipeline;
      } else {
        TransitionOutcome tr = transition_outcome(survivors, *cfg, *target, fresh, w, options.costs);
        mig_due_s = tr.cost_s;
        mig_kind = tr.kind;
      }
    }

    double save_due_s = 0.0;
    double restart_due_s = 0.0;
    if (policy.kind == PolicyKind::checkpoint && target && i > 0) {
      if (rollback_event) restart_due_s = policy.checkpoint.restart_cost_s;
      if (static_cast<int>(i) - last_save_interval >= policy.checkpoint.period_intervals) {
        save_due_s = policy.checkpoint.save_cost_s;
        last_save_interval = static_cast<int>(i);
      }
    }
    if (policy.kind == PolicyKind::checkpoint && rollback_event)
      last_save_interval = static_cast<int>(i);  // resume point after restart

    if (target) {
      double avail = T;
      const double mig_s = std::min(avail, mig_due_s);
      avail -= mig_s;
      const double restore_s = std::min(avail, restore_due_s);
      avail -= restore_s;
      const double restart_s = std::min(avail, restart_due_s);
      avail -= restart_s;
      const double save_s = std::min(avail, save_due_s);
      avail -= save_s;
      const double t_eff = avail;

      double rate = throughput(*target, w);
      if (policy.kind == PolicyKind::redundancy) rate *= policy.redundancy.slowdown_factor;
      const long long mb = rate > 0 ? static_cast<long long>(std::floor(rate * t_eff / B)) : 0;
      const long long committed = mb * B;

      CommitRecord& rec = commits_by_interval[i];
      samples.commit(committed, rec.samples, report.sample_accounting_ok);
      const int active = target->instances();
      rec.seconds = rate > 0 ? static_cast<double>(committed) / rate * active : 0.0;

      log.pipelines = target->pipelines;
      log.stages = target->stages;
      log.throughput = rate;
      log.committed = committed;
      log.migration = mig_kind;
      log.ledger.effective_s = t_eff * active;
      log.ledger.migration_s = mig_s * active;
      log.ledger.checkpoint_s = (save_s + restart_s) * active;
      log.ledger.wasted_rollback_s = restore_s * active;
      log.ledger.idle_s = (n - active) * T;
    } else {
      ++report.suspended_intervals;
      log.ledger.idle_s = static_cast<double>(n) * T;
    }

    report.intervals.push_back(log);
    cfg = target;
    alive = n;
    history.push_back(n);

    if (needs_plan) {
      const int lookahead = std::max(1, policy.lookahead);
      std::vector<int> n_seq;
      n_seq.reserve(lookahead + 1);
      n_seq.push_back(n);
      if (policy.kind == PolicyKind::ideal) {
        for (int j = 1; j <= lookahead; ++j) {
          const size_t t = i + j;
          n_seq.push_back(t < series.size() ? series.counts[t] : series.counts.back());
        }
      } else {
        ForecastConfig fc;
        fc.history_len = std::max(3, policy.history);
        fc.lookahead = lookahead;
        fc.capacity = series.capacity;
        std::vector<int> h = history;
        while (static_cast<int>(h.size()) < fc.history_len)
          h.insert(h.begin(), history.front());
        Forecast f = predict(h, fc, policy.method);
        for (int v : f.values) n_seq.push_back(v);
      }
      std::vector<PlanStep> plan = planner.dp_optimize(cfg, n_seq);
      planned_next = plan.front().config;
    }
  }

  // Totals.
  for (const IntervalLog& log : report.intervals) {
    report.committed_samples += log.committed;
    report.ledger.effective_s += log.ledger.effective_s;
    report.ledger.migration_s += log.ledger.migration_s;
    report.ledger.checkpoint_s += log.ledger.checkpoint_s;
    report.ledger.wasted_rollback_s += log.ledger.wasted_rollback_s;
    report.ledger.idle_s += log.ledger.idle_s;
  }
  report.wall_time_s = static_cast<double>(series.size()) * T;
  report.instance_seconds = integrate_instance_seconds(series);
  report.instance_hours = report.instance_seconds / 3600.0;
  report.spot_cost = w.spot_price_per_hour * report.instance_hours;
  report.ondemand_cost = w.ondemand_price_per_hour * report.instance_hours;
  if (report.committed_samples > 0)
    report.cost_per_sample = report.spot_cost / static_cast<double>(report.committed_samples);
  report.epochs_completed = samples.epochs_completed();
  return report;
}

}  // namespace spotsim
