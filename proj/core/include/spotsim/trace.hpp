#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace spotsim {

struct TraceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Instance availability at fixed interval granularity. counts[i] is the
// number of instances available during interval i; availability only
// changes at interval boundaries.
struct IntervalSeries {
  double interval_seconds = 60.0;
  int capacity = 0;
  std::vector<int> counts;

  size_t size() const { return counts.size(); }
  bool empty() const { return counts.empty(); }
};

enum class EventKind { preempt, allocate };

struct TraceEvent {
  double timestamp_s = 0.0;
  EventKind kind = EventKind::allocate;
  std::string instance_id;
};

// Raw allocation/preemption log, timestamps non-decreasing.
struct EventTrace {
  std::vector<TraceEvent> events;
};

enum class AvailabilityClass { high, low };

struct TraceMetrics {
  AvailabilityClass availability_class = AvailabilityClass::low;
  int preemption_events = 0;   // intervals with a net instance loss
  int allocation_events = 0;   // intervals with a net instance gain
  double avg_instances = 0.0;
};

// Per-interval (newly allocated, preempted) counts.
struct IntervalDelta {
  int allocated = 0;  // N+
  int preempted = 0;  // N-
};

// Discretizes an event log. Events are folded to the start of the interval
// that contains them; N_i is the instance count once interval i's events
// have been applied. Throws TraceError on out-of-order timestamps, unknown
// instance ids, double allocation, or counts above capacity.
IntervalSeries to_interval_series(const EventTrace& trace, double interval_seconds, int capacity);

// Deltas satisfying N_i = N_{i-1} + N_i+ - N_i-. The first interval is
// reported as (N_0, 0).
std::vector<IntervalDelta> derive_deltas(const IntervalSeries& series);

TraceMetrics segment_metrics(const IntervalSeries& series);

// Deterministic synthetic series with exactly the requested number of
// loss/gain intervals. Magnitudes are drawn from [mag_lo, mag_hi]. Throws
// TraceError when the request cannot be satisfied.
IntervalSeries gen_synthetic(uint64_t seed, int capacity, int length, int preemption_events,
                             int allocation_events, int mag_lo, int mag_hi);

// Folds every `gpus_per_instance` single-GPU events into one multi-GPU
// instance: allocated at the first allocation of its group, preempted at
// the last preemption of its group. Counts in the result are multi-GPU
// instances.
IntervalSeries gen_multigpu(const IntervalSeries& series, int gpus_per_instance);

// Total instance-seconds in a series (each count held for one interval).
double integrate_instance_seconds(const IntervalSeries& series);

}  // namespace spotsim
