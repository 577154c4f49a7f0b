#include "spotsim/trace.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "spotsim/rng.hpp"

namespace spotsim {

IntervalSeries to_interval_series(const EventTrace& trace, double interval_seconds, int capacity) {
  if (interval_seconds <= 0) throw TraceError("interval_seconds must be positive");
  if (capacity <= 0) throw TraceError("capacity must be positive");

  IntervalSeries out;
  out.interval_seconds = interval_seconds;
  out.capacity = capacity;
  if (trace.events.empty()) return out;

  const size_t last_interval =
      static_cast<size_t>(std::floor(trace.events.back().timestamp_s / interval_seconds));
  out.counts.assign(last_interval + 1, 0);

  std::unordered_set<std::string> alive;
  double prev_ts = trace.events.front().timestamp_s;
  size_t cursor = 0;  // next interval whose count is still open
  for (const TraceEvent& ev : trace.events) {
    if (ev.timestamp_s < prev_ts) throw TraceError("event timestamps must be non-decreasing");
    prev_ts = ev.timestamp_s;
    const size_t interval = static_cast<size_t>(std::floor(ev.timestamp_s / interval_seconds));
    // Close every interval that ended before this event.
    for (; cursor < interval; ++cursor) out.counts[cursor] = static_cast<int>(alive.size());
    if (ev.kind == EventKind::allocate) {
      if (!alive.insert(ev.instance_id).second)
        throw TraceError("instance allocated while present: " + ev.instance_id);
      if (static_cast<int>(alive.size()) > capacity)
        throw TraceError("instance count exceeds capacity " + std::to_string(capacity));
    } else {
      if (alive.erase(ev.instance_id) == 0)
        throw TraceError("instance preempted while absent: " + ev.instance_id);
    }
  }
  for (; cursor < out.counts.size(); ++cursor) out.counts[cursor] = static_cast<int>(alive.size());
  return out;
}

std::vector<IntervalDelta> derive_deltas(const IntervalSeries& series) {
  if (series.empty()) throw TraceError("derive_deltas: empty series");
  std::vector<IntervalDelta> deltas(series.size());
  deltas[0] = {series.counts[0], 0};
  for (size_t i = 1; i < series.size(); ++i) {
    const int diff = series.counts[i] - series.counts[i - 1];
    deltas[i] = {std::max(0, diff), std::max(0, -diff)};
  }
  return deltas;
}

TraceMetrics segment_metrics(const IntervalSeries& series) {
  if (series.empty()) throw TraceError("segment_metrics: empty series");
  TraceMetrics m;
  for (size_t i = 1; i < series.size(); ++i) {
    if (series.counts[i] < series.counts[i - 1]) ++m.preemption_events;
    if (series.counts[i] > series.counts[i - 1]) ++m.allocation_events;
  }
  m.avg_instances = std::accumulate(series.counts.begin(), series.counts.end(), 0.0) /
                    static_cast<double>(series.size());
  m.availability_class = (series.capacity > 0 && m.avg_instances / series.capacity > 0.70)
                             ? AvailabilityClass::high
                             : AvailabilityClass::low;
  return m;
}

namespace {

enum class Dir : uint8_t { preempt, allocate };

}  // namespace

IntervalSeries gen_synthetic(uint64_t seed, int capacity, int length, int preemption_events,
                             int allocation_events, int mag_lo, int mag_hi) {
  if (capacity <= 0) throw TraceError("gen_synthetic: capacity must be positive");
  if (length < 1) throw TraceError("gen_synthetic: length must be at least 1");
  if (preemption_events < 0 || allocation_events < 0)
    throw TraceError("gen_synthetic: negative event count");
  if (mag_lo < 1 || mag_hi < mag_lo || mag_lo > capacity)
    throw TraceError("gen_synthetic: bad magnitude range");
  const int events = preemption_events + allocation_events;
  if (events > length - 1) throw TraceError("gen_synthetic: events do not fit in length");

  if (allocation_events > 0 && preemption_events == 0 &&
      static_cast<long long>(allocation_events) * mag_lo > capacity)
    throw TraceError("gen_synthetic: allocations cannot fit under capacity");
  if (preemption_events > 0 && allocation_events == 0 &&
      static_cast<long long>(preemption_events) * mag_lo > capacity)
    throw TraceError("gen_synthetic: preemptions cannot fit under capacity");

  Rng rng(mix_seed(seed, 0x7a11));

  // Start the series where both event directions have room in proportion to
  // how many of each are requested; a full cluster cannot absorb gains.
  int start = capacity;
  if (allocation_events > 0) {
    if (preemption_events == 0) {
      start = std::max(0, capacity - allocation_events * mag_hi);
    } else {
      start = static_cast<int>(std::llround(static_cast<double>(capacity) * preemption_events /
                                            (preemption_events + allocation_events)));
    }
  }

  std::vector<int> positions = sample_distinct(length - 1, events, rng);
  for (int& p : positions) ++p;  // events never hit interval 0
  std::sort(positions.begin(), positions.end());

  // Tight requests can paint themselves into a corner; retry with a fresh
  // event interleaving (still seed-deterministic).
  for (int attempt = 0; attempt < 64; ++attempt) {
    std::vector<Dir> dirs(static_cast<size_t>(preemption_events), Dir::preempt);
    dirs.insert(dirs.end(), static_cast<size_t>(allocation_events), Dir::allocate);
    shuffle(dirs, rng);

    IntervalSeries out;
    out.interval_seconds = 60.0;
    out.capacity = capacity;
    out.counts.assign(length, start);

    bool ok = true;
    int level = start;
    for (size_t e = 0; e < dirs.size() && ok; ++e) {
      auto room = [&](Dir d) { return d == Dir::preempt ? level : capacity - level; };
      if (room(dirs[e]) < mag_lo) {
        // Stuck against a boundary: pull the next opposite-direction event
        // forward.
        size_t swap_with = e;
        for (size_t f = e + 1; f < dirs.size(); ++f) {
          if (dirs[f] != dirs[e]) {
            swap_with = f;
            break;
          }
        }
        if (swap_with == e) {
          ok = false;
          break;
        }
        std::swap(dirs[e], dirs[swap_with]);
      }
      const Dir d = dirs[e];
      int remaining_same = 0, remaining_opp = 0;
      for (size_t f = e + 1; f < dirs.size(); ++f)
        (dirs[f] == d ? remaining_same : remaining_opp) += 1;
      // Reserve enough room for later same-direction events; opposite events
      // only ever widen the room, so this can't strand the tail.
      int hi = std::min(mag_hi, room(d) - remaining_same * mag_lo);
      if (hi < mag_lo) hi = std::min(mag_hi, room(d));
      // Opposite-direction events consume the other side's room; make sure
      // this step opens enough of it (counting the later same-direction
      // steps that will open more).
      const int other_room = capacity - room(d);
      int lo = std::max(mag_lo,
                        remaining_opp * mag_lo - other_room - remaining_same * mag_lo);
      if (lo > hi || lo > room(d)) {
        ok = false;
        break;
      }
      const int mag = static_cast<int>(rng.between(lo, hi));
      level += (d == Dir::preempt) ? -mag : mag;
      for (int i = positions[e]; i < length; ++i) out.counts[i] = level;
    }
    if (!ok) continue;
    for (int c : out.counts) ok &= (c >= 0 && c <= capacity);
    if (!ok) continue;
    TraceMetrics check = segment_metrics(out);
    if (check.preemption_events != preemption_events ||
        check.allocation_events != allocation_events)
      continue;
    return out;
  }
  throw TraceError("gen_synthetic: infeasible request");
}

IntervalSeries gen_multigpu(const IntervalSeries& series, int gpus_per_instance) {
  if (gpus_per_instance < 1) throw TraceError("gen_multigpu: gpus_per_instance must be >= 1");
  if (gpus_per_instance == 1 || series.empty()) {
    IntervalSeries copy = series;
    return copy;
  }
  const int g = gpus_per_instance;
  std::vector<IntervalDelta> deltas = derive_deltas(series);
  IntervalSeries out;
  out.interval_seconds = series.interval_seconds;
  out.counts.resize(series.size());
  // A multi-GPU instance exists from the first allocation of its group of g
  // single-GPU allocations until the last preemption of its group, so
  // started allocation groups count and unfinished preemption groups don't.
  long long cum_alloc = 0, cum_preempt = 0;
  int max_count = 0;
  for (size_t i = 0; i < series.size(); ++i) {
    cum_alloc += deltas[i].allocated;
    cum_preempt += deltas[i].preempted;
    const long long started = (cum_alloc + g - 1) / g;
    const long long finished = cum_preempt / g;
    out.counts[i] = static_cast<int>(started - finished);
    max_count = std::max(max_count, out.counts[i]);
  }
  out.capacity = std::max((series.capacity + g - 1) / g, max_count);
  return out;
}

double integrate_instance_seconds(const IntervalSeries& series) {
  double total = 0.0;
  for (int c : series.counts) total += static_cast<double>(c) * series.interval_seconds;
  return total;
}

}  // namespace spotsim
