#pragma once

#include <optional>
#include <string>
#include <vector>

#include "spotsim/migration.hpp"
#include "spotsim/optimizer.hpp"
#include "spotsim/perf_model.hpp"
#include "spotsim/simulator.hpp"
#include "spotsim/trace.hpp"

namespace spotsim {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Event trace CSV: header `timestamp_s,kind,instance_id`.
EventTrace read_event_csv(const std::string& path);
void write_event_csv(const std::string& path, const EventTrace& trace);

// Interval series CSV: header `interval_index,num_available`, with
// interval_seconds/capacity in a `<path>.meta.json` sidecar. Explicit
// arguments override the sidecar; without either, interval defaults to 60 s
// and capacity to the max count.
IntervalSeries read_interval_csv(const std::string& path,
                                 std::optional<double> interval_seconds = {},
                                 std::optional<int> capacity = {});
void write_interval_csv(const std::string& path, const IntervalSeries& series);

WorkloadProfile read_profile_json(const std::string& path);
void write_profile_json(const std::string& path, const WorkloadProfile& w);

// Missing fields keep their defaults.
CostTable read_cost_json(const std::string& path);

std::string report_to_json(const SimReport& report);
void write_report_json(const std::string& path, const SimReport& report);
void write_interval_log_csv(const std::string& path, const SimReport& report);

std::string plan_to_json(const std::vector<PlanStep>& plan);

}  // namespace spotsim
