#include "spotsim/io.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace spotsim {

using nlohmann::json;

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open file: " + path);
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write file: " + path);
  return out;
}

json load_json(const std::string& path) {
  std::ifstream in = open_input(path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("malformed JSON in " + path + ": " + e.what());
  }
  return j;
}

double require_number(const json& j, const char* field, const std::string& path) {
  if (!j.contains(field) || !j[field].is_number())
    throw IoError("profile " + path + ": missing or non-numeric field '" + field + "'");
  return j[field].get<double>();
}

}  // namespace

EventTrace read_event_csv(const std::string& path) {
  std::ifstream in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty event trace: " + path);
  if (line != "timestamp_s,kind,instance_id")
    throw IoError("bad event trace header in " + path + ": " + line);
  EventTrace trace;
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 3)
      throw IoError(path + ":" + std::to_string(lineno) + ": expected 3 fields");
    TraceEvent ev;
    ev.timestamp_s = std::stod(fields[0]);
    if (fields[1] == "preempt")
      ev.kind = EventKind::preempt;
    else if (fields[1] == "allocate")
      ev.kind = EventKind::allocate;
    else
      throw IoError(path + ":" + std::to_string(lineno) + ": bad kind '" + fields[1] + "'");
    ev.instance_id = fields[2];
    trace.events.push_back(std::move(ev));
  }
  return trace;
}

void write_event_csv(const std::string& path, const EventTrace& trace) {
  std::ofstream out = open_output(path);
  out << "timestamp_s,kind,instance_id\n";
  for (const TraceEvent& ev : trace.events)
    out << ev.timestamp_s << ','
        << (ev.kind == EventKind::preempt ? "preempt" : "allocate") << ',' << ev.instance_id
        << '\n';
}

IntervalSeries read_interval_csv(const std::string& path, std::optional<double> interval_seconds,
                                 std::optional<int> capacity) {
  std::ifstream in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty interval series: " + path);
  if (line != "interval_index,num_available")
    throw IoError("bad interval series header in " + path + ": " + line);
  IntervalSeries series;
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 2)
      throw IoError(path + ":" + std::to_string(lineno) + ": expected 2 fields");
    series.counts.push_back(std::stoi(fields[1]));
  }

  const std::string meta_path = path + ".meta.json";
  if (std::filesystem::exists(meta_path)) {
    json meta = load_json(meta_path);
    if (meta.contains("interval_seconds")) series.interval_seconds = meta["interval_seconds"];
    if (meta.contains("capacity")) series.capacity = meta["capacity"];
  }
  if (interval_seconds) series.interval_seconds = *interval_seconds;
  if (capacity) series.capacity = *capacity;
  if (series.capacity <= 0)
    series.capacity = series.counts.empty()
                          ? 1
                          : *std::max_element(series.counts.begin(), series.counts.end());
  return series;
}

void write_interval_csv(const std::string& path, const IntervalSeries& series) {
  std::ofstream out = open_output(path);
  out << "interval_index,num_available\n";
  for (size_t i = 0; i < series.counts.size(); ++i) out << i << ',' << series.counts[i] << '\n';
  json meta = {{"interval_seconds", series.interval_seconds}, {"capacity", series.capacity}};
  open_output(path + ".meta.json") << meta.dump(2) << '\n';
}

WorkloadProfile read_profile_json(const std::string& path) {
  json j = load_json(path);
  WorkloadProfile w;
  w.name = j.value("name", std::filesystem::path(path).stem().string());
  w.compute_per_microbatch_s = require_number(j, "compute_per_microbatch_s", path);
  w.param_bytes = require_number(j, "param_bytes", path);
  w.activation_bytes = j.value("activation_bytes", 0.0);
  w.minibatch_size = static_cast<int>(require_number(j, "minibatch_size", path));
  w.microbatch_size = static_cast<int>(require_number(j, "microbatch_size", path));
  if (w.microbatch_size < 1 || w.minibatch_size < 1 ||
      w.minibatch_size % w.microbatch_size != 0)
    throw IoError("profile " + path + ": microbatch_size must divide minibatch_size");
  w.device_memory_bytes = require_number(j, "device_memory_bytes", path);
  if (!j.contains("memory"))
    throw IoError("profile " + path + ": missing field 'memory'");
  w.memory.fixed_bytes = require_number(j["memory"], "fixed_bytes", path);
  w.memory.per_stage_bytes = require_number(j["memory"], "per_stage_bytes", path);
  w.alpha_s = j.value("alpha_s", 0.0);
  w.beta_s_per_byte = j.value("beta_s_per_byte", 0.0);
  w.spot_price_per_hour = j.value("spot_price_per_hour", 0.0);
  w.ondemand_price_per_hour = j.value("ondemand_price_per_hour", 0.0);
  if (j.contains("pipeline_rates")) {
    for (auto& [key, value] : j["pipeline_rates"].items())
      w.pipeline_rates[std::stoi(key)] = value.get<double>();
  }
  return w;
}

void write_profile_json(const std::string& path, const WorkloadProfile& w) {
  json j;
  j["name"] = w.name;
  j["compute_per_microbatch_s"] = w.compute_per_microbatch_s;
  j["param_bytes"] = w.param_bytes;
  j["activation_bytes"] = w.activation_bytes;
  j["minibatch_size"] = w.minibatch_size;
  j["microbatch_size"] = w.microbatch_size;
  j["device_memory_bytes"] = w.device_memory_bytes;
  j["memory"] = {{"fixed_bytes", w.memory.fixed_bytes},
                 {"per_stage_bytes", w.memory.per_stage_bytes}};
  j["alpha_s"] = w.alpha_s;
  j["beta_s_per_byte"] = w.beta_s_per_byte;
  j["spot_price_per_hour"] = w.spot_price_per_hour;
  j["ondemand_price_per_hour"] = w.ondemand_price_per_hour;
  if (!w.pipeline_rates.empty()) {
    json rates;
    for (auto [p, r] : w.pipeline_rates) rates[std::to_string(p)] = r;
    j["pipeline_rates"] = rates;
  }
  open_output(path) << j.dump(2) << '\n';
}

CostTable read_cost_json(const std::string& path) {
  json j = load_json(path);
  CostTable c;
  c.start_process_s = j.value("start_process_s", c.start_process_s);
  c.rendezvous_s = j.value("rendezvous_s", c.rendezvous_s);
  c.cuda_context_s = j.value("cuda_context_s", c.cuda_context_s);
  c.load_data_s = j.value("load_data_s", c.load_data_s);
  c.build_model_s = j.value("build_model_s", c.build_model_s);
  c.update_comm_groups_s = j.value("update_comm_groups_s", c.update_comm_groups_s);
  return c;
}

namespace {

json ledger_json(const Ledger& l) {
  return {{"effective_s", l.effective_s},
          {"migration_s", l.migration_s},
          {"checkpoint_s", l.checkpoint_s},
          {"wasted_rollback_s", l.wasted_rollback_s},
          {"idle_s", l.idle_s}};
}

}  // namespace

std::string report_to_json(const SimReport& r) {
  json j;
  j["policy"] = r.policy;
  j["seed"] = r.seed;
  j["committed_samples"] = r.committed_samples;
  j["wall_time_s"] = r.wall_time_s;
  j["ledger"] = ledger_json(r.ledger);
  j["instance_seconds"] = r.instance_seconds;
  j["instance_hours"] = r.instance_hours;
  j["spot_cost"] = r.spot_cost;
  j["ondemand_cost"] = r.ondemand_cost;
  if (r.cost_per_sample)
    j["cost_per_sample"] = *r.cost_per_sample;
  else
    j["cost_per_sample"] = nullptr;
  j["epochs_completed"] = r.epochs_completed;
  j["rollback_events"] = r.rollback_events;
  j["suspended_intervals"] = r.suspended_intervals;
  j["sample_accounting_ok"] = r.sample_accounting_ok;
  json intervals = json::array();
  for (const IntervalLog& log : r.intervals) {
    intervals.push_back({{"interval", log.interval},
                         {"available", log.available},
                         {"pipelines", log.pipelines},
                         {"stages", log.stages},
                         {"throughput", log.throughput},
                         {"committed", log.committed},
                         {"rolled_back", log.rolled_back},
                         {"migration", to_string(log.migration)},
                         {"ledger", ledger_json(log.ledger)}});
  }
  j["intervals"] = std::move(intervals);
  return j.dump(2);
}

void write_report_json(const std::string& path, const SimReport& report) {
  open_output(path) << report_to_json(report) << '\n';
}

void write_interval_log_csv(const std::string& path, const SimReport& r) {
  std::ofstream out = open_output(path);
  out << "interval,N,D,P,throughput,commits,migration_kind,effective_s,migration_s,"
         "checkpoint_s,wasted_rollback_s,idle_s,rolled_back\n";
  for (const IntervalLog& log : r.intervals) {
    out << log.interval << ',' << log.available << ',' << log.pipelines << ',' << log.stages
        << ',' << log.throughput << ',' << log.committed << ',' << to_string(log.migration) << ','
        << log.ledger.effective_s << ',' << log.ledger.migration_s << ','
        << log.ledger.checkpoint_s << ',' << log.ledger.wasted_rollback_s << ','
        << log.ledger.idle_s << ',' << log.rolled_back << '\n';
  }
}

std::string plan_to_json(const std::vector<PlanStep>& plan) {
  json steps = json::array();
  for (const PlanStep& s : plan) {
    json step;
    step["interval_index"] = s.interval_index;
    if (s.config) {
      step["pipelines"] = s.config->pipelines;
      step["stages"] = s.config->stages;
    } else {
      step["suspended"] = true;
    }
    step["expected_committed"] = s.expected_committed;
    step["expected_mig_cost_s"] = s.expected_mig_cost_s;
    steps.push_back(std::move(step));
  }
  return json{{"plan", steps}}.dump(2);
}

}  // namespace spotsim
