#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "spotsim/io.hpp"
#include "spotsim/optimizer.hpp"
#include "spotsim/predictor.hpp"
#include "spotsim/simulator.hpp"
#include "spotsim/trace.hpp"

namespace spotsim::cli {

namespace fs = std::filesystem;

namespace {

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<uint64_t> parse_seeds(const std::string& spec) {
  std::vector<uint64_t> seeds;
  const auto dots = spec.find("..");
  if (dots != std::string::npos) {
    const uint64_t lo = std::stoull(spec.substr(0, dots));
    const uint64_t hi = std::stoull(spec.substr(dots + 2));
    if (hi < lo) throw InputError("bad seed range: " + spec);
    for (uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
    return seeds;
  }
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) seeds.push_back(std::stoull(tok));
  if (seeds.empty()) throw InputError("no seeds in: " + spec);
  return seeds;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(tok);
  return out;
}

// Accepts either file format by sniffing the header.
IntervalSeries load_trace(const std::string& path, std::optional<double> interval_s,
                          std::optional<int> capacity) {
  std::ifstream probe(path);
  if (!probe) throw InputError("cannot open trace file: " + path);
  std::string header;
  std::getline(probe, header);
  probe.close();
  if (header == "timestamp_s,kind,instance_id") {
    if (!capacity) throw InputError("event traces need --capacity: " + path);
    return to_interval_series(read_event_csv(path), interval_s.value_or(60.0), *capacity);
  }
  return read_interval_csv(path, interval_s, capacity);
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Trace-driven planner and simulator for training on preemptible instances"};
  app.require_subcommand(1);

  // Shared options.
  std::string trace_path, profile_path, cost_path, out_path;
  std::string policies_spec = "proactive,reactive";
  std::string seeds_spec = "1";
  std::string methods_spec = "arima,last_value";
  std::optional<double> interval_s;
  std::optional<int> capacity;
  int lookahead = 12, history = 12, mc_trials = 200;
  int epoch_samples = 0;
  int redundancy_stages = 0;
  double redundancy_slowdown = 0.75;
  int checkpoint_period = 5;

  auto add_trace_opts = [&](CLI::App* cmd, bool required) {
    auto* opt = cmd->add_option("--trace", trace_path, "interval or event trace CSV");
    if (required) opt->required();
    cmd->add_option("--interval-seconds", interval_s, "interval length override");
    cmd->add_option("--capacity", capacity, "cluster instance cap override");
  };

  // simulate ----------------------------------------------------------------
  auto* sim = app.add_subcommand("simulate", "replay policies against a trace");
  add_trace_opts(sim, true);
  sim->add_option("--profile", profile_path, "workload profile JSON")->required();
  sim->add_option("--policies", policies_spec, "comma list: proactive,ideal,reactive,checkpoint,redundancy");
  sim->add_option("--seeds", seeds_spec, "seed list 1,2,3 or range 1..5");
  sim->add_option("--lookahead", lookahead, "planning horizon I");
  sim->add_option("--history", history, "forecast history H");
  sim->add_option("--mc-trials", mc_trials, "scenario samples per transition");
  sim->add_option("--cost-table", cost_path, "migration cost JSON");
  sim->add_option("--epoch-samples", epoch_samples, "samples per epoch (0 = 64 minibatches)");
  sim->add_option("--redundancy-stages", redundancy_stages, "fixed depth for the redundancy policy");
  sim->add_option("--redundancy-slowdown", redundancy_slowdown, "redundancy throughput factor");
  sim->add_option("--checkpoint-period", checkpoint_period, "intervals between saves");
  sim->add_option("--out", out_path, "output directory")->required();

  // predict -----------------------------------------------------------------
  auto* pred = app.add_subcommand("predict", "sliding-window forecasts over a trace");
  add_trace_opts(pred, true);
  pred->add_option("--lookahead", lookahead, "forecast length I");
  pred->add_option("--history", history, "history window H");
  pred->add_option("--methods", methods_spec, "comma list of methods");
  pred->add_option("--out", out_path, "output CSV")->required();

  // optimize ----------------------------------------------------------------
  std::string current_spec;
  auto* opt = app.add_subcommand("optimize", "plan configurations for an availability sequence");
  add_trace_opts(opt, true);
  opt->add_option("--profile", profile_path, "workload profile JSON")->required();
  opt->add_option("--lookahead", lookahead, "planning horizon I");
  opt->add_option("--mc-trials", mc_trials, "scenario samples per transition");
  opt->add_option("--cost-table", cost_path, "migration cost JSON");
  opt->add_option("--current", current_spec, "starting config as D,P (default: throughput argmax)");
  opt->add_option("--out", out_path, "plan JSON path")->required();

  // gen-trace ---------------------------------------------------------------
  uint64_t gen_seed = 0;
  int gen_capacity = 32, gen_length = 60, gen_preempts = 0, gen_allocs = 0;
  int gen_lo = 1, gen_hi = 4;
  auto* gen = app.add_subcommand("gen-trace", "deterministic synthetic availability trace");
  gen->add_option("--seed", gen_seed, "generator seed")->required();
  gen->add_option("--capacity", gen_capacity, "instance cap");
  gen->add_option("--length", gen_length, "intervals");
  gen->add_option("--preemptions", gen_preempts, "loss intervals");
  gen->add_option("--allocations", gen_allocs, "gain intervals");
  gen->add_option("--min-mag", gen_lo, "min event magnitude");
  gen->add_option("--max-mag", gen_hi, "max event magnitude");
  gen->add_option("--out", out_path, "interval CSV path")->required();

  // compare -----------------------------------------------------------------
  std::string traces_spec;
  auto* cmp = app.add_subcommand("compare", "GPU-hour breakdown across traces and policies");
  cmp->add_option("--traces", traces_spec, "comma list of trace CSVs")->required();
  cmp->add_option("--profile", profile_path, "workload profile JSON")->required();
  cmp->add_option("--policies", policies_spec, "comma list of policies");
  cmp->add_option("--seeds", seeds_spec, "seed list or range");
  cmp->add_option("--lookahead", lookahead, "planning horizon I");
  cmp->add_option("--history", history, "forecast history H");
  cmp->add_option("--mc-trials", mc_trials, "scenario samples per transition");
  cmp->add_option("--cost-table", cost_path, "migration cost JSON");
  cmp->add_option("--interval-seconds", interval_s, "interval length override");
  cmp->add_option("--capacity", capacity, "cluster cap override");
  cmp->add_option("--out", out_path, "output directory")->required();

  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    auto make_policy = [&](const std::string& name, const WorkloadProfile& w) {
      Policy p;
      if (name == "proactive")
        p = Policy::Proactive(lookahead, PredictMethod::arima, history);
      else if (name == "ideal")
        p = Policy::Ideal(lookahead);
      else if (name == "reactive")
        p = Policy::Reactive();
      else if (name == "checkpoint")
        p = Policy::Checkpoint();
      else if (name == "redundancy") {
        int stages = redundancy_stages;
        if (stages == 0) {
          for (int d = 1; d <= 64 && stages == 0; ++d)
            if (depth_feasible(d, w)) stages = d;
          if (stages == 0) throw InputError("no feasible depth for redundancy policy");
        }
        p = Policy::Redundancy(stages, redundancy_slowdown);
      } else {
        throw InputError("unknown policy: " + name);
      }
      p.checkpoint.period_intervals = checkpoint_period;
      return p;
    };

    auto sim_options = [&]() {
      SimOptions o;
      o.epoch_samples = epoch_samples;
      o.planner.lookahead = lookahead;
      o.planner.mc_trials = mc_trials;
      if (!cost_path.empty()) o.costs = read_cost_json(cost_path);
      return o;
    };

    if (*sim || *cmp) {
      const WorkloadProfile w = read_profile_json(profile_path);
      const SimOptions options = sim_options();
      const std::vector<uint64_t> seeds = parse_seeds(seeds_spec);
      const std::vector<std::string> policy_names = split_list(policies_spec);
      if (policy_names.empty()) throw InputError("at least one policy is required");
      fs::create_directories(out_path);

      std::vector<std::string> trace_paths =
          *sim ? std::vector<std::string>{trace_path} : split_list(traces_spec);

      PlannerOptions popt = options.planner;
      Planner shared(w, options.costs, popt);

      std::ofstream breakdown;
      if (*cmp) {
        breakdown.open(fs::path(out_path) / "breakdown.csv");
        breakdown << "trace,policy,seed,committed,effective_s,migration_s,checkpoint_s,"
                     "wasted_rollback_s,idle_s,total_s,instance_seconds,spot_cost\n";
      }

      std::cout << std::left << std::setw(10) << "policy" << std::setw(8) << "seed"
                << std::setw(12) << "committed" << std::setw(12) << "spot_cost" << std::setw(14)
                << "$/sample" << "speedup\n";
      for (const std::string& tp : trace_paths) {
        const IntervalSeries series = load_trace(tp, interval_s, capacity);
        std::map<uint64_t, long long> baseline;
        for (const std::string& pname : policy_names) {
          const Policy policy = make_policy(pname, w);
          for (uint64_t seed : seeds) {
            SimReport r = run(series, w, policy, seed, options, &shared);
            const std::string stem =
                fs::path(tp).stem().string() + "_" + pname + "_seed" + std::to_string(seed);
            write_report_json((fs::path(out_path) / (stem + ".json")).string(), r);
            write_interval_log_csv((fs::path(out_path) / (stem + ".csv")).string(), r);
            if (!baseline.count(seed)) baseline[seed] = r.committed_samples;
            std::ostringstream cps;
            if (r.cost_per_sample)
              cps << std::scientific << std::setprecision(3) << *r.cost_per_sample;
            else
              cps << "n/a";
            const double speedup =
                baseline[seed] > 0
                    ? static_cast<double>(r.committed_samples) / baseline[seed]
                    : 0.0;
            std::cout << std::left << std::setw(10) << pname << std::setw(8) << seed
                      << std::setw(12) << r.committed_samples << std::setw(12) << std::fixed
                      << std::setprecision(4) << r.spot_cost << std::setw(14) << cps.str()
                      << std::setprecision(3) << speedup << "\n";
            if (*cmp) {
              breakdown << fs::path(tp).stem().string() << ',' << pname << ',' << seed << ','
                        << r.committed_samples << ',' << r.ledger.effective_s << ','
                        << r.ledger.migration_s << ',' << r.ledger.checkpoint_s << ','
                        << r.ledger.wasted_rollback_s << ',' << r.ledger.idle_s << ','
                        << r.ledger.total() << ',' << r.instance_seconds << ',' << r.spot_cost
                        << '\n';
            }
          }
        }
      }
      return 0;
    }

    if (*pred) {
      const IntervalSeries series = load_trace(trace_path, interval_s, capacity);
      ForecastConfig fc;
      fc.history_len = history;
      fc.lookahead = lookahead;
      fc.capacity = series.capacity;
      std::ofstream out(out_path);
      if (!out) throw InputError("cannot write: " + out_path);
      out << "window_start,method,l1";
      for (int j = 0; j < lookahead; ++j) out << ",pred_" << j;
      out << "\n";
      std::map<std::string, std::pair<double, int>> summary;
      for (size_t t = history; t + lookahead <= series.counts.size(); ++t) {
        std::vector<int> h(series.counts.begin() + (t - history), series.counts.begin() + t);
        std::vector<int> actual(series.counts.begin() + t, series.counts.begin() + t + lookahead);
        for (const std::string& mname : split_list(methods_spec)) {
          const Forecast f = predict(h, fc, parse_predict_method(mname));
          const double l1 = eval_l1(f, actual);
          out << t << ',' << mname << ',' << l1;
          for (int v : f.values) out << ',' << v;
          out << "\n";
          auto& [sum, count] = summary[mname];
          if (std::isfinite(l1)) {
            sum += l1;
            ++count;
          }
        }
      }
      for (const auto& [mname, agg] : summary)
        std::cout << mname << " mean normalized L1: "
                  << (agg.second ? agg.first / agg.second : 0.0) << "\n";
      return 0;
    }

    if (*opt) {
      const WorkloadProfile w = read_profile_json(profile_path);
      const IntervalSeries series = load_trace(trace_path, interval_s, capacity);
      if (series.empty()) throw InputError("empty availability sequence: " + trace_path);
      std::vector<int> n_seq;
      for (int j = 0; j <= lookahead; ++j) {
        const size_t t = std::min(static_cast<size_t>(j), series.counts.size() - 1);
        n_seq.push_back(series.counts[t]);
      }
      std::optional<ParallelConfig> current;
      if (!current_spec.empty()) {
        const auto parts = split_list(current_spec);
        if (parts.size() != 2) throw InputError("--current expects D,P");
        current = ParallelConfig{std::stoi(parts[0]), std::stoi(parts[1])};
        if (!feasible(*current, w))
          throw InputError("--current config is infeasible for this profile");
      } else {
        current = reactive_plan(n_seq[0], w);
      }
      SimOptions options = sim_options();
      PlannerOptions popt = options.planner;
      Planner planner(w, options.costs, popt);
      const std::vector<PlanStep> plan = planner.dp_optimize(current, n_seq);
      std::ofstream out(out_path);
      if (!out) throw InputError("cannot write: " + out_path);
      out << plan_to_json(plan) << "\n";
      for (const PlanStep& step : plan) {
        std::cout << "interval +" << step.interval_index << ": ";
        if (step.config)
          std::cout << step.config->pipelines << "x" << step.config->stages;
        else
          std::cout << "suspended";
        std::cout << "  E[committed]=" << step.expected_committed
                  << "  E[mig]=" << step.expected_mig_cost_s << "s\n";
      }
      return 0;
    }

    if (*gen) {
      const IntervalSeries s =
          gen_synthetic(gen_seed, gen_capacity, gen_length, gen_preempts, gen_allocs, gen_lo, gen_hi);
      write_interval_csv(out_path, s);
      const TraceMetrics m = segment_metrics(s);
      std::cout << "wrote " << out_path << ": " << s.counts.size() << " intervals, avg "
                << m.avg_instances << ", " << m.preemption_events << " preemption / "
                << m.allocation_events << " allocation events\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}

}  // namespace spotsim::cli
