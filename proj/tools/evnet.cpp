// evnet: command-line front end for station, allocation and traffic studies.
//
//   evnet solve     --config single_station.json --sweep lambda=1:7:0.25
//   evnet allocate  --config seattle.json --case 2b --epsilon 0.05
//   evnet simulate  --config seattle.json --seed 42 --reps 30
//   evnet replay    out/simulate_manifest.json
//
// Exit codes: 0 success, 2 config error, 3 infeasible, 4 numerical failure,
// 1 anything else (I/O).

#include "evnet/allocation.hpp"
#include "evnet/economics.hpp"
#include "evnet/errors.hpp"
#include "evnet/metamodel.hpp"
#include "evnet/scenario.hpp"
#include "evnet/station_chain.hpp"
#include "evnet/traffic.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#ifndef EVNET_VERSION
#define EVNET_VERSION "dev"
#endif

namespace fs = std::filesystem;
using namespace evnet;
using json = nlohmann::json;

namespace {

enum Exit { kOk = 0, kOther = 1, kConfig = 2, kInfeasible = 3, kNumerical = 4 };

class numerical_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> reps;
  std::string out = "out";
  std::string case_name;
  std::optional<double> epsilon;
  std::string sweep;
  bool full_grid = false;
  bool relax_round = false;
  bool calibrate_weights = false;
  bool penalty_flow = false;
};

struct Run {
  std::string command;
  Options opt;
  Scenario scenario;
  fs::path out;
  std::vector<std::string> outputs;
  std::uint64_t seed = 0;
  int status = kOk;

  void emit(const std::string& name, const std::string& content) {
    write_atomic(out / name, content);
    outputs.push_back(name);
  }
};

std::string file_stem(const std::string& command) {
  std::string s = command;
  for (char& c : s)
    if (c == '-') c = '_';
  return s;
}

double finite(double v, const char* what) {
  if (!std::isfinite(v)) throw numerical_error(std::string("non-finite ") + what);
  return v;
}

std::string mix_label(const std::vector<double>& mix) {
  std::string s;
  for (std::size_t i = 0; i < mix.size(); ++i) {
    if (i) s += '/';
    s += fmt(mix[i]);
  }
  return s;
}

std::string slots_label(const std::vector<int>& slots) {
  std::string s;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (i) s += '/';
    s += fmt(slots[i]);
  }
  return s;
}

Range lambda_range(const Options& opt, Range fallback) {
  if (opt.sweep.empty()) return fallback;
  const auto eq = opt.sweep.find('=');
  if (eq == std::string::npos || opt.sweep.substr(0, eq) != "lambda")
    throw config_error("--sweep: expected lambda=lo:hi:step");
  return Range::parse(opt.sweep.substr(eq + 1));
}

// Plot file: first column x, one column per series, rows aligned on x.
std::string plot_table(const std::string& x_name, const std::vector<double>& xs,
                       const std::vector<std::pair<std::string, std::vector<double>>>& series) {
  std::vector<std::string> header{x_name};
  for (const auto& [name, _] : series) header.push_back(name);
  CsvWriter w(header);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    std::vector<std::string> row{fmt(xs[i])};
    for (const auto& [_, ys] : series) row.push_back(fmt(ys[i]));
    w.row(row);
  }
  return w.str();
}

std::vector<ServiceClass> pick_classes(const Scenario& sc, const std::vector<std::string>& names) {
  std::vector<ServiceClass> out;
  if (names.empty()) return sc.classes;
  for (const auto& n : names) out.push_back(sc.find_class(n));
  return out;
}

void cmd_solve(Run& run) {
  const auto section = run.scenario.solve.value_or(SolveSection{});
  const auto lambdas = lambda_range(run.opt, section.lambda).values();
  const auto classes = pick_classes(run.scenario, section.classes);
  CsvWriter table({"class", "S", "R", "mu", "nu", "lambda", "B", "erlang_b_S", "erlang_b_SR"});
  std::vector<std::pair<std::string, std::vector<double>>> series;
  for (const auto& c : classes) {
    for (int s : section.slots) {
      std::vector<double> curve;
      for (double lambda : lambdas) {
        const ClassPars p{lambda, c.service_rate, s, c.storage};
        const double b = finite(blocking_probability(p), "blocking probability");
        const double a = lambda / c.service_rate;
        table.row({c.name, fmt(s), fmt(c.storage.capacity), fmt(c.service_rate), fmt(c.storage.recharge_rate),
                   fmt(lambda), fmt(b), fmt(erlang_b(s, a)), fmt(erlang_b(s + c.storage.capacity, a))});
        curve.push_back(b);
      }
      series.emplace_back(c.name + "_S" + std::to_string(s), std::move(curve));
    }
  }
  run.emit("solve.csv", table.str());
  run.emit("solve_plot.csv", plot_table("lambda", lambdas, series));
}

struct PartitionPoint {
  std::vector<int> slots;
  std::vector<double> blocking;
  bool feasible = true;
};

PartitionPoint partition_at(const PartitionSection& p, std::size_t m, const std::vector<ServiceClass>& classes,
                            double lambda) {
  const ClassMix mix{p.mixes[m]};
  if (!p.fixed_slots.empty()) {
    PartitionPoint out{p.fixed_slots[m], {}, true};
    for (std::size_t c = 0; c < classes.size(); ++c) {
      const ClassPars pars{lambda * mix.shares[c], classes[c].service_rate, out.slots[c], classes[c].storage};
      out.blocking.push_back(blocking_probability(pars));
      out.feasible = out.feasible && out.blocking.back() <= p.epsilon;
    }
    return out;
  }
  const auto part = partition_station(p.slots, classes, mix, lambda, p.epsilon);
  return {part.slots, part.blocking, part.feasible};
}

const PartitionSection& require_partition(const Scenario& sc) {
  if (!sc.partition) throw config_error("/partition: section required by this command");
  return *sc.partition;
}

void cmd_partition(Run& run) {
  const auto& p = require_partition(run.scenario);
  const auto lambdas = lambda_range(run.opt, p.lambda).values();
  const auto classes = pick_classes(run.scenario, p.classes);
  CsvWriter table({"mix", "lambda", "class", "S", "lambda_class", "B", "station_B", "feasible"});
  std::vector<std::pair<std::string, std::vector<double>>> series;
  for (std::size_t m = 0; m < p.mixes.size(); ++m) {
    std::vector<double> curve;
    for (double lambda : lambdas) {
      const auto pt = partition_at(p, m, classes, lambda);
      double station = 0.0;
      for (std::size_t c = 0; c < classes.size(); ++c) station += p.mixes[m][c] * pt.blocking[c];
      finite(station, "blocking probability");
      for (std::size_t c = 0; c < classes.size(); ++c)
        table.row({mix_label(p.mixes[m]), fmt(lambda), classes[c].name, fmt(pt.slots[c]),
                   fmt(lambda * p.mixes[m][c]), fmt(pt.blocking[c]), fmt(station), pt.feasible ? "1" : "0"});
      curve.push_back(station);
    }
    series.emplace_back("B_" + mix_label(p.mixes[m]), std::move(curve));
  }
  run.emit("partition.csv", table.str());
  run.emit("partition_plot.csv", plot_table("lambda", lambdas, series));
}

void cmd_profit(Run& run) {
  const auto& p = require_partition(run.scenario);
  const auto& cost = run.scenario.require_cost();
  const auto lambdas = lambda_range(run.opt, p.lambda).values();
  const auto classes = pick_classes(run.scenario, p.classes);
  CostModel local;
  local.fixed_cost = cost.fixed_cost;
  for (const auto& c : classes) {
    local.revenue_grid.push_back(cost.revenue_grid[c.cost_index]);
    local.revenue_storage.push_back(cost.revenue_storage[c.cost_index]);
    local.blocking_cost.push_back(cost.blocking_cost[c.cost_index]);
    local.acquisition_cost.push_back(cost.acquisition_cost[c.cost_index]);
  }
  const auto mode = run.opt.penalty_flow ? PenaltyMode::blocked_flow : PenaltyMode::state_weighted;
  CsvWriter table({"mix", "lambda", "slots", "grid_revenue", "storage_revenue", "capital_cost", "blocking_penalty",
                   "net"});
  std::vector<std::pair<std::string, std::vector<double>>> series;
  for (std::size_t m = 0; m < p.mixes.size(); ++m) {
    std::vector<double> curve;
    for (double lambda : lambdas) {
      const auto pt = partition_at(p, m, classes, lambda);
      std::vector<ClassSolution> sols;
      for (std::size_t c = 0; c < classes.size(); ++c)
        sols.push_back(solve_class({lambda * p.mixes[m][c], classes[c].service_rate, pt.slots[c], classes[c].storage}));
      const auto b = profit(sols, local, mode);
      table.row({mix_label(p.mixes[m]), fmt(lambda), slots_label(pt.slots), fmt(b.grid_revenue),
                 fmt(b.storage_revenue), fmt(b.capital_cost), fmt(b.blocking_penalty), fmt(finite(b.net, "profit"))});
      curve.push_back(b.net);
    }
    series.emplace_back("net_" + mix_label(p.mixes[m]), std::move(curve));
  }
  run.emit("profit.csv", table.str());
  run.emit("profit_plot.csv", plot_table("lambda", lambdas, series));
}

void cmd_fit_rsm(Run& run) {
  DesignGrid grid = run.opt.full_grid ? DesignGrid::full() : DesignGrid{};
  if (run.scenario.metamodel) {
    if (!run.opt.full_grid) grid.stride = run.scenario.metamodel->stride;
    grid.service_rate = run.scenario.metamodel->service_rate;
  }
  const auto samples = generate_samples(grid);
  const auto fit = fit_rsm(samples);

  // Published surface scored on the same samples.
  const auto published = RsmCoefficients::published();
  double ss_res = 0.0, ss_tot = 0.0, mean = 0.0;
  std::vector<double> y;
  for (const auto& s : samples) y.push_back(clamped_logit(s.blocking).value);
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double sq_prob = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double r = y[i] - rsm_logit(published, samples[i].x);
    ss_res += r * r;
    ss_tot += (y[i] - mean) * (y[i] - mean);
    const double d = samples[i].blocking - eval_rsm(published, samples[i].x);
    sq_prob += d * d;
  }
  const double n = static_cast<double>(samples.size());

  CsvWriter table({"source", "n_points", "clamped_points", "r_square_logit", "r_square_probability", "rmse_logit",
                   "rmse_probability"});
  table.row({"fitted", fmt(static_cast<long long>(fit.n_points)), fmt(static_cast<long long>(fit.clamped_points)),
             fmt(finite(fit.r_square_logit, "R-square")), fmt(fit.r_square_probability), fmt(fit.rmse_logit),
             fmt(fit.rmse_probability)});
  table.row({"published", fmt(static_cast<long long>(fit.n_points)), fmt(static_cast<long long>(fit.clamped_points)),
             fmt(1.0 - ss_res / ss_tot), "", fmt(std::sqrt(ss_res / n)), fmt(std::sqrt(sq_prob / n))});
  run.emit("fit_rsm.csv", table.str());
  run.emit("rsm_coefficients.csv", fit.coefficients.to_csv());
}

void report_violations(const AllocationResult& r, double epsilon) {
  for (const auto& s : r.stations)
    for (std::size_t c = 0; c < s.class_blocking.size(); ++c)
      if (s.class_blocking[c] > epsilon)
        std::fprintf(stderr, "infeasible: station %d class %s B=%.6f > epsilon %.6f (S=%d, lambda=%.6f)\n", s.id,
                     s.class_names[c].c_str(), s.class_blocking[c], epsilon, s.class_slots[c], s.class_arrival[c]);
}

void allocation_rows(CsvWriter& w, const AllocationResult& r, double epsilon, const std::string& prefix = {}) {
  auto row = [&](std::vector<std::string> cells) {
    if (!prefix.empty()) cells.insert(cells.begin(), prefix);
    w.row(std::move(cells));
  };
  for (const auto& s : r.stations)
    for (std::size_t c = 0; c < s.class_slots.size(); ++c)
      row({fmt(s.id), s.class_names[c], fmt(s.class_slots[c]), fmt(s.class_arrival[c]),
           fmt(finite(s.class_blocking[c], "blocking probability")), s.class_blocking[c] <= epsilon ? "1" : "0"});
  row({"total", "weighted", fmt(r.total_slots()), fmt(r.total_arrivals()), fmt(r.weighted_blocking),
       r.feasible ? "1" : "0"});
}

std::string resolve_case(const Run& run) {
  std::string c = run.opt.case_name.empty() ? run.scenario.require_allocation().case_name : run.opt.case_name;
  for (char& ch : c) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (c != "1" && c != "2a" && c != "2b" && c != "3") throw config_error("--case: expected 1 | 2a | 2b | 3");
  return c;
}

void cmd_allocate(Run& run) {
  const auto& section = run.scenario.require_allocation();
  NetworkSpec net = run.scenario.network();
  if (run.opt.epsilon) net.qos_epsilon = *run.opt.epsilon;
  const auto which = resolve_case(run);
  AllocationResult r;
  if (which == "1") {
    r = evaluate_fixed_slots(net, run.scenario.baseline_slots(), section.baseline_split);
  } else if (which == "2a") {
    if (run.opt.relax_round) {
      RelaxRoundOptions o;
      o.coefficients = run.scenario.coefficients();
      if (run.scenario.metamodel) o.metamodel_service_rate = run.scenario.metamodel->service_rate;
      r = allocate_power_relax_round(net, o);
    } else {
      r = allocate_power(net);
    }
  } else if (which == "2b") {
    r = allocate_power_and_arrivals(net);
  } else {
    if (section.small_area.empty()) throw config_error("/allocation/small_area: required for case 3");
    const auto rates = run.scenario.base_rates();
    double routed = 0.0;
    for (int id : section.small_area)
      for (std::size_t i = 0; i < net.stations.size(); ++i)
        if (net.stations[i].id == id) routed += rates[i];
    r = allocate_small_area(net, section.small_area, routed);
  }
  finite(r.weighted_blocking, "weighted blocking");
  CsvWriter table({"station_id", "class", "S", "lambda", "B", "feasible"});
  allocation_rows(table, r, net.qos_epsilon);
  run.emit("allocate.csv", table.str());
  if (!r.feasible) {
    report_violations(r, net.qos_epsilon);
    run.status = kInfeasible;
  }
}

void cmd_min_power(Run& run) {
  const auto& section = run.scenario.require_allocation();
  std::vector<double> eps = section.sweep_epsilon.empty() ? std::vector<double>{section.epsilon} : section.sweep_epsilon;
  if (run.opt.epsilon) eps = {*run.opt.epsilon};
  std::vector<std::optional<double>> totals;
  for (double t : section.sweep_total) totals.emplace_back(t);
  if (totals.empty()) totals.emplace_back(std::nullopt);

  CsvWriter table({"epsilon", "total_arrivals", "slots_selfish", "slots_shaped", "savings"});
  std::vector<double> xs;
  std::map<double, std::pair<std::vector<double>, std::vector<double>>> by_eps;
  for (const auto& total : totals) {
    for (double e : eps) {
      NetworkSpec net = run.scenario.network(total);
      net.qos_epsilon = e;
      const auto row = power_savings(net);
      table.row({fmt(e), fmt(row.total_arrivals), fmt(row.slots_selfish), fmt(row.slots_shaped),
                 fmt(finite(row.savings, "savings"))});
      by_eps[e].first.push_back(row.slots_selfish);
      by_eps[e].second.push_back(row.slots_shaped);
      if (e == eps.front()) xs.push_back(row.total_arrivals);
    }
  }
  std::vector<std::pair<std::string, std::vector<double>>> series;
  for (const auto& [e, v] : by_eps) {
    series.emplace_back("selfish_eps" + fmt(e), v.first);
    series.emplace_back("shaped_eps" + fmt(e), v.second);
  }
  run.emit("min_power.csv", table.str());
  run.emit("min_power_plot.csv", plot_table("total_arrivals", xs, series));
}

json ci_json(const MeanCi& m) { return {{"mean", m.mean}, {"half_width", m.half_width}}; }

void cmd_simulate(Run& run) {
  const auto& section = run.scenario.require_simulation();
  SimConfig cfg = run.scenario.sim_config();
  IntensityConfig icfg = run.scenario.intensity_config();
  if (run.opt.seed) cfg.seed = icfg.seed = *run.opt.seed;
  if (run.opt.reps) cfg.replications = icfg.replications = *run.opt.reps;
  run.seed = cfg.seed;

  double wx = section.x_weight, wy = section.y_weight;
  const auto targets = run.scenario.target_shares();
  std::optional<WeightFit> fit;
  if (run.opt.calibrate_weights) {
    fit = calibrate_weights(icfg, SpatialModel::seattle(wx, wy), targets);
    wx = fit->x_weight;
    wy = fit->y_weight;
  }
  const auto intensities = estimate_intensities(icfg, SpatialModel::seattle(wx, wy));
  const auto report = simulate_network(cfg);

  CsvWriter shares({"station_id", "share_mean", "share_ci", "target_share"});
  for (std::size_t i = 0; i < intensities.ids.size(); ++i)
    shares.row({fmt(intensities.ids[i]), fmt(intensities.share[i].mean), fmt(intensities.share[i].half_width),
                fmt(targets[i])});

  CsvWriter table({"station_id", "share_mean", "share_ci", "blocking_mean", "blocking_ci", "served", "blocked"});
  json stations = json::array();
  for (std::size_t i = 0; i < report.stations.size(); ++i) {
    const auto& s = report.stations[i];
    table.row({fmt(s.id), fmt(s.share.mean), fmt(s.share.half_width), fmt(finite(s.blocking.mean, "blocking")),
               fmt(s.blocking.half_width), fmt(s.served), fmt(s.blocked)});
    const double exact = blocking_probability(cfg.stations[i].pars);
    stations.push_back({{"station_id", s.id},
                        {"share", ci_json(s.share)},
                        {"blocking", ci_json(s.blocking)},
                        {"exact_blocking", exact},
                        {"arrivals", s.arrivals},
                        {"served", s.served},
                        {"blocked", s.blocked}});
  }
  json summary = {{"seed", report.seed},
                  {"replications", report.replications},
                  {"horizon", cfg.horizon},
                  {"warmup_fraction", cfg.warmup_fraction},
                  {"empty", report.empty},
                  {"weighted_blocking", ci_json(report.weighted_blocking)},
                  {"spatial_weights", {{"x", wx}, {"y", wy}, {"calibrated", fit.has_value()}}},
                  {"stations", stations}};
  if (fit) summary["calibration_sse"] = fit->sse;
  run.emit("simulate.csv", table.str());
  run.emit("intensities.csv", shares.str());
  run.emit("simulate_summary.json", summary.dump(2) + "\n");
}

void cmd_compare(Run& run) {
  ComparisonInput in = run.scenario.comparison();
  if (run.opt.epsilon) in.network.qos_epsilon = *run.opt.epsilon;
  if (run.opt.penalty_flow) in.penalty = PenaltyMode::blocked_flow;
  const auto cases = compare_cases(in);
  CsvWriter table({"case", "total_slots", "total_arrivals", "weighted_blocking", "objective", "feasible", "net_profit"});
  CsvWriter detail({"case", "station_id", "class", "S", "lambda", "B", "feasible"});
  for (const auto& c : cases) {
    const auto& a = c.allocation;
    table.row({c.label, fmt(a.total_slots()), fmt(a.total_arrivals()), fmt(finite(a.weighted_blocking, "blocking")),
               fmt(a.objective), a.feasible ? "1" : "0", fmt(finite(c.net_profit, "profit"))});
    allocation_rows(detail, a, in.network.qos_epsilon, c.label);
    if (!a.feasible) {
      std::fprintf(stderr, "case %s:\n", c.label.c_str());
      report_violations(a, in.network.qos_epsilon);
    }
  }
  run.emit("compare.csv", table.str());
  run.emit("compare_allocations.csv", detail.str());
}

const std::map<std::string, std::function<void(Run&)>>& commands() {
  static const std::map<std::string, std::function<void(Run&)>> table{
      {"solve", cmd_solve},       {"partition", cmd_partition}, {"profit", cmd_profit},
      {"fit-rsm", cmd_fit_rsm},   {"allocate", cmd_allocate},   {"min-power", cmd_min_power},
      {"simulate", cmd_simulate}, {"compare", cmd_compare}};
  return table;
}

int execute(const std::string& command, const Options& opt, const std::vector<std::string>& arguments,
            const std::optional<std::string>& config_text) {
  const auto start = std::chrono::steady_clock::now();
  Run run;
  run.command = command;
  run.opt = opt;
  if (config_text) {
    run.scenario = parse_scenario(*config_text, opt.config.empty() ? "<manifest>" : opt.config);
    if (!opt.config.empty()) run.scenario.source_dir = fs::path(opt.config).parent_path();
  } else {
    run.scenario = load_scenario(opt.config);
  }
  if (run.scenario.simulation) run.seed = run.scenario.simulation->seed;
  run.out = opt.out;
  fs::create_directories(run.out);

  commands().at(command)(run);

  RunManifest m;
  m.command = command;
  m.arguments = arguments;
  m.config_path = opt.config;
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(run.scenario.canonical)));
  m.config_hash = hash;
  m.seed = run.seed;
  m.tool_version = EVNET_VERSION;
  m.outputs = run.outputs;
  m.config = run.scenario.canonical;
  m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_atomic(run.out / (file_stem(command) + "_manifest.json"), m.to_json());
  std::printf("%s: wrote %zu files to %s\n", command.c_str(), run.outputs.size() + 1, run.out.string().c_str());
  return run.status;
}

void add_options(CLI::App& app, Options& opt) {
  app.add_option("--config", opt.config, "Scenario file (JSON)")->required();
  app.add_option("--seed", opt.seed, "Random seed (simulate)");
  app.add_option("--reps", opt.reps, "Replications (simulate)")->check(CLI::Range(2, 100000));
  app.add_option("--out", opt.out, "Output directory")->capture_default_str();
  app.add_option("--case", opt.case_name, "Allocation case: 1 | 2a | 2b | 3");
  app.add_option("--epsilon", opt.epsilon, "QoS target on every class blocking probability")
      ->check(CLI::Range(0.0, 1.0));
  app.add_option("--sweep", opt.sweep, "Arrival sweep, lambda=lo:hi:step");
  app.add_flag("--full-grid", opt.full_grid, "Fit on the full design grid (fit-rsm)");
  app.add_flag("--relax-round", opt.relax_round, "Metamodel relaxation plus rounding (allocate, case 2a)");
  app.add_flag("--calibrate-weights", opt.calibrate_weights, "Fit spatial segment weights to target shares");
  app.add_flag("--penalty-flow", opt.penalty_flow, "Charge blocking by blocked-arrival flow (profit, compare)");
}

int run_cli(int argc, char** argv) {
  CLI::App app{"EV fast-charging network planner"};
  app.set_version_flag("--version", EVNET_VERSION);
  app.require_subcommand(1);

  const std::vector<std::pair<std::string, std::string>> help{
      {"solve", "Blocking probability of single stations over an arrival sweep"},
      {"partition", "Split a station's grid slots among customer classes"},
      {"profit", "Station profit over an arrival sweep"},
      {"fit-rsm", "Fit the quadratic blocking metamodel on the design grid"},
      {"allocate", "Network allocation for one case"},
      {"min-power", "Minimum grid slots for a QoS target, with and without arrival shaping"},
      {"simulate", "Traffic intensities and discrete-event simulation of the network"},
      {"compare", "Cases I, IIA, IIB and III on a matched slot budget"}};
  std::map<std::string, Options> opts;
  for (const auto& [name, text] : help) add_options(*app.add_subcommand(name, text), opts[name]);

  std::string manifest_path;
  std::string replay_out;
  auto* replay = app.add_subcommand("replay", "Re-run a command from its manifest");
  replay->add_option("manifest", manifest_path, "Manifest written by an earlier run")->required();
  replay->add_option("--out", replay_out, "Output directory (defaults to the recorded one)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  std::vector<std::string> arguments(argv + 1, argv + argc);
  if (replay->parsed()) {
    std::ifstream in(manifest_path);
    if (!in) throw config_error("cannot read " + manifest_path);
    json m;
    try {
      m = json::parse(in);
    } catch (const json::exception& e) {
      throw config_error(manifest_path + ": " + e.what());
    }
    if (!m.contains("command") || !m.contains("arguments") || !m.contains("config"))
      throw config_error(manifest_path + ": not a run manifest");
    auto recorded = m["arguments"].get<std::vector<std::string>>();
    if (!replay_out.empty()) {
      bool replaced = false;
      for (std::size_t i = 0; i < recorded.size(); ++i) {
        if (recorded[i] == "--out" && i + 1 < recorded.size()) {
          recorded[i + 1] = replay_out;
          replaced = true;
        } else if (recorded[i].rfind("--out=", 0) == 0) {
          recorded[i] = "--out=" + replay_out;
          replaced = true;
        }
      }
      if (!replaced) {
        recorded.push_back("--out");
        recorded.push_back(replay_out);
      }
    }
    std::vector<std::string> storage{"evnet"};
    storage.insert(storage.end(), recorded.begin(), recorded.end());
    std::vector<char*> args;
    for (auto& s : storage) args.push_back(s.data());
    CLI::App again{"replay"};
    const auto command = m["command"].get<std::string>();
    if (!commands().count(command)) throw config_error(manifest_path + ": unknown command " + command);
    Options o;
    add_options(*again.add_subcommand(command), o);
    again.require_subcommand(1);
    try {
      again.parse(static_cast<int>(args.size()), args.data());
    } catch (const CLI::ParseError& e) {
      throw config_error(manifest_path + ": recorded arguments do not parse: " + e.what());
    }
    return execute(command, o, recorded, m["config"].dump(2));
  }

  for (const auto& [name, _] : help)
    if (app.got_subcommand(name)) return execute(name, opts[name], arguments, std::nullopt);
  return kConfig;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const config_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const domain_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const infeasible_error& e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return kInfeasible;
  } catch (const degenerate_chain_error& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kNumerical;
  } catch (const singular_design_error& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kNumerical;
  } catch (const numerical_error& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kNumerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kOther;
  }
}
