#include "evnet/allocation.hpp"

#include "evnet/errors.hpp"
#include "evnet/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace evnet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// a is at least as good as b, up to summation-order noise.
bool no_worse(double a, double b) { return a <= b + 1e-12 * std::abs(b); }

double class_weight(Objective objective, double share, double class_lambda) {
  switch (objective) {
    case Objective::unweighted: return 1.0;
    case Objective::station_share: return share;
    case Objective::blocked_flow: return class_lambda;
  }
  return 1.0;
}

// Blocking of every class for s = 1..max_class_slots at one station arrival rate.
struct StationCurves {
  double lambda = 0.0;
  std::vector<double> share;
  std::vector<double> class_lambda;
  std::vector<std::vector<double>> blocking;  // [class][slots], index 0 unused
};

StationCurves compute_curves(const StationDemand& st, double lambda, int max_class_slots) {
  StationCurves out;
  out.lambda = lambda;
  for (std::size_t c = 0; c < st.class_count(); ++c) {
    out.share.push_back(st.mix.shares[c]);
    out.class_lambda.push_back(lambda * st.mix.shares[c]);
    std::vector<double> b(static_cast<std::size_t>(max_class_slots) + 1, kInf);
    for (int s = 1; s <= max_class_slots; ++s) b[static_cast<std::size_t>(s)] = blocking_probability(st.class_pars(c, s, lambda));
    out.blocking.push_back(std::move(b));
  }
  return out;
}

// Best class split for every station total s.
struct StationTable {
  std::vector<double> cost;              // [s], kInf when unusable
  std::vector<std::vector<int>> split;   // [s] -> per-class slots
};

StationTable make_table(const StationCurves& curves, int max_station_slots, double epsilon, Objective objective,
                        bool enforce_qos) {
  const std::size_t classes = curves.blocking.size();
  const auto width = static_cast<std::size_t>(max_station_slots) + 1;
  auto unit_cost = [&](std::size_t c, int s) {
    if (s < 1 || static_cast<std::size_t>(s) >= curves.blocking[c].size()) return kInf;
    const double b = curves.blocking[c][static_cast<std::size_t>(s)];
    if (enforce_qos && b > epsilon) return kInf;
    return class_weight(objective, curves.share[c], curves.class_lambda[c]) * b;
  };

  // suffix[c][t]: best cost of classes c.. using exactly t slots
  std::vector<std::vector<double>> suffix(classes + 1, std::vector<double>(width, kInf));
  suffix[classes][0] = 0.0;
  for (std::size_t c = classes; c-- > 0;)
    for (std::size_t t = 1; t < width; ++t)
      for (int s = 1; static_cast<std::size_t>(s) <= t; ++s) {
        const double rest = suffix[c + 1][t - static_cast<std::size_t>(s)];
        if (rest == kInf) continue;
        const double u = unit_cost(c, s);
        if (u == kInf) continue;
        suffix[c][t] = std::min(suffix[c][t], u + rest);
      }

  StationTable table;
  table.cost = suffix[0];
  table.split.resize(width);
  for (std::size_t total = 0; total < width; ++total) {
    if (table.cost[total] == kInf) continue;
    std::size_t left = total;
    std::vector<int> split;
    for (std::size_t c = 0; c < classes; ++c) {
      for (int s = 1; static_cast<std::size_t>(s) <= left; ++s) {
        const double u = unit_cost(c, s);
        const double rest = suffix[c + 1][left - static_cast<std::size_t>(s)];
        if (u == kInf || rest == kInf) continue;
        if (no_worse(u + rest, suffix[c][left])) {
          split.push_back(s);
          left -= static_cast<std::size_t>(s);
          break;
        }
      }
    }
    table.split[total] = std::move(split);
  }
  return table;
}

StationAllocation describe_station(const StationDemand& st, const StationCurves& curves, const std::vector<int>& split) {
  StationAllocation a;
  a.id = st.id;
  a.arrival_rate = curves.lambda;
  for (std::size_t c = 0; c < st.class_count(); ++c) {
    a.class_names.push_back(st.classes[c].name);
    a.class_slots.push_back(split[c]);
    a.class_arrival.push_back(curves.class_lambda[c]);
    const double b = curves.blocking[c][static_cast<std::size_t>(split[c])];
    a.class_blocking.push_back(b);
    a.blocking += st.mix.shares[c] * b;
  }
  return a;
}

void finish(AllocationResult& r, double epsilon) {
  std::vector<double> lambdas, blocking;
  r.feasible = true;
  for (const auto& s : r.stations) {
    lambdas.push_back(s.arrival_rate);
    blocking.push_back(s.blocking);
    for (double b : s.class_blocking)
      if (b > epsilon) r.feasible = false;
  }
  const double total = std::accumulate(lambdas.begin(), lambdas.end(), 0.0);
  r.weighted_blocking = total > 0.0 ? weighted_blocking(lambdas, blocking) : 0.0;
}

int max_station_slots(const NetworkSpec& spec, std::size_t i, int budget) {
  const auto& st = spec.stations[i];
  const int others = spec.min_slots() - static_cast<int>(st.class_count());
  int m = budget - others;
  if (st.slot_cap) m = std::min(m, *st.slot_cap);
  return m;
}

void check_budget(const NetworkSpec& spec, int budget) {
  if (budget < spec.min_slots())
    throw infeasible_error("slot budget " + std::to_string(budget) + " is below the " +
                           std::to_string(spec.min_slots()) + " (station, class) pairs that each need a slot");
  for (std::size_t i = 0; i < spec.stations.size(); ++i)
    if (max_station_slots(spec, i, budget) < static_cast<int>(spec.stations[i].class_count()))
      throw infeasible_error("station " + std::to_string(spec.stations[i].id) + " slot cap is below its class count");
}

// Per-station arrival-rate lattice lambda_min + k * step, k = 0..K.
struct Lattice {
  double step = 0.0;
  std::vector<std::vector<double>> points;  // [station][k]
  int units = 0;                            // required sum of k when conserving
  bool conserve = false;
};

Lattice make_lattice(const NetworkSpec& spec) {
  Lattice lat;
  double widest = 0.0;
  double floor_sum = 0.0;
  for (const auto& st : spec.stations) {
    widest = std::max(widest, st.box_max() - st.box_min());
    floor_sum += st.box_min();
  }
  lat.step = spec.lattice_step.value_or(widest > 0.0 ? widest / spec.lattice_divisions : 0.0);
  if (widest > 0.0 && !(lat.step > 0.0)) throw domain_error("lattice step must be > 0");

  lat.conserve = spec.conserve_arrivals;
  const double excess = spec.arrivals_total() - floor_sum;
  if (lat.conserve) {
    if (lat.step > 0.0 && excess > 0.0 && !spec.lattice_step) {
      // Shrink the step so the excess is a whole number of steps.
      lat.units = static_cast<int>(std::ceil(excess / lat.step - 1e-9));
      lat.step = excess / lat.units;
    } else if (lat.step > 0.0) {
      lat.units = static_cast<int>(std::lround(excess / lat.step));
    } else if (std::abs(excess) > 1e-9 * std::max(1.0, spec.arrivals_total())) {
      lat.units = -1;
    }
  }

  int capacity = 0;
  for (const auto& st : spec.stations) {
    const double lo = st.box_min();
    const double hi = st.box_max();
    const int k_max = lat.step > 0.0 ? static_cast<int>(std::floor((hi - lo) / lat.step + 1e-9)) : 0;
    std::vector<double> pts;
    for (int k = 0; k <= k_max; ++k) pts.push_back(std::min(hi, lo + k * lat.step));
    capacity += k_max;
    lat.points.push_back(std::move(pts));
  }
  if (lat.conserve && (lat.units < 0 || lat.units > capacity))
    throw infeasible_error("arrival lattice cannot reach the required total " + std::to_string(spec.arrivals_total()));
  return lat;
}

struct Option {
  int slots;
  int units;
  std::size_t point;
  double cost;
};

// Exact DP over (slots, lattice units). Options per station are listed in
// lexicographic (slots, lambda) order so the forward pass yields the
// lexicographically smallest optimum.
AllocationResult solve_lattice(const NetworkSpec& spec, int budget, const Lattice& lat) {
  check_budget(spec, budget);
  const std::size_t n = spec.stations.size();

  // Blocking curves for every (station, lattice point).
  std::vector<std::pair<std::size_t, std::size_t>> jobs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < lat.points[i].size(); ++k) jobs.emplace_back(i, k);
  std::vector<std::vector<StationCurves>> curves(n);
  for (std::size_t i = 0; i < n; ++i) curves[i].resize(lat.points[i].size());
  parallel_for(jobs.size(), [&](std::size_t j) {
    const auto [i, k] = jobs[j];
    const int per_class = max_station_slots(spec, i, budget) - static_cast<int>(spec.stations[i].class_count()) + 1;
    curves[i][k] = compute_curves(spec.stations[i], lat.points[i][k], per_class);
  });

  const int units = lat.conserve ? lat.units : 0;
  const auto width_b = static_cast<std::size_t>(budget) + 1;
  const auto width_d = static_cast<std::size_t>(units) + 1;

  for (bool enforce : {true, false}) {
    std::vector<std::vector<StationTable>> tables(n);
    std::vector<std::vector<Option>> options(n);
    for (std::size_t i = 0; i < n; ++i) {
      const int cap = max_station_slots(spec, i, budget);
      for (const auto& cv : curves[i]) tables[i].push_back(make_table(cv, cap, spec.qos_epsilon, spec.objective, enforce));
      for (int s = 1; s <= cap; ++s) {
        if (lat.conserve) {
          for (std::size_t k = 0; k < tables[i].size(); ++k) {
            const double c = tables[i][k].cost[static_cast<std::size_t>(s)];
            if (c != kInf) options[i].push_back({s, static_cast<int>(k), k, c});
          }
        } else {
          // Without a coupling constraint each station takes its best rate.
          std::size_t best = 0;
          double best_cost = kInf;
          for (std::size_t k = 0; k < tables[i].size(); ++k) {
            const double c = tables[i][k].cost[static_cast<std::size_t>(s)];
            if (c < best_cost && !no_worse(best_cost, c)) {
              best = k;
              best_cost = c;
            }
          }
          if (best_cost != kInf) options[i].push_back({s, 0, best, best_cost});
        }
      }
    }

    std::size_t nodes = 0;
    std::vector<std::vector<double>> g((n + 1) * width_b, std::vector<double>());
    auto cell = [&](std::size_t i, std::size_t b) -> std::vector<double>& { return g[i * width_b + b]; };
    for (std::size_t i = 0; i <= n; ++i)
      for (std::size_t b = 0; b < width_b; ++b) cell(i, b).assign(width_d, kInf);
    cell(n, 0)[0] = 0.0;
    for (std::size_t i = n; i-- > 0;)
      for (std::size_t b = 0; b < width_b; ++b)
        for (std::size_t d = 0; d < width_d; ++d) {
          double best = kInf;
          for (const auto& o : options[i]) {
            if (static_cast<std::size_t>(o.slots) > b || static_cast<std::size_t>(o.units) > d) continue;
            ++nodes;
            const double rest = cell(i + 1, b - static_cast<std::size_t>(o.slots))[d - static_cast<std::size_t>(o.units)];
            if (rest != kInf) best = std::min(best, o.cost + rest);
          }
          cell(i, b)[d] = best;
        }

    const double optimum = cell(0, width_b - 1)[width_d - 1];
    if (optimum == kInf) {
      if (enforce) continue;
      throw infeasible_error("no allocation satisfies the slot budget and arrival lattice");
    }

    AllocationResult r;
    r.lattice_step = lat.step;
    r.nodes_expanded = nodes;
    r.objective = optimum;
    std::size_t b = width_b - 1, d = width_d - 1;
    for (std::size_t i = 0; i < n; ++i) {
      const double target = cell(i, b)[d];
      for (const auto& o : options[i]) {
        if (static_cast<std::size_t>(o.slots) > b || static_cast<std::size_t>(o.units) > d) continue;
        const double rest = cell(i + 1, b - static_cast<std::size_t>(o.slots))[d - static_cast<std::size_t>(o.units)];
        if (rest == kInf || !no_worse(o.cost + rest, target)) continue;
        const auto& split = tables[i][o.point].split[static_cast<std::size_t>(o.slots)];
        r.stations.push_back(describe_station(spec.stations[i], curves[i][o.point], split));
        b -= static_cast<std::size_t>(o.slots);
        d -= static_cast<std::size_t>(o.units);
        break;
      }
    }
    finish(r, spec.qos_epsilon);
    if (enforce && !r.feasible) throw std::logic_error("allocation: constrained optimum violates epsilon");
    return r;
  }
  throw std::logic_error("unreachable");
}

Lattice fixed_lattice(const NetworkSpec& spec) {
  Lattice lat;
  for (const auto& st : spec.stations) lat.points.push_back({st.arrival_rate});
  return lat;
}

std::optional<int> min_class_slots(const ClassPars& base, double epsilon, std::optional<int> cap) {
  if (base.arrival_rate == 0.0) return 1;
  const double load = base.arrival_rate / base.service_rate;
  int hi = 1;
  while (erlang_b(hi, load) > epsilon) ++hi;  // storage only lowers blocking
  if (cap && hi > *cap) {
    hi = *cap;
    ClassPars p = base;
    p.grid_slots = hi;
    if (blocking_probability(p) > epsilon) return std::nullopt;
  }
  int lo = 1;
  while (lo < hi) {
    const int mid = lo + (hi - lo) / 2;
    ClassPars p = base;
    p.grid_slots = mid;
    if (blocking_probability(p) <= epsilon)
      hi = mid;
    else
      lo = mid + 1;
  }
  return lo;
}

// Per-class minimum slots at one station arrival rate; nullopt if unreachable.
std::optional<std::vector<int>> station_min_slots(const StationDemand& st, double lambda, double epsilon) {
  std::vector<int> out;
  int total = 0;
  for (std::size_t c = 0; c < st.class_count(); ++c) {
    std::optional<int> cap;
    if (st.slot_cap) cap = *st.slot_cap - static_cast<int>(st.class_count()) + 1;
    const auto m = min_class_slots(st.class_pars(c, 1, lambda), epsilon, cap);
    if (!m) return std::nullopt;
    out.push_back(*m);
    total += *m;
  }
  if (st.slot_cap && total > *st.slot_cap) return std::nullopt;
  return out;
}

// Projection onto {x >= 1, sum x = total}.
void project_simplex(std::vector<double>& x, double total) {
  double lo = *std::min_element(x.begin(), x.end()) - total - 1.0;
  double hi = *std::max_element(x.begin(), x.end());
  for (int it = 0; it < 200; ++it) {
    const double tau = 0.5 * (lo + hi);
    double sum = 0.0;
    for (double v : x) sum += std::max(1.0, v - tau);
    (sum > total ? lo : hi) = tau;
  }
  const double tau = 0.5 * (lo + hi);
  for (double& v : x) v = std::max(1.0, v - tau);
}

}  // namespace

void ClassMix::validate() const {
  if (shares.empty()) throw domain_error("class mix must have at least one class");
  double sum = 0.0;
  for (double s : shares) {
    if (!(s >= 0.0)) throw domain_error("class shares must be >= 0");
    sum += s;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw domain_error("class shares must sum to 1");
}

void StationDemand::validate() const {
  const std::string who = "station " + std::to_string(id) + ": ";
  if (classes.empty()) throw domain_error(who + "needs at least one service class");
  if (mix.shares.size() != classes.size()) throw domain_error(who + "class mix length differs from class count");
  mix.validate();
  if (!(arrival_rate >= 0.0) || !std::isfinite(arrival_rate)) throw domain_error(who + "arrival rate must be >= 0");
  if (!(box_min() >= 0.0) || !(box_min() <= box_max()) || !std::isfinite(box_max()))
    throw domain_error(who + "arrival box needs 0 <= lambda_min <= lambda_max");
  if (slot_cap && *slot_cap < static_cast<int>(classes.size()))
    throw domain_error(who + "slot cap is below the number of classes");
  for (const auto& c : classes) {
    if (!(c.service_rate > 0.0)) throw domain_error(who + "service rate must be > 0");
    c.storage.validate();
  }
}

ClassPars StationDemand::class_pars(std::size_t c, int slots, double lambda) const {
  ClassPars p;
  p.arrival_rate = lambda * mix.shares.at(c);
  p.service_rate = classes.at(c).service_rate;
  p.grid_slots = slots;
  p.storage = classes.at(c).storage;
  return p;
}

void NetworkSpec::validate() const {
  if (stations.empty()) throw domain_error("network needs at least one station");
  std::set<int> ids;
  for (const auto& st : stations) {
    st.validate();
    if (!ids.insert(st.id).second) throw domain_error("duplicate station id " + std::to_string(st.id));
  }
  if (!(qos_epsilon > 0.0 && qos_epsilon <= 1.0)) throw domain_error("QoS epsilon must lie in (0, 1]");
  if (lattice_divisions < 1) throw domain_error("lattice divisions must be >= 1");
  if (lattice_step && !(*lattice_step > 0.0)) throw domain_error("lattice step must be > 0");
  if (total_arrivals && !(*total_arrivals >= 0.0)) throw domain_error("total arrivals must be >= 0");
}

double NetworkSpec::arrivals_total() const {
  if (total_arrivals) return *total_arrivals;
  double t = 0.0;
  for (const auto& st : stations) t += st.arrival_rate;
  return t;
}

int NetworkSpec::min_slots() const {
  int t = 0;
  for (const auto& st : stations) t += static_cast<int>(st.class_count());
  return t;
}

int StationAllocation::slots() const { return std::accumulate(class_slots.begin(), class_slots.end(), 0); }

int AllocationResult::total_slots() const {
  int t = 0;
  for (const auto& s : stations) t += s.slots();
  return t;
}

double AllocationResult::total_arrivals() const {
  double t = 0.0;
  for (const auto& s : stations) t += s.arrival_rate;
  return t;
}

Partition partition_station(int slots, const StationDemand& station, double lambda, double epsilon,
                            Objective objective) {
  station.validate();
  const int classes = static_cast<int>(station.class_count());
  if (slots < classes)
    throw infeasible_error("cannot partition " + std::to_string(slots) + " slots among " + std::to_string(classes) +
                           " classes");
  const auto curves = compute_curves(station, lambda, slots - classes + 1);
  Partition out;
  auto table = make_table(curves, slots, epsilon, objective, true);
  if (table.cost[static_cast<std::size_t>(slots)] == kInf) {
    table = make_table(curves, slots, epsilon, objective, false);
    out.feasible = false;
  }
  out.slots = table.split[static_cast<std::size_t>(slots)];
  out.objective = table.cost[static_cast<std::size_t>(slots)];
  for (std::size_t c = 0; c < curves.blocking.size(); ++c)
    out.blocking.push_back(curves.blocking[c][static_cast<std::size_t>(out.slots[c])]);
  return out;
}

Partition partition_station(int slots, std::span<const ServiceClass> classes, const ClassMix& mix, double lambda,
                            double epsilon, Objective objective) {
  StationDemand st;
  st.classes.assign(classes.begin(), classes.end());
  st.mix = mix;
  st.arrival_rate = lambda;
  return partition_station(slots, st, lambda, epsilon, objective);
}

MinPower min_power_for_qos(const NetworkSpec& spec) {
  spec.validate();
  MinPower out;
  for (const auto& st : spec.stations) {
    const auto m = station_min_slots(st, st.arrival_rate, spec.qos_epsilon);
    if (!m)
      throw infeasible_error("station " + std::to_string(st.id) + " cannot reach blocking <= " +
                             std::to_string(spec.qos_epsilon) + " within its slot cap");
    const int total = std::accumulate(m->begin(), m->end(), 0);
    out.station_slots.push_back(total);
    out.class_slots.push_back(*m);
    out.total += total;
  }
  return out;
}

AllocationResult allocate_power(const NetworkSpec& spec) {
  spec.validate();
  return solve_lattice(spec, spec.slot_budget, fixed_lattice(spec));
}

AllocationResult allocate_power_and_arrivals(const NetworkSpec& spec) {
  spec.validate();
  return solve_lattice(spec, spec.slot_budget, make_lattice(spec));
}

AllocationResult allocate_small_area(const NetworkSpec& spec, std::span<const int> subset, double subset_arrivals) {
  spec.validate();
  if (subset.empty()) throw domain_error("small-area routing needs at least one station");
  if (!(subset_arrivals >= 0.0)) throw domain_error("small-area arrivals must be >= 0");
  NetworkSpec routed = spec;
  double fixed = 0.0;
  std::set<int> wanted(subset.begin(), subset.end());
  for (auto& st : routed.stations) {
    if (wanted.erase(st.id)) {
      st.arrival_min = 0.0;
      st.arrival_max = subset_arrivals;
    } else {
      st.arrival_min = st.arrival_max = st.arrival_rate;
      fixed += st.arrival_rate;
    }
  }
  if (!wanted.empty()) throw domain_error("small-area subset names unknown station " + std::to_string(*wanted.begin()));
  routed.conserve_arrivals = true;
  routed.total_arrivals = fixed + subset_arrivals;
  return solve_lattice(routed, routed.slot_budget, make_lattice(routed));
}

AllocationResult min_power_with_shaping(const NetworkSpec& spec) {
  spec.validate();
  const Lattice lat = make_lattice(spec);
  const std::size_t n = spec.stations.size();
  std::vector<std::vector<double>> need(n);  // minimum slots per lattice point, kInf if unreachable
  std::vector<std::pair<std::size_t, std::size_t>> jobs;
  for (std::size_t i = 0; i < n; ++i) {
    need[i].assign(lat.points[i].size(), kInf);
    for (std::size_t k = 0; k < lat.points[i].size(); ++k) jobs.emplace_back(i, k);
  }
  parallel_for(jobs.size(), [&](std::size_t j) {
    const auto [i, k] = jobs[j];
    const auto m = station_min_slots(spec.stations[i], lat.points[i][k], spec.qos_epsilon);
    if (m) need[i][k] = std::accumulate(m->begin(), m->end(), 0);
  });

  const auto width = static_cast<std::size_t>(lat.conserve ? lat.units : 0) + 1;
  std::vector<double> g(width, kInf);
  g[0] = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    std::vector<double> next(width, kInf);
    for (std::size_t d = 0; d < width; ++d)
      for (std::size_t k = 0; k < need[i].size(); ++k) {
        const std::size_t used = lat.conserve ? k : 0;
        if (used > d || need[i][k] == kInf || g[d - used] == kInf) continue;
        next[d] = std::min(next[d], need[i][k] + g[d - used]);
      }
    g = std::move(next);
  }
  if (g[width - 1] == kInf)
    throw infeasible_error("no arrival shaping meets epsilon = " + std::to_string(spec.qos_epsilon));
  NetworkSpec at_min = spec;
  at_min.slot_budget = static_cast<int>(std::lround(g[width - 1]));
  return solve_lattice(at_min, at_min.slot_budget, lat);
}

AllocationResult allocate_power_relax_round(const NetworkSpec& spec, const RelaxRoundOptions& options) {
  spec.validate();
  check_budget(spec, spec.slot_budget);

  struct Item {
    std::size_t station, cls;
    ClassPars pars;
    double weight;
    RsmPoint point;  // rescaled to the metamodel's service rate
  };
  std::vector<Item> items;
  for (std::size_t i = 0; i < spec.stations.size(); ++i) {
    const auto& st = spec.stations[i];
    for (std::size_t c = 0; c < st.class_count(); ++c) {
      const ClassPars p = st.class_pars(c, 1, st.arrival_rate);
      const double scale = options.metamodel_service_rate / p.service_rate;
      items.push_back({i, c, p, class_weight(spec.objective, st.mix.shares[c], p.arrival_rate),
                       {1.0, static_cast<double>(p.storage.capacity), p.storage.recharge_rate * scale, p.arrival_rate * scale}});
    }
  }

  const double budget = spec.slot_budget;
  std::vector<double> x(items.size(), budget / static_cast<double>(items.size()));
  auto value = [&](const std::vector<double>& v) {
    double f = 0.0;
    for (std::size_t j = 0; j < items.size(); ++j) {
      RsmPoint pt = items[j].point;
      pt.slots = v[j];
      f += items[j].weight * eval_rsm(options.coefficients, pt);
    }
    return f;
  };
  std::vector<double> best = x;
  double best_f = value(x);
  std::vector<double> grad(items.size());
  for (int it = 0; it < options.iterations; ++it) {
    double gmax = 0.0;
    for (std::size_t j = 0; j < items.size(); ++j) {
      RsmPoint pt = items[j].point;
      pt.slots = x[j];
      grad[j] = items[j].weight * rsm_probability_gradient(options.coefficients, pt)(0);
      gmax = std::max(gmax, std::abs(grad[j]));
    }
    if (gmax == 0.0) break;
    const double step = 1.0 / std::sqrt(1.0 + it);
    for (std::size_t j = 0; j < items.size(); ++j) x[j] -= step * grad[j] / gmax;
    project_simplex(x, budget);
    const double f = value(x);
    if (f < best_f) {
      best_f = f;
      best = x;
    }
  }

  std::vector<int> slots;
  for (double v : best) slots.push_back(std::max(1, static_cast<int>(std::ceil(v - 1e-9))));
  auto exact = [&](std::size_t j, int s) {
    ClassPars p = items[j].pars;
    p.grid_slots = s;
    return items[j].weight * blocking_probability(p);
  };
  int total = std::accumulate(slots.begin(), slots.end(), 0);
  while (total > spec.slot_budget) {
    std::size_t pick = items.size();
    double least = kInf;
    for (std::size_t j = 0; j < items.size(); ++j) {
      if (slots[j] <= 1) continue;
      const double increase = exact(j, slots[j] - 1) - exact(j, slots[j]);
      if (increase < least) {
        least = increase;
        pick = j;
      }
    }
    --slots[pick];
    --total;
  }

  AllocationResult r;
  std::size_t j = 0;
  for (const auto& st : spec.stations) {
    StationCurves cv;
    cv.lambda = st.arrival_rate;
    std::vector<int> split;
    for (std::size_t c = 0; c < st.class_count(); ++c, ++j) {
      cv.share.push_back(st.mix.shares[c]);
      cv.class_lambda.push_back(items[j].pars.arrival_rate);
      std::vector<double> b(static_cast<std::size_t>(slots[j]) + 1, kInf);
      ClassPars p = items[j].pars;
      p.grid_slots = slots[j];
      b.back() = blocking_probability(p);
      r.objective += items[j].weight * b.back();
      cv.blocking.push_back(std::move(b));
      split.push_back(slots[j]);
    }
    r.stations.push_back(describe_station(st, cv, split));
  }
  finish(r, spec.qos_epsilon);
  return r;
}

double weighted_blocking(std::span<const double> lambdas, std::span<const double> blocking) {
  if (lambdas.size() != blocking.size()) throw domain_error("weighted_blocking: length mismatch");
  const double total = std::accumulate(lambdas.begin(), lambdas.end(), 0.0);
  if (!(total > 0.0)) throw domain_error("weighted_blocking: arrival rates sum to zero, weights undefined");
  double acc = 0.0;
  for (std::size_t i = 0; i < lambdas.size(); ++i) acc += lambdas[i] / total * blocking[i];
  return acc;
}

std::vector<int> offered_load_split(int slots, const StationDemand& station) {
  station.validate();
  const std::size_t n = station.class_count();
  if (slots < static_cast<int>(n))
    throw infeasible_error("cannot split " + std::to_string(slots) + " slots among " + std::to_string(n) + " classes");
  std::vector<double> load(n);
  for (std::size_t c = 0; c < n; ++c) load[c] = station.mix.shares[c] / station.classes[c].service_rate;
  double total = std::accumulate(load.begin(), load.end(), 0.0);
  if (!(total > 0.0)) {
    load.assign(n, 1.0);
    total = static_cast<double>(n);
  }
  // One slot each up front, the rest by largest remainder.
  const int spare = slots - static_cast<int>(n);
  std::vector<int> out(n, 1);
  std::vector<double> remainder(n);
  int given = 0;
  for (std::size_t c = 0; c < n; ++c) {
    const double exact = spare * load[c] / total;
    const int whole = static_cast<int>(std::floor(exact + 1e-12));
    out[c] += whole;
    given += whole;
    remainder[c] = exact - whole;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b] + 1e-12; });
  for (std::size_t k = 0; given < spare; ++k, ++given) ++out[order[k % n]];
  return out;
}

AllocationResult evaluate_fixed_slots(const NetworkSpec& spec, std::span<const int> station_slots, ClassSplit split) {
  spec.validate();
  if (station_slots.size() != spec.stations.size())
    throw domain_error("fixed slot vector has " + std::to_string(station_slots.size()) + " entries for " +
                       std::to_string(spec.stations.size()) + " stations");
  AllocationResult r;
  for (std::size_t i = 0; i < spec.stations.size(); ++i) {
    const auto& st = spec.stations[i];
    std::vector<int> slots;
    if (split == ClassSplit::optimal) {
      slots = partition_station(station_slots[i], st, st.arrival_rate, spec.qos_epsilon, spec.objective).slots;
    } else {
      slots = offered_load_split(station_slots[i], st);
    }
    const auto curves = compute_curves(st, st.arrival_rate, *std::max_element(slots.begin(), slots.end()));
    for (std::size_t c = 0; c < st.class_count(); ++c)
      r.objective += class_weight(spec.objective, curves.share[c], curves.class_lambda[c]) *
                     curves.blocking[c][static_cast<std::size_t>(slots[c])];
    r.stations.push_back(describe_station(st, curves, slots));
  }
  finish(r, spec.qos_epsilon);
  return r;
}

double network_profit(const NetworkSpec& spec, const AllocationResult& result, const CostModel& cost,
                      PenaltyMode mode) {
  cost.validate();
  if (result.stations.size() != spec.stations.size()) throw domain_error("network_profit: station count mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < spec.stations.size(); ++i) {
    const auto& st = spec.stations[i];
    const auto& a = result.stations[i];
    if (a.id != st.id) throw domain_error("network_profit: station order mismatch");
    std::vector<ClassSolution> sols;
    CostModel local;
    local.fixed_cost = cost.fixed_cost;
    for (std::size_t c = 0; c < st.class_count(); ++c) {
      sols.push_back(solve_class(st.class_pars(c, a.class_slots[c], a.arrival_rate)));
      const std::size_t k = st.classes[c].cost_index;
      if (k >= cost.class_count()) throw domain_error("network_profit: class " + st.classes[c].name + " has no cost entry");
      local.revenue_grid.push_back(cost.revenue_grid[k]);
      local.revenue_storage.push_back(cost.revenue_storage[k]);
      local.blocking_cost.push_back(cost.blocking_cost[k]);
      local.acquisition_cost.push_back(cost.acquisition_cost[k]);
    }
    total += profit(sols, local, mode).net;
  }
  return total;
}

std::vector<CaseOutcome> compare_cases(const ComparisonInput& input) {
  input.network.validate();
  if (input.baseline_slots.size() != input.network.stations.size())
    throw domain_error("case comparison: baseline slots do not match the station list");
  NetworkSpec spec = input.network;
  spec.slot_budget = std::accumulate(input.baseline_slots.begin(), input.baseline_slots.end(), 0);

  std::vector<CaseOutcome> out;
  auto add = [&](std::string label, AllocationResult r) {
    const double p = network_profit(spec, r, input.cost, input.penalty);
    out.push_back({std::move(label), std::move(r), p});
  };
  add("I", evaluate_fixed_slots(spec, input.baseline_slots, input.baseline_split));
  add("IIA", allocate_power(spec));
  add("IIB", allocate_power_and_arrivals(spec));
  if (!input.small_area.empty()) {
    double routed = 0.0;
    for (int id : input.small_area) {
      const auto it = std::find_if(spec.stations.begin(), spec.stations.end(), [&](const auto& s) { return s.id == id; });
      if (it == spec.stations.end()) throw domain_error("case comparison: unknown small-area station " + std::to_string(id));
      routed += it->arrival_rate;
    }
    NetworkSpec free = spec;
    free.conserve_arrivals = true;
    add("III", allocate_small_area(free, input.small_area, routed));
  }
  return out;
}

SavingsRow power_savings(const NetworkSpec& spec) {
  SavingsRow row;
  row.epsilon = spec.qos_epsilon;
  row.total_arrivals = spec.arrivals_total();
  row.slots_selfish = min_power_for_qos(spec).total;
  row.slots_shaped = min_power_with_shaping(spec).total_slots();
  row.savings = row.slots_selfish > 0
                    ? static_cast<double>(row.slots_selfish - row.slots_shaped) / row.slots_selfish
                    : 0.0;
  return row;
}

}  // namespace evnet
