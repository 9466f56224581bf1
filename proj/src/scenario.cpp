#include "evnet/scenario.hpp"

#include "evnet/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <system_error>

namespace evnet {

using json = nlohmann::json;

namespace {

// Typed view of one JSON value that remembers where it came from.
class Node {
 public:
  Node(const json& value, std::string path) : value_(&value), path_(std::move(path)) {}

  const std::string& path() const { return path_; }
  [[noreturn]] void fail(const std::string& what) const {
    throw config_error((path_.empty() ? std::string("/") : path_) + ": " + what);
  }

  void allow(std::initializer_list<std::string_view> keys) const {
    object();
    for (const auto& [key, _] : value_->items())
      if (std::find(keys.begin(), keys.end(), key) == keys.end()) Node(*value_, path_ + "/" + key).fail("unknown key");
  }

  bool has(const std::string& key) const { return object().contains(key); }
  std::optional<Node> find(const std::string& key) const {
    const auto& o = object();
    const auto it = o.find(key);
    if (it == o.end()) return std::nullopt;
    return Node(*it, path_ + "/" + key);
  }
  Node at(const std::string& key) const {
    auto n = find(key);
    if (!n) fail("missing required key \"" + key + "\"");
    return *n;
  }

  double number() const {
    if (!value_->is_number()) fail("expected a number");
    const double v = value_->get<double>();
    if (!std::isfinite(v)) fail("expected a finite number");
    return v;
  }
  double positive() const {
    const double v = number();
    if (!(v > 0.0)) fail("must be > 0");
    return v;
  }
  double nonnegative() const {
    const double v = number();
    if (v < 0.0) fail("must be >= 0");
    return v;
  }
  double fraction() const {
    const double v = number();
    if (!(v >= 0.0 && v <= 1.0)) fail("must lie in [0, 1]");
    return v;
  }
  long long integer() const {
    if (!value_->is_number_integer()) fail("expected an integer");
    return value_->get<long long>();
  }
  int integer(long long lo, long long hi) const {
    const long long v = integer();
    if (v < lo || v > hi) fail("must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return static_cast<int>(v);
  }
  std::string string() const {
    if (!value_->is_string()) fail("expected a string");
    return value_->get<std::string>();
  }
  bool boolean() const {
    if (!value_->is_boolean()) fail("expected true or false");
    return value_->get<bool>();
  }
  std::vector<Node> array() const {
    if (!value_->is_array()) fail("expected an array");
    std::vector<Node> out;
    for (std::size_t i = 0; i < value_->size(); ++i) out.emplace_back((*value_)[i], path_ + "/" + std::to_string(i));
    return out;
  }
  std::vector<double> numbers() const {
    std::vector<double> out;
    for (const auto& n : array()) out.push_back(n.number());
    return out;
  }
  std::vector<int> integers(long long lo, long long hi) const {
    std::vector<int> out;
    for (const auto& n : array()) out.push_back(n.integer(lo, hi));
    return out;
  }
  std::vector<std::string> strings() const {
    std::vector<std::string> out;
    for (const auto& n : array()) out.push_back(n.string());
    return out;
  }
  Range range() const {
    try {
      return Range::parse(string());
    } catch (const config_error& e) {
      fail(e.what());
    }
  }

 private:
  const json& object() const {
    if (!value_->is_object()) fail("expected an object");
    return *value_;
  }

  const json* value_;
  std::string path_;
};

constexpr int kMaxSlots = 1000;

ServiceClass read_class(const Node& n, std::size_t index) {
  n.allow({"name", "service_rate", "storage"});
  ServiceClass c;
  c.name = n.at("name").string();
  if (c.name.empty()) n.at("name").fail("must not be empty");
  c.service_rate = n.at("service_rate").positive();
  c.cost_index = index;
  const Node s = n.at("storage");
  s.allow({"capacity", "efficiency", "power_rating", "recharge_rate"});
  c.storage.capacity = s.at("capacity").integer(0, kMaxSlots);
  if (auto e = s.find("efficiency")) {
    c.storage.efficiency = e->number();
    if (!(c.storage.efficiency > 0.0 && c.storage.efficiency <= 1.0)) e->fail("must lie in (0, 1]");
  }
  if (auto p = s.find("power_rating")) c.storage.power_rating = p->positive();
  if (auto r = s.find("recharge_rate"))
    c.storage.recharge_rate = r->positive();
  else
    c.storage.recharge_rate =
        storage_recharge_rate(c.service_rate, c.storage.power_rating, c.storage.efficiency);
  return c;
}

std::vector<double> read_mix(const Node& n, std::size_t classes) {
  auto mix = n.numbers();
  if (mix.size() != classes) n.fail("expected " + std::to_string(classes) + " shares, one per class");
  double total = 0.0;
  for (double v : mix) {
    if (v < 0.0) n.fail("shares must be >= 0");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) n.fail("shares must sum to 1");
  return mix;
}

void check_class_refs(const Node& n, const std::vector<std::string>& names, const std::vector<ServiceClass>& classes) {
  if (names.empty()) n.fail("expected at least one class");
  std::set<std::string> seen;
  for (const auto& name : names) {
    if (std::none_of(classes.begin(), classes.end(), [&](const auto& c) { return c.name == name; }))
      n.fail("unknown class \"" + name + "\"");
    if (!seen.insert(name).second) n.fail("class \"" + name + "\" listed twice");
  }
}

ScenarioStation read_station(const Node& n, const std::vector<ServiceClass>& classes) {
  n.allow({"id", "x", "y", "arrival_rate", "share", "classes", "mix", "slots", "arrival_box", "slot_cap"});
  ScenarioStation s;
  s.id = n.at("id").integer(0, 1000000);
  if (auto v = n.find("x")) s.x = v->number();
  if (auto v = n.find("y")) s.y = v->number();
  if (auto v = n.find("arrival_rate")) s.arrival_rate = v->nonnegative();
  if (auto v = n.find("share")) s.share = v->nonnegative();
  if (s.arrival_rate.has_value() == s.share.has_value()) n.fail("give exactly one of \"arrival_rate\" and \"share\"");
  const Node names = n.at("classes");
  s.classes = names.strings();
  check_class_refs(names, s.classes, classes);
  if (auto m = n.find("mix"))
    s.mix = read_mix(*m, s.classes.size());
  else if (s.classes.size() == 1)
    s.mix = {1.0};
  else
    n.fail("missing required key \"mix\" for a multi-class station");
  if (auto v = n.find("slots")) s.slots = v->integer(1, kMaxSlots);
  if (auto b = n.find("arrival_box")) {
    const auto box = b->numbers();
    if (box.size() != 2 || box[0] < 0.0 || box[0] > box[1]) b->fail("expected [min, max] with 0 <= min <= max");
    s.arrival_min = box[0];
    s.arrival_max = box[1];
  }
  if (auto v = n.find("slot_cap")) s.slot_cap = v->integer(1, kMaxSlots);
  return s;
}

std::vector<double> class_vector(const Node& n, std::size_t classes) {
  auto v = n.numbers();
  if (v.size() != classes) n.fail("expected " + std::to_string(classes) + " values, one per class");
  return v;
}

CostModel read_cost(const Node& n, std::size_t classes) {
  n.allow({"revenue_grid", "revenue_storage", "blocking_cost", "acquisition_cost", "fixed_cost"});
  CostModel c;
  c.revenue_grid = class_vector(n.at("revenue_grid"), classes);
  c.revenue_storage = class_vector(n.at("revenue_storage"), classes);
  c.blocking_cost = class_vector(n.at("blocking_cost"), classes);
  c.acquisition_cost = class_vector(n.at("acquisition_cost"), classes);
  c.fixed_cost = n.at("fixed_cost").number();
  try {
    c.validate();
  } catch (const domain_error& e) {
    n.fail(e.what());
  }
  return c;
}

SolveSection read_solve(const Node& n, const std::vector<ServiceClass>& classes) {
  n.allow({"slots", "classes", "lambda"});
  SolveSection s;
  if (auto v = n.find("slots")) {
    s.slots = v->integers(1, kMaxSlots);
    if (s.slots.empty()) v->fail("expected at least one value");
  }
  if (auto v = n.find("classes")) {
    s.classes = v->strings();
    check_class_refs(*v, s.classes, classes);
  }
  if (auto v = n.find("lambda")) s.lambda = v->range();
  return s;
}

PartitionSection read_partition(const Node& n, const std::vector<ServiceClass>& classes) {
  n.allow({"slots", "classes", "mixes", "fixed_slots", "lambda", "epsilon"});
  PartitionSection p;
  const Node names = n.at("classes");
  p.classes = names.strings();
  check_class_refs(names, p.classes, classes);
  p.slots = n.at("slots").integer(static_cast<long long>(p.classes.size()), kMaxSlots);
  for (const auto& m : n.at("mixes").array()) p.mixes.push_back(read_mix(m, p.classes.size()));
  if (p.mixes.empty()) n.at("mixes").fail("expected at least one mix");
  if (auto f = n.find("fixed_slots")) {
    const auto rows = f->array();
    if (rows.size() != p.mixes.size()) f->fail("expected one slot split per mix");
    for (const auto& r : rows) {
      auto split = r.integers(1, kMaxSlots);
      if (split.size() != p.classes.size()) r.fail("expected one slot count per class");
      int total = 0;
      for (int v : split) total += v;
      if (total != p.slots) r.fail("slot split must sum to " + std::to_string(p.slots));
      p.fixed_slots.push_back(std::move(split));
    }
  }
  if (auto v = n.find("lambda")) p.lambda = v->range();
  if (auto v = n.find("epsilon")) p.epsilon = v->fraction();
  return p;
}

Objective read_objective(const Node& n) {
  const auto s = n.string();
  if (s == "unweighted") return Objective::unweighted;
  if (s == "station_share") return Objective::station_share;
  if (s == "blocked_flow") return Objective::blocked_flow;
  n.fail("expected unweighted | station_share | blocked_flow");
}

AllocationSection read_allocation(const Node& n, const std::set<int>& ids) {
  n.allow({"case", "objective", "budget", "epsilon", "box_fraction", "conserve_arrivals", "lattice_divisions",
           "lattice_step", "small_area", "baseline_split", "penalty", "sweep"});
  AllocationSection a;
  if (auto v = n.find("case")) {
    a.case_name = v->string();
    if (a.case_name != "1" && a.case_name != "2a" && a.case_name != "2b" && a.case_name != "3")
      v->fail("expected 1 | 2a | 2b | 3");
  }
  if (auto v = n.find("objective")) a.objective = read_objective(*v);
  if (auto v = n.find("budget")) a.budget = v->integer(1, 1000000);
  if (auto v = n.find("epsilon")) a.epsilon = v->fraction();
  if (auto v = n.find("box_fraction")) {
    a.box_fraction = v->fraction();
  }
  if (auto v = n.find("conserve_arrivals")) a.conserve_arrivals = v->boolean();
  if (auto v = n.find("lattice_divisions")) a.lattice_divisions = v->integer(1, 100000);
  if (auto v = n.find("lattice_step")) a.lattice_step = v->positive();
  if (auto v = n.find("small_area")) {
    a.small_area = v->integers(0, 1000000);
    std::set<int> seen;
    for (int id : a.small_area) {
      if (!ids.count(id)) v->fail("unknown station id " + std::to_string(id));
      if (!seen.insert(id).second) v->fail("station id " + std::to_string(id) + " listed twice");
    }
  }
  if (auto v = n.find("baseline_split")) {
    const auto s = v->string();
    if (s == "offered_load")
      a.baseline_split = ClassSplit::offered_load;
    else if (s == "optimal")
      a.baseline_split = ClassSplit::optimal;
    else
      v->fail("expected offered_load | optimal");
  }
  if (auto v = n.find("penalty")) {
    const auto s = v->string();
    if (s == "state_weighted")
      a.penalty = PenaltyMode::state_weighted;
    else if (s == "blocked_flow")
      a.penalty = PenaltyMode::blocked_flow;
    else
      v->fail("expected state_weighted | blocked_flow");
  }
  if (auto s = n.find("sweep")) {
    s->allow({"epsilon", "total_arrivals"});
    if (auto v = s->find("epsilon")) {
      for (const auto& e : v->array()) a.sweep_epsilon.push_back(e.fraction());
    }
    if (auto v = s->find("total_arrivals")) {
      for (const auto& t : v->array()) a.sweep_total.push_back(t.positive());
    }
  }
  return a;
}

SimulationSection read_simulation(const Node& n, const std::vector<ServiceClass>& classes, std::size_t stations) {
  n.allow({"horizon", "replications", "seed", "warmup_fraction", "vehicles", "spatial", "target_shares", "class"});
  SimulationSection s;
  if (auto v = n.find("horizon")) s.horizon = static_cast<long>(v->integer(10000, 1000000000000LL));
  if (auto v = n.find("replications")) s.replications = v->integer(2, 100000);
  if (auto v = n.find("seed")) {
    if (v->integer() < 0) v->fail("must be >= 0");
    s.seed = static_cast<std::uint64_t>(v->integer());
  }
  if (auto v = n.find("warmup_fraction")) {
    s.warmup_fraction = v->number();
    if (!(s.warmup_fraction >= 0.0 && s.warmup_fraction < 1.0)) v->fail("must lie in [0, 1)");
  }
  if (auto v = n.find("vehicles")) s.vehicles = static_cast<long>(v->integer(1, 1000000000000LL));
  if (auto sp = n.find("spatial")) {
    sp->allow({"x_weight", "y_weight"});
    if (auto v = sp->find("x_weight")) s.x_weight = v->fraction();
    if (auto v = sp->find("y_weight")) s.y_weight = v->fraction();
  }
  if (auto v = n.find("target_shares")) {
    s.target_shares = v->numbers();
    if (s.target_shares.size() != stations) v->fail("expected one share per station");
  }
  if (auto v = n.find("class")) {
    s.class_name = v->string();
    check_class_refs(*v, {s.class_name}, classes);
  } else if (!classes.empty()) {
    s.class_name = classes.front().name;
  }
  return s;
}

MetamodelSection read_metamodel(const Node& n) {
  n.allow({"stride", "coefficients", "service_rate"});
  MetamodelSection m;
  if (auto v = n.find("stride")) {
    const auto s = v->integers(1, 1000);
    if (s.size() != 4) v->fail("expected four strides for S, R, lambda, nu");
    std::copy(s.begin(), s.end(), m.stride.begin());
  }
  if (auto v = n.find("coefficients")) m.coefficients = v->string();
  if (auto v = n.find("service_rate")) m.service_rate = v->positive();
  return m;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::vector<double> Range::values() const {
  std::vector<double> out;
  const long n = std::lround(std::floor((upper - lower) / step + 1e-9));
  for (long k = 0; k <= n; ++k) out.push_back(lower + static_cast<double>(k) * step);
  return out;
}

Range Range::parse(std::string_view text) {
  std::array<double, 3> v{};
  std::size_t field = 0;
  std::string_view rest = text;
  while (true) {
    const auto colon = rest.find(':');
    const auto part = rest.substr(0, colon);
    if (field == 3) throw config_error("range \"" + std::string(text) + "\" has more than three fields");
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v[field]);
    if (ec != std::errc() || ptr != part.data() + part.size() || part.empty())
      throw config_error("range \"" + std::string(text) + "\" is not lo:hi:step");
    ++field;
    if (colon == std::string_view::npos) break;
    rest = rest.substr(colon + 1);
  }
  Range r;
  if (field == 1) {
    r = {v[0], v[0], 1.0};
  } else if (field == 3) {
    r = {v[0], v[1], v[2]};
  } else {
    throw config_error("range \"" + std::string(text) + "\" is not lo:hi:step");
  }
  if (!std::isfinite(r.lower) || !std::isfinite(r.upper) || !(r.step > 0.0) || r.upper < r.lower)
    throw config_error("range \"" + std::string(text) + "\" needs lo <= hi and step > 0");
  return r;
}

const ServiceClass& Scenario::find_class(std::string_view name) const {
  for (const auto& c : classes)
    if (c.name == name) return c;
  throw config_error("unknown class \"" + std::string(name) + "\"");
}

std::vector<double> Scenario::base_rates(std::optional<double> total) const {
  double share_sum = 0.0;
  for (const auto& s : stations) share_sum += s.share.value_or(0.0);
  const auto scale_total = total ? total : total_arrivals;
  std::vector<double> out;
  bool any_share = false;
  for (const auto& s : stations) {
    if (s.arrival_rate) {
      out.push_back(*s.arrival_rate);
      continue;
    }
    any_share = true;
    out.push_back(share_sum > 0.0 ? *s.share / share_sum : 0.0);
  }
  if (any_share) {
    if (!scale_total) throw config_error("/total_arrivals: required when stations give a share");
    double fixed = 0.0;
    for (const auto& s : stations) fixed += s.arrival_rate.value_or(0.0);
    const double remaining = *scale_total - fixed;
    if (remaining < 0.0) throw config_error("/total_arrivals: smaller than the fixed station rates");
    for (std::size_t i = 0; i < stations.size(); ++i)
      if (!stations[i].arrival_rate) out[i] *= remaining;
  }
  return out;
}

const AllocationSection& Scenario::require_allocation() const {
  if (!allocation) throw config_error("/allocation: section required by this command");
  return *allocation;
}

const SimulationSection& Scenario::require_simulation() const {
  if (!simulation) throw config_error("/simulation: section required by this command");
  return *simulation;
}

const CostModel& Scenario::require_cost() const {
  if (!cost) throw config_error("/cost: section required by this command");
  return *cost;
}

NetworkSpec Scenario::network(std::optional<double> total) const {
  if (stations.empty()) throw config_error("/stations: at least one station required by this command");
  const auto& a = require_allocation();
  const auto rates = base_rates(total);
  NetworkSpec n;
  n.qos_epsilon = a.epsilon;
  n.objective = a.objective;
  n.conserve_arrivals = a.conserve_arrivals;
  n.lattice_divisions = a.lattice_divisions;
  n.lattice_step = a.lattice_step;
  if (total) n.total_arrivals = total;
  for (std::size_t i = 0; i < stations.size(); ++i) {
    const auto& s = stations[i];
    StationDemand d;
    d.id = s.id;
    for (const auto& name : s.classes) d.classes.push_back(find_class(name));
    d.mix.shares = s.mix;
    d.arrival_rate = rates[i];
    if (s.arrival_min && !total) {
      d.arrival_min = s.arrival_min;
      d.arrival_max = s.arrival_max;
    } else if (a.box_fraction) {
      d.arrival_min = rates[i] * (1.0 - *a.box_fraction);
      d.arrival_max = rates[i] * (1.0 + *a.box_fraction);
    }
    d.slot_cap = s.slot_cap;
    n.stations.push_back(std::move(d));
  }
  n.slot_budget = a.budget.value_or(0);
  if (!a.budget) {
    for (const auto& s : stations) n.slot_budget += s.slots;
  }
  return n;
}

std::vector<int> Scenario::baseline_slots() const {
  std::vector<int> out;
  for (const auto& s : stations) {
    if (s.slots == 0)
      throw config_error("/stations: station " + std::to_string(s.id) + " needs \"slots\" for this command");
    out.push_back(s.slots);
  }
  return out;
}

ComparisonInput Scenario::comparison() const {
  ComparisonInput in;
  in.network = network();
  in.baseline_slots = baseline_slots();
  const auto& a = require_allocation();
  in.small_area = a.small_area;
  in.baseline_split = a.baseline_split;
  in.cost = require_cost();
  in.penalty = a.penalty;
  return in;
}

SimConfig Scenario::sim_config() const {
  const auto& s = require_simulation();
  if (stations.empty()) throw config_error("/stations: at least one station required by this command");
  const auto& cls = find_class(s.class_name);
  const auto rates = base_rates();
  const auto slots = baseline_slots();
  SimConfig c;
  for (std::size_t i = 0; i < stations.size(); ++i) {
    ClassPars p{rates[i], cls.service_rate, slots[i], cls.storage};
    c.stations.push_back({{stations[i].id, stations[i].x, stations[i].y}, p});
  }
  c.horizon = s.horizon;
  c.replications = s.replications;
  c.seed = s.seed;
  c.warmup_fraction = s.warmup_fraction;
  return c;
}

IntensityConfig Scenario::intensity_config() const {
  const auto& s = require_simulation();
  IntensityConfig c;
  for (const auto& st : stations) c.sites.push_back({st.id, st.x, st.y});
  c.vehicles = s.vehicles;
  c.replications = s.replications;
  c.seed = s.seed;
  return c;
}

std::vector<double> Scenario::target_shares() const {
  const auto& s = require_simulation();
  if (!s.target_shares.empty()) return s.target_shares;
  auto rates = base_rates();
  double total = 0.0;
  for (double r : rates) total += r;
  if (!(total > 0.0)) throw config_error("/simulation/target_shares: required when stations carry no arrivals");
  for (double& r : rates) r /= total;
  return rates;
}

RsmCoefficients Scenario::coefficients() const {
  if (!metamodel || metamodel->coefficients == "published") return RsmCoefficients::published();
  std::filesystem::path p = metamodel->coefficients;
  if (p.is_relative()) p = source_dir / p;
  try {
    return RsmCoefficients::from_csv(read_file(p));
  } catch (const config_error&) {
    throw;
  } catch (const std::exception& e) {
    throw config_error("/metamodel/coefficients: " + std::string(e.what()));
  }
}

Scenario parse_scenario(std::string_view text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw config_error(origin + ": " + e.what());
  }
  const Node root(doc, "");
  try {
    root.allow({"schema_version", "name", "classes", "stations", "total_arrivals", "cost", "solve", "partition",
                "allocation", "simulation", "metamodel"});
    Scenario s;
    const Node version = root.at("schema_version");
    s.schema_version = version.integer(0, 1000000);
    if (s.schema_version != kSchemaVersion)
      version.fail("unsupported schema version " + std::to_string(s.schema_version) + " (expected " +
                   std::to_string(kSchemaVersion) + ")");
    if (auto v = root.find("name")) s.name = v->string();
    const auto classes = root.at("classes").array();
    if (classes.empty()) root.at("classes").fail("expected at least one class");
    std::set<std::string> names;
    for (std::size_t i = 0; i < classes.size(); ++i) {
      s.classes.push_back(read_class(classes[i], i));
      if (!names.insert(s.classes.back().name).second) classes[i].at("name").fail("duplicate class name");
    }
    std::set<int> ids;
    if (auto st = root.find("stations")) {
      for (const auto& n : st->array()) {
        s.stations.push_back(read_station(n, s.classes));
        if (!ids.insert(s.stations.back().id).second) n.at("id").fail("duplicate station id");
      }
    }
    if (auto v = root.find("total_arrivals")) s.total_arrivals = v->positive();
    if (auto v = root.find("cost")) s.cost = read_cost(*v, s.classes.size());
    if (auto v = root.find("solve")) s.solve = read_solve(*v, s.classes);
    if (auto v = root.find("partition")) s.partition = read_partition(*v, s.classes);
    if (auto v = root.find("allocation")) s.allocation = read_allocation(*v, ids);
    if (auto v = root.find("simulation")) s.simulation = read_simulation(*v, s.classes, s.stations.size());
    if (auto v = root.find("metamodel")) s.metamodel = read_metamodel(*v);
    if (!s.stations.empty()) {
      try {
        s.base_rates();
      } catch (const config_error& e) {
        throw config_error(origin + ": " + e.what());
      }
    }
    s.canonical = doc.dump(2);
    return s;
  } catch (const config_error& e) {
    const std::string what = e.what();
    if (what.rfind(origin, 0) == 0) throw;
    throw config_error(origin + ": " + what);
  }
}

Scenario load_scenario(const std::filesystem::path& path) {
  auto s = parse_scenario(read_file(path), path.string());
  s.source_dir = path.parent_path();
  return s;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string RunManifest::to_json() const {
  json j;
  j["command"] = command;
  j["arguments"] = arguments;
  j["config_path"] = config_path;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  j["tool_version"] = tool_version;
  j["outputs"] = outputs;
  j["wall_seconds"] = wall_seconds;
  j["config"] = config.empty() ? json(nullptr) : json::parse(config);
  return j.dump(2) + "\n";
}

void write_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot rename " + tmp.string() + ": " + ec.message());
  }
}

CsvWriter::CsvWriter(std::vector<std::string> header) : width_(header.size()) { row(std::move(header)); }

CsvWriter& CsvWriter::row(std::vector<std::string> cells) {
  if (cells.size() != width_) throw std::logic_error("csv row width mismatch");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) text_ += ',';
    const auto& c = cells[i];
    if (c.find_first_of(",\"\n") == std::string::npos) {
      text_ += c;
    } else {
      text_ += '"';
      for (char ch : c) {
        if (ch == '"') text_ += '"';
        text_ += ch;
      }
      text_ += '"';
    }
  }
  text_ += '\n';
  return *this;
}

std::string CsvWriter::str() const { return text_; }

std::string fmt(double v) {
  if (v == 0.0) return "0";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string fmt(long long v) { return std::to_string(v); }
std::string fmt(int v) { return std::to_string(v); }

}  // namespace evnet
