#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "evnet/allocation.hpp"
#include "evnet/errors.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <random>

using namespace evnet;

namespace {

ServiceClass fast_class() { return {"fast", 2.0, {5, storage_recharge_rate(2.0, 2.0, 0.95), 0.95, 2.0}, 0}; }
ServiceClass slow_class() { return {"slow", 1.0, {5, storage_recharge_rate(1.0, 1.0, 0.85), 0.85, 1.0}, 1}; }

StationDemand single(int id, double lambda, int capacity = 2, double nu = 4.0, double mu = 2.0) {
  StationDemand s;
  s.id = id;
  s.classes = {{"c", mu, {capacity, nu}, 0}};
  s.mix.shares = {1.0};
  s.arrival_rate = lambda;
  return s;
}

StationDemand two_class(int id, double lambda, double fast_share) {
  StationDemand s;
  s.id = id;
  s.classes = {fast_class(), slow_class()};
  s.mix.shares = {fast_share, 1.0 - fast_share};
  s.arrival_rate = lambda;
  return s;
}

double oracle_blocking(const ServiceClass& c, double lambda, int slots) {
  static std::map<std::tuple<double, double, int, int, double>, double> cache;
  if (lambda == 0.0) return 0.0;
  const auto key = std::make_tuple(lambda, c.service_rate, slots, c.storage.capacity, c.storage.recharge_rate);
  auto it = cache.find(key);
  if (it == cache.end())
    it = cache.emplace(key, oracle::blocking_lu(lambda, c.service_rate, slots, c.storage.capacity, c.storage.recharge_rate))
             .first;
  return it->second;
}

double weight(Objective o, double share, double class_lambda) {
  if (o == Objective::unweighted) return 1.0;
  if (o == Objective::station_share) return share;
  return class_lambda;
}

struct BruteBest {
  double objective = std::numeric_limits<double>::infinity();
  bool feasible = false;
};

// Exhaustive search over every lambda choice and every per-class slot vector.
// `points[i]` lists station i's admissible rates; `total` < 0 means no coupling.
BruteBest brute_force(const NetworkSpec& spec, int budget, const std::vector<std::vector<double>>& points, double total) {
  BruteBest feasible_best, any_best;
  const std::size_t n = spec.stations.size();
  std::function<void(std::size_t, int, double, double, bool)> rec = [&](std::size_t i, int left, double lam_sum,
                                                                        double acc, bool ok) {
    if (i == n) {
      if (left != 0) return;
      if (total >= 0.0 && std::abs(lam_sum - total) > 1e-9) return;
      any_best.objective = std::min(any_best.objective, acc);
      if (ok) feasible_best.objective = std::min(feasible_best.objective, acc);
      return;
    }
    const auto& st = spec.stations[i];
    const std::size_t classes = st.class_count();
    for (double lam : points[i]) {
      std::vector<int> split(classes, 1);
      std::function<void(std::size_t, int)> classes_rec = [&](std::size_t c, int used) {
        if (c == classes) {
          double cost = 0.0;
          bool meets = true;
          for (std::size_t k = 0; k < classes; ++k) {
            const double cl = lam * st.mix.shares[k];
            const double b = oracle_blocking(st.classes[k], cl, split[k]);
            cost += weight(spec.objective, st.mix.shares[k], cl) * b;
            if (b > spec.qos_epsilon) meets = false;
          }
          rec(i + 1, left - used, lam_sum + lam, acc + cost, ok && meets);
          return;
        }
        for (int s = 1; used + s <= left; ++s) {
          split[c] = s;
          classes_rec(c + 1, used + s);
        }
      };
      classes_rec(0, 0);
    }
  };
  rec(0, budget, 0.0, 0.0, true);
  if (feasible_best.objective < std::numeric_limits<double>::infinity()) {
    feasible_best.feasible = true;
    return feasible_best;
  }
  return any_best;
}

std::vector<std::vector<double>> base_points(const NetworkSpec& spec) {
  std::vector<std::vector<double>> p;
  for (const auto& s : spec.stations) p.push_back({s.arrival_rate});
  return p;
}

double objective_of(const NetworkSpec& spec, const AllocationResult& r) {
  double acc = 0.0;
  for (std::size_t i = 0; i < r.stations.size(); ++i) {
    const auto& st = spec.stations[i];
    const auto& a = r.stations[i];
    for (std::size_t c = 0; c < st.class_count(); ++c) {
      const double cl = a.arrival_rate * st.mix.shares[c];
      acc += weight(spec.objective, st.mix.shares[c], cl) * oracle_blocking(st.classes[c], cl, a.class_slots[c]);
    }
  }
  return acc;
}

void check_consistent(const NetworkSpec& spec, const AllocationResult& r, int budget) {
  REQUIRE(r.stations.size() == spec.stations.size());
  CHECK(r.total_slots() == budget);
  bool feasible = true;
  for (std::size_t i = 0; i < r.stations.size(); ++i) {
    const auto& st = spec.stations[i];
    const auto& a = r.stations[i];
    CHECK(a.id == st.id);
    double station_b = 0.0;
    for (std::size_t c = 0; c < st.class_count(); ++c) {
      CHECK(a.class_slots[c] >= 1);
      const double b = blocking_probability(st.class_pars(c, a.class_slots[c], a.arrival_rate));
      CHECK(std::abs(a.class_blocking[c] - b) <= 1e-9);
      station_b += st.mix.shares[c] * b;
      if (b > spec.qos_epsilon) feasible = false;
    }
    CHECK(a.blocking == doctest::Approx(station_b).epsilon(1e-12));
  }
  CHECK(r.feasible == feasible);
}

NetworkSpec toy_network() {
  NetworkSpec n;
  n.stations = {single(1, 1.0), single(2, 2.0), single(3, 3.0)};
  n.slot_budget = 9;
  return n;
}

}  // namespace

TEST_CASE("partition_station") {
  const std::vector<ServiceClass> classes{fast_class(), slow_class()};
  SUBCASE("two-class station with ten slots") {
    for (double lambda : {4.0, 7.0}) {
      CHECK(partition_station(10, classes, {{0.75, 0.25}}, lambda).slots == std::vector<int>{6, 4});
      CHECK(partition_station(10, classes, {{0.5, 0.5}}, lambda).slots == std::vector<int>{4, 6});
      CHECK(partition_station(10, classes, {{0.25, 0.75}}, lambda).slots == std::vector<int>{2, 8});
    }
  }
  SUBCASE("matches enumeration of every split") {
    for (double share : {0.1, 0.4, 0.75}) {
      const auto p = partition_station(9, classes, {{share, 1 - share}}, 5.0);
      double best = std::numeric_limits<double>::infinity();
      for (int a = 1; a <= 8; ++a)
        best = std::min(best, oracle_blocking(classes[0], 5.0 * share, a) + oracle_blocking(classes[1], 5.0 * (1 - share), 9 - a));
      CHECK(p.objective == doctest::Approx(best).epsilon(1e-9));
      CHECK(std::accumulate(p.slots.begin(), p.slots.end(), 0) == 9);
    }
  }
  SUBCASE("identical classes split evenly") {
    const std::vector<ServiceClass> twins{fast_class(), fast_class()};
    for (int s : {2, 6, 10}) CHECK(partition_station(s, twins, {{0.5, 0.5}}, 6.0).slots == std::vector<int>{s / 2, s / 2});
  }
  SUBCASE("epsilon steers away from violating splits") {
    // Unconstrained the slow class would starve; a tight target forces balance.
    const auto loose = partition_station(6, classes, {{0.9, 0.1}}, 6.0, 1.0, Objective::blocked_flow);
    const auto tight = partition_station(6, classes, {{0.9, 0.1}}, 6.0, 0.2, Objective::blocked_flow);
    CHECK(tight.feasible);
    for (double b : tight.blocking) CHECK(b <= 0.2);
    CHECK(loose.objective <= tight.objective + 1e-15);
    const auto hopeless = partition_station(2, classes, {{0.5, 0.5}}, 20.0, 0.01);
    CHECK_FALSE(hopeless.feasible);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(partition_station(1, classes, {{0.5, 0.5}}, 1.0), infeasible_error);
    CHECK_THROWS_AS(partition_station(4, classes, {{0.5, 0.6}}, 1.0), domain_error);
    CHECK_THROWS_AS(partition_station(4, classes, {{1.0}}, 1.0), domain_error);
  }
}

TEST_CASE("offered_load_split") {
  CHECK(offered_load_split(4, two_class(1, 5, 0.75)) == std::vector<int>{2, 2});
  CHECK(offered_load_split(3, two_class(1, 5, 0.75)) == std::vector<int>{2, 1});
  CHECK(offered_load_split(10, two_class(1, 5, 0.75)) == std::vector<int>{6, 4});
  CHECK(offered_load_split(7, single(1, 3)) == std::vector<int>{7});
  CHECK_THROWS_AS(offered_load_split(1, two_class(1, 5, 0.5)), infeasible_error);
}

TEST_CASE("min_power_for_qos") {
  SUBCASE("epsilon of one needs a single slot per class") {
    NetworkSpec n = toy_network();
    n.stations.push_back(two_class(4, 8.0, 0.75));
    const auto m = min_power_for_qos(n);
    CHECK(m.station_slots == std::vector<int>{1, 1, 1, 2});
    CHECK(m.total == 5);
  }
  SUBCASE("Erlang loss station") {
    NetworkSpec n;
    n.stations = {single(1, 18.5, 0, 1.0)};
    n.qos_epsilon = 0.05;
    REQUIRE(oracle::erlang_b_closed_form(13, 9.25) > 0.05);
    REQUIRE(oracle::erlang_b_closed_form(14, 9.25) <= 0.05);
    CHECK(min_power_for_qos(n).total == 14);
    n.qos_epsilon = 0.03;
    REQUIRE(oracle::erlang_b_closed_form(14, 9.25) > 0.03);
    REQUIRE(oracle::erlang_b_closed_form(15, 9.25) <= 0.03);
    CHECK(min_power_for_qos(n).total == 15);
  }
  SUBCASE("agrees with brute search and with feasibility of allocate_power") {
    NetworkSpec n = toy_network();
    n.stations.push_back(two_class(4, 6.0, 0.75));
    int previous = std::numeric_limits<int>::max();
    for (double eps : {0.02, 0.05, 0.10, 0.20}) {
      n.qos_epsilon = eps;
      const auto m = min_power_for_qos(n);
      CHECK(m.total <= previous);
      previous = m.total;
      for (std::size_t i = 0; i < n.stations.size(); ++i) {
        const auto& st = n.stations[i];
        for (std::size_t c = 0; c < st.class_count(); ++c) {
          const double cl = st.arrival_rate * st.mix.shares[c];
          int s = 1;
          while (oracle_blocking(st.classes[c], cl, s) > eps) ++s;
          CHECK(m.class_slots[i][c] == s);
        }
      }
      n.slot_budget = m.total;
      CHECK(allocate_power(n).feasible);
      n.slot_budget = m.total - 1;
      CHECK_FALSE(allocate_power(n).feasible);
    }
  }
  SUBCASE("unreachable target names the station") {
    NetworkSpec n;
    n.stations = {single(7, 30.0)};
    n.stations[0].slot_cap = 3;
    n.qos_epsilon = 0.01;
    try {
      min_power_for_qos(n);
      FAIL("expected infeasible");
    } catch (const infeasible_error& e) {
      CHECK(std::string(e.what()).find("station 7") != std::string::npos);
    }
  }
}

TEST_CASE("allocate_power") {
  SUBCASE("three-station toy equals exhaustive search") {
    for (auto obj : {Objective::unweighted, Objective::blocked_flow, Objective::station_share}) {
      NetworkSpec n = toy_network();
      n.objective = obj;
      const auto r = allocate_power(n);
      check_consistent(n, r, 9);
      const auto best = brute_force(n, 9, base_points(n), -1.0);
      CHECK(r.objective == doctest::Approx(best.objective).epsilon(1e-10));
      CHECK(objective_of(n, r) == doctest::Approx(best.objective).epsilon(1e-10));
    }
  }
  SUBCASE("random small networks with two-class stations and epsilon") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> lam(0.2, 6.0);
    for (int t = 0; t < 12; ++t) {
      NetworkSpec n;
      n.stations = {two_class(1, lam(rng), 0.75), single(2, lam(rng)), two_class(3, lam(rng), 0.4)};
      n.slot_budget = 6 + t % 5;
      n.qos_epsilon = t % 3 == 0 ? 1.0 : 0.15;
      n.objective = t % 2 ? Objective::blocked_flow : Objective::unweighted;
      const auto r = allocate_power(n);
      check_consistent(n, r, n.slot_budget);
      const auto best = brute_force(n, n.slot_budget, base_points(n), -1.0);
      CHECK(r.feasible == best.feasible);
      CHECK(objective_of(n, r) == doctest::Approx(best.objective).epsilon(1e-10));
    }
  }
  SUBCASE("identical stations share equally") {
    NetworkSpec n;
    for (int i = 1; i <= 4; ++i) n.stations.push_back(single(i, 3.0));
    n.slot_budget = 12;
    for (const auto& s : allocate_power(n).stations) CHECK(s.slots() == 3);
  }
  SUBCASE("permuting stations permutes the answer") {
    NetworkSpec n;
    n.stations = {single(1, 1.3), single(2, 4.1), single(3, 2.2), single(4, 0.7)};
    n.slot_budget = 11;
    const auto r = allocate_power(n);
    NetworkSpec p = n;
    std::reverse(p.stations.begin(), p.stations.end());
    const auto q = allocate_power(p);
    for (std::size_t i = 0; i < 4; ++i) CHECK(r.stations[i].slots() == q.stations[3 - i].slots());
  }
  SUBCASE("more budget never hurts") {
    NetworkSpec n = toy_network();
    double last = std::numeric_limits<double>::infinity();
    for (int b = 3; b <= 14; ++b) {
      n.slot_budget = b;
      const double obj = allocate_power(n).objective;
      CHECK(obj <= last + 1e-15);
      last = obj;
    }
  }
  SUBCASE("slot caps are honored") {
    NetworkSpec n = toy_network();
    n.stations[2].slot_cap = 2;
    const auto r = allocate_power(n);
    CHECK(r.stations[2].slots() <= 2);
    CHECK(r.total_slots() == 9);
  }
  SUBCASE("errors") {
    NetworkSpec n = toy_network();
    n.slot_budget = 2;
    CHECK_THROWS_AS(allocate_power(n), infeasible_error);
    n.slot_budget = 9;
    n.stations[1].id = 1;
    CHECK_THROWS_AS(allocate_power(n), domain_error);
    n = toy_network();
    n.qos_epsilon = 0.0;
    CHECK_THROWS_AS(allocate_power(n), domain_error);
    n = toy_network();
    n.stations[0].slot_cap = 1;
    n.stations[1].slot_cap = 1;
    n.stations[2].slot_cap = 1;
    CHECK_THROWS_AS(allocate_power(n), infeasible_error);
  }
}

TEST_CASE("allocate_power_and_arrivals") {
  SUBCASE("collapsed boxes reproduce allocate_power") {
    NetworkSpec n = toy_network();
    n.stations.push_back(two_class(4, 5.0, 0.75));
    n.slot_budget = 12;
    for (auto& s : n.stations) s.arrival_min = s.arrival_max = s.arrival_rate;
    const auto a = allocate_power(n);
    const auto b = allocate_power_and_arrivals(n);
    CHECK(a.objective == b.objective);
    for (std::size_t i = 0; i < a.stations.size(); ++i) CHECK(a.stations[i].class_slots == b.stations[i].class_slots);
    CHECK(b.lattice_step == 0.0);
  }
  SUBCASE("two stations on a three-point lattice equal exhaustive search") {
    for (bool conserve : {true, false})
      for (auto obj : {Objective::unweighted, Objective::blocked_flow})
        for (int budget : {2, 4, 7}) {
          NetworkSpec n;
          n.stations = {single(1, 1.0), single(2, 1.0)};
          for (auto& s : n.stations) {
            s.arrival_min = 0.5;
            s.arrival_max = 1.5;
          }
          n.lattice_divisions = 2;
          n.slot_budget = budget;
          n.objective = obj;
          n.conserve_arrivals = conserve;
          const auto r = allocate_power_and_arrivals(n);
          CHECK(r.lattice_step == doctest::Approx(0.5));
          check_consistent(n, r, budget);
          const std::vector<std::vector<double>> pts{{0.5, 1.0, 1.5}, {0.5, 1.0, 1.5}};
          const auto best = brute_force(n, budget, pts, conserve ? 2.0 : -1.0);
          CHECK(objective_of(n, r) == doctest::Approx(best.objective).epsilon(1e-10));
          if (conserve) CHECK(r.total_arrivals() == doctest::Approx(2.0).epsilon(1e-12));
        }
  }
  SUBCASE("three stations with mixed classes against exhaustive search") {
    NetworkSpec n;
    n.stations = {two_class(1, 3.0, 0.75), single(2, 2.0), single(3, 1.0)};
    n.stations[0].arrival_min = 2.0;
    n.stations[0].arrival_max = 4.0;
    n.stations[1].arrival_min = 1.0;
    n.stations[1].arrival_max = 3.0;
    n.stations[2].arrival_min = 0.0;
    n.stations[2].arrival_max = 2.0;
    n.lattice_divisions = 2;
    n.slot_budget = 8;
    n.objective = Objective::blocked_flow;
    n.qos_epsilon = 0.2;
    const auto r = allocate_power_and_arrivals(n);
    check_consistent(n, r, 8);
    const std::vector<std::vector<double>> pts{{2, 3, 4}, {1, 2, 3}, {0, 1, 2}};
    const auto best = brute_force(n, 8, pts, 6.0);
    CHECK(r.feasible == best.feasible);
    CHECK(objective_of(n, r) == doctest::Approx(best.objective).epsilon(1e-10));
  }
  SUBCASE("wider boxes never hurt") {
    NetworkSpec n = toy_network();
    n.objective = Objective::blocked_flow;
    n.lattice_step = 0.25;
    double last = std::numeric_limits<double>::infinity();
    for (double w : {0.0, 0.25, 0.5, 1.0}) {
      for (auto& s : n.stations) {
        s.arrival_min = s.arrival_rate - w;
        s.arrival_max = s.arrival_rate + w;
      }
      const auto r = allocate_power_and_arrivals(n);
      CHECK(r.objective <= last + 1e-15);
      CHECK(std::abs(r.total_arrivals() - 6.0) <= 0.25);
      last = r.objective;
    }
  }
  SUBCASE("unreachable total") {
    NetworkSpec n = toy_network();
    for (auto& s : n.stations) {
      s.arrival_min = s.arrival_rate * 0.9;
      s.arrival_max = s.arrival_rate * 1.1;
    }
    n.total_arrivals = 9.0;
    CHECK_THROWS_AS(allocate_power_and_arrivals(n), infeasible_error);
    n.stations[0].arrival_min = 2.0;
    CHECK_THROWS_AS(allocate_power_and_arrivals(n), domain_error);
  }
}

TEST_CASE("allocate_small_area") {
  const double nu = storage_recharge_rate(2, 2, 0.95);
  SUBCASE("identical stations: pooling beats the symmetric split, which is a local minimum") {
    NetworkSpec n;
    for (int i = 1; i <= 3; ++i) n.stations.push_back(single(i, 16.67 / 3, 5, nu));
    n.slot_budget = 18;
    n.objective = Objective::blocked_flow;
    n.lattice_divisions = 60;
    const std::vector<int> subset{1, 2, 3};
    const auto r = allocate_small_area(n, subset, 16.67);
    check_consistent(n, r, 18);
    CHECK(r.lattice_step == doctest::Approx(16.67 / 60).epsilon(1e-14));
    CHECK(r.total_arrivals() == doctest::Approx(16.67).epsilon(1e-12));

    const double step = 16.67 / 60;
    const ServiceClass& c = n.stations[0].classes[0];
    auto flow = [&](const std::array<int, 3>& s, const std::array<int, 3>& k) {
      double acc = 0.0;
      for (int i = 0; i < 3; ++i) acc += k[i] * step * oracle_blocking(c, k[i] * step, s[i]);
      return acc;
    };
    const double symmetric = flow({6, 6, 6}, {20, 20, 20});
    CHECK(objective_of(n, r) < symmetric);
    // Any single transfer of slots and arrivals between two stations is worse.
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        if (i == j) continue;
        for (int ds = -2; ds <= 2; ++ds)
          for (int dk = -3; dk <= 3; ++dk) {
            if (ds == 0 && dk == 0) continue;
            std::array<int, 3> s{6, 6, 6}, k{20, 20, 20};
            s[i] += ds;
            s[j] -= ds;
            k[i] += dk;
            k[j] -= dk;
            CHECK(flow(s, k) > symmetric);
          }
      }
  }
  SUBCASE("two stations with ten slots and ten arrivals against the full surface") {
    NetworkSpec n;
    n.stations = {single(1, 5.0, 5, 4.0), single(2, 5.0, 5, 4.0)};
    n.slot_budget = 10;
    n.objective = Objective::blocked_flow;
    const std::vector<int> subset{1, 2};
    const auto r = allocate_small_area(n, subset, 10.0);
    CHECK(r.lattice_step == doctest::Approx(0.5));
    const ServiceClass& c = n.stations[0].classes[0];
    auto surface = [&](int s1, double l1) {
      return l1 * oracle_blocking(c, l1, s1) + (10 - l1) * oracle_blocking(c, 10 - l1, 10 - s1);
    };
    double best = std::numeric_limits<double>::infinity();
    for (int s1 = 1; s1 <= 9; ++s1)
      for (int k = 0; k <= 20; ++k) best = std::min(best, surface(s1, 0.5 * k));
    CHECK(objective_of(n, r) == doctest::Approx(best).epsilon(1e-10));
    // (5, 5) is a local minimum of the surface.
    for (int ds = -1; ds <= 1; ++ds)
      for (int dk = -1; dk <= 1; ++dk)
        if (ds || dk) CHECK(surface(5 + ds, 5.0 + 0.5 * dk) > surface(5, 5.0));
  }
  SUBCASE("stations outside the subset keep their rates") {
    NetworkSpec n = toy_network();
    n.objective = Objective::blocked_flow;
    const std::vector<int> subset{2, 3};
    const auto r = allocate_small_area(n, subset, 5.0);
    CHECK(r.stations[0].arrival_rate == 1.0);
    CHECK(r.stations[1].arrival_rate + r.stations[2].arrival_rate == doctest::Approx(5.0));
    const std::vector<int> bad{9};
    CHECK_THROWS_AS(allocate_small_area(n, bad, 5.0), domain_error);
  }
}

TEST_CASE("min_power_with_shaping and savings") {
  NetworkSpec n;
  n.stations = {single(1, 6.0, 5, 4.0), single(2, 2.0, 5, 4.0), single(3, 0.8, 5, 4.0)};
  for (auto& s : n.stations) {
    s.arrival_min = s.arrival_rate * 0.8;
    s.arrival_max = s.arrival_rate * 1.2;
  }
  n.qos_epsilon = 0.05;
  const auto shaped = min_power_with_shaping(n);
  CHECK(shaped.feasible);
  CHECK(shaped.total_arrivals() == doctest::Approx(8.8).epsilon(1e-12));
  const auto row = power_savings(n);
  CHECK(row.slots_shaped == shaped.total_slots());
  CHECK(row.slots_shaped <= row.slots_selfish);
  CHECK(row.savings >= 0.0);
  // One slot fewer admits no feasible shaping.
  NetworkSpec less = n;
  less.slot_budget = shaped.total_slots() - 1;
  less.objective = Objective::blocked_flow;
  CHECK_FALSE(allocate_power_and_arrivals(less).feasible);

  NetworkSpec same = n;
  for (auto& s : same.stations) s.arrival_min = s.arrival_max = s.arrival_rate;
  CHECK(power_savings(same).savings == 0.0);
}

TEST_CASE("allocate_power_relax_round") {
  NetworkSpec n;
  n.stations = {single(1, 4.0, 5, 4.0), single(2, 2.0, 5, 4.0), two_class(3, 6.0, 0.75)};
  for (int budget : {4, 8, 14}) {
    n.slot_budget = budget;
    const auto r = allocate_power_relax_round(n);
    check_consistent(n, r, budget);
    CHECK(r.objective >= allocate_power(n).objective - 1e-12);
  }
}

TEST_CASE("weighted_blocking") {
  const std::vector<double> b{0.1, 0.2, 0.3};
  const std::vector<double> uniform{2, 2, 2};
  CHECK(weighted_blocking(uniform, b) == doctest::Approx(0.2));
  const std::vector<double> same{0.07, 0.07, 0.07};
  const std::vector<double> lam{1, 5, 0.5};
  CHECK(weighted_blocking(lam, same) == doctest::Approx(0.07));
  CHECK(weighted_blocking(lam, b) == doctest::Approx((0.1 + 1.0 + 0.15) / 6.5));
  const std::vector<double> zero{0, 0, 0};
  CHECK_THROWS_AS(weighted_blocking(zero, b), domain_error);
  const std::vector<double> short_b{0.1};
  CHECK_THROWS_AS(weighted_blocking(lam, short_b), domain_error);
}

TEST_CASE("profit and case comparison") {
  const CostModel cost{{3.0, 1.5}, {3.0, 1.5}, {3.5, 2.0}, {0.25, 0.15}, 0.02};
  NetworkSpec n;
  n.stations = {single(1, 1.0, 5, 4.0), two_class(2, 5.0, 0.75), two_class(3, 5.0, 0.75)};
  n.stations[0].classes[0].cost_index = 0;
  n.objective = Objective::blocked_flow;
  n.slot_budget = 9;

  SUBCASE("network profit sums station profits") {
    const auto r = allocate_power(n);
    double expected = 0.0;
    for (std::size_t i = 0; i < n.stations.size(); ++i) {
      const auto& st = n.stations[i];
      std::vector<ClassSolution> sols;
      CostModel local{{}, {}, {}, {}, cost.fixed_cost};
      for (std::size_t c = 0; c < st.class_count(); ++c) {
        sols.push_back(solve_class(st.class_pars(c, r.stations[i].class_slots[c], st.arrival_rate)));
        const auto k = st.classes[c].cost_index;
        local.revenue_grid.push_back(cost.revenue_grid[k]);
        local.revenue_storage.push_back(cost.revenue_storage[k]);
        local.blocking_cost.push_back(cost.blocking_cost[k]);
        local.acquisition_cost.push_back(cost.acquisition_cost[k]);
      }
      expected += profit(sols, local).net;
    }
    CHECK(network_profit(n, r, cost) == doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("cases share the baseline budget") {
    ComparisonInput in{n, {3, 3, 3}, {2, 3}, ClassSplit::offered_load, cost, PenaltyMode::state_weighted};
    const auto out = compare_cases(in);
    REQUIRE(out.size() == 4);
    CHECK(out[0].label == "I");
    CHECK(out[3].label == "III");
    for (const auto& c : out) CHECK(c.allocation.total_slots() == 9);
    CHECK(out[1].allocation.objective <= out[0].allocation.objective + 1e-12);
    CHECK(out[2].allocation.objective <= out[1].allocation.objective + 1e-12);
    in.baseline_slots = {3, 3};
    CHECK_THROWS_AS(compare_cases(in), domain_error);
  }
}
