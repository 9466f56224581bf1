#pragma once

// Grid-power and customer allocation across a network of stations.
//
// Every station splits its grid slots into hard per-class partitions; each
// (station, class) pair behaves as an independent storage-backed loss system.
// Objectives are separable over stations, so all exact solvers are dynamic
// programs over cached per-station blocking tables.

#include "evnet/economics.hpp"
#include "evnet/metamodel.hpp"
#include "evnet/station_chain.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace evnet {

/// Shares of arrivals per customer class.
struct ClassMix {
  std::vector<double> shares;

  void validate() const;
};

struct ServiceClass {
  std::string name;
  double service_rate = 1.0;
  StoragePars storage;
  std::size_t cost_index = 0;  ///< column of this class in a network-wide CostModel
};

struct StationDemand {
  int id = 0;
  std::vector<ServiceClass> classes;
  ClassMix mix;
  double arrival_rate = 0.0;              ///< base lambda_i
  std::optional<double> arrival_min;      ///< shaping box, defaults to the base rate
  std::optional<double> arrival_max;
  std::optional<int> slot_cap;            ///< distribution-network limit on the station's slots

  void validate() const;
  std::size_t class_count() const noexcept { return classes.size(); }
  double box_min() const { return arrival_min.value_or(arrival_rate); }
  double box_max() const { return arrival_max.value_or(arrival_rate); }
  ClassPars class_pars(std::size_t c, int slots, double lambda) const;
};

enum class Objective {
  unweighted,     ///< sum of class blocking probabilities
  station_share,  ///< sum of station blocking, each station's classes weighted by their share
  blocked_flow,   ///< sum of lambda_c * B_c, the rate of blocked customers
};

struct NetworkSpec {
  std::vector<StationDemand> stations;
  int slot_budget = 0;
  double qos_epsilon = 1.0;
  Objective objective = Objective::unweighted;

  // lambda lattice
  bool conserve_arrivals = true;        ///< require sum lambda_i == total_arrivals
  std::optional<double> total_arrivals; ///< defaults to the sum of base rates
  int lattice_divisions = 20;           ///< widest box / step
  std::optional<double> lattice_step;   ///< overrides lattice_divisions

  void validate() const;
  double arrivals_total() const;
  int min_slots() const;  ///< one slot per (station, class)
};

struct StationAllocation {
  int id = 0;
  std::vector<std::string> class_names;
  std::vector<int> class_slots;
  std::vector<double> class_arrival;
  std::vector<double> class_blocking;
  double arrival_rate = 0.0;
  double blocking = 0.0;  ///< fraction of this station's arrivals blocked

  int slots() const;
};

struct AllocationResult {
  std::vector<StationAllocation> stations;
  double objective = 0.0;
  double weighted_blocking = 0.0;
  bool feasible = false;
  double lattice_step = 0.0;
  std::size_t nodes_expanded = 0;

  int total_slots() const;
  double total_arrivals() const;
};

struct Partition {
  std::vector<int> slots;
  std::vector<double> blocking;
  double objective = 0.0;
  bool feasible = true;  ///< every class meets epsilon
};

/// Splits `slots` among the station's classes to minimize the class objective.
/// Compositions violating epsilon are avoided when possible. Ties resolve to
/// the lexicographically smallest composition.
Partition partition_station(int slots, const StationDemand& station, double lambda, double epsilon = 1.0,
                            Objective objective = Objective::unweighted);

Partition partition_station(int slots, std::span<const ServiceClass> classes, const ClassMix& mix, double lambda,
                            double epsilon = 1.0, Objective objective = Objective::unweighted);

struct MinPower {
  int total = 0;
  std::vector<int> station_slots;
  std::vector<std::vector<int>> class_slots;
};

/// Smallest per-class slot counts meeting epsilon at the base arrival rates.
MinPower min_power_for_qos(const NetworkSpec& spec);

struct RelaxRoundOptions {
  RsmCoefficients coefficients = RsmCoefficients::published();
  double metamodel_service_rate = 2.0;  ///< mu the coefficients were fitted at
  int iterations = 2000;
};

/// Fixed arrival rates, slots sum to the budget (selfish customers).
AllocationResult allocate_power(const NetworkSpec& spec);

/// Continuous relaxation on the metamodel, ceiling, then greedy slot removal
/// until the budget holds again.
AllocationResult allocate_power_relax_round(const NetworkSpec& spec, const RelaxRoundOptions& options = {});

/// Slots and arrival rates jointly, rates restricted to each station's box.
AllocationResult allocate_power_and_arrivals(const NetworkSpec& spec);

/// Stations in `subset` share `subset_arrivals` freely (any lambda_i >= 0);
/// the rest keep their base rates.
AllocationResult allocate_small_area(const NetworkSpec& spec, std::span<const int> subset, double subset_arrivals);

/// Smallest budget for which some lattice point of arrival rates meets
/// epsilon everywhere, with the allocation found at that budget.
AllocationResult min_power_with_shaping(const NetworkSpec& spec);

/// sum w_i B_i with w_i = lambda_i / sum lambda.
double weighted_blocking(std::span<const double> lambdas, std::span<const double> blocking);

enum class ClassSplit {
  optimal,       ///< partition_station under the network objective
  offered_load,  ///< static split proportional to share / service rate
};

/// Largest-remainder split of `slots` proportional to rho_c / mu_c, at least
/// one slot per class; ties go to the lower class index.
std::vector<int> offered_load_split(int slots, const StationDemand& station);

/// Evaluates an explicit per-station slot vector.
AllocationResult evaluate_fixed_slots(const NetworkSpec& spec, std::span<const int> station_slots,
                                      ClassSplit split = ClassSplit::optimal);

/// Sum of station profits for an allocation.
double network_profit(const NetworkSpec& spec, const AllocationResult& result, const CostModel& cost,
                      PenaltyMode mode = PenaltyMode::state_weighted);

struct ComparisonInput {
  NetworkSpec network;              ///< budget is taken from baseline_slots
  std::vector<int> baseline_slots;  ///< Case I slots per station
  std::vector<int> small_area;      ///< station ids routed freely in Case III
  ClassSplit baseline_split = ClassSplit::offered_load;  ///< Case I does no optimization
  CostModel cost;
  PenaltyMode penalty = PenaltyMode::state_weighted;
};

struct CaseOutcome {
  std::string label;
  AllocationResult allocation;
  double net_profit = 0.0;
};

/// Case I, IIA, IIB, III on a matched slot budget.
std::vector<CaseOutcome> compare_cases(const ComparisonInput& input);

struct SavingsRow {
  double epsilon = 0.0;
  double total_arrivals = 0.0;
  int slots_selfish = 0;
  int slots_shaped = 0;
  double savings = 0.0;  ///< fraction of the selfish budget saved
};

/// Minimum power with fixed arrivals versus with arrival shaping.
SavingsRow power_savings(const NetworkSpec& spec);

}  // namespace evnet
