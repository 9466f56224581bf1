#pragma once

#include "evnet/station_chain.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace evnet {

/// Per-class revenue and cost rates; vectors are indexed by customer class.
struct CostModel {
  std::vector<double> revenue_grid;      ///< per EV served from grid slots
  std::vector<double> revenue_storage;   ///< per EV served from storage
  std::vector<double> blocking_cost;     ///< per blocked EV
  std::vector<double> acquisition_cost;  ///< per storage unit
  double fixed_cost = 0.0;

  std::size_t class_count() const noexcept { return revenue_grid.size(); }
  void validate() const;
};

/// States split by how their EVs are being charged. The blocking set overlaps
/// both of the others.
struct StateClassification {
  std::vector<std::size_t> grid;      ///< n <= S
  std::vector<std::size_t> storage;   ///< n > S
  std::vector<std::size_t> blocking;  ///< e == 0 and n >= S
  std::vector<int> ev_count;          ///< i(s) for every state
};

StateClassification classify_states(const StateSpace& space);

/// One class's chain together with its stationary distribution.
struct ClassSolution {
  ClassPars pars;
  StateSpace space;
  SteadyState steady;
};

/// Solves the class chain. With no arrivals the station sits idle with a full
/// storage unit, so all mass goes to (0, R).
ClassSolution solve_class(const ClassPars& pars);

enum class PenaltyMode {
  state_weighted,  ///< C_b * i(s) * pi(s) summed over blocking states
  blocked_flow,    ///< C_b * lambda * pi(s), the rate of blocked arrivals
};

struct ProfitBreakdown {
  double grid_revenue = 0.0;
  double storage_revenue = 0.0;
  double capital_cost = 0.0;
  double blocking_penalty = 0.0;
  double net = 0.0;
};

ProfitBreakdown profit(std::span<const ClassSolution> classes, const CostModel& cost,
                       PenaltyMode mode = PenaltyMode::state_weighted);

}  // namespace evnet
