#include "evnet/economics.hpp"

#include "evnet/errors.hpp"

#include <string>

namespace evnet {

void CostModel::validate() const {
  const std::size_t c = revenue_grid.size();
  if (revenue_storage.size() != c || blocking_cost.size() != c || acquisition_cost.size() != c)
    throw domain_error("cost model: per-class vectors must all have the same length");
  auto nonneg = [](const std::vector<double>& v, const char* name) {
    for (double x : v)
      if (!(x >= 0.0)) throw domain_error(std::string("cost model: ") + name + " must be >= 0");
  };
  nonneg(revenue_grid, "revenue_grid");
  nonneg(revenue_storage, "revenue_storage");
  nonneg(blocking_cost, "blocking_cost");
  nonneg(acquisition_cost, "acquisition_cost");
  if (!(fixed_cost >= 0.0)) throw domain_error("cost model: fixed_cost must be >= 0");
}

StateClassification classify_states(const StateSpace& space) {
  StateClassification out;
  out.ev_count.reserve(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) {
    const ChainState s = space[i];
    out.ev_count.push_back(s.in_service);
    (s.in_service <= space.grid_slots() ? out.grid : out.storage).push_back(i);
    if (space.is_blocking(s)) out.blocking.push_back(i);
  }
  return out;
}

ClassSolution solve_class(const ClassPars& pars) {
  pars.validate();
  StateSpace space(pars.grid_slots, pars.storage.capacity);
  if (pars.arrival_rate > 0.0) {
    auto steady = steady_state(build_generator(pars, space));
    return {pars, std::move(space), std::move(steady)};
  }
  SteadyState idle;
  idle.pi.assign(space.size(), 0.0);
  idle.pi[space.index_of({0, pars.storage.capacity})] = 1.0;
  for (std::size_t i = 0; i < space.size(); ++i)
    if (space.is_blocking(space[i])) idle.blocking_states.push_back(i);
  return {pars, std::move(space), std::move(idle)};
}

ProfitBreakdown profit(std::span<const ClassSolution> classes, const CostModel& cost, PenaltyMode mode) {
  cost.validate();
  if (classes.size() != cost.class_count())
    throw domain_error("profit: " + std::to_string(classes.size()) + " class solutions but cost model has " +
                       std::to_string(cost.class_count()) + " classes");

  ProfitBreakdown out;
  out.capital_cost = cost.fixed_cost;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    const auto& sol = classes[c];
    const auto& pi = sol.steady.pi;
    if (pi.size() != sol.space.size()) throw domain_error("profit: steady state does not match its state space");
    const auto sets = classify_states(sol.space);

    for (std::size_t s : sets.grid) out.grid_revenue += cost.revenue_grid[c] * sets.ev_count[s] * pi[s];
    for (std::size_t s : sets.storage) out.storage_revenue += cost.revenue_storage[c] * sets.ev_count[s] * pi[s];
    for (std::size_t s : sets.blocking) {
      const double weight = mode == PenaltyMode::state_weighted ? sets.ev_count[s] : sol.pars.arrival_rate;
      out.blocking_penalty += cost.blocking_cost[c] * weight * pi[s];
    }
    out.capital_cost += sol.pars.storage.capacity * cost.acquisition_cost[c];
  }
  out.net = out.grid_revenue + out.storage_revenue - out.capital_cost - out.blocking_penalty;
  return out;
}

}  // namespace evnet
