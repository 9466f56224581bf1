#pragma once

// Single-station loss model with local energy storage.
//
// A station draws a constant grid power split into S charging slots and owns a
// storage unit holding up to R full EV charges. The state (n, e) counts EVs in
// service and storage charges left. Arrivals beyond the grid slots are served
// from storage, reserving one full charge at admission; when neither a slot nor
// a stored charge is available the arrival is blocked. Idle grid power refills
// the storage one charge at a time.

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <vector>

namespace evnet {

struct StoragePars {
  int capacity = 0;             ///< R, full EV charges
  double recharge_rate = 0.0;   ///< nu, charges gained per unit time while grid power is idle
  double efficiency = 1.0;      ///< eta in (0, 1]
  double power_rating = 1.0;    ///< S_PR, multiple of one EV's charging power

  void validate() const;
};

/// Recharge rate of a storage device in EV-charge units per unit time.
///
/// The storage stores power_rating * efficiency worth of energy in the time
/// an EV with charging efficiency `reference_efficiency` takes to charge at
/// rate `service_rate`. A device matching the EV's efficiency with twice its
/// power rating therefore refills two EV charges per service time.
double storage_recharge_rate(double service_rate, double power_rating, double efficiency,
                             double reference_efficiency = 0.9);

struct ClassPars {
  double arrival_rate = 0.0;  ///< lambda
  double service_rate = 1.0;  ///< mu, per EV
  int grid_slots = 1;         ///< S
  StoragePars storage;

  void validate() const;
};

struct ChainState {
  int in_service = 0;  ///< n
  int storage = 0;     ///< e

  friend bool operator==(const ChainState&, const ChainState&) = default;
  friend auto operator<=>(const ChainState&, const ChainState&) = default;
};

/// Number of valid (n, e) pairs: (S+1)(R+1) + R(R+1)/2.
std::size_t state_count(int grid_slots, int capacity);

/// Enumerated states, ordered lexicographically by (n, e).
class StateSpace {
 public:
  StateSpace(int grid_slots, int capacity);

  int grid_slots() const noexcept { return grid_slots_; }
  int capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return states_.size(); }
  const std::vector<ChainState>& states() const noexcept { return states_; }
  const ChainState& operator[](std::size_t i) const { return states_[i]; }

  bool contains(ChainState s) const noexcept;
  /// Position of `s`; throws domain_error when `s` is not a valid state.
  std::size_t index_of(ChainState s) const;

  /// Largest storage level allowed with n EVs in service.
  int max_storage(int in_service) const noexcept;

  /// Arrival finds no free grid slot and no stored charge.
  bool is_blocking(ChainState s) const noexcept {
    return s.in_service >= grid_slots_ && s.storage == 0;
  }

 private:
  int grid_slots_;
  int capacity_;
  std::vector<ChainState> states_;
  std::vector<std::size_t> row_offset_;  // first index for each n
};

StateSpace build_state_space(int grid_slots, int capacity);

/// Rate of the (n, e) -> (n, e + 1) recharge transition. Only consulted when
/// n < S and e < R.
using RechargePolicy = std::function<double(const ChainState&, const ClassPars&)>;

/// Constant rate nu regardless of how much grid power is idle.
RechargePolicy constant_recharge();

struct Generator {
  StateSpace space;
  Eigen::MatrixXd q;
};

Generator build_generator(const ClassPars& pars, const StateSpace& space,
                          const RechargePolicy& recharge = constant_recharge());

struct SteadyState {
  std::vector<double> pi;
  std::vector<std::size_t> blocking_states;

  double blocking_mass() const;
};

/// Stationary distribution by Grassmann-Taksar-Heyman state reduction.
/// Throws degenerate_chain_error when some state cannot reach a lower-indexed
/// state (reducible chain).
SteadyState steady_state(const Generator& gen);

/// max_j |(pi Q)_j|
double balance_residual(const Generator& gen, const std::vector<double>& pi);

/// Long-run fraction of arrivals that are blocked. Zero when lambda == 0.
double blocking_probability(const ClassPars& pars,
                            const RechargePolicy& recharge = constant_recharge());

/// Erlang-B loss probability for `servers` servers at offered load a = lambda / mu.
double erlang_b(int servers, double offered_load);

}  // namespace evnet
