#include "evnet/station_chain.hpp"

#include "evnet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace evnet {

void StoragePars::validate() const {
  if (capacity < 0) throw domain_error("storage capacity must be >= 0");
  if (capacity > 0 && !(recharge_rate > 0.0))
    throw domain_error("storage recharge rate must be > 0 when capacity > 0");
  if (!(efficiency > 0.0 && efficiency <= 1.0))
    throw domain_error("storage efficiency must lie in (0, 1]");
  if (!(power_rating > 0.0)) throw domain_error("storage power rating must be > 0");
}

double storage_recharge_rate(double service_rate, double power_rating, double efficiency,
                             double reference_efficiency) {
  if (!(service_rate > 0.0) || !(power_rating > 0.0) || !(efficiency > 0.0) ||
      !(reference_efficiency > 0.0))
    throw domain_error("storage_recharge_rate: all arguments must be positive");
  return service_rate * power_rating * efficiency / reference_efficiency;
}

void ClassPars::validate() const {
  if (!(arrival_rate >= 0.0) || !std::isfinite(arrival_rate))
    throw domain_error("arrival rate must be finite and >= 0");
  if (!(service_rate > 0.0) || !std::isfinite(service_rate))
    throw domain_error("service rate must be finite and > 0");
  if (grid_slots < 1) throw domain_error("grid slots must be >= 1");
  storage.validate();
}

std::size_t state_count(int grid_slots, int capacity) {
  const auto s = static_cast<std::size_t>(grid_slots);
  const auto r = static_cast<std::size_t>(capacity);
  return (s + 1) * (r + 1) + r * (r + 1) / 2;
}

StateSpace::StateSpace(int grid_slots, int capacity) : grid_slots_(grid_slots), capacity_(capacity) {
  if (grid_slots < 1) throw domain_error("state space needs S >= 1, got " + std::to_string(grid_slots));
  if (capacity < 0) throw domain_error("state space needs R >= 0, got " + std::to_string(capacity));
  states_.reserve(state_count(grid_slots, capacity));
  row_offset_.reserve(static_cast<std::size_t>(grid_slots + capacity) + 1);
  for (int n = 0; n <= grid_slots + capacity; ++n) {
    row_offset_.push_back(states_.size());
    for (int e = 0; e <= max_storage(n); ++e) states_.push_back({n, e});
  }
}

int StateSpace::max_storage(int in_service) const noexcept {
  return in_service <= grid_slots_ ? capacity_ : capacity_ - (in_service - grid_slots_);
}

bool StateSpace::contains(ChainState s) const noexcept {
  return s.in_service >= 0 && s.in_service <= grid_slots_ + capacity_ && s.storage >= 0 &&
         s.storage <= max_storage(s.in_service);
}

std::size_t StateSpace::index_of(ChainState s) const {
  if (!contains(s))
    throw domain_error("(" + std::to_string(s.in_service) + "," + std::to_string(s.storage) +
                       ") is not a valid state");
  return row_offset_[static_cast<std::size_t>(s.in_service)] + static_cast<std::size_t>(s.storage);
}

StateSpace build_state_space(int grid_slots, int capacity) { return StateSpace(grid_slots, capacity); }

RechargePolicy constant_recharge() {
  return [](const ChainState&, const ClassPars& p) { return p.storage.recharge_rate; };
}

Generator build_generator(const ClassPars& pars, const StateSpace& space, const RechargePolicy& recharge) {
  pars.validate();
  if (pars.grid_slots != space.grid_slots() || pars.storage.capacity != space.capacity())
    throw domain_error("generator: class parameters (S=" + std::to_string(pars.grid_slots) +
                       ", R=" + std::to_string(pars.storage.capacity) + ") do not match state space (S=" +
                       std::to_string(space.grid_slots()) + ", R=" + std::to_string(space.capacity()) + ")");

  const auto k = static_cast<Eigen::Index>(space.size());
  Generator gen{space, Eigen::MatrixXd::Zero(k, k)};
  const int S = space.grid_slots();
  const int R = space.capacity();

  for (std::size_t a = 0; a < space.size(); ++a) {
    const ChainState s = space[a];
    const auto row = static_cast<Eigen::Index>(a);
    auto add = [&](ChainState to, double rate) {
      if (rate > 0.0) gen.q(row, static_cast<Eigen::Index>(space.index_of(to))) += rate;
    };
    if (s.in_service < S)
      add({s.in_service + 1, s.storage}, pars.arrival_rate);
    else if (s.storage > 0)
      add({s.in_service + 1, s.storage - 1}, pars.arrival_rate);
    if (s.in_service > 0) add({s.in_service - 1, s.storage}, s.in_service * pars.service_rate);
    if (s.in_service < S && s.storage < R) {
      const double rate = recharge(s, pars);
      if (!(rate >= 0.0) || !std::isfinite(rate)) throw domain_error("recharge policy returned an invalid rate");
      add({s.in_service, s.storage + 1}, rate);
    }
    gen.q(row, row) = -gen.q.row(row).sum();
  }
  return gen;
}

double SteadyState::blocking_mass() const {
  double total = 0.0;
  for (std::size_t i : blocking_states) total += pi[i];
  return total;
}

SteadyState steady_state(const Generator& gen) {
  const auto n = static_cast<std::size_t>(gen.q.rows());
  if (n == 0 || gen.q.cols() != gen.q.rows()) throw domain_error("steady_state: generator must be square and non-empty");

  // Off-diagonal rates only; the diagonal is never read.
  Eigen::MatrixXd a = gen.q;
  std::vector<double> pivot(n, 0.0);
  std::vector<std::size_t> rows;
  std::vector<std::size_t> cols;

  for (std::size_t k = n - 1; k > 0; --k) {
    const auto kk = static_cast<Eigen::Index>(k);
    double s = 0.0;
    cols.clear();
    for (std::size_t j = 0; j < k; ++j) {
      const double v = a(kk, static_cast<Eigen::Index>(j));
      if (v != 0.0) {
        s += v;
        cols.push_back(j);
      }
    }
    if (!(s > 0.0))
      throw degenerate_chain_error("steady_state: state " + std::to_string(k) +
                                   " cannot reach any lower-indexed state (reducible chain)");
    pivot[k] = s;
    rows.clear();
    for (std::size_t i = 0; i < k; ++i)
      if (a(static_cast<Eigen::Index>(i), kk) != 0.0) rows.push_back(i);
    for (std::size_t i : rows) {
      const auto ii = static_cast<Eigen::Index>(i);
      const double f = a(ii, kk) / s;
      for (std::size_t j : cols) {
        if (j == i) continue;
        a(ii, static_cast<Eigen::Index>(j)) += f * a(kk, static_cast<Eigen::Index>(j));
      }
    }
  }

  SteadyState out;
  out.pi.assign(n, 0.0);
  out.pi[0] = 1.0;
  double total = 1.0;
  for (std::size_t k = 1; k < n; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    double acc = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double v = a(static_cast<Eigen::Index>(i), kk);
      if (v != 0.0) acc += out.pi[i] * v;
    }
    out.pi[k] = acc / pivot[k];
    total += out.pi[k];
  }
  for (double& p : out.pi) p /= total;

  for (std::size_t i = 0; i < n; ++i)
    if (gen.space.is_blocking(gen.space[i])) out.blocking_states.push_back(i);
  return out;
}

double balance_residual(const Generator& gen, const std::vector<double>& pi) {
  const Eigen::Map<const Eigen::RowVectorXd> p(pi.data(), static_cast<Eigen::Index>(pi.size()));
  return (p * gen.q).cwiseAbs().maxCoeff();
}

double blocking_probability(const ClassPars& pars, const RechargePolicy& recharge) {
  pars.validate();
  if (pars.arrival_rate == 0.0) return 0.0;
  const StateSpace space(pars.grid_slots, pars.storage.capacity);
  return steady_state(build_generator(pars, space, recharge)).blocking_mass();
}

double erlang_b(int servers, double offered_load) {
  if (servers < 1) throw domain_error("erlang_b: servers must be >= 1");
  if (!(offered_load >= 0.0)) throw domain_error("erlang_b: offered load must be >= 0");
  double b = 1.0;
  for (int k = 1; k <= servers; ++k) b = offered_load * b / (k + offered_load * b);
  return b;
}

}  // namespace evnet
