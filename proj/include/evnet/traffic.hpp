#pragma once

// Discrete-event simulation of a station network and the spatial demand
// model used to estimate per-station traffic intensity.

#include "evnet/station_chain.hpp"

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace evnet {

/// Portable random stream: mt19937_64 bits mapped through hand-written
/// transforms, so draws are identical on every conforming platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t bits() { return engine_(); }
  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform();
  double exponential(double rate);
  double normal();
  double gamma(double shape);

 private:
  std::mt19937_64 engine_;
};

/// Seed of substream `index` derived from `seed` with splitmix64.
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index);

/// Beta variate as G1 / (G1 + G2) with G ~ Gamma(alpha), Gamma(beta).
double sample_beta(double alpha, double beta, Rng& rng);

struct BetaSegment {
  double weight;
  double lower;
  double scale;
  double alpha;
  double beta;
};

/// Independent piecewise-beta mixtures for x and y.
struct SpatialModel {
  std::vector<BetaSegment> x_segments;
  std::vector<BetaSegment> y_segments;

  /// Rush-hour fit; segment weights are not published and default to 0.5.
  static SpatialModel seattle(double x_weight = 0.5, double y_weight = 0.5);
  void validate() const;
};

struct Position {
  double x;
  double y;
};

Position sample_position(const SpatialModel& model, Rng& rng);

struct StationSite {
  int id;
  double x;
  double y;
};

/// The eight deployment sites used for the Seattle study.
std::vector<StationSite> seattle_sites();

/// Euclidean nearest site; ties go to the lowest id.
int nearest_station(Position p, std::span<const StationSite> sites);

struct MeanCi {
  double mean = 0.0;
  double half_width = 0.0;  ///< 95% Student-t half-width over replications
};

/// Mean and 95% Student-t half-width; needs at least two values.
MeanCi mean_ci(std::span<const double> values);

struct IntensityConfig {
  std::vector<StationSite> sites;
  long vehicles = 100000;  ///< positions drawn per replication
  int replications = 30;
  std::uint64_t seed = 1;

  void validate() const;
};

struct IntensityReport {
  std::vector<int> ids;
  std::vector<MeanCi> share;
};

IntensityReport estimate_intensities(const IntensityConfig& config, const SpatialModel& model);

struct WeightFit {
  double x_weight = 0.5;  ///< weight of the first x segment
  double y_weight = 0.5;
  double sse = 0.0;       ///< squared error of the fitted shares
  std::vector<double> shares;
};

/// Least-squares fit of the two segment weights (first segment of x and of y)
/// to target shares. Shares are bilinear in the weights, so the four pure
/// segment combinations are simulated once and the weights grid-searched.
WeightFit calibrate_weights(const IntensityConfig& config, const SpatialModel& model,
                            std::span<const double> target_shares, double grid_step = 0.005);

struct SimStation {
  StationSite site;
  ClassPars pars;
};

struct SimConfig {
  std::vector<SimStation> stations;
  long horizon = 1000000;  ///< admitted vehicles per replication, network-wide
  int replications = 30;
  std::uint64_t seed = 1;
  double warmup_fraction = 0.05;

  void validate() const;
};

struct StationSimResult {
  int id = 0;
  MeanCi share;
  MeanCi blocking;
  long long arrivals = 0;  ///< post-warmup, summed over replications
  long long served = 0;
  long long blocked = 0;
};

struct SimReport {
  std::vector<StationSimResult> stations;
  MeanCi weighted_blocking;  ///< network blocked / arrivals per replication
  int replications = 0;
  std::uint64_t seed = 0;
  bool empty = false;        ///< no arrivals anywhere
};

/// Event-driven simulation with the same transition rules as the station
/// chain. Arrivals form one network Poisson stream split by rate.
SimReport simulate_network(const SimConfig& config);

}  // namespace evnet
