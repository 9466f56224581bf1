#include "evnet/traffic.hpp"

#include "evnet/errors.hpp"
#include "evnet/parallel.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <string>

namespace evnet {

double Rng::uniform() {
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::exponential(double rate) { return -std::log(uniform()) / rate; }

double Rng::normal() {
  // Marsaglia polar method; the second variate is discarded to keep no state.
  for (;;) {
    const double u = 2.0 * uniform() - 1.0;
    const double v = 2.0 * uniform() - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
  }
}

double Rng::gamma(double shape) {
  if (shape < 1.0) return gamma(shape + 1.0) * std::pow(uniform(), 1.0 / shape);
  // Marsaglia and Tsang
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + (index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double sample_beta(double alpha, double beta, Rng& rng) {
  if (!(alpha > 0.0) || !(beta > 0.0)) throw domain_error("beta shape parameters must be > 0");
  for (;;) {
    const double g1 = rng.gamma(alpha);
    const double g2 = rng.gamma(beta);
    const double x = g1 / (g1 + g2);
    if (x > 0.0 && x < 1.0) return x;
  }
}

SpatialModel SpatialModel::seattle(double x_weight, double y_weight) {
  SpatialModel m;
  m.x_segments = {{x_weight, 0.0, 44.0, 4.42, 0.763}, {1.0 - x_weight, 44.0, 137.0, 0.752, 4.7}};
  m.y_segments = {{y_weight, 0.0, 150.0, 2.42, 0.799}, {1.0 - y_weight, 150.0, 121.0, 1.07, 5.44}};
  return m;
}

void SpatialModel::validate() const {
  for (const auto* axis : {&x_segments, &y_segments}) {
    if (axis->empty()) throw domain_error("spatial model needs at least one segment per axis");
    double total = 0.0;
    double end = -std::numeric_limits<double>::infinity();
    for (const auto& s : *axis) {
      if (!(s.weight >= 0.0)) throw domain_error("segment weights must be >= 0");
      if (!(s.scale > 0.0)) throw domain_error("segment scale must be > 0");
      if (!(s.alpha > 0.0) || !(s.beta > 0.0)) throw domain_error("segment shape parameters must be > 0");
      if (s.lower < end - 1e-12) throw domain_error("segments must be ordered and non-overlapping");
      end = s.lower + s.scale;
      total += s.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) throw domain_error("segment weights must sum to 1");
  }
}

namespace {

double sample_axis(const std::vector<BetaSegment>& segments, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  const BetaSegment* pick = nullptr;
  for (const auto& s : segments) {
    if (s.weight > 0.0) pick = &s;  // fallback when rounding leaves u >= total
  }
  for (const auto& s : segments) {
    acc += s.weight;
    if (u < acc && s.weight > 0.0) {
      pick = &s;
      break;
    }
  }
  return pick->lower + pick->scale * sample_beta(pick->alpha, pick->beta, rng);
}

}  // namespace

Position sample_position(const SpatialModel& model, Rng& rng) {
  const double x = sample_axis(model.x_segments, rng);
  const double y = sample_axis(model.y_segments, rng);
  return {x, y};
}

std::vector<StationSite> seattle_sites() {
  return {{1, 60, 45}, {2, 60, 90}, {3, 60, 135}, {4, 60, 180}, {5, 60, 225}, {6, 100, 90}, {7, 100, 160}, {8, 100, 225}};
}

int nearest_station(Position p, std::span<const StationSite> sites) {
  if (sites.empty()) throw domain_error("nearest_station: no sites");
  const StationSite* best = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& s : sites) {
    const double dx = p.x - s.x;
    const double dy = p.y - s.y;
    const double d = dx * dx + dy * dy;
    if (d < best_d || (d == best_d && s.id < best->id)) {
      best = &s;
      best_d = d;
    }
  }
  return best->id;
}

MeanCi mean_ci(std::span<const double> values) {
  if (values.size() < 2) throw domain_error("confidence interval needs at least two replications");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  const boost::math::students_t t(n - 1.0);
  return {mean, boost::math::quantile(t, 0.975) * sd / std::sqrt(n)};
}

namespace {

void check_sites(const std::vector<StationSite>& sites) {
  if (sites.empty()) throw domain_error("at least one station site is required");
  std::set<int> ids;
  for (const auto& s : sites) {
    if (!ids.insert(s.id).second) throw domain_error("duplicate site id " + std::to_string(s.id));
    if (!std::isfinite(s.x) || !std::isfinite(s.y)) throw domain_error("site coordinates must be finite");
  }
}

}  // namespace

void IntensityConfig::validate() const {
  check_sites(sites);
  if (vehicles < 1) throw domain_error("vehicles per replication must be >= 1");
  if (replications < 2) throw domain_error("replications must be >= 2 for confidence intervals");
}

IntensityReport estimate_intensities(const IntensityConfig& config, const SpatialModel& model) {
  config.validate();
  model.validate();
  const std::size_t n = config.sites.size();
  std::vector<std::vector<double>> shares(static_cast<std::size_t>(config.replications), std::vector<double>(n));
  parallel_for(shares.size(), [&](std::size_t r) {
    Rng rng(substream_seed(config.seed, r));
    std::vector<long> counts(n, 0);
    for (long v = 0; v < config.vehicles; ++v) {
      const int id = nearest_station(sample_position(model, rng), config.sites);
      for (std::size_t i = 0; i < n; ++i)
        if (config.sites[i].id == id) {
          ++counts[i];
          break;
        }
    }
    for (std::size_t i = 0; i < n; ++i) shares[r][i] = static_cast<double>(counts[i]) / static_cast<double>(config.vehicles);
  });

  IntensityReport rep;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> col;
    for (const auto& row : shares) col.push_back(row[i]);
    rep.ids.push_back(config.sites[i].id);
    rep.share.push_back(mean_ci(col));
  }
  return rep;
}

WeightFit calibrate_weights(const IntensityConfig& config, const SpatialModel& model,
                            std::span<const double> target_shares, double grid_step) {
  model.validate();
  if (model.x_segments.size() != 2 || model.y_segments.size() != 2)
    throw domain_error("weight calibration needs exactly two segments per axis");
  if (target_shares.size() != config.sites.size()) throw domain_error("one target share per site is required");
  if (!(grid_step > 0.0 && grid_step <= 1.0)) throw domain_error("grid step must lie in (0, 1]");
  const double target_total = std::accumulate(target_shares.begin(), target_shares.end(), 0.0);
  if (!(target_total > 0.0)) throw domain_error("target shares must have a positive sum");

  // pure[a][b]: shares with all x mass on segment a and all y mass on segment b
  std::array<std::array<std::vector<double>, 2>, 2> pure;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      SpatialModel m = model;
      m.x_segments[0].weight = a == 0 ? 1.0 : 0.0;
      m.x_segments[1].weight = 1.0 - m.x_segments[0].weight;
      m.y_segments[0].weight = b == 0 ? 1.0 : 0.0;
      m.y_segments[1].weight = 1.0 - m.y_segments[0].weight;
      for (const auto& s : estimate_intensities(config, m).share) pure[a][b].push_back(s.mean);
    }

  const std::size_t n = config.sites.size();
  auto mix = [&](double wx, double wy) {
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i)
      s[i] = wx * wy * pure[0][0][i] + wx * (1 - wy) * pure[0][1][i] + (1 - wx) * wy * pure[1][0][i] +
             (1 - wx) * (1 - wy) * pure[1][1][i];
    return s;
  };
  WeightFit best;
  best.sse = std::numeric_limits<double>::infinity();
  const int steps = static_cast<int>(std::lround(1.0 / grid_step));
  for (int i = 0; i <= steps; ++i)
    for (int j = 0; j <= steps; ++j) {
      const double wx = std::min(1.0, i * grid_step);
      const double wy = std::min(1.0, j * grid_step);
      const auto s = mix(wx, wy);
      double sse = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double d = s[k] - target_shares[k] / target_total;
        sse += d * d;
      }
      if (sse < best.sse) best = {wx, wy, sse, s};
    }
  return best;
}

void SimConfig::validate() const {
  if (stations.empty()) throw domain_error("simulation needs at least one station");
  std::vector<StationSite> sites;
  for (const auto& s : stations) {
    sites.push_back(s.site);
    s.pars.validate();
  }
  check_sites(sites);
  if (horizon < 10000) throw domain_error("simulation horizon must be >= 10000 admitted vehicles");
  if (replications < 2) throw domain_error("replications must be >= 2 for confidence intervals");
  if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) throw domain_error("warmup fraction must lie in [0, 1)");
}

namespace {

struct RepCounts {
  std::vector<long long> arrivals, blocked;
};

// Jump chain of the network CTMC. Holding times do not affect arrival-based
// counts, so the clock is not tracked.
RepCounts run_replication(const SimConfig& cfg, std::uint64_t seed) {
  const std::size_t n = cfg.stations.size();
  Rng rng(seed);
  std::vector<int> busy(n, 0), stored(n);
  std::vector<double> cum_lambda(n);
  double total_lambda = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    stored[i] = cfg.stations[i].pars.storage.capacity;
    total_lambda += cfg.stations[i].pars.arrival_rate;
    cum_lambda[i] = total_lambda;
  }
  const auto warmup = static_cast<long long>(std::ceil(cfg.warmup_fraction * static_cast<double>(cfg.horizon)));
  RepCounts out{std::vector<long long>(n, 0), std::vector<long long>(n, 0)};
  long long admitted = 0;

  while (admitted < cfg.horizon) {
    double rate = total_lambda;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& p = cfg.stations[i].pars;
      rate += busy[i] * p.service_rate;
      if (busy[i] < p.grid_slots && stored[i] < p.storage.capacity) rate += p.storage.recharge_rate;
    }
    double u = rng.uniform() * rate;
    if (u < total_lambda) {
      const double v = rng.uniform() * total_lambda;
      std::size_t i = 0;
      while (i + 1 < n && (v >= cum_lambda[i] || cfg.stations[i].pars.arrival_rate == 0.0)) ++i;
      const auto& p = cfg.stations[i].pars;
      const bool counting = admitted >= warmup;
      if (counting) ++out.arrivals[i];
      if (busy[i] < p.grid_slots) {
        ++busy[i];
        ++admitted;
      } else if (stored[i] > 0) {
        ++busy[i];
        --stored[i];
        ++admitted;
      } else if (counting) {
        ++out.blocked[i];
      }
      continue;
    }
    u -= total_lambda;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& p = cfg.stations[i].pars;
      const double dep = busy[i] * p.service_rate;
      if (u < dep) {
        --busy[i];
        break;
      }
      u -= dep;
      if (busy[i] < p.grid_slots && stored[i] < p.storage.capacity) {
        if (u < p.storage.recharge_rate) {
          ++stored[i];
          break;
        }
        u -= p.storage.recharge_rate;
      }
    }
  }
  return out;
}

}  // namespace

SimReport simulate_network(const SimConfig& config) {
  config.validate();
  const std::size_t n = config.stations.size();
  SimReport rep;
  rep.replications = config.replications;
  rep.seed = config.seed;

  double total_lambda = 0.0;
  for (const auto& s : config.stations) total_lambda += s.pars.arrival_rate;
  if (total_lambda == 0.0) {
    rep.empty = true;
    for (const auto& s : config.stations) rep.stations.push_back({s.site.id, {}, {}, 0, 0, 0});
    return rep;
  }

  std::vector<RepCounts> reps(static_cast<std::size_t>(config.replications));
  parallel_for(reps.size(), [&](std::size_t r) { reps[r] = run_replication(config, substream_seed(config.seed, r)); });

  std::vector<double> network(reps.size());
  for (std::size_t r = 0; r < reps.size(); ++r) {
    const long long a = std::accumulate(reps[r].arrivals.begin(), reps[r].arrivals.end(), 0LL);
    const long long b = std::accumulate(reps[r].blocked.begin(), reps[r].blocked.end(), 0LL);
    network[r] = a > 0 ? static_cast<double>(b) / static_cast<double>(a) : 0.0;
  }
  rep.weighted_blocking = mean_ci(network);

  for (std::size_t i = 0; i < n; ++i) {
    StationSimResult s;
    s.id = config.stations[i].site.id;
    std::vector<double> share(reps.size()), blocking(reps.size());
    for (std::size_t r = 0; r < reps.size(); ++r) {
      const long long a = reps[r].arrivals[i];
      const long long all = std::accumulate(reps[r].arrivals.begin(), reps[r].arrivals.end(), 0LL);
      share[r] = all > 0 ? static_cast<double>(a) / static_cast<double>(all) : 0.0;
      blocking[r] = a > 0 ? static_cast<double>(reps[r].blocked[i]) / static_cast<double>(a) : 0.0;
      s.arrivals += a;
      s.blocked += reps[r].blocked[i];
    }
    s.served = s.arrivals - s.blocked;
    s.share = mean_ci(share);
    s.blocking = mean_ci(blocking);
    rep.stations.push_back(s);
  }
  return rep;
}

}  // namespace evnet
