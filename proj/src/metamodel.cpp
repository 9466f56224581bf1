#include "evnet/metamodel.hpp"

#include "evnet/errors.hpp"
#include "evnet/parallel.hpp"
#include "evnet/station_chain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>

namespace evnet {

const std::array<const char*, kRsmTerms>& RsmCoefficients::names() {
  static const std::array<const char*, kRsmTerms> n{
      "intercept", "S",        "R",    "nu",        "lambda", "S_R", "S_nu", "S_lambda",
      "R_nu",      "R_lambda", "nu_lambda", "S2",   "R2",     "nu2", "lambda2"};
  return n;
}

RsmCoefficients RsmCoefficients::published() {
  return {{-3.990, -2.666, -1.6152, -0.1492, 3.840, -0.0645, -0.002, 0.209, -0.0078, 0.094, 0.003, -0.0175, 0.055,
           0.0089, -0.271}};
}

std::string RsmCoefficients::to_csv() const {
  std::string out;
  for (std::size_t i = 0; i < kRsmTerms; ++i) {
    if (i) out += ',';
    out += names()[i];
  }
  out += '\n';
  char buf[40];
  for (std::size_t i = 0; i < kRsmTerms; ++i) {
    if (i) out += ',';
    std::snprintf(buf, sizeof buf, "%.17g", values[i]);
    out += buf;
  }
  out += '\n';
  return out;
}

RsmCoefficients RsmCoefficients::from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string header, row;
  if (!std::getline(in, header) || !std::getline(in, row))
    throw config_error("coefficient CSV needs a header row and a value row");
  if (!header.empty() && header.back() == '\r') header.pop_back();
  std::string expected;
  for (std::size_t i = 0; i < kRsmTerms; ++i) {
    if (i) expected += ',';
    expected += names()[i];
  }
  if (header != expected) throw config_error("coefficient CSV header must be: " + expected);

  RsmCoefficients c;
  std::istringstream cells(row);
  std::string cell;
  std::size_t i = 0;
  while (std::getline(cells, cell, ',')) {
    if (i >= kRsmTerms) throw config_error("coefficient CSV has more than 15 values");
    try {
      std::size_t used = 0;
      c.values[i] = std::stod(cell, &used);
      while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw config_error(std::string("coefficient CSV: bad value for ") + names()[i] + ": '" + cell + "'");
    }
    if (!std::isfinite(c.values[i])) throw config_error(std::string("coefficient CSV: non-finite ") + names()[i]);
    ++i;
  }
  if (i != kRsmTerms) throw config_error("coefficient CSV has " + std::to_string(i) + " values, expected 15");
  return c;
}

std::array<double, kRsmTerms> rsm_basis(const RsmPoint& x) {
  const double s = x.slots, r = x.capacity, v = x.recharge, l = x.arrival;
  return {1.0, s, r, v, l, s * r, s * v, s * l, r * v, r * l, v * l, s * s, r * r, v * v, l * l};
}

double logit(double p) {
  if (!(p > 0.0 && p < 1.0)) throw domain_error("logit: argument must lie in (0, 1)");
  return std::log(p / (1.0 - p));
}

ClampedLogit clamped_logit(double p, double eps) {
  const double q = std::clamp(p, eps, 1.0 - eps);
  return {std::log(q / (1.0 - q)), q != p};
}

double inverse_logit(double y) {
  const double p = y >= 0.0 ? 1.0 / (1.0 + std::exp(-y)) : std::exp(y) / (1.0 + std::exp(y));
  return std::clamp(p, std::numeric_limits<double>::denorm_min(), std::nextafter(1.0, 0.0));
}

double rsm_logit(const RsmCoefficients& c, const RsmPoint& x) {
  const auto b = rsm_basis(x);
  double y = 0.0;
  for (std::size_t i = 0; i < kRsmTerms; ++i) y += c.values[i] * b[i];
  return y;
}

double eval_rsm(const RsmCoefficients& c, const RsmPoint& x) {
  if (x.arrival == 0.0) return 0.0;
  return inverse_logit(rsm_logit(c, x));
}

Eigen::Vector4d rsm_jacobian(const RsmCoefficients& c, const RsmPoint& x) {
  const auto& k = c.values;
  const double s = x.slots, r = x.capacity, v = x.recharge, l = x.arrival;
  return {k[1] + k[5] * r + k[6] * v + k[7] * l + 2 * k[11] * s,
          k[2] + k[5] * s + k[8] * v + k[9] * l + 2 * k[12] * r,
          k[3] + k[6] * s + k[8] * r + k[10] * l + 2 * k[13] * v,
          k[4] + k[7] * s + k[9] * r + k[10] * v + 2 * k[14] * l};
}

Eigen::Matrix4d rsm_hessian(const RsmCoefficients& c) {
  const auto& k = c.values;
  Eigen::Matrix4d h;
  h << 2 * k[11], k[5], k[6], k[7],  //
      k[5], 2 * k[12], k[8], k[9],   //
      k[6], k[8], 2 * k[13], k[10],  //
      k[7], k[9], k[10], 2 * k[14];
  return h;
}

Eigen::Vector4d rsm_probability_gradient(const RsmCoefficients& c, const RsmPoint& x) {
  if (x.arrival == 0.0) return Eigen::Vector4d::Zero();
  const double p = inverse_logit(rsm_logit(c, x));
  return p * (1.0 - p) * rsm_jacobian(c, x);
}

std::vector<double> GridAxis::values(int stride) const {
  if (!(step > 0.0) || upper < lower) throw domain_error("grid axis needs step > 0 and upper >= lower");
  if (stride < 1) throw domain_error("grid stride must be >= 1");
  const auto levels = static_cast<long>(std::floor((upper - lower) / step + 1e-9)) + 1;
  std::vector<double> out;
  for (long i = 0; i < levels; i += stride) out.push_back(lower + static_cast<double>(i) * step);
  return out;
}

std::vector<RsmPoint> DesignGrid::points() const {
  std::vector<RsmPoint> out;
  const auto ss = slots.values(stride[0]);
  const auto rs = capacity.values(stride[1]);
  const auto ls = arrival.values(stride[2]);
  const auto vs = recharge.values(stride[3]);
  out.reserve(ss.size() * rs.size() * ls.size() * vs.size());
  for (double s : ss)
    for (double r : rs)
      for (double v : vs)
        for (double l : ls) out.push_back({s, r, v, l});
  return out;
}

bool DesignGrid::contains(const RsmPoint& x) const {
  auto in = [](const GridAxis& a, double v) { return v >= a.lower && v <= a.upper; };
  return in(slots, x.slots) && in(capacity, x.capacity) && in(recharge, x.recharge) && in(arrival, x.arrival);
}

std::vector<RsmSample> generate_samples(const DesignGrid& grid) {
  const auto pts = grid.points();
  std::vector<RsmSample> out(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) {
    const RsmPoint& x = pts[i];
    ClassPars p;
    p.arrival_rate = x.arrival;
    p.service_rate = grid.service_rate;
    p.grid_slots = static_cast<int>(std::lround(x.slots));
    p.storage.capacity = static_cast<int>(std::lround(x.capacity));
    p.storage.recharge_rate = x.recharge;
    out[i] = {x, blocking_probability(p)};
  });
  return out;
}

FitReport fit_rsm(const std::vector<RsmSample>& samples, double clamp_eps) {
  const auto n = static_cast<Eigen::Index>(samples.size());
  if (samples.size() < kRsmTerms)
    throw singular_design_error("fit_rsm: need at least 15 samples, got " + std::to_string(samples.size()));

  FitReport rep;
  rep.n_points = samples.size();
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(kRsmTerms));
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = samples[static_cast<std::size_t>(i)];
    if (!(s.blocking >= 0.0 && s.blocking < 1.0))
      throw domain_error("fit_rsm: blocking values must lie in [0, 1)");
    const auto b = rsm_basis(s.x);
    for (std::size_t j = 0; j < kRsmTerms; ++j) x(i, static_cast<Eigen::Index>(j)) = b[j];
    const auto t = clamped_logit(s.blocking, clamp_eps);
    y(i) = t.value;
    if (t.clamped) ++rep.clamped_points;
  }

  // Column scaling keeps the pivoting threshold meaningful across terms whose
  // magnitudes differ by orders of magnitude.
  Eigen::VectorXd scale = x.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < scale.size(); ++j)
    if (scale(j) == 0.0) scale(j) = 1.0;
  const Eigen::MatrixXd xs = x * scale.cwiseInverse().asDiagonal();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xs);
  qr.setThreshold(1e-10);
  if (qr.rank() < static_cast<Eigen::Index>(kRsmTerms)) {
    std::string missing;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index j = qr.rank(); j < perm.size(); ++j) {
      if (!missing.empty()) missing += ", ";
      missing += RsmCoefficients::names()[static_cast<std::size_t>(perm(j))];
    }
    throw singular_design_error("fit_rsm: design has rank " + std::to_string(qr.rank()) +
                                " < 15; not identifiable: " + missing);
  }
  const Eigen::VectorXd beta = qr.solve(y).cwiseQuotient(scale);
  for (std::size_t j = 0; j < kRsmTerms; ++j) rep.coefficients.values[j] = beta(static_cast<Eigen::Index>(j));

  const Eigen::VectorXd fitted = x * beta;
  const double mean_y = y.mean();
  const double sse = (y - fitted).squaredNorm();
  const double sst = (y.array() - mean_y).matrix().squaredNorm();
  rep.r_square_logit = sst > 0.0 ? std::clamp(1.0 - sse / sst, 0.0, 1.0) : 1.0;
  rep.rmse_logit = std::sqrt(sse / static_cast<double>(n));

  double sse_p = 0.0, sum_p = 0.0;
  for (const auto& s : samples) sum_p += s.blocking;
  const double mean_p = sum_p / static_cast<double>(n);
  double sst_p = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double b = samples[static_cast<std::size_t>(i)].blocking;
    const double d = inverse_logit(fitted(i)) - b;
    sse_p += d * d;
    sst_p += (b - mean_p) * (b - mean_p);
  }
  rep.r_square_probability = sst_p > 0.0 ? std::clamp(1.0 - sse_p / sst_p, 0.0, 1.0) : 1.0;
  rep.rmse_probability = std::sqrt(sse_p / static_cast<double>(n));
  return rep;
}

}  // namespace evnet
