#pragma once

// Quadratic response surface for station blocking probability, fitted on the
// logit scale over (S, R, nu, lambda) with mu held fixed.

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace evnet {

struct RsmPoint {
  double slots = 0.0;      ///< S
  double capacity = 0.0;   ///< R
  double recharge = 0.0;   ///< nu
  double arrival = 0.0;    ///< lambda
};

inline constexpr std::size_t kRsmTerms = 15;

/// Coefficients in fixed order: intercept; S, R, nu, lambda; SR, S nu, S lambda,
/// R nu, R lambda, nu lambda; S^2, R^2, nu^2, lambda^2.
struct RsmCoefficients {
  std::array<double, kRsmTerms> values{};

  static const std::array<const char*, kRsmTerms>& names();
  /// The published fit for mu = 2.
  static RsmCoefficients published();

  std::string to_csv() const;
  static RsmCoefficients from_csv(const std::string& text);
};

std::array<double, kRsmTerms> rsm_basis(const RsmPoint& x);

struct ClampedLogit {
  double value;
  bool clamped;
};

/// log(p / (1 - p)); requires 0 < p < 1.
double logit(double p);
/// logit with p first clamped into [eps, 1 - eps].
ClampedLogit clamped_logit(double p, double eps = 1e-9);
/// 1 / (1 + exp(-y)), kept strictly inside (0, 1).
double inverse_logit(double y);

/// Quadratic form on the logit scale.
double rsm_logit(const RsmCoefficients& c, const RsmPoint& x);
/// Blocking probability estimate; exactly 0 when lambda == 0.
double eval_rsm(const RsmCoefficients& c, const RsmPoint& x);

/// Gradient of the logit-scale surface with respect to (S, R, nu, lambda).
Eigen::Vector4d rsm_jacobian(const RsmCoefficients& c, const RsmPoint& x);
/// Constant Hessian of the logit-scale surface.
Eigen::Matrix4d rsm_hessian(const RsmCoefficients& c);
/// Gradient of eval_rsm itself (probability scale).
Eigen::Vector4d rsm_probability_gradient(const RsmCoefficients& c, const RsmPoint& x);

struct GridAxis {
  double lower;
  double upper;
  double step;

  std::vector<double> values(int stride = 1) const;
};

/// Factorial design over S, R, lambda, nu. Strides thin each axis by taking
/// every k-th level.
struct DesignGrid {
  GridAxis slots{1, 15, 1};
  GridAxis capacity{1, 15, 1};
  GridAxis arrival{0.25, 30, 0.25};
  GridAxis recharge{2, 10, 1};
  double service_rate = 2.0;
  std::array<int, 4> stride{1, 1, 4, 1};  ///< S, R, lambda, nu

  static DesignGrid full() {
    DesignGrid g;
    g.stride = {1, 1, 1, 1};
    return g;
  }

  std::vector<RsmPoint> points() const;
  bool contains(const RsmPoint& x) const;
};

struct RsmSample {
  RsmPoint x;
  double blocking;
};

/// Solves the station chain at every grid point.
std::vector<RsmSample> generate_samples(const DesignGrid& grid);

struct FitReport {
  RsmCoefficients coefficients;
  double r_square_logit = 0.0;
  double r_square_probability = 0.0;
  double rmse_logit = 0.0;
  double rmse_probability = 0.0;
  std::size_t n_points = 0;
  std::size_t clamped_points = 0;  ///< samples whose B was clamped before the logit
};

/// Ordinary least squares of logit(B) on the quadratic basis.
FitReport fit_rsm(const std::vector<RsmSample>& samples, double clamp_eps = 1e-9);

}  // namespace evnet
