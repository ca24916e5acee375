#ifndef LEIBENSON_PROPAGATION_HPP
#define LEIBENSON_PROPAGATION_HPP

#include <vector>

#include "leibenson/time_integration.hpp"

namespace leibenson {

struct SupportTrace {
  std::vector<double> times;
  std::vector<double> support_radius;  ///< outermost node with u > threshold, 0 if none
  double threshold = 0.0;
  double domain_radius = 0.0;
};

SupportTrace track_support(const Trajectory& traj, const RadialGrid& grid, double u_thresh);
/// Threshold relative to the initial maximum (1e-8 by default).
SupportTrace track_support_relative(const Trajectory& traj, const RadialGrid& grid,
                                    double relative = 1e-8);

struct RateWindow {
  double min_growth = 2.0;     ///< skip samples with support below this multiple of the initial
  double max_fraction = 0.9;   ///< and above this fraction of the domain radius
  int min_samples = 10;
};

struct RateFit {
  double beta_hat = 0.0;
  double beta_theory = 0.0;
  double rel_err = 0.0;
  double alpha = 0.0;   ///< volume growth exponent used in beta_theory
  double sigma = 0.0;
  double t_lo = 0.0;
  double t_hi = 0.0;
  int samples = 0;
};

/// sigma = 1 when delta < 1, otherwise delta + 0.1 rounded up to one decimal.
double default_sigma(const LeibensonParams& params);

/// beta = p + alpha delta / sigma.
double rate_exponent(const LeibensonParams& params, double alpha, double sigma);

/// Log-log least squares of support radius against time on the asymptotic window.
/// Needs delta > 0, sigma >= 1 and sigma >= delta. Throws DomainError when fewer than
/// window.min_samples samples survive (the front reached the boundary too early).
RateFit fit_rate(const SupportTrace& trace, const LeibensonParams& params, const ModelManifold& m,
                 double sigma, const RateWindow& window = {});

/// First time the maximum over r < B0_radius/2 exceeds eps_dead (log-interpolated between
/// snapshots), or the final time if it never does. u(., 0) must vanish on r < B0_radius.
double dead_core_time(const Trajectory& traj, const RadialGrid& grid, double B0_radius,
                      double eps_dead);

/// Least-squares slope and intercept of y against x.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace leibenson

#endif  // LEIBENSON_PROPAGATION_HPP
