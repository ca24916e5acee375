#include "leibenson/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "leibenson/errors.hpp"

namespace leibenson {

SupportTrace track_support(const Trajectory& traj, const RadialGrid& grid, double u_thresh) {
  if (!(u_thresh > 0.0)) throw PreconditionError("support threshold must be > 0");
  SupportTrace out;
  out.threshold = u_thresh;
  out.domain_radius = grid.radius();
  for (const StateField& s : traj.snapshots) {
    double rho = 0.0;
    for (int i = grid.size() - 1; i >= 0; --i) {
      if (s.values[i] > u_thresh) {
        rho = grid.nodes[i];
        break;
      }
    }
    out.times.push_back(s.time);
    out.support_radius.push_back(rho);
  }
  return out;
}

SupportTrace track_support_relative(const Trajectory& traj, const RadialGrid& grid,
                                    double relative) {
  const double peak = traj.initial().values.maxCoeff();
  if (!(peak > 0.0)) {
    // Nothing to track: report an empty support at every snapshot.
    SupportTrace out = track_support(traj, grid, 1.0);
    std::fill(out.support_radius.begin(), out.support_radius.end(), 0.0);
    out.threshold = 0.0;
    return out;
  }
  return track_support(traj, grid, relative * peak);
}

double default_sigma(const LeibensonParams& params) {
  const double d = params.delta();
  if (d < 1.0) return 1.0;
  return std::ceil((d + 0.1) * 10.0 - 1e-9) / 10.0;
}

double rate_exponent(const LeibensonParams& params, double alpha, double sigma) {
  return params.p() + alpha * params.delta() / sigma;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<Eigen::Index>(x.size());
  if (n < 2 || y.size() != x.size()) throw DomainError("line fit needs >= 2 paired samples");
  Eigen::MatrixXd a(n, 2);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, 0) = x[i];
    a(i, 1) = 1.0;
    b[i] = y[i];
  }
  const Eigen::Vector2d c = a.colPivHouseholderQr().solve(b);
  return {c[0], c[1]};
}

RateFit fit_rate(const SupportTrace& trace, const LeibensonParams& params, const ModelManifold& m,
                 double sigma, const RateWindow& window) {
  if (!(params.delta() > 0.0))
    throw PreconditionError("rate fit needs slow diffusion (delta > 0), got delta = " +
                            std::to_string(params.delta()));
  if (!(sigma >= 1.0) || !(sigma >= params.delta()))
    throw PreconditionError("rate fit needs sigma >= 1 and sigma >= delta");
  if (trace.times.empty()) throw DomainError("empty support trace");

  const double rho0 = trace.support_radius.front();
  const double lo = window.min_growth * rho0;
  const double hi = window.max_fraction * trace.domain_radius;
  std::vector<double> lt, lr;
  RateFit fit;
  fit.sigma = sigma;
  for (std::size_t k = 0; k < trace.times.size(); ++k) {
    const double t = trace.times[k], rho = trace.support_radius[k];
    if (t <= 0.0 || rho <= 0.0 || rho < lo) continue;
    if (rho > hi) break;
    if (lt.empty()) fit.t_lo = t;
    fit.t_hi = t;
    lt.push_back(std::log(t));
    lr.push_back(std::log(rho));
  }
  fit.samples = static_cast<int>(lt.size());
  if (fit.samples < window.min_samples) {
    std::ostringstream msg;
    msg << "only " << fit.samples << " support samples between " << lo << " and " << hi
        << " (need " << window.min_samples << "); increase the domain radius or t_end";
    throw DomainError(msg.str());
  }
  const LineFit line = fit_line(lt, lr);
  fit.beta_hat = 1.0 / line.slope;
  if (m.is_euclidean()) {
    fit.alpha = m.dimension();
  } else {
    const double r_lo = std::exp(lr.front()), r_hi = std::exp(lr.back());
    fit.alpha = volume_growth_exponent(m, r_lo, std::max(r_hi, r_lo * 1.0001)).exponent;
  }
  fit.beta_theory = rate_exponent(params, fit.alpha, sigma);
  fit.rel_err = std::abs(fit.beta_hat - fit.beta_theory) / fit.beta_theory;
  return fit;
}

double dead_core_time(const Trajectory& traj, const RadialGrid& grid, double B0_radius,
                      double eps_dead) {
  if (!(B0_radius > 0.0) || B0_radius > grid.radius())
    throw DomainError("dead-core ball radius must lie in (0, R]");
  if (!(eps_dead > 0.0)) throw DomainError("eps_dead must be > 0");
  const StateField& first = traj.initial();
  for (int i = 0; i < grid.size() && grid.nodes[i] < B0_radius; ++i) {
    if (first.values[i] != 0.0)
      throw PreconditionError("initial data must vanish on the ball r < B0_radius");
  }
  auto core_max = [&](const StateField& s) {
    double mx = 0.0;
    for (int i = 0; i < grid.size() && grid.nodes[i] < 0.5 * B0_radius; ++i)
      mx = std::max(mx, s.values[i]);
    return mx;
  };
  double prev_t = first.time, prev_m = core_max(first);
  for (std::size_t k = 1; k < traj.size(); ++k) {
    const StateField& s = traj.snapshots[k];
    const double m = core_max(s);
    if (m > eps_dead) {
      if (prev_m <= 0.0) return s.time;
      const double w = std::log(eps_dead / prev_m) / std::log(m / prev_m);
      return prev_t + w * (s.time - prev_t);
    }
    prev_t = s.time;
    prev_m = m;
  }
  return traj.final().time;
}

}  // namespace leibenson
