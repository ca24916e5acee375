#include "leibenson/degiorgi.hpp"

#include <algorithm>
#include <cmath>

#include "leibenson/errors.hpp"

namespace leibenson {

namespace {

double positive_part(double x) { return x > 0.0 ? x : 0.0; }

// Trapezoid in time of f(values) over [t1, t2], with the end states interpolated.
template <typename F>
double time_integral(const Trajectory& traj, double t1, double t2, F&& f) {
  const double lo = traj.initial().time, hi = traj.final().time;
  const double slop = 1e-12 * std::max(1.0, std::abs(hi));
  if (t1 < lo - slop || t2 > hi + slop || t1 > t2)
    throw DomainError("time window lies outside the stored trajectory");
  t1 = std::max(t1, lo);
  t2 = std::min(t2, hi);
  double total = 0.0;
  double prev_t = t1, prev_v = f(traj.values_at(t1));
  for (const StateField& s : traj.snapshots) {
    if (s.time <= t1 || s.time >= t2) continue;
    const double v = f(s.values);
    total += 0.5 * (v + prev_v) * (s.time - prev_t);
    prev_t = s.time;
    prev_v = v;
  }
  if (t2 > prev_t) total += 0.5 * (f(traj.values_at(t2)) + prev_v) * (t2 - prev_t);
  return total;
}

double ball_energy(const RadialGrid& grid, const Eigen::VectorXd& u, double r, double theta,
                   double sigma) {
  double s = 0.0;
  for (int i = 0; i < grid.size() && grid.nodes[i] < r; ++i) {
    const double v = u[i] - theta;
    if (v > 0.0) s += grid.cell_volumes[i] * std::pow(v, sigma);
  }
  return s;
}

// sum_j area_j h_j |(w_{j+1} - w_j) / h_j|^p
double gradient_energy(const RadialGrid& grid, const Eigen::VectorXd& w, double p) {
  double s = 0.0;
  for (int j = 0; j < grid.cells(); ++j) {
    const double g = std::abs(w[j + 1] - w[j]) / grid.spacing[j];
    if (g > 0.0) s += grid.face_areas[j] * grid.spacing[j] * std::pow(g, p);
  }
  return s;
}

void require_vanishing_start(const Trajectory& traj, const RadialGrid& grid, double radius) {
  const Eigen::VectorXd& u = traj.initial().values;
  for (int i = 0; i < grid.size() && grid.nodes[i] < radius; ++i)
    if (u[i] != 0.0) throw PreconditionError("initial data must vanish on the ball B(R)");
}

}  // namespace

void IterationSetup::validate(const LeibensonParams& params) const {
  if (!(sigma > 0.0)) throw ConfigError("diagnostics.sigma must be > 0");
  if (!(lambda(params) > 0.0)) throw ConfigError("sigma - delta must be > 0");
  if (!(radius > 0.0)) throw ConfigError("iteration radius must be > 0");
  if (!(nu > 0.0)) throw ConfigError("Faber-Krahn exponent nu must be > 0");
  if (!(iota > 0.0)) throw ConfigError("Faber-Krahn constant iota must be > 0");
  if (k_max < 6) throw ConfigError("k_max must be >= 6");
  if (C && !(*C > 0.0)) throw ConfigError("mean-value constant C must be > 0");
  if (!(theta >= 0.0)) throw ConfigError("theta must be >= 0");
}

IterationSetup default_setup(const ModelManifold& m, const LeibensonParams& params, double radius,
                             double sigma) {
  IterationSetup s;
  s.sigma = sigma;
  s.radius = radius;
  const double dim = m.is_euclidean()
                         ? static_cast<double>(m.dimension())
                         : volume_growth_exponent(m, 0.5 * radius, radius).exponent;
  s.nu = params.p() / dim;
  return s;
}

std::string to_string(Verdict v) {
  return v == Verdict::geometric_decay ? "geometric-decay" : "violated";
}

double level_energy(const Trajectory& traj, const RadialGrid& grid, double r, double theta,
                    double sigma, double t1, double t2) {
  if (!(r >= 0.0) || r > grid.radius() * (1.0 + 1e-12))
    throw DomainError("level_energy: radius outside [0, R]");
  if (!(theta >= 0.0)) throw DomainError("level_energy: level must be >= 0");
  return time_integral(traj, t1, t2, [&](const Eigen::VectorXd& u) {
    return ball_energy(grid, u, r, theta, sigma);
  });
}

double level_energy(const Trajectory& traj, const RadialGrid& grid, double r, double theta,
                    double sigma) {
  return level_energy(traj, grid, r, theta, sigma, traj.initial().time, traj.final().time);
}

double ladder_constant(const LeibensonParams& params, double sigma, double nu) {
  const double p = params.p(), q = params.q();
  const double lambda = sigma - params.delta();
  const double x = (q - 1.0) * (p - 1.0);
  return std::pow(2.0, lambda * nu + p * (1.0 + nu) + x + nu * positive_part(x));
}

MeanValueReport mean_value_check(const Trajectory& traj, const RadialGrid& grid,
                                 const LeibensonParams& params, const IterationSetup& setup) {
  setup.validate(params);
  const double R = setup.radius;
  const double lambda = setup.lambda(params);
  MeanValueReport rep;
  for (const StateField& s : traj.snapshots)
    for (int i = 0; i < grid.size() && grid.nodes[i] <= 0.5 * R; ++i)
      rep.lhs = std::max(rep.lhs, s.values[i]);
  rep.J0 = level_energy(traj, grid, R, 0.0, setup.sigma);
  const double scale = setup.iota * volume_of_ball(grid.manifold, R) * std::pow(R, params.p());
  rep.C_star = rep.J0 > 0.0 ? std::pow(rep.lhs, lambda) * scale / rep.J0 : 0.0;
  rep.C_used = setup.C.value_or(rep.C_star);
  rep.rhs = std::pow(rep.C_used * rep.J0 / scale, 1.0 / lambda);
  rep.ratio = rep.rhs > 0.0 ? rep.lhs / rep.rhs : (rep.lhs > 0.0 ? kInfinityNorm : 0.0);
  return rep;
}

IterationTrace run_iteration(const Trajectory& traj, const RadialGrid& grid,
                             const LeibensonParams& params, const IterationSetup& setup) {
  setup.validate(params);
  const double R = setup.radius;
  if (R > grid.radius() * (1.0 + 1e-12))
    throw DomainError("iteration radius exceeds the domain radius");
  require_vanishing_start(traj, grid, R);

  const MeanValueReport mv = mean_value_check(traj, grid, params, setup);
  const double lambda = setup.lambda(params);
  const double nu = setup.nu;
  const double scale = setup.iota * volume_of_ball(grid.manifold, R) * std::pow(R, params.p());

  IterationTrace tr;
  tr.C = setup.C.value_or(mv.C_star);
  tr.theta = setup.theta > 0.0 ? setup.theta : std::pow(tr.C * mv.J0 / scale, 1.0 / lambda);
  tr.A_const = ladder_constant(params, setup.sigma, nu);
  tr.Theta = tr.C > 0.0 ? std::pow(tr.A_const, 1.0 / nu) *
                              std::pow(scale * std::pow(tr.theta, lambda) / tr.C, nu)
                        : kInfinityNorm;

  for (int k = 0; k <= setup.k_max; ++k) {
    const double rk = (0.5 + std::ldexp(1.0, -k - 1)) * R;
    const double thk = (1.0 - std::ldexp(1.0, -k)) * tr.theta;
    tr.radii.push_back(rk);
    tr.levels.push_back(thk);
    tr.energies.push_back(level_energy(traj, grid, rk, thk, setup.sigma));
    if (k == 0) {
      tr.recursion_bound.push_back(tr.energies[0]);
    } else {
      tr.recursion_bound.push_back(std::pow(tr.A_const, k - 1) *
                                   std::pow(tr.energies[k - 1], 1.0 + nu) / tr.Theta);
    }
  }

  const double J0 = tr.energies.front();
  if (!(J0 > 0.0)) {
    tr.rho = 0.0;
    tr.tail_ratio = 0.0;
    tr.verdict = Verdict::geometric_decay;
    return tr;
  }
  bool monotone = true;
  for (int k = 1; k <= setup.k_max; ++k) {
    tr.rho = std::max(tr.rho, std::pow(tr.energies[k] / J0, 1.0 / k));
    if (tr.energies[k] > tr.energies[k - 1] * (1.0 + 1e-12)) monotone = false;
  }
  const double last = tr.energies[setup.k_max], before = tr.energies[setup.k_max - 1];
  tr.tail_ratio = before > 0.0 ? last / before : 0.0;
  // A stalled ladder (J_k tending to a positive limit) keeps rho below 1 for small k_max, so the
  // last ratio must also sit clearly below 1.
  const bool geometric = tr.rho < 1.0 && tr.tail_ratio <= std::sqrt(tr.rho);
  tr.verdict = monotone && geometric ? Verdict::geometric_decay : Verdict::violated;
  return tr;
}

CaccioppoliReport caccioppoli_check(const Trajectory& traj, const RadialGrid& grid,
                                    const LeibensonParams& params, double sigma, double theta0,
                                    double theta1, double r_in, double r_out, double tol) {
  const double p = params.p(), q = params.q();
  if (sigma < std::max(p, p * q))
    throw PreconditionError("Caccioppoli check needs sigma >= max(p, pq)");
  if (!(theta1 > theta0 && theta0 > 0.0)) throw DomainError("need theta1 > theta0 > 0");
  if (!(r_out > r_in && r_in > 0.0) || r_out > grid.radius())
    throw DomainError("cut-off radii must satisfy 0 < r_in < r_out <= R");

  const double lambda = sigma - params.delta();
  const double alpha = sigma / p;
  const double x = (q - 1.0) * (p - 1.0);
  const double ratio = theta1 / (theta1 - theta0);

  // Cut-off: 1 on [0, r_in], slope 2/(r_out - r_in), zero from the midpoint on.
  const double slope = 2.0 / (r_out - r_in);
  Eigen::VectorXd eta(grid.size());
  for (int i = 0; i < grid.size(); ++i)
    eta[i] = std::clamp(1.0 - slope * (grid.nodes[i] - r_in), 0.0, 1.0);

  auto bracket_term = [&](const Eigen::VectorXd& u) {
    double s = 0.0;
    for (int i = 0; i < grid.size(); ++i) {
      const double v = positive_part(u[i] - theta1);
      if (v > 0.0 && eta[i] > 0.0) s += grid.cell_volumes[i] * std::pow(v, lambda) * std::pow(eta[i], p);
    }
    return s;
  };
  auto grad_term = [&](const Eigen::VectorXd& u) {
    Eigen::VectorXd w(grid.size());
    for (int i = 0; i < grid.size(); ++i) w[i] = std::pow(positive_part(u[i] - theta1), alpha) * eta[i];
    return gradient_energy(grid, w, p);
  };
  auto source_term = [&](const Eigen::VectorXd& u) {
    double s = 0.0;
    for (int j = 0; j < grid.cells(); ++j) {
      const double g = std::abs(eta[j + 1] - eta[j]) / grid.spacing[j];
      if (g == 0.0) continue;
      const double v = 0.5 * (std::pow(positive_part(u[j] - theta0), sigma) +
                              std::pow(positive_part(u[j + 1] - theta0), sigma));
      s += grid.face_areas[j] * grid.spacing[j] * v * std::pow(g, p);
    }
    return s;
  };

  const double t1 = traj.initial().time, t2 = traj.final().time;
  const double bracket = bracket_term(traj.final().values) - bracket_term(traj.initial().values);
  const double grad = time_integral(traj, t1, t2, grad_term);
  const double source = time_integral(traj, t1, t2, source_term);

  CaccioppoliReport rep;
  rep.theta0 = theta0;
  rep.theta1 = theta1;
  rep.r_in = r_in;
  rep.r_out = r_out;
  const double pprime = p / (p - 1.0);
  const double eps_max = std::pow((lambda - 1.0) / p, 1.0 / pprime);
  const double base = lambda * std::pow(q, p - 1.0);
  const double mix = std::min(std::pow(2.0, 1.0 - p), std::pow(2.0, q * (p - 1.0)));
  // The inequality holds for every admissible Young parameter; keep the tightest one.
  rep.slack = kInfinityNorm;
  bool all_ok = true;
  for (int k = 1; k < 400; ++k) {
    const double eps = eps_max * std::pow(10.0, -3.0 * (1.0 - k / 400.0));
    const double core = lambda - 1.0 - p * std::pow(eps, pprime);
    if (!(core > 0.0)) continue;
    const double c1 = base * core * mix * std::pow(alpha, -p);
    const double c2 = base * (core * std::pow(alpha, -p) + p / std::pow(eps, p)) *
                      std::pow(2.0, positive_part(x));
    const double lhs = bracket + c1 * std::pow(ratio, std::min(x, 0.0)) * grad;
    const double rhs = c2 * std::pow(ratio, positive_part(x)) * source;
    const double scale = std::max({std::abs(lhs), rhs, 1e-300});
    const double slack = (rhs - lhs) / scale;
    if (lhs > rhs + tol * std::max(1.0, std::abs(rhs))) all_ok = false;
    if (slack < rep.slack) {
      rep.slack = slack;
      rep.lhs = lhs;
      rep.rhs = rhs;
      rep.epsilon = eps;
      rep.c1 = c1;
      rep.c2 = c2;
    }
  }
  rep.passed = all_ok;
  return rep;
}

NormDecayReport norm_decay_check(const Trajectory& traj, const RadialGrid& grid,
                                 const LeibensonParams& params, double sigma, double tol) {
  const double p = params.p(), q = params.q();
  const double lambda = sigma - params.delta();
  if (sigma < p * q) throw PreconditionError("norm-decay check needs sigma >= pq");
  if (lambda < 1.0) throw PreconditionError("norm-decay check needs lambda = sigma - delta >= 1");
  const double alpha = sigma / p;

  auto mass = [&](const Eigen::VectorXd& u) {
    double s = 0.0;
    for (int i = 0; i < grid.size(); ++i)
      s += grid.cell_volumes[i] * std::pow(positive_part(u[i]), lambda);
    return s;
  };
  auto grad = [&](const Eigen::VectorXd& u) {
    Eigen::VectorXd w(grid.size());
    for (int i = 0; i < grid.size(); ++i) w[i] = std::pow(positive_part(u[i]), alpha);
    return gradient_energy(grid, w, p);
  };

  NormDecayReport rep;
  rep.c1_fit = kInfinityNorm;
  const double m0 = mass(traj.initial().values);
  double prev_m = m0, prev_g = grad(traj.initial().values);
  double gscale = prev_g;
  for (std::size_t k = 1; k < traj.size(); ++k) {
    const StateField& s = traj.snapshots[k];
    const double m = mass(s.values), g = grad(s.values);
    gscale = std::max(gscale, g);
    const double dt = s.time - traj.snapshots[k - 1].time;
    const double gi = 0.5 * (g + prev_g) * dt;
    const double dm = m - prev_m;
    if (m0 > 0.0) rep.worst_increase = std::max(rep.worst_increase, dm / m0);
    if (gi > 1e-12 * gscale * dt && gi > 0.0) {
      ++rep.intervals;
      rep.c1_fit = std::min(rep.c1_fit, -dm / gi);
    }
    prev_m = m;
    prev_g = g;
  }
  if (rep.intervals == 0) rep.c1_fit = 0.0;
  rep.passed = rep.worst_increase <= tol && (rep.intervals == 0 || rep.c1_fit > 0.0);
  return rep;
}

}  // namespace leibenson
