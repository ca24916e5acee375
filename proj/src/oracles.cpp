#include "leibenson/oracles.hpp"

#include <cmath>
#include <numbers>

#include "leibenson/errors.hpp"

namespace leibenson {

std::string to_string(BarenblattFamily f) {
  switch (f) {
    case BarenblattFamily::porous_medium: return "porous-medium";
    case BarenblattFamily::p_laplace: return "p-laplace";
    case BarenblattFamily::heat: return "heat";
  }
  return "unknown";
}

BarenblattFamily parse_family(const std::string& name) {
  if (name == "porous-medium") return BarenblattFamily::porous_medium;
  if (name == "p-laplace") return BarenblattFamily::p_laplace;
  if (name == "heat") return BarenblattFamily::heat;
  throw ConfigError("unknown Barenblatt family '" + name +
                    "' (expected porous-medium, p-laplace or heat)");
}

BarenblattProfile make_barenblatt(BarenblattFamily family, int n, double p, double q, double scale,
                                  double t_offset) {
  if (n < 1) throw ConfigError("Barenblatt dimension must be >= 1");
  if (!(scale >= 0.0)) throw ConfigError("Barenblatt scale must be >= 0");
  if (!(t_offset > 0.0)) throw ConfigError("Barenblatt t_offset must be > 0");
  switch (family) {
    case BarenblattFamily::porous_medium:
      if (p != 2.0 || !(q > 1.0)) throw ConfigError("porous-medium family needs p = 2 and q > 1");
      break;
    case BarenblattFamily::p_laplace:
      if (q != 1.0 || !(p > 2.0)) throw ConfigError("p-laplace family needs q = 1 and p > 2");
      break;
    case BarenblattFamily::heat:
      if (p != 2.0 || q != 1.0) throw ConfigError("heat family needs p = 2 and q = 1");
      break;
  }
  return {family, n, p, q, scale, t_offset};
}

double similarity_exponent(const BarenblattProfile& pr) {
  const double delta = pr.q * (pr.p - 1.0) - 1.0;
  return 1.0 / (pr.p + pr.n * delta);
}

namespace {

double tau_of(const BarenblattProfile& pr, double t) {
  const double tau = t + pr.t_offset;
  if (!(tau > 0.0)) throw DomainError("Barenblatt profile evaluated before its origin");
  return tau;
}

double k_const(const BarenblattProfile& pr) {
  const double delta = pr.q * (pr.p - 1.0) - 1.0;
  const double b = similarity_exponent(pr);
  return delta * std::pow(b, 1.0 / (pr.p - 1.0)) / (pr.p * pr.q);
}

}  // namespace

double evaluate_barenblatt(const BarenblattProfile& pr, double r, double t) {
  const double tau = tau_of(pr, t);
  r = std::abs(r);
  if (pr.family == BarenblattFamily::heat) {
    return pr.scale * std::pow(4.0 * std::numbers::pi * tau, -0.5 * pr.n) *
           std::exp(-r * r / (4.0 * tau));
  }
  const double delta = pr.q * (pr.p - 1.0) - 1.0;
  const double b = similarity_exponent(pr);
  const double xi = r * std::pow(tau, -b);
  const double core = pr.scale - k_const(pr) * std::pow(xi, pr.p / (pr.p - 1.0));
  if (core <= 0.0) return 0.0;
  return std::pow(tau, -pr.n * b) * std::pow(core, (pr.p - 1.0) / delta);
}

double barenblatt_support(const BarenblattProfile& pr, double t) {
  const double tau = tau_of(pr, t);
  if (pr.family == BarenblattFamily::heat) return std::numeric_limits<double>::infinity();
  return std::pow(pr.scale / k_const(pr), (pr.p - 1.0) / pr.p) *
         std::pow(tau, similarity_exponent(pr));
}

StateField sample_barenblatt(const BarenblattProfile& pr, const RadialGrid& grid, double t) {
  const double b = evaluate_barenblatt(pr, grid.radius(), t);
  return sample_state(grid, [&](double r) { return evaluate_barenblatt(pr, r, t); }, b, t);
}

double oracle_residual(const BarenblattProfile& pr, const RadialGrid& grid, double t, double dt,
                       double interior_fraction) {
  if (!grid.manifold.is_euclidean() || grid.manifold.dimension() != pr.n)
    throw PreconditionError("oracle profiles live on Euclidean space of their own dimension");
  if (!(dt > 0.0)) throw DomainError("oracle_residual: dt must be > 0");
  const StateField now = sample_barenblatt(pr, grid, t);
  const StateField next = sample_barenblatt(pr, grid, t + dt);
  const Eigen::VectorXd lu = apply_operator(grid, next, pr.params(), std::nullopt);
  const double reach =
      interior_fraction * std::min(barenblatt_support(pr, t), grid.radius());
  double worst = 0.0;
  for (int i = 0; i < grid.cells(); ++i) {
    if (grid.nodes[i] >= reach) break;
    worst = std::max(worst, std::abs((next.values[i] - now.values[i]) / dt - lu[i]));
  }
  return worst;
}

}  // namespace leibenson
