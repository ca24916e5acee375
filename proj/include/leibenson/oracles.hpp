#ifndef LEIBENSON_ORACLES_HPP
#define LEIBENSON_ORACLES_HPP

// Self-similar reference solutions where d_t u = Delta_p u^q reduces to a classical equation.
// For delta = q(p-1) - 1 > 0 the similarity ansatz u = tau^{-n b} f(r tau^{-b}) gives
//   u(r, t) = tau^{-n b} (C - k xi^{p/(p-1)})_+^{(p-1)/delta},   xi = r tau^{-b},
//   b = 1/(p + n delta),   k = delta b^{1/(p-1)} / (p q),          tau = t + t_offset.
// Heat (p = 2, q = 1): the Gaussian kernel with total mass M.

#include <string>

#include "leibenson/grid.hpp"

namespace leibenson {

enum class BarenblattFamily { porous_medium, p_laplace, heat };

std::string to_string(BarenblattFamily f);
BarenblattFamily parse_family(const std::string& name);

struct BarenblattProfile {
  BarenblattFamily family = BarenblattFamily::porous_medium;
  int n = 1;
  double p = 2.0;
  double q = 2.0;
  /// Height constant C for the slow families, total mass for heat.
  double scale = 1.0;
  double t_offset = 1.0;

  LeibensonParams params() const { return {p, q}; }
  bool compact() const { return family != BarenblattFamily::heat; }
};

/// Validates family/exponent consistency (porous medium: p = 2, q > 1; p-Laplace: q = 1, p > 2;
/// heat: p = 2, q = 1) and returns the profile. Throws ConfigError otherwise.
BarenblattProfile make_barenblatt(BarenblattFamily family, int n, double p, double q, double scale,
                                  double t_offset);

/// Support exponent b: the free boundary moves like tau^b.
double similarity_exponent(const BarenblattProfile& profile);

/// Value at radius r and time t (tau = t + t_offset must be > 0).
double evaluate_barenblatt(const BarenblattProfile& profile, double r, double t);

/// Free-boundary radius at time t; infinity for the heat family.
double barenblatt_support(const BarenblattProfile& profile, double t);

/// Oracle sampled on the grid at time t with the Dirichlet node set to the oracle value.
StateField sample_barenblatt(const BarenblattProfile& profile, const RadialGrid& grid, double t);

/// Largest nodal residual |(u(t+dt) - u(t))/dt - L(u(t+dt))| over nodes with r below
/// interior_fraction times the support radius (times R for the heat family), with the oracle
/// sampled on the grid. The grid must be Euclidean of the profile's dimension.
double oracle_residual(const BarenblattProfile& profile, const RadialGrid& grid, double t, double dt,
                       double interior_fraction = 0.8);

}  // namespace leibenson

#endif  // LEIBENSON_ORACLES_HPP
