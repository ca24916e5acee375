#ifndef LEIBENSON_DEGIORGI_HPP
#define LEIBENSON_DEGIORGI_HPP

// Level-set energies J = int_0^t sum_{r_i < r} V_i (u_i - theta)_+^sigma over stored snapshots, the
// two-cylinder ladder r_k = (1/2 + 2^{-k-1}) R, theta_k = (1 - 2^{-k}) theta, and discrete
// versions of the Caccioppoli and norm-decay energy inequalities.

#include <optional>
#include <string>
#include <vector>

#include "leibenson/time_integration.hpp"

namespace leibenson {

struct IterationSetup {
  double sigma = 1.0;
  /// Top level; 0 means "derive from C by the equality case".
  double theta = 0.0;
  double radius = 1.0;
  double nu = 1.0;    ///< Faber-Krahn exponent
  double iota = 1.0;  ///< normalized Faber-Krahn constant (fitted; 1 unless calibrated)
  int k_max = 8;
  /// Mean-value constant. Unset: use the fitted C* of the same trajectory.
  std::optional<double> C;

  double lambda(const LeibensonParams& params) const { return sigma - params.delta(); }
  /// Throws ConfigError unless sigma > 0, lambda > 0, radius > 0, nu > 0, iota > 0, k_max >= 6.
  void validate(const LeibensonParams& params) const;
};

/// nu = p/n on Euclidean space; on other manifolds n is replaced by the volume growth exponent
/// over [radius/2, radius].
IterationSetup default_setup(const ModelManifold& m, const LeibensonParams& params, double radius,
                             double sigma);

enum class Verdict { geometric_decay, violated };
std::string to_string(Verdict v);

struct IterationTrace {
  std::vector<double> radii;
  std::vector<double> levels;
  std::vector<double> energies;
  /// A^{k-1} J_{k-1}^{1+nu} / Theta for k >= 1 (J_0 at k = 0).
  std::vector<double> recursion_bound;
  double theta = 0.0;
  double C = 0.0;
  double Theta = 0.0;
  double A_const = 0.0;
  /// Smallest rho with J_k <= rho^k J_0 for all k <= k_max.
  double rho = 0.0;
  /// J_{k_max} / J_{k_max - 1}.
  double tail_ratio = 0.0;
  Verdict verdict = Verdict::geometric_decay;
};

/// Trapezoid in time over snapshots in [t1, t2] (window ends interpolated) of
/// sum_{r_i < r} V_i (u_i - theta)_+^sigma. Throws DomainError outside the stored time range.
double level_energy(const Trajectory& traj, const RadialGrid& grid, double r, double theta,
                    double sigma, double t1, double t2);
double level_energy(const Trajectory& traj, const RadialGrid& grid, double r, double theta,
                    double sigma);

/// A = 2^{lambda nu + p(1 + nu) + (q-1)(p-1) + nu ((q-1)(p-1))_+}.
double ladder_constant(const LeibensonParams& params, double sigma, double nu);

/// Throws PreconditionError unless u(., 0) vanishes on r < setup.radius.
IterationTrace run_iteration(const Trajectory& traj, const RadialGrid& grid,
                             const LeibensonParams& params, const IterationSetup& setup);

struct MeanValueReport {
  double lhs = 0.0;     ///< max of u over r <= R/2 and the whole window
  double rhs = 0.0;     ///< (C J_0 / (iota mu(B) R^p))^{1/lambda}
  double ratio = 0.0;   ///< lhs / rhs (0 when both vanish)
  double C_star = 0.0;  ///< C turning the inequality into an equality
  double J0 = 0.0;
  double C_used = 0.0;
};

MeanValueReport mean_value_check(const Trajectory& traj, const RadialGrid& grid,
                                 const LeibensonParams& params, const IterationSetup& setup);

struct CaccioppoliReport {
  double theta0 = 0.0;
  double theta1 = 0.0;
  double r_in = 0.0;
  double r_out = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double epsilon = 0.0;  ///< Young parameter giving the smallest slack
  double c1 = 0.0;
  double c2 = 0.0;
  double slack = 0.0;    ///< (rhs - lhs) / max(|lhs|, rhs, tiny)
  bool passed = false;
};

/// Discrete energy inequality for (u - theta1)_+ with a radial cut-off equal to 1 on [0, r_in]
/// and vanishing beyond r_out, over the whole trajectory, for every Young parameter on a
/// log-spaced scan. Needs sigma >= max(p, pq).
CaccioppoliReport caccioppoli_check(const Trajectory& traj, const RadialGrid& grid,
                                    const LeibensonParams& params, double sigma, double theta0,
                                    double theta1, double r_in, double r_out, double tol = 1e-8);

struct NormDecayReport {
  double c1_fit = 0.0;  ///< min over snapshot intervals of -[sum V u^lambda] / int |grad u^alpha|^p
  int intervals = 0;    ///< intervals with a non-negligible gradient term
  double worst_increase = 0.0;
  bool passed = false;
};

/// Needs sigma >= pq and lambda = sigma - delta >= 1.
NormDecayReport norm_decay_check(const Trajectory& traj, const RadialGrid& grid,
                                 const LeibensonParams& params, double sigma, double tol = 1e-8);

}  // namespace leibenson

#endif  // LEIBENSON_DEGIORGI_HPP
