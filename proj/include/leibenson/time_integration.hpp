#ifndef LEIBENSON_TIME_INTEGRATION_HPP
#define LEIBENSON_TIME_INTEGRATION_HPP

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "leibenson/grid.hpp"

namespace leibenson {

enum class Stepping { fixed, adaptive_halving };

struct TimeStepConfig {
  double dt = 1e-3;
  double t_end = 1.0;
  double newton_tol = 1e-12;  ///< relative residual in the weighted L2 norm
  int newton_max = 30;
  Stepping stepping = Stepping::adaptive_halving;
  double dt_growth = 1.0;  ///< dt is multiplied by this after every step (1 = fixed dt)
  double dt_max = std::numeric_limits<double>::infinity();
  int snapshot_every = 1;

  /// Throws ConfigError on dt <= 0, newton_tol outside (0, 1e-2], newton_max < 5, ...
  void validate() const;
};

/// Per-step bookkeeping; sums over halved sub-steps when halving kicked in.
struct StepRecord {
  double time = 0.0;  ///< time at the end of the step
  double dt = 0.0;
  int newton_iterations = 0;
  int halvings = 0;
  bool picard = false;
  double residual = 0.0;        ///< final relative residual (worst sub-step)
  double mass_change = 0.0;     ///< sum_i V_i (u+_i - u_i)
  double boundary_flux_dt = 0.0;  ///< dt * flux through the Dirichlet face at u+
  double flux_work = 0.0;       ///< dt * sum_faces F_j (u+_{j+1} - u+_j) >= 0
  double dissipation = 0.0;     ///< 0.5 sum_i V_i (u+_i - u_i)^2
};

/// Stored snapshots (always including the initial and final state) plus every step record.
struct Trajectory {
  std::vector<StateField> snapshots;
  std::vector<StepRecord> steps;

  const StateField& initial() const { return snapshots.front(); }
  const StateField& final() const { return snapshots.back(); }
  std::size_t size() const { return snapshots.size(); }
  /// Linear interpolation in time between stored snapshots (clamped to the stored range).
  Eigen::VectorXd values_at(double t) const;
};

/// Default time step h^{p/(p-1)} * amplitude^{-delta} with h the smallest grid spacing.
double default_time_step(const RadialGrid& grid, const LeibensonParams& params, double amplitude);

/// One backward-Euler step of length cfg.dt: solves (u+ - u)/dt = L(u+) by damped Newton with a
/// Picard fallback, halving the step up to 2^-10 when cfg.stepping is adaptive_halving.
/// Throws SolverError when the inner solve fails. Negative values are reported, never clamped.
StateField step_implicit(const RadialGrid& grid, const StateField& state,
                         const LeibensonParams& params, const std::optional<RegLevel>& reg,
                         const TimeStepConfig& cfg, StepRecord* record = nullptr);

using StopPredicate = std::function<bool(const StateField&)>;

/// Advances from u0 to cfg.t_end (or until `stop` returns true after a step).
Trajectory integrate(const RadialGrid& grid, const StateField& u0, const LeibensonParams& params,
                     const std::optional<RegLevel>& reg, const TimeStepConfig& cfg,
                     const StopPredicate& stop = {});

struct BarrierReport {
  double lower = 0.0;      ///< 1/N
  double upper = 0.0;      ///< ||u0||_inf + 1/N
  double min_value = 0.0;  ///< over the whole trajectory (interior nodes and boundary)
  double max_value = 0.0;
  double tolerance = 1e-8;
  bool lower_ok = true;
  bool upper_ok = true;
  /// Snapshot times at which a barrier was crossed beyond the tolerance.
  std::vector<double> violation_times;
};

struct RegularizedRun {
  double N = 0.0;
  Trajectory trajectory;
  BarrierReport barrier;
};

/// Solves the truncated problem with initial data u0 + 1/N and boundary value 1/N.
/// u0 must be >= 0 and the exponents must satisfy pq >= 1.
RegularizedRun run_regularized(const RadialGrid& grid, const StateField& u0,
                               const LeibensonParams& params, const RegLevel& reg,
                               const TimeStepConfig& cfg, double barrier_tolerance = 1e-8);

/// Limit-problem run with boundary value 0 (no truncation).
Trajectory run_limit(const RadialGrid& grid, const StateField& u0, const LeibensonParams& params,
                     const TimeStepConfig& cfg, const StopPredicate& stop = {});

struct ContinuationSchedule {
  std::vector<double> N_values{10.0, 1e2, 1e3, 1e4};
  /// A level is admissible when its maximum stays below barrier_margin * N, i.e. the upper
  /// truncation never engages.
  double barrier_margin = 0.5;
  /// Stop the ladder early once a successive distance drops below this (0 = run every level).
  double tol_N = 0.0;

  void validate() const;
};

struct ContinuationRow {
  double N = 0.0;
  double distance = std::numeric_limits<double>::quiet_NaN();  ///< to the previous level
  bool barriers_ok = true;
  bool admissible = true;
};

struct ContinuationResult {
  std::vector<RegularizedRun> levels;
  std::vector<ContinuationRow> table;
  Trajectory limit;
  double limit_distance = 0.0;  ///< limit run vs the last regularized level
  bool monotone = true;         ///< successive distances strictly decrease
  bool limit_close = true;      ///< limit_distance <= 2 * last successive distance
  bool converged = true;
  std::string message;
};

ContinuationResult run_continuation(const RadialGrid& grid, const StateField& u0,
                                    const LeibensonParams& params,
                                    const ContinuationSchedule& schedule,
                                    const TimeStepConfig& cfg);

// ---------------------------------------------------------------------------------------------
// Monitors over trajectories.

/// int_0^T sum_i V_i |a_i - b_i| dt by the trapezoid rule on a's snapshot times.
double spacetime_l1_distance(const RadialGrid& grid, const Trajectory& a, const Trajectory& b);

struct ComparisonReport {
  double initial_gap = 0.0;  ///< sum V (v0 - u0)_+^2
  double max_gap = 0.0;      ///< max over snapshots of sum V (v - u)_+^2
  double slack = 0.0;        ///< initial_gap - max_gap
  bool passed(double tol = 1e-8) const { return slack >= -tol; }
};

/// Checks int (v - u)_+^2 (t) <= int (v0 - u0)_+^2 for a supersolution trajectory u and v.
ComparisonReport comparison_monitor(const RadialGrid& grid, const Trajectory& u,
                                    const Trajectory& v);

struct NormMonotonicity {
  std::vector<double> lambdas;
  Eigen::MatrixXd norms;                 ///< snapshots x lambdas
  std::vector<double> max_increase;      ///< largest step-to-step increase per lambda
  double tolerance = 1e-8;
  bool passed() const;
};

NormMonotonicity norm_monotonicity(const RadialGrid& grid, const Trajectory& traj,
                                   const std::vector<double>& lambdas, double tolerance = 1e-8);

struct EnergyBalance {
  double energy_change = 0.0;  ///< [sum V G(u)]_0^T, G(s) = s^2/2 - b s
  double flux_work = 0.0;      ///< sum over steps of dt <A(u, grad u), grad u>
  double dissipation = 0.0;    ///< backward-Euler dissipation
  double relative_defect = 0.0;
};

/// Discrete analogue of [int G(u)]_0^t + int <A, grad u> g'(u) = 0 with g(s) = s - boundary value.
EnergyBalance energy_balance(const RadialGrid& grid, const Trajectory& traj);

/// max over steps of |mass_change - boundary_flux_dt| / sum V |u0|.
double mass_accounting_defect(const RadialGrid& grid, const Trajectory& traj);

double trajectory_min(const Trajectory& traj);
double trajectory_max(const Trajectory& traj);

}  // namespace leibenson

#endif  // LEIBENSON_TIME_INTEGRATION_HPP
