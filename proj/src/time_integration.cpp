#include "leibenson/time_integration.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "leibenson/errors.hpp"

namespace leibenson {

namespace {

constexpr int kMaxHalvings = 10;

// Thomas algorithm; the step Jacobians are column diagonally dominant M-matrices.
Eigen::VectorXd solve_tridiagonal(const Eigen::VectorXd& sub, Eigen::VectorXd diag,
                                  const Eigen::VectorXd& sup, Eigen::VectorXd rhs) {
  const Eigen::Index n = diag.size();
  for (Eigen::Index i = 1; i < n; ++i) {
    const double w = sub[i - 1] / diag[i - 1];
    diag[i] -= w * sup[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  Eigen::VectorXd x(n);
  x[n - 1] = rhs[n - 1] / diag[n - 1];
  for (Eigen::Index i = n - 2; i >= 0; --i) x[i] = (rhs[i] - sup[i] * x[i + 1]) / diag[i];
  return x;
}

// Backward-Euler system for one step, unknowns u_0 .. u_{M-1}; u_M is pinned.
class StepSystem {
 public:
  StepSystem(const RadialGrid& grid, const Eigen::VectorXd& old, const LeibensonParams& params,
             const std::optional<RegLevel>& reg, double dt)
      : grid_(grid), old_(old), params_(params), reg_(reg), dt_(dt), m_(grid.cells()) {
    double gmax = 0.0, umax = 0.0;
    for (int j = 0; j < m_; ++j)
      gmax = std::max(gmax, std::abs(old[j + 1] - old[j]) / grid.spacing[j]);
    umax = old.cwiseAbs().maxCoeff();
    eps_ = 1e-10 * std::max(gmax, 1.0);
    u_floor_ = 1e-12 * std::max(umax, 1e-300);
    old_scale_ = std::sqrt(grid.cell_volumes.dot(old.cwiseAbs2()));
  }

  // R_i = V_i (u_i - old_i) - dt (F_i - F_{i-1}), i < M.
  Eigen::VectorXd residual(const Eigen::VectorXd& u) const {
    const Eigen::VectorXd f = face_fluxes(grid_, u, params_, reg_);
    Eigen::VectorXd r(m_);
    double inflow = 0.0;
    for (int i = 0; i < m_; ++i) {
      r[i] = grid_.cell_volumes[i] * (u[i] - old_[i]) - dt_ * (f[i] - inflow);
      inflow = f[i];
    }
    return r;
  }

  // sqrt(sum R_i^2 / V_i) relative to the weighted L2 size of the states.
  double relative_norm(const Eigen::VectorXd& r, const Eigen::VectorXd& u) const {
    const double s = weighted_norm(r);
    if (s == 0.0) return 0.0;
    const double scale = std::max(old_scale_, std::sqrt(grid_.cell_volumes.dot(u.cwiseAbs2())));
    return scale > 0.0 ? s / scale : std::numeric_limits<double>::infinity();
  }

  double weighted_norm(const Eigen::VectorXd& r) const {
    double s = 0.0;
    for (int i = 0; i < m_; ++i) s += r[i] * r[i] / grid_.cell_volumes[i];
    return std::sqrt(s);
  }

  // Rounding in u alone moves R_i by about eps * sum_j |dR_i/du_j| |u_j|. With a large dt near
  // equilibrium this floor can sit above newton_tol relative to |u|.
  bool at_rounding_floor(const Eigen::VectorXd& r, const Eigen::VectorXd& u) const {
    Eigen::VectorXd dl, dr;
    flux_derivatives(u, dl, dr);
    double floor = 0.0;
    for (int i = 0; i < m_; ++i) {
      double t = grid_.cell_volumes[i] * std::abs(u[i]) +
                 dt_ * (std::abs(dl[i]) * std::abs(u[i]) + std::abs(dr[i]) * std::abs(u[i + 1]));
      if (i > 0) t += dt_ * (std::abs(dl[i - 1]) * std::abs(u[i - 1]) + std::abs(dr[i - 1]) * std::abs(u[i]));
      floor += t * t / grid_.cell_volumes[i];
    }
    return weighted_norm(r) <= 64.0 * std::numeric_limits<double>::epsilon() * std::sqrt(floor);
  }

  // dF_j/du_j and dF_j/du_{j+1} for every face.
  void flux_derivatives(const Eigen::VectorXd& u, Eigen::VectorXd& dleft,
                        Eigen::VectorXd& dright) const {
    dleft.resize(m_);
    dright.resize(m_);
    const double q = params_.q();
    for (int j = 0; j < m_; ++j) {
      const double h = grid_.spacing[j], area = grid_.face_areas[j];
      if (reg_) {
        const double mean = 0.5 * (u[j] + u[j + 1]);
        const double g = (u[j + 1] - u[j]) / h;
        const double c = reg_coefficient(mean, *reg_, params_);
        const double dc = reg_coefficient_derivative(mean, *reg_, params_);
        const double phi = limit_flux(g, params_);
        const double dphi = limit_flux_derivative(g, params_, eps_);
        dleft[j] = area * (0.5 * dc * phi - c * dphi / h);
        dright[j] = area * (0.5 * dc * phi + c * dphi / h);
      } else {
        const double w = (power_q(u[j + 1], params_) - power_q(u[j], params_)) / h;
        const double dphi = limit_flux_derivative(w, params_, eps_);
        dleft[j] = -area * dphi * dpower(u[j]) / h;
        dright[j] = area * dphi * dpower(u[j + 1]) / h;
      }
    }
    (void)q;
  }

  Eigen::VectorXd newton_direction(const Eigen::VectorXd& u, const Eigen::VectorXd& r) const {
    Eigen::VectorXd dl, dr;
    flux_derivatives(u, dl, dr);
    Eigen::VectorXd diag(m_), sub(std::max(m_ - 1, 1)), sup(std::max(m_ - 1, 1));
    for (int i = 0; i < m_; ++i) {
      diag[i] = grid_.cell_volumes[i] - dt_ * dl[i] + (i > 0 ? dt_ * dr[i - 1] : 0.0);
      if (i + 1 < m_) sup[i] = -dt_ * dr[i];
      if (i > 0) sub[i - 1] = dt_ * dl[i - 1];
    }
    return solve_tridiagonal(sub, diag, sup, -r);
  }

  // Frozen secant conductances K_j with F_j ~ K_j (u_{j+1} - u_j); K_j >= 0.
  Eigen::VectorXd picard_update(const Eigen::VectorXd& u) const {
    const Eigen::VectorXd f = face_fluxes(grid_, u, params_, reg_);
    Eigen::VectorXd dl, dr;
    flux_derivatives(u, dl, dr);
    Eigen::VectorXd k(m_);
    for (int j = 0; j < m_; ++j) {
      const double du = u[j + 1] - u[j];
      k[j] = std::abs(du) > 1e-14 * std::max(std::abs(u[j]), std::abs(u[j + 1]))
                 ? std::max(f[j] / du, 0.0)
                 : std::max(0.5 * (dr[j] - dl[j]), 0.0);
    }
    Eigen::VectorXd diag(m_), sub(std::max(m_ - 1, 1)), sup(std::max(m_ - 1, 1)), rhs(m_);
    for (int i = 0; i < m_; ++i) {
      diag[i] = grid_.cell_volumes[i] + dt_ * k[i] + (i > 0 ? dt_ * k[i - 1] : 0.0);
      rhs[i] = grid_.cell_volumes[i] * old_[i];
      if (i + 1 < m_) sup[i] = -dt_ * k[i];
      else rhs[i] += dt_ * k[i] * u[m_];
      if (i > 0) sub[i - 1] = -dt_ * k[i - 1];
    }
    Eigen::VectorXd next = u;
    next.head(m_) = solve_tridiagonal(sub, diag, sup, rhs);
    return next;
  }

 private:
  double dpower(double u) const {
    const double q = params_.q();
    if (q == 1.0) return 1.0;
    const double a = std::abs(u);
    if (q < 1.0) return q * std::pow(std::max(a, u_floor_), q - 1.0);
    return q * std::pow(a, q - 1.0);
  }

  const RadialGrid& grid_;
  const Eigen::VectorXd& old_;
  const LeibensonParams& params_;
  const std::optional<RegLevel>& reg_;
  double dt_;
  int m_;
  double eps_ = 0.0;
  double u_floor_ = 0.0;
  double old_scale_ = 0.0;
};

struct SolveOutcome {
  bool converged = false;
  int iterations = 0;
  bool picard = false;
  double residual = 0.0;
};

SolveOutcome solve_step(const RadialGrid& grid, const Eigen::VectorXd& old, double boundary,
                        const LeibensonParams& params, const std::optional<RegLevel>& reg,
                        double dt, const TimeStepConfig& cfg, Eigen::VectorXd& u) {
  StepSystem sys(grid, old, params, reg, dt);
  const int m = grid.cells();
  u = old;
  u[m] = boundary;
  SolveOutcome out;
  Eigen::VectorXd r = sys.residual(u);
  double rel = sys.relative_norm(r, u);
  // Residual stagnation at round-off level is accepted up to this multiple of the tolerance.
  const double stagnation_tol = 100.0 * cfg.newton_tol;

  auto norm2 = [&](const Eigen::VectorXd& v) {
    return std::sqrt((v.array().square() / grid.cell_volumes.head(m).array()).sum());
  };

  for (int it = 0; it < cfg.newton_max && rel > cfg.newton_tol; ++it) {
    ++out.iterations;
    const Eigen::VectorXd du = sys.newton_direction(u, r);
    if (!du.allFinite()) break;
    const double r0 = norm2(r);
    double step = 1.0;
    Eigen::VectorXd trial = u;
    Eigen::VectorXd rt;
    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls) {
      trial.head(m) = u.head(m) + step * du;
      rt = sys.residual(trial);
      if (rt.allFinite() && norm2(rt) <= (1.0 - 1e-4 * step) * r0) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // No decrease: converged to round-off if close enough, otherwise give up on Newton.
      break;
    }
    u = trial;
    r = rt;
    rel = sys.relative_norm(r, u);
  }
  if (rel <= cfg.newton_tol || (rel <= stagnation_tol && out.iterations > 0) ||
      (out.iterations > 0 && sys.at_rounding_floor(r, u))) {
    out.converged = true;
    out.residual = rel;
    return out;
  }

  // Picard fallback, restarted from the last Newton iterate if it is usable.
  out.picard = true;
  if (!u.allFinite()) {
    u = old;
    u[m] = boundary;
  }
  double best = sys.relative_norm(sys.residual(u), u);
  for (int it = 0; it < 20 * cfg.newton_max; ++it) {
    ++out.iterations;
    Eigen::VectorXd next = sys.picard_update(u);
    if (!next.allFinite()) break;
    u = next;
    rel = sys.relative_norm(sys.residual(u), u);
    if (rel <= cfg.newton_tol) break;
    if (it > 50 && rel > 0.999 * best && rel > stagnation_tol) break;
    best = std::min(best, rel);
  }
  if (rel > cfg.newton_tol && rel <= 1e3 * cfg.newton_tol) {
    // Polish with Newton from the Picard iterate.
    r = sys.residual(u);
    for (int it = 0; it < cfg.newton_max && rel > cfg.newton_tol; ++it) {
      const Eigen::VectorXd du = sys.newton_direction(u, r);
      Eigen::VectorXd trial = u;
      trial.head(m) += du;
      const Eigen::VectorXd rt = sys.residual(trial);
      const double rr = sys.relative_norm(rt, trial);
      if (!(rr < rel)) break;
      u = trial;
      r = rt;
      rel = rr;
    }
  }
  out.residual = rel;
  out.converged = rel <= stagnation_tol;
  return out;
}

// Fills the accounting fields of `rec` for a completed step old -> u.
void account_step(const RadialGrid& grid, const Eigen::VectorXd& old, const Eigen::VectorXd& u,
                  double boundary, const LeibensonParams& params,
                  const std::optional<RegLevel>& reg, double dt, StepRecord& rec) {
  const int m = grid.cells();
  const Eigen::VectorXd f = face_fluxes(grid, u, params, reg);
  const Eigen::VectorXd du = u - old;
  rec.mass_change += grid.cell_volumes.dot(du);
  rec.boundary_flux_dt += dt * f[m - 1];
  double work = 0.0;
  for (int j = 0; j < m; ++j) work += f[j] * ((u[j + 1] - boundary) - (u[j] - boundary));
  rec.flux_work += dt * work;
  rec.dissipation += 0.5 * grid.cell_volumes.dot(du.cwiseAbs2());
}

StateField advance(const RadialGrid& grid, const StateField& state, const LeibensonParams& params,
                   const std::optional<RegLevel>& reg, const TimeStepConfig& cfg, double dt,
                   int depth, StepRecord& rec) {
  Eigen::VectorXd u;
  const SolveOutcome res =
      solve_step(grid, state.values, state.boundary_value, params, reg, dt, cfg, u);
  if (res.converged) {
    rec.newton_iterations += res.iterations;
    rec.picard = rec.picard || res.picard;
    rec.residual = std::max(rec.residual, res.residual);
    rec.halvings = std::max(rec.halvings, depth);
    account_step(grid, state.values, u, state.boundary_value, params, reg, dt, rec);
    StateField next;
    next.values = std::move(u);
    next.time = state.time + dt;
    next.boundary_value = state.boundary_value;
    return next;
  }
  if (cfg.stepping != Stepping::adaptive_halving || depth >= kMaxHalvings) {
    std::ostringstream msg;
    msg << "inner solve failed at t=" << state.time << " dt=" << dt << " (relative residual "
        << res.residual << " after " << res.iterations << " iterations, " << depth
        << " halvings)";
    throw SolverError(msg.str(), state.time, dt, res.residual);
  }
  const StateField mid = advance(grid, state, params, reg, cfg, 0.5 * dt, depth + 1, rec);
  return advance(grid, mid, params, reg, cfg, 0.5 * dt, depth + 1, rec);
}

}  // namespace

void TimeStepConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("time.dt must be > 0");
  if (!(t_end > 0.0) || !std::isfinite(t_end)) throw ConfigError("time.t_end must be > 0");
  if (!(newton_tol > 0.0 && newton_tol <= 1e-2))
    throw ConfigError("time.newton_tol must lie in (0, 1e-2]");
  if (newton_max < 5) throw ConfigError("time.newton_max must be >= 5");
  if (!(dt_growth >= 1.0)) throw ConfigError("time.dt_growth must be >= 1");
  if (!(dt_max > 0.0)) throw ConfigError("time.dt_max must be > 0");
  if (snapshot_every < 1) throw ConfigError("snapshot cadence must be >= 1");
}

void ContinuationSchedule::validate() const {
  if (N_values.empty()) throw ConfigError("continuation.N_values must not be empty");
  for (std::size_t i = 0; i < N_values.size(); ++i) {
    if (!(N_values[i] > 1.0)) throw ConfigError("continuation.N_values must all be > 1");
    if (i > 0 && !(N_values[i] > N_values[i - 1]))
      throw ConfigError("continuation.N_values must be strictly increasing");
  }
  if (!(barrier_margin > 0.0 && barrier_margin < 1.0))
    throw ConfigError("continuation.barrier_margin must lie in (0, 1)");
  if (!(tol_N >= 0.0)) throw ConfigError("continuation.tol_N must be >= 0");
}

Eigen::VectorXd Trajectory::values_at(double t) const {
  if (t <= snapshots.front().time) return snapshots.front().values;
  if (t >= snapshots.back().time) return snapshots.back().values;
  auto it = std::lower_bound(snapshots.begin(), snapshots.end(), t,
                             [](const StateField& s, double x) { return s.time < x; });
  const StateField& hi = *it;
  const StateField& lo = *(it - 1);
  if (hi.time == t) return hi.values;
  const double w = (t - lo.time) / (hi.time - lo.time);
  return (1.0 - w) * lo.values + w * hi.values;
}

double default_time_step(const RadialGrid& grid, const LeibensonParams& params, double amplitude) {
  const double h = grid.spacing.minCoeff();
  const double p = params.p();
  const double a = amplitude > 0.0 ? amplitude : 1.0;
  return std::pow(h, p / (p - 1.0)) * std::pow(a, -params.delta());
}

StateField step_implicit(const RadialGrid& grid, const StateField& state,
                         const LeibensonParams& params, const std::optional<RegLevel>& reg,
                         const TimeStepConfig& cfg, StepRecord* record) {
  if (state.values.size() != grid.size())
    throw std::invalid_argument("step_implicit: state does not match the grid");
  StepRecord rec;
  rec.dt = cfg.dt;
  StateField pinned = state;
  pinned.values[grid.size() - 1] = state.boundary_value;
  StateField next = advance(grid, pinned, params, reg, cfg, cfg.dt, 0, rec);
  rec.time = next.time;
  if (record) *record = rec;
  return next;
}

Trajectory integrate(const RadialGrid& grid, const StateField& u0, const LeibensonParams& params,
                     const std::optional<RegLevel>& reg, const TimeStepConfig& cfg,
                     const StopPredicate& stop) {
  cfg.validate();
  Trajectory traj;
  StateField state = u0;
  state.values[grid.size() - 1] = state.boundary_value;
  traj.snapshots.push_back(state);
  const double t_end = cfg.t_end;
  double dt = cfg.dt;
  long step = 0;
  TimeStepConfig local = cfg;
  while (state.time < t_end * (1.0 - 1e-12)) {
    double h = std::min(dt, t_end - state.time);
    // Avoid a sliver step at the end.
    if (t_end - (state.time + h) < 1e-6 * h) h = t_end - state.time;
    local.dt = h;
    StepRecord rec;
    state = step_implicit(grid, state, params, reg, local, &rec);
    traj.steps.push_back(rec);
    ++step;
    const bool done = state.time >= t_end * (1.0 - 1e-12) || (stop && stop(state));
    if (done || step % cfg.snapshot_every == 0) traj.snapshots.push_back(state);
    if (done) break;
    dt = std::min(dt * cfg.dt_growth, cfg.dt_max);
  }
  return traj;
}

RegularizedRun run_regularized(const RadialGrid& grid, const StateField& u0,
                               const LeibensonParams& params, const RegLevel& reg,
                               const TimeStepConfig& cfg, double barrier_tolerance) {
  if (!params.pq_ok())
    throw PreconditionError("existence runs require pq >= 1 (p=" + std::to_string(params.p()) +
                            ", q=" + std::to_string(params.q()) + ")");
  if (u0.values.head(grid.cells()).minCoeff() < 0.0)
    throw PreconditionError("initial data must be non-negative");

  const double floor = reg.floor();
  StateField start = u0;
  start.values = u0.values.array() + floor;
  start.boundary_value = floor;
  start.values[grid.size() - 1] = floor;

  RegularizedRun run;
  run.N = reg.N();
  run.trajectory = integrate(grid, start, params, reg, cfg);

  BarrierReport& b = run.barrier;
  b.lower = floor;
  b.upper = u0.values.head(grid.cells()).cwiseAbs().maxCoeff() + floor;
  b.tolerance = barrier_tolerance;
  b.min_value = trajectory_min(run.trajectory);
  b.max_value = trajectory_max(run.trajectory);
  for (const StateField& s : run.trajectory.snapshots) {
    const double lo = s.values.minCoeff(), hi = s.values.maxCoeff();
    if (lo < b.lower - barrier_tolerance || hi > b.upper + barrier_tolerance)
      b.violation_times.push_back(s.time);
  }
  b.lower_ok = b.min_value >= b.lower - barrier_tolerance;
  b.upper_ok = b.max_value <= b.upper + barrier_tolerance;
  return run;
}

Trajectory run_limit(const RadialGrid& grid, const StateField& u0, const LeibensonParams& params,
                     const TimeStepConfig& cfg, const StopPredicate& stop) {
  StateField start = u0;
  start.boundary_value = 0.0;
  start.values[grid.size() - 1] = 0.0;
  return integrate(grid, start, params, std::nullopt, cfg, stop);
}

ContinuationResult run_continuation(const RadialGrid& grid, const StateField& u0,
                                    const LeibensonParams& params,
                                    const ContinuationSchedule& schedule,
                                    const TimeStepConfig& cfg) {
  schedule.validate();
  ContinuationResult out;
  for (double n : schedule.N_values) {
    RegularizedRun run = run_regularized(grid, u0, params, RegLevel(n), cfg);
    ContinuationRow row;
    row.N = n;
    row.barriers_ok = run.barrier.lower_ok && run.barrier.upper_ok;
    row.admissible = run.barrier.max_value <= schedule.barrier_margin * n;
    if (!out.levels.empty())
      row.distance = spacetime_l1_distance(grid, run.trajectory, out.levels.back().trajectory);
    out.table.push_back(row);
    out.levels.push_back(std::move(run));
    if (!std::isnan(row.distance) && row.distance < schedule.tol_N) break;
  }

  std::ostringstream msg;
  for (std::size_t i = 2; i < out.table.size(); ++i) {
    if (!(out.table[i].distance < out.table[i - 1].distance)) {
      out.monotone = false;
      msg << "successive distance did not decrease at N=" << out.table[i].N << "; ";
    }
  }
  out.limit = run_limit(grid, u0, params, cfg);
  out.limit_distance = spacetime_l1_distance(grid, out.limit, out.levels.back().trajectory);
  if (out.table.size() >= 2) {
    const double last = out.table.back().distance;
    out.limit_close = out.limit_distance <= 2.0 * last;
    if (!out.limit_close)
      msg << "limit run distance " << out.limit_distance << " exceeds twice the last gap " << last
          << "; ";
  }
  for (const ContinuationRow& row : out.table) {
    if (!row.barriers_ok) msg << "barrier violated at N=" << row.N << "; ";
  }
  if (!out.table.back().admissible)
    msg << "upper truncation active at the last level N=" << out.table.back().N << "; ";
  out.message = msg.str();
  out.converged = out.message.empty();
  return out;
}

double spacetime_l1_distance(const RadialGrid& grid, const Trajectory& a, const Trajectory& b) {
  double total = 0.0;
  double prev_t = 0.0, prev_v = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const StateField& s = a.snapshots[k];
    const double v = grid.cell_volumes.dot((s.values - b.values_at(s.time)).cwiseAbs());
    if (k > 0) total += 0.5 * (v + prev_v) * (s.time - prev_t);
    prev_t = s.time;
    prev_v = v;
  }
  return total;
}

ComparisonReport comparison_monitor(const RadialGrid& grid, const Trajectory& u,
                                    const Trajectory& v) {
  auto gap = [&](const Eigen::VectorXd& uu, const Eigen::VectorXd& vv) {
    const double g = grid.cell_volumes.dot((vv - uu).cwiseMax(0.0).cwiseAbs2());
    // A blown-up trajectory must not slip through as a NaN comparison.
    return std::isfinite(g) && uu.allFinite() && vv.allFinite() ? g : kInfinityNorm;
  };
  ComparisonReport rep;
  rep.initial_gap = gap(u.initial().values, v.initial().values);
  for (const StateField& s : v.snapshots)
    rep.max_gap = std::max(rep.max_gap, gap(u.values_at(s.time), s.values));
  rep.slack = rep.initial_gap - rep.max_gap;
  return rep;
}

bool NormMonotonicity::passed() const {
  return std::all_of(max_increase.begin(), max_increase.end(),
                     [&](double d) { return d <= tolerance; });
}

NormMonotonicity norm_monotonicity(const RadialGrid& grid, const Trajectory& traj,
                                   const std::vector<double>& lambdas, double tolerance) {
  NormMonotonicity out;
  out.lambdas = lambdas;
  out.tolerance = tolerance;
  out.norms.resize(static_cast<Eigen::Index>(traj.size()), static_cast<Eigen::Index>(lambdas.size()));
  for (std::size_t k = 0; k < traj.size(); ++k)
    for (std::size_t l = 0; l < lambdas.size(); ++l)
      out.norms(k, l) = discrete_norm(grid, traj.snapshots[k], lambdas[l]);
  out.max_increase.assign(lambdas.size(), 0.0);
  for (std::size_t l = 0; l < lambdas.size(); ++l) {
    // Increases are measured relative to the initial norm (absolute when it is below 1).
    const double scale = std::max(1.0, out.norms(0, l));
    for (Eigen::Index k = 1; k < out.norms.rows(); ++k)
      out.max_increase[l] =
          std::max(out.max_increase[l], (out.norms(k, l) - out.norms(k - 1, l)) / scale);
  }
  return out;
}

EnergyBalance energy_balance(const RadialGrid& grid, const Trajectory& traj) {
  const double b = traj.initial().boundary_value;
  auto energy = [&](const Eigen::VectorXd& u) {
    return grid.cell_volumes.dot((0.5 * u.array().square() - b * u.array()).matrix());
  };
  EnergyBalance out;
  const double e0 = energy(traj.initial().values);
  const double e1 = energy(traj.final().values);
  out.energy_change = e1 - e0;
  for (const StepRecord& r : traj.steps) {
    out.flux_work += r.flux_work;
    out.dissipation += r.dissipation;
  }
  const double defect = out.energy_change + out.flux_work + out.dissipation;
  const double scale = std::abs(e0) + std::abs(e1) + out.flux_work + out.dissipation;
  out.relative_defect = scale > 0.0 ? std::abs(defect) / scale : 0.0;
  return out;
}

double mass_accounting_defect(const RadialGrid& grid, const Trajectory& traj) {
  const double mass = grid.cell_volumes.dot(traj.initial().values.cwiseAbs());
  double worst = 0.0;
  for (const StepRecord& r : traj.steps)
    worst = std::max(worst, std::abs(r.mass_change - r.boundary_flux_dt));
  return mass > 0.0 ? worst / mass : worst;
}

double trajectory_min(const Trajectory& traj) {
  double m = std::numeric_limits<double>::infinity();
  for (const StateField& s : traj.snapshots) m = std::min(m, s.values.minCoeff());
  return m;
}

double trajectory_max(const Trajectory& traj) {
  double m = -std::numeric_limits<double>::infinity();
  for (const StateField& s : traj.snapshots) m = std::max(m, s.values.maxCoeff());
  return m;
}

}  // namespace leibenson
