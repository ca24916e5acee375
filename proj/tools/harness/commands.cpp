#include "harness/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "harness/csv.hpp"
#include "leibenson/degiorgi.hpp"
#include "leibenson/errors.hpp"

namespace harness {

namespace fs = std::filesystem;
using namespace leibenson;
using nlohmann::json;

void apply_overrides(RunConfig& cfg, const Overrides& o) {
  if (o.out) cfg.output.directory = *o.out;
  if (o.seed) cfg.seed = *o.seed;
  if (o.snapshot_every) {
    if (*o.snapshot_every < 1) throw ConfigError("--snapshot-every must be >= 1");
    cfg.output.snapshot_every = *o.snapshot_every;
    cfg.time.snapshot_every = *o.snapshot_every;
  }
  if (o.jobs < 1) throw ConfigError("--jobs must be >= 1");
}

void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(std::max(n, 0)));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  const int threads = std::clamp(jobs, 1, std::max(n, 1));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);
}

namespace {

std::string fmt(double v) { return format_number(v); }

double norm_column(const RadialGrid& grid, const Eigen::VectorXd& u, double lambda) {
  return discrete_norm(grid, u, lambda);
}

void write_trajectory(const fs::path& dir, const RadialGrid& grid, const Trajectory& traj) {
  CsvTable t({"time", "r", "u"});
  for (const StateField& s : traj.snapshots)
    for (int i = 0; i < grid.size(); ++i) t.row().add(s.time).add(grid.nodes[i]).add(s.values[i]);
  write_csv(dir / "trajectory.csv", t);
}

void write_norms(const fs::path& dir, const RadialGrid& grid, const Trajectory& traj,
                 const LeibensonParams& params) {
  CsvTable t({"time", "L1", "L2", "Lq+1", "Linf"});
  for (const StateField& s : traj.snapshots) {
    t.row().add(s.time);
    for (double lam : {1.0, 2.0, params.q() + 1.0, kInfinityNorm})
      t.add(norm_column(grid, s.values, lam));
  }
  write_csv(dir / "norms.csv", t);
}

void write_steps(const fs::path& dir, const Trajectory& traj) {
  CsvTable t({"time", "dt", "newton_iterations", "halvings", "picard", "residual", "mass_change",
              "boundary_flux_dt", "flux_work", "dissipation"});
  for (const StepRecord& r : traj.steps)
    t.row()
        .add(r.time)
        .add(r.dt)
        .add(r.newton_iterations)
        .add(r.halvings)
        .add(r.picard)
        .add(r.residual)
        .add(r.mass_change)
        .add(r.boundary_flux_dt)
        .add(r.flux_work)
        .add(r.dissipation);
  write_csv(dir / "steps.csv", t);
}

void write_plot(const RunConfig& cfg, const fs::path& dir, const std::string& name,
                const std::string& body) {
  if (!cfg.output.plots) return;
  const std::string head =
      "import csv\n"
      "import os\n"
      "import matplotlib\n"
      "matplotlib.use(\"Agg\")\n"
      "import matplotlib.pyplot as plt\n\n"
      "HERE = os.path.dirname(os.path.abspath(__file__))\n\n\n"
      "def read(name):\n"
      "    with open(os.path.join(HERE, name), newline=\"\") as f:\n"
      "        return list(csv.DictReader(f))\n\n\n";
  write_atomic(dir / name, head + body);
}

const char* kProfilesPlot = R"(rows = read("trajectory.csv")
times = sorted({float(r["time"]) for r in rows})
picked = times[:: max(1, len(times) // 8)] + [times[-1]]
fig, ax = plt.subplots()
for t in picked:
    pts = [(float(r["r"]), float(r["u"])) for r in rows if float(r["time"]) == t]
    ax.plot([p[0] for p in pts], [p[1] for p in pts], label="t=%.3g" % t)
ax.set_xlabel("r")
ax.set_ylabel("u")
ax.legend(fontsize="small")
fig.savefig(os.path.join(HERE, "profiles.png"), dpi=150)
)";

const char* kNormsPlot = R"(rows = read("norms.csv")
t = [float(r["time"]) for r in rows]
fig, ax = plt.subplots()
for col in ("L1", "L2", "Lq+1", "Linf"):
    ax.plot(t, [float(r[col]) for r in rows], label=col)
ax.set_xlabel("t")
ax.set_ylabel("norm")
ax.legend()
fig.savefig(os.path.join(HERE, "norms.png"), dpi=150)
)";

const char* kContinuationPlot = R"(rows = [r for r in read("continuation.csv") if r["distance"] != "nan"]
fig, ax = plt.subplots()
ax.loglog([float(r["N"]) for r in rows], [float(r["distance"]) for r in rows], "o-")
ax.set_xlabel("N")
ax.set_ylabel("space-time L1 distance to previous level")
fig.savefig(os.path.join(HERE, "continuation.png"), dpi=150)
)";

const char* kRatePlot = R"(fits = read("rate_fit.csv")
fig, ax = plt.subplots()
for f in fits:
    if f["beta_hat"] == "nan":
        continue
    trace = read(f["trace_file"])
    t = [float(r["time"]) for r in trace if float(r["time"]) > 0 and float(r["support_radius"]) > 0]
    rho = [float(r["support_radius"]) for r in trace if float(r["time"]) > 0 and float(r["support_radius"]) > 0]
    line = ax.loglog(t, rho, label="p=%s q=%s" % (f["p"], f["q"]))[0]
    lo, hi = float(f["window_lo"]), float(f["window_hi"])
    beta = float(f["beta_theory"])
    anchor = min(range(len(t)), key=lambda i: abs(t[i] - lo))
    ax.loglog([lo, hi], [rho[anchor], rho[anchor] * (hi / lo) ** (1.0 / beta)], "--",
              color=line.get_color(), label="slope 1/%.3g" % beta)
ax.set_xlabel("t")
ax.set_ylabel("support radius")
ax.legend(fontsize="small")
fig.savefig(os.path.join(HERE, "rate_fit.png"), dpi=150)
)";

const char* kDeadCorePlot = R"(points = read("dead_core.csv")
fits = {f["kind"]: f for f in read("dead_core_fit.csv")}
fig, axes = plt.subplots(1, 2, figsize=(10, 4))
for ax, kind in zip(axes, ("amplitude", "radius")):
    pts = [p for p in points if p["kind"] == kind]
    if not pts:
        continue
    s = [float(p["scale"]) for p in pts]
    t0 = [float(p["t0"]) for p in pts]
    ax.loglog(s, t0, "o", label="measured")
    if kind in fits:
        k = float(fits[kind]["expected"])
        ax.loglog(s, [t0[0] * (x / s[0]) ** k for x in s], "--", label="slope %.3g" % k)
    ax.set_xlabel(kind)
    ax.set_ylabel("waiting time")
    ax.legend()
fig.savefig(os.path.join(HERE, "dead_core.png"), dpi=150)
)";

const char* kSweepPlot = R"(rows = read("summary.csv")
fig, ax = plt.subplots()
ax.loglog([float(r["amplitude"]) for r in rows], [float(r["final_Linf"]) for r in rows], "o")
ax.set_xlabel("amplitude")
ax.set_ylabel("final sup norm")
fig.savefig(os.path.join(HERE, "sweep.png"), dpi=150)
)";

void write_manifest(const fs::path& dir, const std::string& command, const RunConfig& cfg,
                    const json& summary, const std::vector<std::string>& files) {
  json m;
  m["command"] = command;
  m["config"] = to_json(cfg);
  m["files"] = files;
  m["summary"] = summary;
  write_atomic(dir / "manifest.json", m.dump(2) + "\n");
}

// Resolves the defaults that depend on the grid so the manifest reproduces the run exactly.
RunConfig resolved(const RunConfig& cfg) {
  RunConfig r = cfg;
  const RadialGrid grid = make_grid(cfg);
  r.time = make_time(cfg, grid);
  r.dt_given = true;
  r.equation.sigma = resolved_sigma(cfg);
  return r;
}

fs::path output_dir(const RunConfig& cfg) {
  fs::path dir(cfg.output.directory);
  fs::create_directories(dir);
  return dir;
}

int report_solver_failure(const RunConfig& cfg, const SolverError& e, std::ostream& log) {
  log << "solver failure at t=" << fmt(e.time()) << " dt=" << fmt(e.dt())
      << " residual=" << fmt(e.residual()) << ": " << e.what() << "\n";
  try {
    json dump = {{"message", e.what()},
                 {"time", e.time()},
                 {"dt", e.dt()},
                 {"residual", e.residual()}};
    write_atomic(output_dir(cfg) / "failure.json", dump.dump(2) + "\n");
  } catch (const std::exception&) {
    // The exit code already tells the story.
  }
  return kSolverFailure;
}

double max_increase(const NormMonotonicity& nm) {
  double w = 0.0;
  for (double x : nm.max_increase) w = std::max(w, x);
  return w;
}

CheckResult make_check(std::string name, bool ok, double value, double threshold,
                       std::string detail = {}) {
  return {std::move(name), ok ? "pass" : "fail", value, threshold, std::move(detail)};
}

CheckResult skipped(std::string name, std::string why) {
  return {std::move(name), "skip", 0.0, 0.0, std::move(why)};
}

Trajectory solve_limit(const RunConfig& cfg, const RadialGrid& grid, const StateField& u0,
                       const LeibensonParams& params, double amplitude_scale = 1.0) {
  return run_limit(grid, u0, params, make_time(cfg, grid, amplitude_scale));
}

RunConfig with_exponents(const RunConfig& cfg, double p, double q) {
  RunConfig c = cfg;
  c.equation.p = p;
  c.equation.q = q;
  return c;
}

std::string point_tag(double p, double q) {
  std::ostringstream s;
  s << "p" << p << "_q" << q;
  return s.str();
}

}  // namespace

BaseRun run_base(const RunConfig& cfg) {
  const LeibensonParams params = make_params(cfg);
  BaseRun b{make_grid(cfg), {}, {}, std::nullopt};
  b.u0 = make_initial(cfg, b.grid);
  const TimeStepConfig tcfg = make_time(cfg, b.grid);
  if (params.pq_ok()) {
    b.continuation = run_continuation(b.grid, b.u0, params, cfg.continuation, tcfg);
    b.trajectory = b.continuation->limit;
  } else {
    b.trajectory = run_limit(b.grid, b.u0, params, tcfg);
  }
  return b;
}

double vanishing_radius(const RadialGrid& grid, const StateField& u0) {
  for (int i = 0; i < grid.size() - 1; ++i)
    if (u0.values[i] != 0.0) return grid.nodes[i];
  return grid.radius();
}

StateField perturb_upward(const RadialGrid& grid, const StateField& u0, double relative,
                          std::uint64_t seed) {
  StateField v = u0;
  const double size = relative * u0.values.cwiseAbs().maxCoeff();
  if (!(size > 0.0)) return v;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double R = grid.radius();
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(grid.size());
  for (int b = 0; b < 4; ++b) {
    const double c = unit(rng) * R, w = (0.05 + 0.25 * unit(rng)) * R, a = unit(rng);
    for (int i = 0; i < grid.size() - 1; ++i) {
      const double x = (grid.nodes[i] - c) / w;
      if (std::abs(x) < 1.0) phi[i] += a * std::pow(1.0 - x * x, 2);
    }
  }
  const double peak = phi.maxCoeff();
  if (peak > 0.0) v.values += (size / peak) * phi;
  return v;
}

Trajectory run_flipped_flux(const RadialGrid& grid, const StateField& u0,
                            const LeibensonParams& params, const TimeStepConfig& cfg) {
  Trajectory traj;
  StateField s = u0;
  s.boundary_value = 0.0;
  s.values[grid.size() - 1] = 0.0;
  traj.snapshots.push_back(s);
  const int steps = static_cast<int>(std::min(2000.0, std::ceil(cfg.t_end / cfg.dt)));
  for (int k = 0; k < steps; ++k) {
    const Eigen::VectorXd L = apply_operator(grid, s, params, std::nullopt);
    s.values -= cfg.dt * L;
    s.values[grid.size() - 1] = s.boundary_value;
    s.time += cfg.dt;
    traj.snapshots.push_back(s);
    StepRecord r;
    r.time = s.time;
    r.dt = cfg.dt;
    traj.steps.push_back(r);
    if (!s.values.allFinite()) break;
  }
  return traj;
}

std::vector<CheckResult> verify_suite(const RunConfig& cfg, IterationTrace* ladder_out) {
  const DiagnosticsSpec& d = cfg.diagnostics;
  const LeibensonParams params = make_params(cfg);
  const double tol = d.tolerance;
  const double sigma = d.sigma ? *d.sigma : std::max(params.p(), params.p() * params.q());
  std::vector<CheckResult> out;

  const BaseRun base = run_base(cfg);
  const RadialGrid& grid = base.grid;
  const Trajectory& traj = base.trajectory;

  if (d.comparison) {
    const StateField v0 = perturb_upward(grid, base.u0, d.perturbation, cfg.seed);
    const TimeStepConfig tcfg = make_time(cfg, grid);
    Trajectory tu, tv;
    if (d.mutation == "flip-flux") {
      tu = run_flipped_flux(grid, base.u0, params, tcfg);
      tv = run_flipped_flux(grid, v0, params, tcfg);
    } else {
      tu = traj;
      tv = run_limit(grid, v0, params, tcfg);
    }
    const ComparisonReport up = comparison_monitor(grid, tu, tv);
    const ComparisonReport down = comparison_monitor(grid, tv, tu);
    const double slack = std::min(up.slack, down.slack);
    std::ostringstream det;
    det << "ordered pair, seed " << cfg.seed << "; initial gap " << fmt(up.initial_gap)
        << ", largest gap " << fmt(up.max_gap) << ", reversed gap " << fmt(down.max_gap);
    if (d.mutation != "none") det << "; mutation " << d.mutation;
    out.push_back(make_check("comparison", up.passed(tol) && down.passed(tol), slack, -tol, det.str()));
  }

  if (d.norms) {
    const NormMonotonicity nm =
        norm_monotonicity(grid, traj, {1.0, 2.0, params.q() + 1.0, kInfinityNorm}, tol);
    out.push_back(make_check("norm-monotonicity", nm.passed(), max_increase(nm), tol,
                             "L1, L2, Lq+1, Linf; largest per-step increase"));
  }

  if (d.barriers) {
    if (!base.continuation) {
      out.push_back(skipped("barriers", "pq < 1: no regularized runs"));
      out.push_back(skipped("continuation", "pq < 1: no regularized runs"));
    } else {
      const ContinuationResult& c = *base.continuation;
      double worst = 0.0;
      bool ok = true;
      for (const RegularizedRun& r : c.levels) {
        worst = std::max({worst, r.barrier.lower - r.barrier.min_value,
                          r.barrier.max_value - r.barrier.upper});
        ok = ok && r.barrier.lower_ok && r.barrier.upper_ok;
      }
      out.push_back(make_check("barriers", ok, worst, tol,
                               "largest excursion below 1/N or above max u0 + 1/N"));
      const double last = c.table.size() >= 2 ? c.table.back().distance : 0.0;
      const double ratio = last > 0.0 ? c.limit_distance / last : 0.0;
      out.push_back(make_check("continuation", c.monotone && c.limit_close, ratio, 2.0,
                               c.message.empty() ? "successive distances decrease; limit run within 2x last gap"
                                                 : c.message));
    }
  }

  if (d.energy) {
    const EnergyBalance eb = energy_balance(grid, traj);
    out.push_back(make_check("energy-balance", eb.relative_defect <= d.energy_tolerance,
                             eb.relative_defect, d.energy_tolerance,
                             "energy change + flux work + dissipation"));
    const double mass = mass_accounting_defect(grid, traj);
    out.push_back(make_check("mass-accounting", mass <= d.mass_tolerance, mass, d.mass_tolerance,
                             "per step, relative to the initial mass"));
  }

  const bool slow = params.regime() == Regime::slow;
  const double ball = d.ball_radius ? *d.ball_radius : vanishing_radius(grid, base.u0);
  const bool have_ball = ball > 0.0 && ball <= grid.radius();
  const bool ladder_wanted = d.degiorgi || d.caccioppoli || d.mean_value;
  std::optional<IterationTrace> ladder;
  std::optional<IterationSetup> setup;
  if (ladder_wanted && slow && have_ball) {
    setup = default_setup(grid.manifold, params, ball, sigma);
    setup->iota = d.iota;
    setup->k_max = d.k_max;
    setup->C = d.C;
    ladder = run_iteration(traj, grid, params, *setup);
    if (ladder_out) *ladder_out = *ladder;
  }
  const std::string no_ladder = !slow ? "needs slow diffusion (delta > 0)"
                                      : "initial data must vanish on a ball about the origin";

  if (d.degiorgi) {
    if (!ladder) {
      out.push_back(skipped("degiorgi-ladder", no_ladder));
    } else {
      std::ostringstream det;
      det << "R=" << fmt(ball) << ", k_max=" << d.k_max << ", theta=" << fmt(ladder->theta)
          << ", tail ratio " << fmt(ladder->tail_ratio) << ", " << to_string(ladder->verdict);
      out.push_back(make_check("degiorgi-ladder", ladder->verdict == Verdict::geometric_decay,
                               ladder->rho, 1.0, det.str()));
    }
  }

  if (d.caccioppoli) {
    if (!ladder) {
      out.push_back(skipped("caccioppoli", no_ladder));
    } else if (!(ladder->theta > 0.0)) {
      out.push_back(make_check("caccioppoli", true, 0.0, -tol, "solution never enters the ball"));
    } else {
      const double s = std::max(sigma, std::max(params.p(), params.p() * params.q()));
      double worst = std::numeric_limits<double>::infinity();
      bool ok = true;
      for (double f : {0.2, 0.5, 0.8}) {
        const CaccioppoliReport c = caccioppoli_check(traj, grid, params, s, 0.5 * f * ladder->theta,
                                                      f * ladder->theta, 0.3 * ball, 0.9 * ball, tol);
        worst = std::min(worst, c.slack);
        ok = ok && c.passed;
      }
      out.push_back(make_check("caccioppoli", ok, worst, -tol,
                               "three level pairs; smallest relative slack over the Young scan"));
    }
  }

  if (d.mean_value) {
    if (!ladder) {
      out.push_back(skipped("mean-value", no_ladder));
    } else {
      std::vector<double> cs(d.amplitudes.size(), 0.0);
      for (std::size_t k = 0; k < d.amplitudes.size(); ++k) {
        const double a = d.amplitudes[k];
        const StateField u0 = make_initial(cfg, grid, a);
        const Trajectory t = solve_limit(cfg, grid, u0, params, a);
        cs[k] = mean_value_check(t, grid, params, *setup).C_star;
      }
      const auto [lo, hi] = std::minmax_element(cs.begin(), cs.end());
      const double variation = *lo > 0.0 ? *hi / *lo - 1.0 : (*hi > 0.0 ? kInfinityNorm : 0.0);
      std::ostringstream det;
      det << "fitted constant across amplitudes:";
      for (double c : cs) det << " " << fmt(c);
      out.push_back(make_check("mean-value", variation <= d.C_variation, variation, d.C_variation,
                               det.str()));
    }
  }

  if (d.norm_decay) {
    const double s = std::max(sigma, params.p() * params.q());
    if (s - params.delta() < 1.0) {
      out.push_back(skipped("norm-decay", "needs sigma - delta >= 1"));
    } else {
      const NormDecayReport nd = norm_decay_check(traj, grid, params, s, tol);
      std::ostringstream det;
      det << "fitted gradient constant " << fmt(nd.c1_fit) << " over " << nd.intervals
          << " intervals";
      out.push_back(make_check("norm-decay", nd.passed, nd.worst_increase, tol, det.str()));
    }
  }
  return out;
}

RatePoint run_rate_point(const RunConfig& base_cfg, double p, double q) {
  const RunConfig cfg = with_exponents(base_cfg, p, q);
  const LeibensonParams params = make_params(cfg);
  RatePoint pt;
  pt.p = p;
  pt.q = q;
  const RadialGrid grid = make_grid(cfg);
  const StateField u0 = make_initial(cfg, grid);
  const double peak = u0.values.maxCoeff();
  const double thresh = cfg.sweep.support_threshold * (peak > 0.0 ? peak : 1.0);
  const double stop_at = cfg.sweep.stop_fraction * grid.radius();
  const Trajectory traj = run_limit(grid, u0, params, make_time(cfg, grid), [&](const StateField& s) {
    for (int i = grid.size() - 1; i >= 0; --i)
      if (s.values[i] > thresh) return grid.nodes[i] > stop_at;
    return false;
  });
  pt.trace = track_support(traj, grid, thresh);
  const double sigma = resolved_sigma(cfg);
  try {
    pt.fit = fit_rate(pt.trace, params, grid.manifold, sigma);
    for (double factor : {1e-2, 1e2}) {
      const SupportTrace alt = track_support(traj, grid, thresh * factor);
      const double b = fit_rate(alt, params, grid.manifold, sigma).beta_hat;
      pt.threshold_spread = std::max(pt.threshold_spread, std::abs(b - pt.fit.beta_hat) / pt.fit.beta_hat);
    }
  } catch (const DomainError& e) {
    pt.error = e.what();
    pt.fit.sigma = sigma;
    pt.fit.beta_hat = std::numeric_limits<double>::quiet_NaN();
    pt.fit.rel_err = std::numeric_limits<double>::quiet_NaN();
  }
  return pt;
}

DeadCoreSweep run_dead_core_sweep(const RunConfig& cfg, int jobs) {
  const LeibensonParams params = make_params(cfg);
  if (params.regime() != Regime::slow)
    throw PreconditionError("dead-core sweep needs slow diffusion (delta > 0)");
  const RadialGrid grid0 = make_grid(cfg);
  const double B0 = vanishing_radius(grid0, make_initial(cfg, grid0));
  if (!(B0 > 0.0) || B0 >= grid0.radius())
    throw PreconditionError("dead-core sweep needs initial data vanishing on a ball about the origin");

  DeadCoreSweep out;
  for (double a : cfg.sweep.amplitudes) out.points.push_back({"amplitude", a, B0, 0.0, 0.0});
  for (double l : cfg.sweep.radii) out.points.push_back({"radius", l, B0 * l, 0.0, 0.0});

  parallel_for(static_cast<int>(out.points.size()), jobs, [&](int k) {
    DeadCorePoint& pt = out.points[static_cast<std::size_t>(k)];
    const double amp = pt.kind == "amplitude" ? pt.scale : 1.0;
    const double len = pt.kind == "radius" ? pt.scale : 1.0;
    const RadialGrid grid = make_grid(cfg, len);
    const StateField u0 = make_initial(cfg, grid, amp, len);
    pt.eps = cfg.sweep.eps_dead * u0.values.maxCoeff();
    const double half = 0.5 * pt.ball_radius;
    const Trajectory traj =
        run_limit(grid, u0, params, make_time(cfg, grid, amp), [&](const StateField& s) {
          for (int i = 0; i < grid.size() && grid.nodes[i] < half; ++i)
            if (s.values[i] > pt.eps) return true;
          return false;
        });
    pt.t0 = dead_core_time(traj, grid, pt.ball_radius, pt.eps);
  });

  for (const std::string kind : {"amplitude", "radius"}) {
    std::vector<double> x, y;
    for (const DeadCorePoint& pt : out.points)
      if (pt.kind == kind) {
        x.push_back(std::log(pt.scale));
        y.push_back(std::log(pt.t0));
      }
    if (x.size() < 2) continue;
    DeadCoreFit f;
    f.kind = kind;
    f.slope = fit_line(x, y).slope;
    f.expected = kind == "amplitude" ? -params.delta() : params.p();
    f.rel_err = std::abs(f.slope - f.expected) / std::abs(f.expected);
    f.passed = f.rel_err <= cfg.sweep.dead_core_tolerance;
    out.fits.push_back(f);
  }
  return out;
}

int cmd_solve(const RunConfig& cfg, std::ostream& log) {
  const LeibensonParams params = make_params(cfg);
  const fs::path dir = output_dir(cfg);
  BaseRun base;
  try {
    base = run_base(cfg);
  } catch (const SolverError& e) {
    return report_solver_failure(cfg, e, log);
  }
  const RadialGrid& grid = base.grid;
  write_trajectory(dir, grid, base.trajectory);
  write_norms(dir, grid, base.trajectory, params);
  write_steps(dir, base.trajectory);
  std::vector<std::string> files{"trajectory.csv", "norms.csv", "steps.csv", "barriers.csv"};

  CsvTable barriers({"N", "lower", "upper", "min_value", "max_value", "lower_ok", "upper_ok"});
  json summary;
  if (base.continuation) {
    const ContinuationResult& c = *base.continuation;
    CsvTable cont({"N", "distance", "barriers_ok", "admissible"});
    for (std::size_t k = 0; k < c.levels.size(); ++k) {
      const BarrierReport& b = c.levels[k].barrier;
      barriers.row().add(c.levels[k].N).add(b.lower).add(b.upper).add(b.min_value).add(b.max_value)
          .add(b.lower_ok).add(b.upper_ok);
      const ContinuationRow& r = c.table[k];
      cont.row().add(r.N).add(r.distance).add(r.barriers_ok).add(r.admissible);
    }
    write_csv(dir / "continuation.csv", cont);
    files.push_back("continuation.csv");
    write_plot(cfg, dir, "plot_continuation.py", kContinuationPlot);
    summary["continuation"] = {{"limit_distance", c.limit_distance},
                               {"monotone", c.monotone},
                               {"limit_close", c.limit_close},
                               {"message", c.message}};
    if (!c.message.empty()) log << "continuation: " << c.message << "\n";
  } else {
    summary["continuation"] = "skipped: pq < 1, limit problem solved directly";
  }
  write_csv(dir / "barriers.csv", barriers);
  write_plot(cfg, dir, "plot_profiles.py", kProfilesPlot);
  write_plot(cfg, dir, "plot_norms.py", kNormsPlot);
  if (cfg.output.plots) files.insert(files.end(), {"plot_profiles.py", "plot_norms.py"});

  summary["steps"] = base.trajectory.steps.size();
  summary["snapshots"] = base.trajectory.size();
  summary["final_time"] = base.trajectory.final().time;
  write_manifest(dir, "solve", resolved(cfg), summary, files);
  log << "solve: " << base.trajectory.steps.size() << " steps to t=" << fmt(base.trajectory.final().time)
      << ", output in " << dir.string() << "\n";
  return kOk;
}

int cmd_verify(const RunConfig& cfg, std::ostream& log) {
  const fs::path dir = output_dir(cfg);
  std::vector<CheckResult> checks;
  IterationTrace ladder;
  try {
    checks = verify_suite(cfg, &ladder);
  } catch (const SolverError& e) {
    return report_solver_failure(cfg, e, log);
  }
  CsvTable t({"check", "status", "value", "threshold", "detail"});
  std::vector<std::string> failed;
  for (const CheckResult& c : checks) {
    t.row().add(c.check).add(c.status).add(c.value).add(c.threshold).add(c.detail);
    log << c.check << ": " << c.status << " (value " << fmt(c.value) << ", threshold "
        << fmt(c.threshold) << ")" << (c.detail.empty() ? "" : " " + c.detail) << "\n";
    if (c.status == "fail") failed.push_back(c.check);
  }
  write_csv(dir / "verify.csv", t);
  std::vector<std::string> files{"verify.csv"};
  if (!ladder.energies.empty()) {
    CsvTable lt({"k", "r_k", "theta_k", "J_k", "bound_rhs"});
    for (std::size_t k = 0; k < ladder.energies.size(); ++k)
      lt.row().add(static_cast<int>(k)).add(ladder.radii[k]).add(ladder.levels[k])
          .add(ladder.energies[k]).add(ladder.recursion_bound[k]);
    write_csv(dir / "ladder.csv", lt);
    files.push_back("ladder.csv");
  }
  json summary = {{"failed", failed}, {"checks", checks.size()}};
  write_manifest(dir, "verify", resolved(cfg), summary, files);
  if (!failed.empty()) {
    log << "FAILED:";
    for (const std::string& f : failed) log << " " << f;
    log << "\n";
    return kPropertyFailure;
  }
  log << "all checks passed\n";
  return kOk;
}

int cmd_fit_rate(const RunConfig& cfg, int jobs, std::ostream& log) {
  const fs::path dir = output_dir(cfg);
  std::vector<std::pair<double, double>> exps = cfg.sweep.exponents;
  if (exps.empty()) exps.emplace_back(cfg.equation.p, cfg.equation.q);
  for (const auto& [p, q] : exps)
    if (LeibensonParams(p, q).regime() != Regime::slow)
      throw PreconditionError("fit-rate needs slow diffusion, (p, q) = (" + point_tag(p, q) +
                              ") has delta <= 0");

  std::vector<std::string> files;
  bool ok = true;
  json summary;
  try {
    if (cfg.sweep.rate) {
      std::vector<RatePoint> pts(exps.size());
      parallel_for(static_cast<int>(exps.size()), jobs, [&](int k) {
        pts[static_cast<std::size_t>(k)] = run_rate_point(cfg, exps[k].first, exps[k].second);
      });
      CsvTable t({"p", "q", "n", "sigma", "beta_theory", "beta_hat", "rel_err", "window_lo",
                  "window_hi", "samples", "threshold_spread", "trace_file", "error"});
      for (const RatePoint& pt : pts) {
        const std::string trace_file = "support_" + point_tag(pt.p, pt.q) + ".csv";
        CsvTable tr({"time", "support_radius"});
        for (std::size_t i = 0; i < pt.trace.times.size(); ++i)
          tr.row().add(pt.trace.times[i]).add(pt.trace.support_radius[i]);
        write_csv(dir / trace_file, tr);
        files.push_back(trace_file);
        const RateFit& f = pt.fit;
        t.row().add(pt.p).add(pt.q).add(cfg.manifold.dimension).add(f.sigma).add(f.beta_theory)
            .add(f.beta_hat).add(f.rel_err).add(f.t_lo).add(f.t_hi).add(f.samples)
            .add(pt.threshold_spread).add(trace_file)
            .add(pt.error);
        const bool pass = pt.error.empty() && f.rel_err <= cfg.sweep.rate_tolerance;
        ok = ok && pass;
        log << "rate p=" << pt.p << " q=" << pt.q << ": beta_hat " << fmt(f.beta_hat)
            << " vs " << fmt(f.beta_theory) << " (rel_err " << fmt(f.rel_err) << ") "
            << (pass ? "pass" : "fail") << (pt.error.empty() ? "" : " " + pt.error) << "\n";
      }
      write_csv(dir / "rate_fit.csv", t);
      files.push_back("rate_fit.csv");
      write_plot(cfg, dir, "plot_rate_fit.py", kRatePlot);
    }
    if (cfg.sweep.dead_core) {
      const DeadCoreSweep dc = run_dead_core_sweep(cfg, jobs);
      CsvTable pts({"kind", "scale", "ball_radius", "eps", "t0"});
      for (const DeadCorePoint& p : dc.points)
        pts.row().add(p.kind).add(p.scale).add(p.ball_radius).add(p.eps).add(p.t0);
      CsvTable fits({"kind", "slope", "expected", "rel_err", "passed"});
      for (const DeadCoreFit& f : dc.fits) {
        fits.row().add(f.kind).add(f.slope).add(f.expected).add(f.rel_err).add(f.passed);
        ok = ok && f.passed;
        log << "dead-core " << f.kind << " slope " << fmt(f.slope) << " vs " << fmt(f.expected)
            << " (rel_err " << fmt(f.rel_err) << ") " << (f.passed ? "pass" : "fail") << "\n";
      }
      write_csv(dir / "dead_core.csv", pts);
      write_csv(dir / "dead_core_fit.csv", fits);
      files.insert(files.end(), {"dead_core.csv", "dead_core_fit.csv"});
      write_plot(cfg, dir, "plot_dead_core.py", kDeadCorePlot);
    }
  } catch (const SolverError& e) {
    return report_solver_failure(cfg, e, log);
  }
  summary["passed"] = ok;
  write_manifest(dir, "fit-rate", resolved(cfg), summary, files);
  return ok ? kOk : kPropertyFailure;
}

int cmd_sweep(const RunConfig& cfg, int jobs, std::ostream& log) {
  const fs::path dir = output_dir(cfg);
  std::vector<std::pair<double, double>> exps = cfg.sweep.exponents;
  if (exps.empty()) exps.emplace_back(cfg.equation.p, cfg.equation.q);

  struct Point {
    double p, q, amplitude, length;
    std::size_t steps = 0;
    double t_end = 0, l1 = 0, linf = 0, support = 0, mass = 0, energy = 0;
    bool monotone = true;
  };
  std::vector<Point> pts;
  for (const auto& [p, q] : exps)
    for (double a : cfg.sweep.amplitudes)
      for (double l : cfg.sweep.radii) pts.push_back({p, q, a, l});

  try {
    parallel_for(static_cast<int>(pts.size()), jobs, [&](int k) {
      Point& pt = pts[static_cast<std::size_t>(k)];
      const RunConfig c = with_exponents(cfg, pt.p, pt.q);
      const LeibensonParams params = make_params(c);
      const RadialGrid grid = make_grid(c, pt.length);
      const StateField u0 = make_initial(c, grid, pt.amplitude, pt.length);
      const Trajectory traj = run_limit(grid, u0, params, make_time(c, grid, pt.amplitude));
      pt.steps = traj.steps.size();
      pt.t_end = traj.final().time;
      pt.l1 = discrete_norm(grid, traj.final(), 1.0);
      pt.linf = discrete_norm(grid, traj.final(), kInfinityNorm);
      const SupportTrace tr = track_support_relative(traj, grid, c.sweep.support_threshold);
      pt.support = tr.support_radius.back();
      pt.mass = mass_accounting_defect(grid, traj);
      pt.energy = energy_balance(grid, traj).relative_defect;
      pt.monotone = norm_monotonicity(grid, traj, {1.0, 2.0, params.q() + 1.0, kInfinityNorm},
                                      c.diagnostics.tolerance)
                        .passed();
    });
  } catch (const SolverError& e) {
    return report_solver_failure(cfg, e, log);
  }

  CsvTable t({"p", "q", "amplitude", "length_scale", "steps", "t_end", "final_L1", "final_Linf",
              "support_radius", "mass_defect", "energy_defect", "norms_monotone"});
  bool ok = true;
  for (const Point& pt : pts) {
    t.row().add(pt.p).add(pt.q).add(pt.amplitude).add(pt.length).add(static_cast<long>(pt.steps))
        .add(pt.t_end).add(pt.l1).add(pt.linf).add(pt.support).add(pt.mass).add(pt.energy)
        .add(pt.monotone);
    ok = ok && pt.monotone;
  }
  write_csv(dir / "summary.csv", t);
  write_plot(cfg, dir, "plot_sweep.py", kSweepPlot);
  write_manifest(dir, "sweep", resolved(cfg), {{"points", pts.size()}, {"norms_monotone", ok}},
                 {"summary.csv"});
  log << "sweep: " << pts.size() << " points, output in " << dir.string() << "\n";
  return ok ? kOk : kPropertyFailure;
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical lab for the doubly nonlinear equation u_t = Delta_p u^q on radial model "
               "manifolds"};
  app.require_subcommand(1);
  std::string config_path;
  Overrides o;
  std::uint64_t seed = 0;
  int snapshot_every = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--out", o.out, "output directory (overrides output.directory)");
    sub->add_option("--jobs", o.jobs, "worker threads for sweeps")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "random seed for perturbation tests");
    sub->add_option("--snapshot-every", snapshot_every, "store every k-th step")
        ->check(CLI::PositiveNumber);
  };
  CLI::App* solve = app.add_subcommand("solve", "continuation ladder and limit solve");
  CLI::App* verify = app.add_subcommand("verify", "property suite with a pass/fail table");
  CLI::App* fit = app.add_subcommand("fit-rate", "propagation-rate and waiting-time sweeps");
  CLI::App* sweep = app.add_subcommand("sweep", "amplitude and length sweep summary");
  for (CLI::App* sub : {solve, verify, fit, sweep}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  CLI::App* chosen = app.get_subcommands().front();
  if (chosen->count("--seed")) o.seed = seed;
  if (chosen->count("--snapshot-every")) o.snapshot_every = snapshot_every;

  try {
    RunConfig cfg = load_config(config_path);
    apply_overrides(cfg, o);
    if (chosen == solve) return cmd_solve(cfg, out);
    if (chosen == verify) return cmd_verify(cfg, out);
    if (chosen == fit) return cmd_fit_rate(cfg, o.jobs, out);
    return cmd_sweep(cfg, o.jobs, out);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kConfigError;
  } catch (const PreconditionError& e) {
    err << "precondition not met: " << e.what() << "\n";
    return kConfigError;
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << "\n";
    return kConfigError;
  } catch (const SolverError& e) {
    err << "solver failure at t=" << fmt(e.time()) << " dt=" << fmt(e.dt())
        << " residual=" << fmt(e.residual()) << ": " << e.what() << "\n";
    return kSolverFailure;
  } catch (const fs::filesystem_error& e) {
    err << "i/o error: " << e.what() << "\n";
    return kConfigError;
  }
}

}  // namespace harness
