#ifndef LEIBENSON_HARNESS_COMMANDS_HPP
#define LEIBENSON_HARNESS_COMMANDS_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "harness/config.hpp"
#include "leibenson/degiorgi.hpp"
#include "leibenson/propagation.hpp"

namespace harness {

enum ExitCode : int { kOk = 0, kPropertyFailure = 1, kConfigError = 2, kSolverFailure = 3 };

/// Command-line flags that override the config file.
struct Overrides {
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> snapshot_every;
  int jobs = 1;
};

void apply_overrides(RunConfig& cfg, const Overrides& o);

/// Runs fn(0), ..., fn(n-1) on up to `jobs` threads. Rethrows the lowest-index exception.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn);

// ---------------------------------------------------------------------------------------------
// Building blocks shared by the commands, the tests and the acceptance binary.

struct CheckResult {
  std::string check;
  std::string status;  // pass | fail | skip
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

/// Limit trajectory from the config (the continuation limit when pq >= 1).
struct BaseRun {
  leibenson::RadialGrid grid;
  leibenson::StateField u0;
  leibenson::Trajectory trajectory;
  std::optional<leibenson::ContinuationResult> continuation;
};
BaseRun run_base(const RunConfig& cfg);

/// Radius of the largest ball about the origin on which u0 vanishes (0 if u0(0) != 0).
double vanishing_radius(const leibenson::RadialGrid& grid, const leibenson::StateField& u0);

/// Seeded non-negative perturbation of size `relative * max|u0|` built from random bumps.
leibenson::StateField perturb_upward(const leibenson::RadialGrid& grid,
                                     const leibenson::StateField& u0, double relative,
                                     std::uint64_t seed);

/// Deliberately broken stepper used by the mutation test: explicit u+ = u - dt L(u).
leibenson::Trajectory run_flipped_flux(const leibenson::RadialGrid& grid,
                                       const leibenson::StateField& u0,
                                       const leibenson::LeibensonParams& params,
                                       const leibenson::TimeStepConfig& cfg);

/// Runs every enabled property check. The De Giorgi ladder, when it was computed, is copied to
/// `ladder_out`.
std::vector<CheckResult> verify_suite(const RunConfig& cfg,
                                      leibenson::IterationTrace* ladder_out = nullptr);

struct RatePoint {
  double p = 0.0;
  double q = 0.0;
  leibenson::SupportTrace trace;
  leibenson::RateFit fit;
  /// Largest relative change of beta_hat when the support threshold moves by 100x either way.
  double threshold_spread = 0.0;
  std::string error;  // set when the fit could not be made
};

/// One propagation run from the configured data, stopped once the support passes
/// sweep.stop_fraction of the domain radius.
RatePoint run_rate_point(const RunConfig& cfg, double p, double q);

struct DeadCorePoint {
  std::string kind;  // amplitude | radius
  double scale = 0.0;
  double ball_radius = 0.0;
  double eps = 0.0;
  double t0 = 0.0;
};

struct DeadCoreFit {
  std::string kind;
  double slope = 0.0;
  double expected = 0.0;
  double rel_err = 0.0;
  bool passed = false;
};

struct DeadCoreSweep {
  std::vector<DeadCorePoint> points;
  std::vector<DeadCoreFit> fits;
};

/// Amplitude and length sweeps of the waiting time on the half-ball where u0 vanishes.
DeadCoreSweep run_dead_core_sweep(const RunConfig& cfg, int jobs);

// ---------------------------------------------------------------------------------------------

int cmd_solve(const RunConfig& cfg, std::ostream& log);
int cmd_verify(const RunConfig& cfg, std::ostream& log);
int cmd_fit_rate(const RunConfig& cfg, int jobs, std::ostream& log);
int cmd_sweep(const RunConfig& cfg, int jobs, std::ostream& log);

/// Full command-line entry point; maps exceptions to exit codes.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace harness

#endif  // LEIBENSON_HARNESS_COMMANDS_HPP
