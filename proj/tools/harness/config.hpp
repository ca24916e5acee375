#ifndef LEIBENSON_HARNESS_CONFIG_HPP
#define LEIBENSON_HARNESS_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "leibenson/grid.hpp"
#include "leibenson/time_integration.hpp"

namespace harness {

struct ManifoldSpec {
  std::string type = "euclidean";  // euclidean | sinh | tabulated
  int dimension = 1;
  std::string file;                // two-column warping table for "tabulated"
};

struct EquationSpec {
  double p = 2.0;
  double q = 1.0;
  std::optional<double> sigma;  // propagation exponent; defaults by regime
};

struct DomainSpec {
  double radius = 1.0;
  int cells = 400;
  leibenson::Grading grading = leibenson::Grading::uniform;
};

struct InitialSpec {
  std::string profile;  // bump | annulus | barenblatt | tabulated
  double amplitude = 1.0;
  double center = 0.0;  // bump
  double width = 0.5;
  double inner = 0.5;   // annulus
  double outer = 0.8;
  std::string family;   // barenblatt
  double t_offset = 1.0;
  double scale = 1.0;
  std::string file;     // tabulated
};

struct DiagnosticsSpec {
  bool comparison = true;
  bool norms = true;
  bool barriers = true;
  bool energy = true;
  bool caccioppoli = true;
  bool degiorgi = true;
  bool mean_value = true;
  bool norm_decay = true;
  std::optional<double> sigma;        // ladder / Caccioppoli exponent, default max(p, pq)
  std::optional<double> ball_radius;  // De Giorgi ball, default: largest ball where u0 vanishes
  int k_max = 8;
  double iota = 1.0;
  std::optional<double> C;
  std::vector<double> amplitudes{0.5, 1.0, 2.0, 4.0};
  double perturbation = 0.1;
  double tolerance = 1e-8;
  double energy_tolerance = 1e-6;
  double mass_tolerance = 1e-10;
  double C_variation = 0.5;
  std::string mutation = "none";  // none | flip-flux
};

struct SweepSpec {
  std::vector<double> amplitudes{1.0, 2.0, 4.0, 8.0};
  std::vector<double> radii{0.5, 1.0, 2.0};
  std::vector<std::pair<double, double>> exponents;  // empty: the equation's (p, q)
  double eps_dead = 1e-6;        // dead-core threshold relative to the data amplitude
  double support_threshold = 1e-8;
  double stop_fraction = 0.95;   // rate runs stop once the support passes this fraction of R
  double rate_tolerance = 0.05;
  double dead_core_tolerance = 0.15;
  bool rate = true;
  bool dead_core = true;
};

struct OutputSpec {
  std::string directory = "out";
  int snapshot_every = 1;
  bool plots = true;
};

struct RunConfig {
  ManifoldSpec manifold;
  EquationSpec equation;
  DomainSpec domain;
  leibenson::TimeStepConfig time;
  bool dt_given = false;
  leibenson::ContinuationSchedule continuation;
  InitialSpec initial;
  DiagnosticsSpec diagnostics;
  SweepSpec sweep;
  OutputSpec output;
  std::uint64_t seed = 0;
  std::filesystem::path base_dir;  // relative file names resolve against this
};

/// Parses and validates; unknown keys and missing required fields raise ConfigError naming the
/// field path (e.g. "equation.p").
RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
/// Reads a JSON file; '//' and '/* */' comments are allowed.
RunConfig load_config(const std::filesystem::path& path);

/// Fully resolved config in the input schema; parse_config(to_json(c)) reproduces c.
nlohmann::json to_json(const RunConfig& cfg);

leibenson::LeibensonParams make_params(const RunConfig& cfg);
leibenson::ModelManifold make_manifold(const RunConfig& cfg);
/// Grid with the domain radius multiplied by `length_scale`.
leibenson::RadialGrid make_grid(const RunConfig& cfg, double length_scale = 1.0);
/// Initial data with the amplitude multiplied by `amplitude_scale` and every radius of the profile
/// by `length_scale`.
leibenson::StateField make_initial(const RunConfig& cfg, const leibenson::RadialGrid& grid,
                                   double amplitude_scale = 1.0, double length_scale = 1.0);
/// Time-step settings; dt falls back to the h^{p/(p-1)} heuristic when not given.
leibenson::TimeStepConfig make_time(const RunConfig& cfg, const leibenson::RadialGrid& grid,
                                    double amplitude_scale = 1.0);
double resolved_sigma(const RunConfig& cfg);

}  // namespace harness

#endif  // LEIBENSON_HARNESS_CONFIG_HPP
