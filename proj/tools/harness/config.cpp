#include "harness/config.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <fstream>
#include <set>
#include <sstream>

#include "leibenson/errors.hpp"
#include "leibenson/oracles.hpp"
#include "leibenson/propagation.hpp"

namespace harness {

using leibenson::ConfigError;
using nlohmann::json;

namespace {

// Wraps one JSON object, remembers which keys were read, and rejects the rest.
class Section {
 public:
  Section(const json* obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (obj_ && !obj_->is_object()) throw ConfigError(path_ + ": expected an object");
  }

  bool present() const { return obj_ != nullptr; }
  bool has(const std::string& key) const { return obj_ && obj_->contains(key); }

  Section child(const std::string& key, bool required = false) {
    const json* v = lookup(key);
    if (!v && required) throw ConfigError("missing required field '" + at(key) + "'");
    return Section(v, at(key));
  }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
    const json* v = lookup(key);
    if (!v) return fallback ? *fallback : missing<double>(key);
    if (!v->is_number()) throw ConfigError(at(key) + ": expected a number");
    const double x = v->get<double>();
    if (!std::isfinite(x)) throw ConfigError(at(key) + ": must be finite");
    return x;
  }

  std::optional<double> maybe_number(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return number(key);
  }

  int integer(const std::string& key, std::optional<int> fallback = std::nullopt) {
    const json* v = lookup(key);
    if (!v) return fallback ? *fallback : missing<int>(key);
    if (!v->is_number_integer()) throw ConfigError(at(key) + ": expected an integer");
    return v->get<int>();
  }

  bool boolean(const std::string& key, bool fallback) {
    const json* v = lookup(key);
    if (!v) return fallback;
    if (!v->is_boolean()) throw ConfigError(at(key) + ": expected true or false");
    return v->get<bool>();
  }

  std::string text(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    const json* v = lookup(key);
    if (!v) return fallback ? *fallback : missing<std::string>(key);
    if (!v->is_string()) throw ConfigError(at(key) + ": expected a string");
    return v->get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
    const json* v = lookup(key);
    if (!v) return fallback;
    if (!v->is_array()) throw ConfigError(at(key) + ": expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      const json& e = (*v)[i];
      if (!e.is_number()) throw ConfigError(at(key) + "[" + std::to_string(i) + "]: expected a number");
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::vector<std::pair<double, double>> pairs(const std::string& key) {
    const json* v = lookup(key);
    if (!v) return {};
    if (!v->is_array()) throw ConfigError(at(key) + ": expected an array of [p, q] pairs");
    std::vector<std::pair<double, double>> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      const json& e = (*v)[i];
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
        throw ConfigError(at(key) + "[" + std::to_string(i) + "]: expected [p, q]");
      out.emplace_back(e[0].get<double>(), e[1].get<double>());
    }
    return out;
  }

  const json* raw(const std::string& key) { return lookup(key); }

  void finish() const {
    if (!obj_) return;
    for (auto it = obj_->begin(); it != obj_->end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError("unknown key '" + at(it.key()) + "'");
  }

 private:
  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* lookup(const std::string& key) {
    seen_.insert(key);
    if (!obj_) return nullptr;
    auto it = obj_->find(key);
    return it == obj_->end() ? nullptr : &*it;
  }

  template <typename T>
  T missing(const std::string& key) const {
    throw ConfigError("missing required field '" + at(key) + "'");
  }

  const json* obj_;
  std::string path_;
  std::set<std::string> seen_;
};

leibenson::Grading parse_grading(const std::string& s) {
  if (s == "uniform") return leibenson::Grading::uniform;
  if (s == "boundary-refined") return leibenson::Grading::boundary_refined;
  throw ConfigError("domain.grading: expected 'uniform' or 'boundary-refined', got '" + s + "'");
}

std::string grading_name(leibenson::Grading g) {
  return g == leibenson::Grading::uniform ? "uniform" : "boundary-refined";
}

leibenson::Stepping parse_stepping(const std::string& s) {
  if (s == "fixed") return leibenson::Stepping::fixed;
  if (s == "adaptive-halving") return leibenson::Stepping::adaptive_halving;
  throw ConfigError("time.stepping: expected 'fixed' or 'adaptive-halving', got '" + s + "'");
}

std::string resolve_path(const std::filesystem::path& base, const std::string& file) {
  if (file.empty()) return file;
  const std::filesystem::path p(file);
  return p.is_absolute() || base.empty() ? p.string() : (base / p).string();
}

// Two-column "r value" table, linear interpolation, zero beyond the last radius.
struct Table {
  std::vector<double> r, v;
  double operator()(double x) const {
    if (x <= r.front()) return v.front();
    if (x >= r.back()) return 0.0;
    const auto it = std::upper_bound(r.begin(), r.end(), x);
    const std::size_t k = static_cast<std::size_t>(it - r.begin());
    const double w = (x - r[k - 1]) / (r[k] - r[k - 1]);
    return (1.0 - w) * v[k - 1] + w * v[k];
  }
};

Table read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("initial.file: cannot open '" + path + "'");
  Table t;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::istringstream ss(line);
    double a, b;
    if (!(ss >> a)) continue;
    std::string extra;
    if (!(ss >> b) || (ss >> extra))
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected two columns");
    if (!t.r.empty() && !(a > t.r.back()))
      throw ConfigError(path + ":" + std::to_string(lineno) + ": radii must increase strictly");
    if (!(b >= 0.0)) throw ConfigError(path + ":" + std::to_string(lineno) + ": values must be >= 0");
    t.r.push_back(a);
    t.v.push_back(b);
  }
  if (t.r.size() < 2) throw ConfigError(path + ": need at least two samples");
  return t;
}

}  // namespace

RunConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  RunConfig c;
  c.base_dir = base_dir;
  Section root(&doc, "");

  {
    Section s = root.child("manifold", true);
    c.manifold.type = s.text("type");
    c.manifold.dimension = s.integer("dimension");
    c.manifold.file = resolve_path(base_dir, s.text("file", ""));
    if (c.manifold.type != "euclidean" && c.manifold.type != "sinh" && c.manifold.type != "tabulated")
      throw ConfigError("manifold.type: expected euclidean, sinh or tabulated");
    if (c.manifold.dimension < 1) throw ConfigError("manifold.dimension must be >= 1");
    if (c.manifold.type == "tabulated" && c.manifold.file.empty())
      throw ConfigError("missing required field 'manifold.file'");
    s.finish();
  }
  {
    Section s = root.child("equation", true);
    c.equation.p = s.number("p");
    c.equation.q = s.number("q");
    c.equation.sigma = s.maybe_number("sigma");
    s.finish();
  }
  {
    Section s = root.child("domain", true);
    c.domain.radius = s.number("radius");
    c.domain.cells = s.integer("cells");
    c.domain.grading = parse_grading(s.text("grading", "uniform"));
    s.finish();
  }
  {
    Section s = root.child("time", true);
    leibenson::TimeStepConfig& t = c.time;
    if (s.has("dt")) {
      t.dt = s.number("dt");
      c.dt_given = true;
    }
    t.t_end = s.number("t_end");
    t.newton_tol = s.number("newton_tol", 1e-12);
    t.newton_max = s.integer("newton_max", 30);
    t.stepping = parse_stepping(s.text("stepping", "adaptive-halving"));
    t.dt_growth = s.number("dt_growth", 1.0);
    t.dt_max = s.number("dt_max", std::numeric_limits<double>::infinity());
    s.finish();
  }
  {
    Section s = root.child("continuation");
    leibenson::ContinuationSchedule& k = c.continuation;
    k.N_values = s.numbers("N_values", k.N_values);
    k.barrier_margin = s.number("barrier_margin", k.barrier_margin);
    k.tol_N = s.number("tol_N", k.tol_N);
    s.finish();
  }
  {
    Section s = root.child("initial", true);
    InitialSpec& i = c.initial;
    i.profile = s.text("profile");
    i.amplitude = s.number("amplitude", 1.0);
    if (i.profile == "bump") {
      i.center = s.number("center", 0.0);
      i.width = s.number("width");
    } else if (i.profile == "annulus") {
      i.inner = s.number("inner");
      i.outer = s.number("outer");
    } else if (i.profile == "barenblatt") {
      i.family = s.text("family");
      i.t_offset = s.number("t_offset");
      i.scale = s.number("scale", 1.0);
    } else if (i.profile == "tabulated") {
      i.file = resolve_path(base_dir, s.text("file"));
    } else {
      throw ConfigError("initial.profile: expected bump, annulus, barenblatt or tabulated, got '" +
                        i.profile + "'");
    }
    s.finish();
  }
  {
    Section s = root.child("diagnostics");
    DiagnosticsSpec& d = c.diagnostics;
    d.comparison = s.boolean("comparison", d.comparison);
    d.norms = s.boolean("norms", d.norms);
    d.barriers = s.boolean("barriers", d.barriers);
    d.energy = s.boolean("energy", d.energy);
    d.caccioppoli = s.boolean("caccioppoli", d.caccioppoli);
    d.degiorgi = s.boolean("degiorgi", d.degiorgi);
    d.mean_value = s.boolean("mean_value", d.mean_value);
    d.norm_decay = s.boolean("norm_decay", d.norm_decay);
    d.sigma = s.maybe_number("sigma");
    d.ball_radius = s.maybe_number("ball_radius");
    d.k_max = s.integer("k_max", d.k_max);
    d.iota = s.number("iota", d.iota);
    d.C = s.maybe_number("C");
    d.amplitudes = s.numbers("amplitudes", d.amplitudes);
    d.perturbation = s.number("perturbation", d.perturbation);
    d.tolerance = s.number("tolerance", d.tolerance);
    d.energy_tolerance = s.number("energy_tolerance", d.energy_tolerance);
    d.mass_tolerance = s.number("mass_tolerance", d.mass_tolerance);
    d.C_variation = s.number("C_variation", d.C_variation);
    d.mutation = s.text("mutation", d.mutation);
    if (d.mutation != "none" && d.mutation != "flip-flux")
      throw ConfigError("diagnostics.mutation: expected 'none' or 'flip-flux'");
    if (d.k_max < 6) throw ConfigError("diagnostics.k_max must be >= 6");
    if (!(d.iota > 0.0)) throw ConfigError("diagnostics.iota must be > 0");
    if (!(d.perturbation > 0.0)) throw ConfigError("diagnostics.perturbation must be > 0");
    for (double a : d.amplitudes)
      if (!(a > 0.0)) throw ConfigError("diagnostics.amplitudes must all be > 0");
    s.finish();
  }
  {
    Section s = root.child("sweep");
    SweepSpec& w = c.sweep;
    w.amplitudes = s.numbers("amplitudes", w.amplitudes);
    w.radii = s.numbers("radii", w.radii);
    w.exponents = s.pairs("exponents");
    w.eps_dead = s.number("eps_dead", w.eps_dead);
    w.support_threshold = s.number("support_threshold", w.support_threshold);
    w.stop_fraction = s.number("stop_fraction", w.stop_fraction);
    w.rate_tolerance = s.number("rate_tolerance", w.rate_tolerance);
    w.dead_core_tolerance = s.number("dead_core_tolerance", w.dead_core_tolerance);
    w.rate = s.boolean("rate", w.rate);
    w.dead_core = s.boolean("dead_core", w.dead_core);
    for (double a : w.amplitudes)
      if (!(a > 0.0)) throw ConfigError("sweep.amplitudes must all be > 0");
    for (double r : w.radii)
      if (!(r > 0.0)) throw ConfigError("sweep.radii must all be > 0");
    if (!(w.eps_dead > 0.0)) throw ConfigError("sweep.eps_dead must be > 0");
    if (!(w.support_threshold > 0.0)) throw ConfigError("sweep.support_threshold must be > 0");
    if (!(w.stop_fraction > 0.0 && w.stop_fraction <= 1.0))
      throw ConfigError("sweep.stop_fraction must lie in (0, 1]");
    s.finish();
  }
  {
    Section s = root.child("output");
    c.output.directory = s.text("directory", c.output.directory);
    c.output.snapshot_every = s.integer("snapshot_every", c.output.snapshot_every);
    c.output.plots = s.boolean("plots", c.output.plots);
    if (c.output.snapshot_every < 1) throw ConfigError("output.snapshot_every must be >= 1");
    s.finish();
  }
  if (const json* v = root.raw("seed")) {
    if (!v->is_number_unsigned()) throw ConfigError("seed: expected a non-negative integer");
    c.seed = v->get<std::uint64_t>();
  }
  root.finish();

  // Cross-field validation: everything a run would reject, rejected up front.
  c.time.snapshot_every = c.output.snapshot_every;
  c.time.validate();
  c.continuation.validate();
  make_params(c);
  const leibenson::RadialGrid grid = make_grid(c);
  make_initial(c, grid);
  if (c.equation.sigma && !(*c.equation.sigma > 0.0)) throw ConfigError("equation.sigma must be > 0");
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(doc, path.parent_path());
}

json to_json(const RunConfig& c) {
  json j;
  j["manifold"] = {{"type", c.manifold.type}, {"dimension", c.manifold.dimension}};
  if (!c.manifold.file.empty()) j["manifold"]["file"] = c.manifold.file;

  j["equation"] = {{"p", c.equation.p}, {"q", c.equation.q}};
  if (c.equation.sigma) j["equation"]["sigma"] = *c.equation.sigma;

  j["domain"] = {{"radius", c.domain.radius},
                 {"cells", c.domain.cells},
                 {"grading", grading_name(c.domain.grading)}};

  json t = {{"t_end", c.time.t_end},
            {"newton_tol", c.time.newton_tol},
            {"newton_max", c.time.newton_max},
            {"stepping", c.time.stepping == leibenson::Stepping::fixed ? "fixed" : "adaptive-halving"},
            {"dt_growth", c.time.dt_growth}};
  if (c.dt_given) t["dt"] = c.time.dt;
  if (std::isfinite(c.time.dt_max)) t["dt_max"] = c.time.dt_max;
  j["time"] = t;

  j["continuation"] = {{"N_values", c.continuation.N_values},
                       {"barrier_margin", c.continuation.barrier_margin},
                       {"tol_N", c.continuation.tol_N}};

  const InitialSpec& i = c.initial;
  json init = {{"profile", i.profile}, {"amplitude", i.amplitude}};
  if (i.profile == "bump") {
    init["center"] = i.center;
    init["width"] = i.width;
  } else if (i.profile == "annulus") {
    init["inner"] = i.inner;
    init["outer"] = i.outer;
  } else if (i.profile == "barenblatt") {
    init["family"] = i.family;
    init["t_offset"] = i.t_offset;
    init["scale"] = i.scale;
  } else {
    init["file"] = i.file;
  }
  j["initial"] = init;

  const DiagnosticsSpec& d = c.diagnostics;
  json diag = {{"comparison", d.comparison},   {"norms", d.norms},
               {"barriers", d.barriers},       {"energy", d.energy},
               {"caccioppoli", d.caccioppoli}, {"degiorgi", d.degiorgi},
               {"mean_value", d.mean_value},   {"norm_decay", d.norm_decay},
               {"k_max", d.k_max},             {"iota", d.iota},
               {"amplitudes", d.amplitudes},   {"perturbation", d.perturbation},
               {"tolerance", d.tolerance},     {"energy_tolerance", d.energy_tolerance},
               {"mass_tolerance", d.mass_tolerance}, {"C_variation", d.C_variation},
               {"mutation", d.mutation}};
  if (d.sigma) diag["sigma"] = *d.sigma;
  if (d.ball_radius) diag["ball_radius"] = *d.ball_radius;
  if (d.C) diag["C"] = *d.C;
  j["diagnostics"] = diag;

  const SweepSpec& w = c.sweep;
  json ex = json::array();
  for (const auto& [p, q] : w.exponents) ex.push_back({p, q});
  j["sweep"] = {{"amplitudes", w.amplitudes},
                {"radii", w.radii},
                {"exponents", ex},
                {"eps_dead", w.eps_dead},
                {"support_threshold", w.support_threshold},
                {"stop_fraction", w.stop_fraction},
                {"rate_tolerance", w.rate_tolerance},
                {"dead_core_tolerance", w.dead_core_tolerance},
                {"rate", w.rate},
                {"dead_core", w.dead_core}};

  j["output"] = {{"directory", c.output.directory},
                 {"snapshot_every", c.output.snapshot_every},
                 {"plots", c.output.plots}};
  j["seed"] = c.seed;
  return j;
}

leibenson::LeibensonParams make_params(const RunConfig& cfg) {
  try {
    return {cfg.equation.p, cfg.equation.q};
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("equation: ") + e.what());
  }
}

leibenson::ModelManifold make_manifold(const RunConfig& cfg) {
  const int n = cfg.manifold.dimension;
  if (cfg.manifold.type == "euclidean") return leibenson::ModelManifold::euclidean(n);
  if (cfg.manifold.type == "sinh") return leibenson::ModelManifold::hyperbolic(n);
  try {
    return leibenson::ModelManifold::from_file(n, cfg.manifold.file);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("manifold.file: ") + e.what());
  }
}

leibenson::RadialGrid make_grid(const RunConfig& cfg, double length_scale) {
  try {
    return leibenson::build_grid(make_manifold(cfg), cfg.domain.radius * length_scale,
                                 cfg.domain.cells, cfg.domain.grading);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("domain: ") + e.what());
  }
}

leibenson::StateField make_initial(const RunConfig& cfg, const leibenson::RadialGrid& grid,
                                   double amplitude_scale, double length_scale) {
  const InitialSpec& i = cfg.initial;
  const double a = i.amplitude * amplitude_scale;
  const double R = grid.radius();
  if (!(a >= 0.0)) throw ConfigError("initial.amplitude must be >= 0");

  if (i.profile == "bump") {
    if (!(i.width > 0.0)) throw ConfigError("initial.width must be > 0");
    if (!(i.center >= 0.0) || i.center > R / length_scale)
      throw ConfigError("initial.center must lie in [0, domain.radius]");
    const double c = i.center * length_scale, w = i.width * length_scale;
    return leibenson::sample_state(grid, [&](double r) {
      const double x = (r - c) / w;
      return std::abs(x) < 1.0 ? a * std::pow(1.0 - x * x, 2) : 0.0;
    });
  }
  if (i.profile == "annulus") {
    if (!(i.inner >= 0.0 && i.outer > i.inner) || i.outer * length_scale > R * (1.0 + 1e-12))
      throw ConfigError("initial annulus needs 0 <= inner < outer <= domain.radius");
    const double lo = i.inner * length_scale, hi = i.outer * length_scale;
    return leibenson::sample_state(grid, [&](double r) {
      if (r <= lo || r >= hi) return 0.0;
      const double s = std::sin(M_PI * (r - lo) / (hi - lo));
      return a * s * s;
    });
  }
  if (i.profile == "barenblatt") {
    if (cfg.manifold.type != "euclidean")
      throw ConfigError("initial.profile 'barenblatt' needs a euclidean manifold");
    const leibenson::BarenblattProfile pr =
        leibenson::make_barenblatt(leibenson::parse_family(i.family), cfg.manifold.dimension,
                                   cfg.equation.p, cfg.equation.q, i.scale, i.t_offset);
    return leibenson::sample_state(
        grid, [&](double r) { return a * leibenson::evaluate_barenblatt(pr, r / length_scale, 0.0); });
  }
  const Table t = read_table(i.file);
  return leibenson::sample_state(grid, [&](double r) { return a * t(r / length_scale); });
}

leibenson::TimeStepConfig make_time(const RunConfig& cfg, const leibenson::RadialGrid& grid,
                                    double amplitude_scale) {
  leibenson::TimeStepConfig t = cfg.time;
  t.snapshot_every = cfg.output.snapshot_every;
  if (!cfg.dt_given)
    t.dt = leibenson::default_time_step(grid, make_params(cfg), cfg.initial.amplitude * amplitude_scale);
  return t;
}

double resolved_sigma(const RunConfig& cfg) {
  return cfg.equation.sigma ? *cfg.equation.sigma : leibenson::default_sigma(make_params(cfg));
}

}  // namespace harness
