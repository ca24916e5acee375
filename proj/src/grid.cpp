#include "leibenson/grid.hpp"

#include <cmath>
#include <string>

#include "leibenson/errors.hpp"

namespace leibenson {

namespace {

double graded_radius(double xi, double radius, Grading grading) {
  if (grading == Grading::uniform) return xi * radius;
  // 70% of the cells cover [0, 0.9R], the remaining 30% the outer tenth.
  constexpr double split = 0.7;
  if (xi <= split) return 0.9 * radius * xi / split;
  return radius * (0.9 + 0.1 * (xi - split) / (1.0 - split));
}

void check_sizes(const RadialGrid& grid, const Eigen::VectorXd& u) {
  if (u.size() != grid.size())
    throw std::invalid_argument("state has " + std::to_string(u.size()) + " values, grid has " +
                                std::to_string(grid.size()) + " nodes");
}

}  // namespace

RadialGrid build_grid(const ModelManifold& m, double radius, int cells, Grading grading) {
  if (!(radius > 0.0)) throw ConfigError("domain radius must be > 0");
  if (cells < 16) throw ConfigError("grid needs at least 16 cells");
  if (radius > m.r_max()) throw ConfigError("domain radius exceeds the warping domain");

  RadialGrid g;
  g.manifold = m;
  g.nodes.resize(cells + 1);
  for (int i = 0; i <= cells; ++i)
    g.nodes[i] = graded_radius(static_cast<double>(i) / cells, radius, grading);
  g.nodes[0] = 0.0;
  g.nodes[cells] = radius;

  g.spacing = g.nodes.tail(cells) - g.nodes.head(cells);
  g.face_radii = 0.5 * (g.nodes.tail(cells) + g.nodes.head(cells));
  g.face_areas.resize(cells);
  for (int j = 0; j < cells; ++j) g.face_areas[j] = m.sphere_measure(g.face_radii[j]);
  g.face_weights = g.face_areas.cwiseQuotient(g.spacing);

  g.cell_volumes.resize(cells + 1);
  for (int i = 0; i <= cells; ++i) {
    const double lo = i == 0 ? 0.0 : g.face_radii[i - 1];
    const double hi = i == cells ? radius : g.face_radii[i];
    g.cell_volumes[i] = m.measure(lo, hi);
  }
  return g;
}

Eigen::VectorXd face_fluxes(const RadialGrid& grid, const Eigen::VectorXd& u,
                            const LeibensonParams& params, const std::optional<RegLevel>& reg) {
  check_sizes(grid, u);
  const int m = grid.cells();
  Eigen::VectorXd f(m);
  if (reg) {
    for (int j = 0; j < m; ++j) {
      const double mean = 0.5 * (u[j] + u[j + 1]);
      const double g = (u[j + 1] - u[j]) / grid.spacing[j];
      f[j] = grid.face_areas[j] * reg_flux(mean, g, *reg, params);
    }
  } else {
    double left = power_q(u[0], params);
    for (int j = 0; j < m; ++j) {
      const double right = power_q(u[j + 1], params);
      f[j] = grid.face_areas[j] * limit_flux((right - left) / grid.spacing[j], params);
      left = right;
    }
  }
  return f;
}

Eigen::VectorXd apply_operator(const RadialGrid& grid, const StateField& state,
                               const LeibensonParams& params, const std::optional<RegLevel>& reg) {
  const Eigen::VectorXd f = face_fluxes(grid, state.values, params, reg);
  const int m = grid.cells();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(m + 1);
  double inflow = 0.0;  // zero flux through the pole
  for (int i = 0; i < m; ++i) {
    out[i] = (f[i] - inflow) / grid.cell_volumes[i];
    inflow = f[i];
  }
  return out;
}

double boundary_flux(const RadialGrid& grid, const StateField& state, const LeibensonParams& params,
                     const std::optional<RegLevel>& reg) {
  const Eigen::VectorXd f = face_fluxes(grid, state.values, params, reg);
  return f[f.size() - 1];
}

double discrete_norm(const RadialGrid& grid, const Eigen::VectorXd& u, double lambda) {
  check_sizes(grid, u);
  if (std::isinf(lambda)) return u.cwiseAbs().maxCoeff();
  if (!(lambda >= 1.0)) throw DomainError("discrete_norm: lambda must be >= 1");
  if (lambda == 1.0) return grid.cell_volumes.dot(u.cwiseAbs());
  const double s = grid.cell_volumes.dot(u.cwiseAbs().array().pow(lambda).matrix());
  return std::pow(s, 1.0 / lambda);
}

}  // namespace leibenson
