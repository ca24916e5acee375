#ifndef LEIBENSON_GRID_HPP
#define LEIBENSON_GRID_HPP

#include <Eigen/Dense>
#include <limits>
#include <optional>

#include "leibenson/flux.hpp"
#include "leibenson/manifold.hpp"

namespace leibenson {

enum class Grading { uniform, boundary_refined };

/// Vertex-centred radial grid 0 = r_0 < ... < r_M = R. Node i owns the dual cell
/// [r_{i-1/2}, r_{i+1/2}] (clipped to [0, R]); face j sits between nodes j and j+1.
struct RadialGrid {
  ModelManifold manifold = ModelManifold::euclidean(1);
  Eigen::VectorXd nodes;         ///< M+1 radii
  Eigen::VectorXd cell_volumes;  ///< M+1 dual-cell measures
  Eigen::VectorXd face_radii;    ///< M midpoints r_{j+1/2}
  Eigen::VectorXd face_areas;    ///< M sphere measures at r_{j+1/2}
  Eigen::VectorXd spacing;       ///< M values r_{j+1} - r_j
  Eigen::VectorXd face_weights;  ///< M values face_area / spacing (p = 2 conductances)

  int cells() const { return static_cast<int>(spacing.size()); }
  int size() const { return static_cast<int>(nodes.size()); }
  double radius() const { return nodes[nodes.size() - 1]; }
};

RadialGrid build_grid(const ModelManifold& m, double radius, int cells,
                      Grading grading = Grading::uniform);

/// Nodal values of u(., t); the last node is the Dirichlet node.
struct StateField {
  Eigen::VectorXd values;
  double time = 0.0;
  double boundary_value = 0.0;
};

/// Samples f(r) at the nodes and pins the Dirichlet node.
template <typename F>
StateField sample_state(const RadialGrid& grid, F&& f, double boundary_value = 0.0,
                        double time = 0.0) {
  StateField s;
  s.values.resize(grid.size());
  for (int i = 0; i < grid.size(); ++i) s.values[i] = f(grid.nodes[i]);
  s.values[grid.size() - 1] = boundary_value;
  s.time = time;
  s.boundary_value = boundary_value;
  return s;
}

/// Face fluxes F_j = face_area_j * Phi_j, positive when directed outward in r.
/// With a regularization level: Phi_j = A(mean(u_j, u_{j+1}), (u_{j+1}-u_j)/dr).
/// Without: Phi_j = |w|^{p-2} w with w = (u_{j+1}^q - u_j^q)/dr.
Eigen::VectorXd face_fluxes(const RadialGrid& grid, const Eigen::VectorXd& u,
                            const LeibensonParams& params, const std::optional<RegLevel>& reg);

/// Discrete divergence L_i = (F_{i+1/2} - F_{i-1/2}) / V_i; zero flux at the pole, L_M = 0.
Eigen::VectorXd apply_operator(const RadialGrid& grid, const StateField& state,
                               const LeibensonParams& params, const std::optional<RegLevel>& reg);

/// Flux through the last face, i.e. what the interior exchanges with the Dirichlet node.
double boundary_flux(const RadialGrid& grid, const StateField& state, const LeibensonParams& params,
                     const std::optional<RegLevel>& reg);

inline constexpr double kInfinityNorm = std::numeric_limits<double>::infinity();

/// (sum V_i |u_i|^lambda)^{1/lambda}; lambda = kInfinityNorm gives max |u_i|.
double discrete_norm(const RadialGrid& grid, const Eigen::VectorXd& u, double lambda);
inline double discrete_norm(const RadialGrid& grid, const StateField& s, double lambda) {
  return discrete_norm(grid, s.values, lambda);
}

/// sign(u)|u|^q, the odd extension used for u^q so that tiny negative iterates stay finite.
inline double power_q(double u, const LeibensonParams& params) {
  return signed_power(u, params.q());
}

}  // namespace leibenson

#endif  // LEIBENSON_GRID_HPP
