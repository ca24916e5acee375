#ifndef LEIBENSON_MANIFOLD_HPP
#define LEIBENSON_MANIFOLD_HPP

#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace leibenson {

/// Rotationally symmetric model manifold with metric dr^2 + psi(r)^2 dtheta^2 and
/// measure omega_{n-1} psi(r)^{n-1} dr in the pole-centred radial chart.
class ModelManifold {
 public:
  static ModelManifold euclidean(int dimension);
  /// psi(r) = sinh r.
  static ModelManifold hyperbolic(int dimension);
  /// psi linearly interpolated from (r, value) samples; r must start at 0 and increase strictly.
  static ModelManifold tabulated(int dimension, std::vector<double> r, std::vector<double> psi,
                                 std::string label = "tabulated");
  /// Reads the two-column `r value` file format ('#' starts a comment).
  static ModelManifold from_file(int dimension, const std::string& path);

  int dimension() const { return dimension_; }
  const std::string& label() const { return label_; }
  /// Largest radius on which psi is defined.
  double r_max() const { return r_max_; }
  double psi(double r) const;
  /// Area omega_{n-1} of the unit sphere S^{n-1}; omega_0 = 2.
  double sphere_area() const { return sphere_area_; }
  /// omega_{n-1} psi(r)^{n-1}: measure of the geodesic sphere of radius r.
  double sphere_measure(double r) const;
  /// Radii where psi has kinks; quadrature panels never straddle them.
  const std::vector<double>& breakpoints() const { return *breakpoints_; }
  bool is_euclidean() const { return euclidean_; }

  /// omega_{n-1} int_a^b psi^{n-1} by composite Gauss-Legendre.
  double measure(double a, double b) const;

 private:
  ModelManifold() = default;

  int dimension_ = 1;
  std::string label_;
  double r_max_ = std::numeric_limits<double>::infinity();
  double sphere_area_ = 2.0;
  bool euclidean_ = false;
  std::function<double(double)> psi_;
  std::shared_ptr<const std::vector<double>> breakpoints_;
};

/// Measure of the geodesic ball B(pole, r).
double volume_of_ball(const ModelManifold& m, double r);

struct GrowthExponent {
  double exponent = 0.0;
  int samples = 0;
  /// Set when r_hi / r_lo < 2; the slope is still reported.
  bool degenerate_window = false;
};

/// Least-squares slope of log volume_of_ball against log r on log-spaced radii in [r_lo, r_hi].
GrowthExponent volume_growth_exponent(const ModelManifold& m, double r_lo, double r_hi,
                                      int samples = 32);

}  // namespace leibenson

#endif  // LEIBENSON_MANIFOLD_HPP
