#include "leibenson/manifold.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "leibenson/errors.hpp"

namespace leibenson {

namespace {

// 8-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 8> kGaussNodes = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
    0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGaussWeights = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
    0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

// Panels no wider than this keep sinh-type warpings at machine precision.
constexpr double kMaxPanel = 0.125;

double unit_sphere_area(int n) {
  // omega_{n-1} = 2 pi^{n/2} / Gamma(n/2)
  return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

void check_dimension(int n) {
  if (n < 1) throw ConfigError("manifold dimension must be >= 1");
}

}  // namespace

ModelManifold ModelManifold::euclidean(int dimension) {
  check_dimension(dimension);
  ModelManifold m;
  m.dimension_ = dimension;
  m.label_ = "euclidean";
  m.sphere_area_ = unit_sphere_area(dimension);
  m.euclidean_ = true;
  m.psi_ = [](double r) { return r; };
  m.breakpoints_ = std::make_shared<const std::vector<double>>();
  return m;
}

ModelManifold ModelManifold::hyperbolic(int dimension) {
  check_dimension(dimension);
  ModelManifold m;
  m.dimension_ = dimension;
  m.label_ = "sinh";
  m.sphere_area_ = unit_sphere_area(dimension);
  m.psi_ = [](double r) { return std::sinh(r); };
  m.breakpoints_ = std::make_shared<const std::vector<double>>();
  return m;
}

ModelManifold ModelManifold::tabulated(int dimension, std::vector<double> r, std::vector<double> psi,
                                       std::string label) {
  check_dimension(dimension);
  if (r.size() != psi.size() || r.size() < 2)
    throw ConfigError("tabulated warping needs at least two (r, psi) rows");
  if (r.front() != 0.0) throw ConfigError("tabulated warping must start at r = 0");
  if (psi.front() != 0.0) throw ConfigError("tabulated warping must satisfy psi(0) = 0");
  for (std::size_t i = 1; i < r.size(); ++i) {
    if (!(r[i] > r[i - 1])) throw ConfigError("tabulated warping radii must be strictly increasing");
    if (!(psi[i] > 0.0)) throw ConfigError("tabulated warping must be positive for r > 0");
  }
  auto rs = std::make_shared<const std::vector<double>>(std::move(r));
  auto ps = std::make_shared<const std::vector<double>>(std::move(psi));
  ModelManifold m;
  m.dimension_ = dimension;
  m.label_ = std::move(label);
  m.sphere_area_ = unit_sphere_area(dimension);
  m.r_max_ = rs->back();
  m.psi_ = [rs, ps](double x) {
    const auto& rv = *rs;
    auto it = std::upper_bound(rv.begin(), rv.end(), x);
    if (it == rv.begin()) return (*ps)[0];
    if (it == rv.end()) return ps->back();
    const std::size_t k = static_cast<std::size_t>(it - rv.begin());
    const double w = (x - rv[k - 1]) / (rv[k] - rv[k - 1]);
    return (1.0 - w) * (*ps)[k - 1] + w * (*ps)[k];
  };
  m.breakpoints_ = rs;
  return m;
}

ModelManifold ModelManifold::from_file(int dimension, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open warping file '" + path + "'");
  std::vector<double> r, psi;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double a, b;
    if (!(ls >> a)) continue;
    if (!(ls >> b))
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected two columns `r value`");
    std::string extra;
    if (ls >> extra) throw ConfigError(path + ":" + std::to_string(lineno) + ": too many columns");
    r.push_back(a);
    psi.push_back(b);
  }
  return tabulated(dimension, std::move(r), std::move(psi), path);
}

double ModelManifold::psi(double r) const { return psi_(r); }

double ModelManifold::sphere_measure(double r) const {
  if (dimension_ == 1) return sphere_area_;
  return sphere_area_ * std::pow(psi_(r), dimension_ - 1);
}

double ModelManifold::measure(double a, double b) const {
  if (b <= a) return 0.0;
  if (dimension_ == 1) return sphere_area_ * (b - a);
  // Split [a, b] at table breakpoints, then into panels of width <= kMaxPanel.
  std::vector<double> cuts{a};
  for (double x : *breakpoints_)
    if (x > a && x < b) cuts.push_back(x);
  cuts.push_back(b);
  double total = 0.0;
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    const double lo = cuts[s], hi = cuts[s + 1];
    const int panels = std::max(1, static_cast<int>(std::ceil((hi - lo) / kMaxPanel)));
    const double width = (hi - lo) / panels;
    for (int k = 0; k < panels; ++k) {
      const double mid = lo + (k + 0.5) * width;
      double acc = 0.0;
      for (std::size_t g = 0; g < kGaussNodes.size(); ++g) {
        const double x = mid + 0.5 * width * kGaussNodes[g];
        acc += kGaussWeights[g] * std::pow(psi_(x), dimension_ - 1);
      }
      total += 0.5 * width * acc;
    }
  }
  return sphere_area_ * total;
}

double volume_of_ball(const ModelManifold& m, double r) {
  if (!(r >= 0.0)) throw DomainError("volume_of_ball: radius must be >= 0");
  if (r > m.r_max()) throw DomainError("volume_of_ball: radius exceeds the warping domain");
  return m.measure(0.0, r);
}

GrowthExponent volume_growth_exponent(const ModelManifold& m, double r_lo, double r_hi,
                                      int samples) {
  if (!(r_lo > 0.0) || !(r_hi > r_lo)) throw DomainError("volume_growth_exponent: need 0 < r_lo < r_hi");
  if (r_hi > m.r_max()) throw DomainError("volume_growth_exponent: r_hi exceeds the warping domain");
  samples = std::max(samples, 16);
  GrowthExponent out;
  out.samples = samples;
  out.degenerate_window = r_hi / r_lo < 2.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double llo = std::log(r_lo), lhi = std::log(r_hi);
  for (int k = 0; k < samples; ++k) {
    const double x = llo + (lhi - llo) * k / (samples - 1);
    const double y = std::log(volume_of_ball(m, std::exp(x)));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = samples;
  out.exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return out;
}

}  // namespace leibenson
