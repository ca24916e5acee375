#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>

#include "leibenson/errors.hpp"
#include "leibenson/manifold.hpp"

using namespace leibenson;

namespace {

// Independent reference: adaptive Simpson, unrelated to the library's Gauss-Legendre panels.
double simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm,
               double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b), lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return simpson(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
         simpson(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return simpson(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), 1e-13, 40);
}

double unit_sphere_area(int n) {
  return 2.0 * std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n);
}

}  // namespace

TEST(VolumeOfBall, EuclideanLineHasLengthTwoR) {
  EXPECT_NEAR(volume_of_ball(ModelManifold::euclidean(1), 2.0), 4.0, 1e-13);
}

TEST(VolumeOfBall, EuclideanUnitBallInThreeDimensions) {
  EXPECT_NEAR(volume_of_ball(ModelManifold::euclidean(3), 1.0), 4.0 * M_PI / 3.0, 1e-13);
}

TEST(VolumeOfBall, SinhWarpingMatchesAdaptiveQuadrature) {
  const ModelManifold m = ModelManifold::hyperbolic(2);
  const double oracle = 2.0 * M_PI * adaptive_simpson([](double s) { return std::sinh(s); }, 0.0, 1.0);
  EXPECT_NEAR(oracle, 2.0 * M_PI * (std::cosh(1.0) - 1.0), 1e-11);
  EXPECT_NEAR(volume_of_ball(m, 1.0), oracle, 1e-11);
}

TEST(VolumeOfBall, SinhWarpingThreeDimensions) {
  const ModelManifold m = ModelManifold::hyperbolic(3);
  const double oracle =
      4.0 * M_PI * adaptive_simpson([](double s) { return std::sinh(s) * std::sinh(s); }, 0.0, 2.0);
  EXPECT_NEAR(volume_of_ball(m, 2.0) / oracle, 1.0, 1e-11);
}

TEST(VolumeOfBall, EuclideanConsistencyAcrossDimensionsAndRadii) {
  for (int n : {1, 2, 3}) {
    const ModelManifold m = ModelManifold::euclidean(n);
    for (double r : {0.5, 1.0, 2.0, 5.0}) {
      const double exact = unit_sphere_area(n) * std::pow(r, n) / n;
      EXPECT_NEAR(volume_of_ball(m, r) / exact, 1.0, 1e-10) << "n=" << n << " r=" << r;
    }
  }
}

TEST(VolumeOfBall, StrictlyIncreasingOnLadder) {
  const std::vector<ModelManifold> presets{
      ModelManifold::euclidean(1), ModelManifold::euclidean(2), ModelManifold::euclidean(3),
      ModelManifold::hyperbolic(2), ModelManifold::hyperbolic(3),
      ModelManifold::tabulated(2, {0.0, 1.0, 2.0, 4.0}, {0.0, 1.0, 1.5, 1.6})};
  for (const ModelManifold& m : presets) {
    double prev = volume_of_ball(m, 0.0);
    EXPECT_EQ(prev, 0.0);
    for (int k = 1; k <= 100; ++k) {
      const double v = volume_of_ball(m, 4.0 * k / 100.0);
      EXPECT_GT(v, prev) << m.label() << " at step " << k;
      prev = v;
    }
  }
}

TEST(VolumeOfBall, RejectsRadiiOutsideTheDomain) {
  EXPECT_THROW(volume_of_ball(ModelManifold::euclidean(2), -0.1), DomainError);
  const ModelManifold t = ModelManifold::tabulated(2, {0.0, 1.0}, {0.0, 1.0});
  EXPECT_THROW(volume_of_ball(t, 1.5), DomainError);
}

TEST(VolumeGrowth, EuclideanExponentIsTheDimension) {
  for (int n : {1, 2, 3}) {
    const GrowthExponent g = volume_growth_exponent(ModelManifold::euclidean(n), 1.0, 8.0);
    EXPECT_NEAR(g.exponent, n, 1e-6);
    EXPECT_GE(g.samples, 16);
    EXPECT_FALSE(g.degenerate_window);
  }
  EXPECT_NEAR(volume_growth_exponent(ModelManifold::euclidean(2), 0.3, 0.6).exponent, 2.0, 1e-6);
}

TEST(VolumeGrowth, SinhGrowsFasterThanAnyPlaneWindow) {
  const GrowthExponent g = volume_growth_exponent(ModelManifold::hyperbolic(2), 4.0, 8.0);
  EXPECT_GT(g.exponent, 2.0);
}

TEST(VolumeGrowth, NarrowWindowIsFlaggedNotRejected) {
  const GrowthExponent g = volume_growth_exponent(ModelManifold::euclidean(2), 1.0, 1.5);
  EXPECT_TRUE(g.degenerate_window);
  EXPECT_NEAR(g.exponent, 2.0, 1e-6);
}

TEST(ModelManifold, EuclideanWarpingIsTheIdentity) {
  const ModelManifold m = ModelManifold::euclidean(3);
  for (double r : {0.0, 0.25, 3.0}) EXPECT_EQ(m.psi(r), r);
  EXPECT_TRUE(m.is_euclidean());
  EXPECT_FALSE(ModelManifold::hyperbolic(3).is_euclidean());
}

TEST(ModelManifold, TabulatedFileInterpolatesLinearly) {
  const auto path = std::filesystem::temp_directory_path() / "leibenson_warp_test.txt";
  {
    std::ofstream f(path);
    f << "# r psi\n0 0\n1 1   # kink\n3 2\n";
  }
  const ModelManifold m = ModelManifold::from_file(2, path.string());
  EXPECT_DOUBLE_EQ(m.psi(0.5), 0.5);
  EXPECT_DOUBLE_EQ(m.psi(2.0), 1.5);
  EXPECT_DOUBLE_EQ(m.r_max(), 3.0);
  // 2 pi [ int_0^1 s ds + int_1^3 (1 + (s-1)/2) ds ] = 2 pi (1/2 + 3)
  EXPECT_NEAR(volume_of_ball(m, 3.0), 2.0 * M_PI * 3.5, 1e-12);
  std::filesystem::remove(path);
}

TEST(ModelManifold, TabulatedInputIsValidated) {
  EXPECT_THROW(ModelManifold::tabulated(2, {0.1, 1.0}, {0.0, 1.0}), ConfigError);
  EXPECT_THROW(ModelManifold::tabulated(2, {0.0, 1.0}, {0.2, 1.0}), ConfigError);
  EXPECT_THROW(ModelManifold::tabulated(2, {0.0, 1.0, 1.0}, {0.0, 1.0, 2.0}), ConfigError);
  EXPECT_THROW(ModelManifold::tabulated(2, {0.0, 1.0}, {0.0, 0.0}), ConfigError);
  EXPECT_THROW(ModelManifold::from_file(2, "/nonexistent/warp.txt"), ConfigError);
  EXPECT_THROW(ModelManifold::euclidean(0), ConfigError);
}
