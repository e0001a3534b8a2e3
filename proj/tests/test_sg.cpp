#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lumiedit/rng.hpp"
#include "lumiedit/sg.hpp"
#include "support/oracles.hpp"
#include "support/stats.hpp"

using namespace lumiedit;

namespace {

SphericalGaussian<double> lobe(double lambda, Vec3d w = {1.0, 2.0, 0.5}) {
  return {w, lambda, normalize(Vec3d{0.2, 0.9, -0.3})};
}

}  // namespace

TEST(SgEval, PeakAndAntipode) {
  const auto g = lobe(3.5);
  const Vec3d at_d = sg_eval(g, g.d);
  EXPECT_DOUBLE_EQ(at_d.x, 1.0);
  EXPECT_DOUBLE_EQ(at_d.y, 2.0);
  const Vec3d anti = sg_eval(g, -g.d);
  EXPECT_NEAR(anti.y, 2.0 * std::exp(-7.0), 1e-15);
}

TEST(SgEval, TenDegreesOffAxisAtLambdaFifty) {
  SphericalGaussian<double> g{{1, 1, 1}, 50.0, {0, 0, 1}};
  const double a = 10.0 * kPi / 180.0;
  const Vec3d l{std::sin(a), 0.0, std::cos(a)};
  // Long-double evaluation as the independent reference.
  const long double ref = std::exp(50.0L * (std::cos(10.0L * 3.14159265358979323846L / 180.0L) - 1.0L));
  EXPECT_NEAR(sg_eval(g, l).x, static_cast<double>(ref), 1e-14);
  EXPECT_NEAR(sg_eval(g, l).x, 0.4678, 1e-4);
}

TEST(SgEval, WindowRadianceSumsLobes) {
  WindowRadiance<double> r;
  r.sun = lobe(40.0, {3, 3, 3});
  r.sky = lobe(1.0, {0.5, 0.5, 0.5});
  r.ground = lobe(2.0, {0.1, 0.2, 0.3});
  oracle::Gen gen(1);
  for (int i = 0; i < 100; ++i) {
    const Vec3d l = gen.unit();
    const Vec3d sum = sg_eval(r.sun, l) + sg_eval(r.sky, l) + sg_eval(r.ground, l);
    EXPECT_NEAR(length(window_radiance_eval(r, l) - sum), 0.0, 1e-14);
  }
}

TEST(SgSphereIntegral, MatchesQuadrature) {
  for (double lambda : {0.01, 0.3, 1.0, 7.0, 60.0}) {
    const auto g = lobe(lambda, {1, 1, 1});
    const double quad = oracle::sphere_integral_about(
        g.d, [&](const Vec3d& l) { return sg_eval(g, l).x; }, 200000, 1);
    EXPECT_LT(oracle::rel_err(sg_sphere_integral(g).x, quad), 1e-6) << "lambda " << lambda;
  }
  EXPECT_NEAR(sg_sphere_integral(lobe(1.0, {1, 1, 1})).x, 2.0 * kPi * (1.0 - std::exp(-2.0)), 1e-12);
  EXPECT_NEAR(sg_sphere_integral(lobe(1.0, {1, 1, 1})).x, 5.4327, 2e-4);
  const double small = sg_sphere_integral(lobe(0.01, {1, 1, 1})).x / (4.0 * kPi);
  EXPECT_GT(small, 0.99);
  EXPECT_LT(small, 1.0);
  EXPECT_EQ(sg_sphere_integral(lobe(2.0, {0, 0, 0})).x, 0.0);
}

TEST(SgPdf, NormalizedAndPeakValue) {
  for (double lambda : {0.05, 1.0, 12.0, 300.0}) {
    const auto g = lobe(lambda);
    const double total = oracle::sphere_integral_about(g.d, [&](const Vec3d& l) { return sg_pdf(g, l); }, 200000, 1);
    EXPECT_NEAR(total, 1.0, 1e-4) << "lambda " << lambda;
  }
  EXPECT_NEAR(sg_pdf(lobe(1.0), lobe(1.0).d), 0.18407, 1e-5);
  const auto sharp = lobe(1e5);
  EXPECT_NEAR(sg_pdf(sharp, sharp.d) / (1e5 / (2.0 * kPi)), 1.0, 1e-9);
}

TEST(SgSample, EndpointsOfTheInverseCdf) {
  for (double lambda : {0.1, 5.0, 1e3}) {
    const auto g = lobe(lambda);
    const Vec3d top = sg_sample(g, 0.3, -1.0);
    EXPECT_NEAR(length(top - g.d), 0.0, 1e-12);
    const Vec3d bottom = sg_sample(g, -0.7, 1.0);
    EXPECT_NEAR(length(bottom + g.d), 0.0, 1e-7);
  }
}

TEST(SgSample, UnitLengthForRandomInputs) {
  oracle::Gen gen(2);
  for (int i = 0; i < 2000; ++i) {
    const auto g = SphericalGaussian<double>{{1, 1, 1}, std::exp(gen.uniform(-5.0, 12.0)), gen.unit()};
    EXPECT_NEAR(length(sg_sample(g, gen.uniform(-1, 1), gen.uniform(-1, 1))), 1.0, 1e-12);
  }
}

TEST(SgSample, ChiSquareAgainstPolarDensity) {
  const CounterRng rng(17, 0, Stream::kAngular);
  for (double lambda : {0.5, 3.0, 40.0}) {
    const auto r = oracle::sg_theta_chi_square(lambda, 1000000, 200, [&](int i) {
      return std::pair<double, double>{rng.symmetric(i, 0), rng.symmetric(i, 1)};
    });
    EXPECT_TRUE(r.pass()) << "lambda " << lambda << " chi2 " << r.statistic << " dof " << r.dof;
  }
}

TEST(SgSample, AzimuthIsUniform) {
  const auto g = lobe(4.0);
  const auto [t1, t2] = tangent_frame(g.d);
  const CounterRng rng(3, 0, Stream::kAngular);
  const int n = 200000, bins = 64;
  std::vector<double> observed(bins, 0.0), expected(bins, static_cast<double>(n) / bins);
  for (int i = 0; i < n; ++i) {
    const Vec3d l = sg_sample(g, rng.symmetric(i, 0), rng.symmetric(i, 1));
    const double phi = std::atan2(dot(l, t2), dot(l, t1)) + kPi;
    observed[std::min(bins - 1, static_cast<int>(phi / (2.0 * kPi) * bins))] += 1.0;
  }
  EXPECT_TRUE(oracle::chi_square(observed, expected).pass());
}

TEST(SgCdf, EndpointsAndHalfSphere) {
  for (double lambda : {0.2, 1.0, 50.0}) {
    EXPECT_NEAR(sg_cdf_theta(lambda, 0.0), 0.0, 1e-15);
    EXPECT_NEAR(sg_cdf_theta(lambda, kPi), 1.0, 1e-15);
  }
  const double e = std::exp(1.0);
  EXPECT_NEAR(sg_cdf_theta(1.0, kPi / 2.0), (e - 1.0) / (e - 1.0 / e), 1e-14);
  EXPECT_NEAR(sg_cdf_theta(1.0, kPi / 2.0), 0.7311, 1e-4);
  // Cross-check against numeric integration of the polar density.
  EXPECT_NEAR(sg_cdf_theta(1.0, kPi / 2.0), oracle::theta_probability(1.0, 0.0, kPi / 2.0, 2000), 1e-10);
}

TEST(SgCdf, MonotoneAndInvertedBySampler) {
  oracle::Gen gen(4);
  for (int i = 0; i < 5000; ++i) {
    const double lambda = std::exp(gen.uniform(-4.0, std::log(6e5)));
    const double v = gen.uniform(-1.0, 1.0);
    const double theta = sg_sample_theta(lambda, v);
    EXPECT_NEAR(sg_cdf_theta(lambda, theta), 0.5 * (v + 1.0), 1e-6) << "lambda " << lambda << " v " << v;
    const double a = gen.uniform(0.0, kPi), b = gen.uniform(0.0, kPi);
    EXPECT_LE(sg_cdf_theta(lambda, std::min(a, b)), sg_cdf_theta(lambda, std::max(a, b)) + 1e-15);
  }
}

TEST(SgSample, PathwiseDerivativeMatchesFiniteDifference) {
  using D = Dual<4>;
  oracle::Gen gen(5);
  for (int i = 0; i < 200; ++i) {
    const double lambda = std::exp(gen.uniform(-1.0, 5.0));
    const Vec3d d = gen.unit();
    const double u = gen.uniform(-0.95, 0.95), v = gen.uniform(-0.95, 0.95);
    SphericalGaussian<D> g;
    g.lambda = D::variable(lambda, 0);
    g.d = {D::variable(d.x, 1), D::variable(d.y, 2), D::variable(d.z, 3)};
    const Vec3<D> l = sg_sample(g, u, v);
    const auto at = [&](double lam, Vec3d dd) {
      return sg_sample(SphericalGaussian<double>{{1, 1, 1}, lam, dd}, u, v);
    };
    const double h = 1e-6 * lambda;
    const Vec3d fd_l = (at(lambda + h, d) - at(lambda - h, d)) / (2.0 * h);
    EXPECT_NEAR(l.x.d[0], fd_l.x, 1e-5 * std::max(1.0, std::abs(fd_l.x)));
    EXPECT_NEAR(l.z.d[0], fd_l.z, 1e-5 * std::max(1.0, std::abs(fd_l.z)));
    // Direction derivative along a tangent that keeps the frame's helper axis.
    const double e = 1e-6;
    Vec3d dp = d, dm = d;
    dp.y += e;
    dm.y -= e;
    const Vec3d fd_d = (at(lambda, dp) - at(lambda, dm)) / (2.0 * e);
    EXPECT_NEAR(l.x.d[2], fd_d.x, 1e-5 * std::max(1.0, std::abs(fd_d.x)));
  }
}
