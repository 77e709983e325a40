#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <pathdens/kernels.hpp>
#include <pathdens/random.hpp>

using namespace pathdens;

namespace {

// Midpoint rule of f over a disk of radius R in polar coordinates.
template <class F>
double disk_integral(F f, double R, int nr = 4000, int nt = 64) {
  double total = 0.0;
  const double dr = R / nr, dt = 2 * std::numbers::pi / nt;
  for (int i = 0; i < nr; ++i) {
    const double r = (i + 0.5) * dr;
    for (int j = 0; j < nt; ++j) total += f(r, (j + 0.5) * dt) * r * dr * dt;
  }
  return total;
}

// 2-D trapezoid rule over a box.
template <class F>
double box_integral(F f, Rect b, int nx, int ny) {
  const double hx = b.width() / (nx - 1), hy = b.height() / (ny - 1);
  double total = 0.0;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double w = (i == 0 || i == nx - 1 ? 0.5 : 1.0) * (j == 0 || j == ny - 1 ? 0.5 : 1.0);
      total += w * f(Vec2{b.xmin + i * hx, b.ymin + j * hy});
    }
  return total * hx * hy;
}

PointCloud random_cloud(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  std::vector<Vec2> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back({g(rng), g(rng)});
  return PointCloud(pts);
}

std::vector<KernelSpec> profiles() { return {KernelSpec::gaussian(), KernelSpec::truncated_gaussian(3.0)}; }

}  // namespace

TEST(KernelValue, GaussianAtZeroAndOne) {
  const auto k = KernelSpec::gaussian();
  EXPECT_EQ(kernel_value(k, 0.0), 1.0);
  EXPECT_NEAR(kernel_value(k, 1.0), 0.60653065971263342, 1e-15);
}

TEST(KernelValue, NegativeArgumentIsDomainError) {
  EXPECT_THROW(kernel_value(KernelSpec::gaussian(), -0.1), DomainError);
  EXPECT_THROW(KernelSpec::truncated_gaussian(0.0), DomainError);
}

TEST(KernelValue, NonincreasingBoundedWithBoundedDerivative) {
  for (const auto& k : profiles()) {
    double prev = k.value(0.0);
    for (double t = 1e-3; t < 12.0; t += 1e-3) {
      const double v = k.value(t);
      EXPECT_LE(v, prev) << k.name() << " t=" << t;
      EXPECT_LE(std::abs(k.derivative(t)), k.derivative_bound() + 1e-12);
      prev = v;
    }
  }
}

TEST(KernelValue, TailBelowLinearTimesExponential) {
  for (const auto& k : profiles())
    for (double t : {5.0, 10.0, 20.0}) EXPECT_LE(k.value(t), 1.0 * t * std::exp(-t)) << k.name();
}

TEST(KernelValue, TruncatedIsContinuousAtCutoff) {
  const auto k = KernelSpec::truncated_gaussian(2.0);
  EXPECT_NEAR(k.value(2.0 - 1e-9), 0.0, 1e-8);
  EXPECT_EQ(k.value(2.0), 0.0);
  EXPECT_EQ(k.value(5.0), 0.0);
}

TEST(KernelSpec, PlanarNormalizerByQuadrature) {
  for (const auto& k : profiles()) {
    const double total = disk_integral([&](double r, double) { return k.normalizer() * k.value(r); }, 10.0);
    EXPECT_NEAR(total, 1.0, 1e-4) << k.name();
  }
}

TEST(KernelSpec, HalfLineNormalizerByQuadrature) {
  for (const auto& k : profiles()) {
    double s = 0.0;
    const int m = 200000;
    const double dt = 40.0 / m;
    for (int i = 0; i < m; ++i) s += k.value((i + 0.5) * dt) * dt;
    EXPECT_NEAR(k.path_normalizer() * s, 1.0, 1e-8) << k.name();
  }
}

TEST(KdeDensity, SinglePointPeak) {
  const PointCloud one({{0, 0}});
  EXPECT_NEAR(kde_density(one, KernelSpec::gaussian(), 1.0, {0, 0}), 1.0 / (2 * std::numbers::pi), 1e-15);
}

TEST(KdeDensity, RepeatedPointsMatchSinglePoint) {
  const PointCloud one({{0.3, -0.2}});
  const PointCloud many(std::vector<Vec2>(7, Vec2{0.3, -0.2}));
  for (Vec2 x : {Vec2{0, 0}, Vec2{1, 2}, Vec2{0.3, -0.1}})
    EXPECT_NEAR(kde_density(many, KernelSpec::gaussian(), 0.4, x), kde_density(one, KernelSpec::gaussian(), 0.4, x),
                1e-15);
}

TEST(KdeDensity, IntegratesToOne) {
  const auto cloud = random_cloud(60, 11);
  for (const auto& k : profiles()) {
    const double h = 0.3;
    const Kde kde(cloud, k, h);
    const Rect box = cloud.bounds().expanded(8 * h);
    const double total = box_integral([&](const Vec2& x) { return kde.value(x); }, box, 401, 401);
    EXPECT_NEAR(total, 1.0, 1e-3) << k.name();
  }
}

TEST(KdeDensity, EmptyCloudAndBadBandwidth) {
  EXPECT_THROW(Kde(PointCloud{}, KernelSpec::gaussian(), 1.0), DomainError);
  EXPECT_THROW(Kde(PointCloud({{0, 0}}), KernelSpec::gaussian(), 0.0), DomainError);
  EXPECT_THROW(PointCloud({{0, NAN}}), DomainError);
}

TEST(KdeDensity, NonnegativeAndVanishesFarAway) {
  const auto cloud = random_cloud(40, 3);
  const double h = 0.25;
  const Kde kde(cloud, KernelSpec::gaussian(), h);
  double rmax = 0.0;
  for (const auto& p : cloud) rmax = std::max(rmax, norm(p));
  Rng rng(5);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int i = 0; i < 200; ++i) EXPECT_GE(kde.value({u(rng), u(rng)}), 0.0);
  for (double a = 0; a < 6.28; a += 0.5) {
    const Vec2 far{(rmax + 20 * h) * std::cos(a), (rmax + 20 * h) * std::sin(a)};
    EXPECT_LT(kde.value(far), 1e-40);
  }
}

TEST(KdeGradient, SymmetricCancellation) {
  const auto k = KernelSpec::gaussian();
  const Vec2 g1 = kde_gradient(PointCloud({{0, 0}}), k, 1.0, {0, 0});
  EXPECT_EQ(g1.x, 0.0);
  EXPECT_EQ(g1.y, 0.0);
  const Vec2 g2 = kde_gradient(PointCloud({{-1, 0}, {1, 0}}), k, 0.7, {0, 0});
  EXPECT_NEAR(g2.x, 0.0, 1e-17);
  EXPECT_NEAR(g2.y, 0.0, 1e-17);
}

TEST(KdeGradient, MatchesCentralDifferences) {
  const auto cloud = random_cloud(30, 21);
  Rng rng(22);
  std::normal_distribution<double> g(0.0, 1.0);
  for (const auto& k : profiles()) {
    const double h = 0.5;
    const Kde kde(cloud, k, h);
    const double d = 1e-5 * h;
    for (int i = 0; i < 100; ++i) {
      const Vec2 x{g(rng), g(rng)};
      const Vec2 a = kde.gradient(x);
      const Vec2 fd{(kde.value(x + Vec2{d, 0}) - kde.value(x - Vec2{d, 0})) / (2 * d),
                    (kde.value(x + Vec2{0, d}) - kde.value(x - Vec2{0, d})) / (2 * d)};
      const double scale = std::max(norm(a), 1e-3 * kde.value(x) / h);
      EXPECT_LE(norm(a - fd), 1e-6 * scale) << k.name() << " probe " << i;
    }
  }
}

TEST(KdeHessian, SinglePointPeak) {
  const SymMat2 H = kde_hessian(PointCloud({{0, 0}}), KernelSpec::gaussian(), 1.0, {0, 0});
  const double c = 1.0 / (2 * std::numbers::pi);
  EXPECT_NEAR(H.xx, -c, 1e-15);
  EXPECT_NEAR(H.yy, -c, 1e-15);
  EXPECT_EQ(H.xy, 0.0);
}

TEST(KdeHessian, MatchesDifferencesOfGradient) {
  const auto cloud = random_cloud(30, 31);
  Rng rng(32);
  std::normal_distribution<double> g(0.0, 1.0);
  for (const auto& k : profiles()) {
    const double h = 0.5;
    const Kde kde(cloud, k, h);
    const double d = 1e-5 * h;
    for (int i = 0; i < 100; ++i) {
      const Vec2 x{g(rng), g(rng)};
      const SymMat2 H = kde.hessian(x);
      const Vec2 cx = (kde.gradient(x + Vec2{d, 0}) - kde.gradient(x - Vec2{d, 0})) / (2 * d);
      const Vec2 cy = (kde.gradient(x + Vec2{0, d}) - kde.gradient(x - Vec2{0, d})) / (2 * d);
      const double scale = std::max({std::abs(H.xx), std::abs(H.xy), std::abs(H.yy), 1e-3 * kde.value(x) / (h * h)});
      EXPECT_LE(std::abs(H.xx - cx.x), 1e-5 * scale);
      EXPECT_LE(std::abs(H.xy - cx.y), 1e-5 * scale);
      EXPECT_LE(std::abs(H.xy - cy.x), 1e-5 * scale);
      EXPECT_LE(std::abs(H.yy - cy.y), 1e-5 * scale);
    }
  }
}

TEST(Kde, TranslationInvariance) {
  const auto cloud = random_cloud(25, 41);
  const Vec2 shift{0.75, -0.5};
  std::vector<Vec2> moved;
  for (const auto& p : cloud) moved.push_back(p + shift);
  const Kde a(cloud, KernelSpec::gaussian(), 0.4);
  const Kde b(PointCloud(moved), KernelSpec::gaussian(), 0.4);
  Rng rng(42);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const Vec2 x{g(rng), g(rng)};
    EXPECT_NEAR(a.value(x), b.value(x + shift), 1e-14 * std::max(1.0, a.value(x)));
    EXPECT_LE(norm(a.gradient(x) - b.gradient(x + shift)), 1e-13 * std::max(1.0, norm(a.gradient(x))));
  }
}
