#include <gtest/gtest.h>

#include <cmath>

#include <pathdens/flow.hpp>
#include <pathdens/model.hpp>
#include <pathdens/path_density.hpp>
#include <pathdens/random.hpp>

using namespace pathdens;

namespace {

// Single isotropic normal with analytic derivatives.
struct SingleNormal {
  Vec2 mean{};
  double sigma{1.0};
  double value(const Vec2& x) const { return std::exp(-0.5 * norm2(x - mean) / (sigma * sigma)); }
  Vec2 gradient(const Vec2& x) const { return (mean - x) * (value(x) / (sigma * sigma)); }
  SymMat2 hessian(const Vec2& x) const {
    const Vec2 d = x - mean;
    const double s2 = sigma * sigma;
    return SymMat2::outer(d) * (value(x) / (s2 * s2)) + SymMat2::identity() * (-value(x) / s2);
  }
};

FlowConfig bowl_config() {
  FlowConfig c;
  c.step_scale = 0.05;
  c.max_time_step = 0.02;
  c.grad_tolerance = 1e-9;
  c.min_displacement = 1e-12;
  c.max_steps = 100000;
  return c;
}

}  // namespace

TEST(TraceAscentPath, QuadraticBowlMatchesClosedForm) {
  const QuadraticBowl bowl;
  Rng rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int s = 0; s < 50; ++s) {
    Vec2 x0;
    do x0 = Vec2{u(rng), u(rng)} * 10.0;
    while (norm(x0) > 10.0);
    const auto path = trace_ascent_path(bowl, x0, bowl_config());
    EXPECT_LT(norm(path.end()), 1e-6);
    for (std::size_t i = 0; i < path.size(); ++i) {
      const Vec2 exact = x0 * std::exp(-path.times[i]);
      ASSERT_LT(distance(path.vertices[i], exact), 1e-5) << "start " << s << " vertex " << i;
    }
  }
}

TEST(TraceAscentPath, SingleNormalPathIsColinearWithMean) {
  const SingleNormal g{{0.5, -0.25}, 0.7};
  FlowConfig cfg = FlowConfig::for_scale(0.7, 1.0);
  for (Vec2 x0 : {Vec2{2, 1}, Vec2{-1, -2}, Vec2{0.6, 3}}) {
    const auto path = trace_ascent_path(g, x0, cfg);
    const Vec2 dir = (x0 - g.mean) / norm(x0 - g.mean);
    for (const auto& v : path.vertices) EXPECT_LT(std::abs(cross(dir, v - g.mean)), 1e-8);
    EXPECT_LT(distance(path.end(), g.mean), 1e-4);
  }
}

TEST(TraceAscentPath, StartAtModeIsFixedPoint) {
  const SingleNormal g{{0.5, -0.25}, 0.7};
  const auto path = trace_ascent_path(g, g.mean, FlowConfig::for_scale(0.7, 1.0));
  EXPECT_EQ(path.size(), 1u);
  EXPECT_TRUE(path.converged);
  EXPECT_EQ(path.stop, StopReason::gradient);
}

TEST(TraceAscentPath, ValuesNondecreasingAndVerticesDistinct) {
  Rng rng(3);
  const auto ex = pentagon_example(rng, 200);
  const Kde kde(ex.cloud, KernelSpec::gaussian(), 0.05);
  const auto cfg = flow_config_for(kde);
  for (std::size_t i = 0; i < ex.cloud.size(); i += 10) {
    const auto p = trace_ascent_path(kde, ex.cloud[i], cfg);
    for (std::size_t k = 1; k < p.size(); ++k) {
      EXPECT_GE(p.values[k], p.values[k - 1] - 1e-12);
      EXPECT_NE(p.vertices[k], p.vertices[k - 1]);
    }
    if (p.converged) {
      EXPECT_LT(p.terminal_gradient_norm, cfg.grad_tolerance);
    }
    EXPECT_LE(p.trim_hint, p.size() - 1);
  }
}

TEST(TraceAscentPath, IdempotentAtConvergedEndpoint) {
  const QuadraticBowl bowl{{1.0, 2.0}, 1.0, 0.0};
  const auto cfg = bowl_config();
  const auto p = trace_ascent_path(bowl, {3.0, -1.0}, cfg);
  ASSERT_TRUE(p.converged);
  const auto again = trace_ascent_path(bowl, p.end(), cfg);
  EXPECT_EQ(again.size(), 1u);
}

TEST(TraceAscentPath, NonFiniteStartOrFieldIsReported) {
  EXPECT_THROW(trace_ascent_path(QuadraticBowl{}, {NAN, 0.0}, FlowConfig{}), DomainError);
  struct Blowup {
    double value(const Vec2& x) const { return x.x > 0.5 ? NAN : x.x; }
    Vec2 gradient(const Vec2&) const { return {1.0, 0.0}; }
    SymMat2 hessian(const Vec2&) const { return {}; }
  };
  FlowConfig cfg;
  cfg.step_scale = 0.1;
  try {
    trace_ascent_path(Blowup{}, {0.0, 0.0}, cfg);
    FAIL() << "expected a numerical error";
  } catch (const NumericalError& e) {
    EXPECT_LE(e.last_valid().x, 0.5);
    EXPECT_GE(e.last_valid().x, 0.3);
  }
}

TEST(FlowConfig, RejectsNonpositiveValues) {
  FlowConfig c;
  c.step_scale = 0.0;
  EXPECT_THROW(c.validate(), DomainError);
  c = FlowConfig{};
  c.max_steps = 0;
  EXPECT_THROW(c.validate(), DomainError);
}

TEST(MeanShift, SinglePointIsReachedInOneStep) {
  const PointCloud one({{0.3, 0.7}});
  const Kde kde(one, KernelSpec::gaussian(), 0.5);
  const auto p = mean_shift_path(kde, {1.0, -1.0}, flow_config_for(kde));
  ASSERT_GE(p.size(), 2u);
  EXPECT_EQ(p.vertices[1], (Vec2{0.3, 0.7}));
  EXPECT_EQ(p.step_count, 1);
  EXPECT_TRUE(p.converged);
}

TEST(MeanShift, SymmetricPairStaysOnAxis) {
  const PointCloud two({{-1, 0}, {1, 0}});
  const Kde kde(two, KernelSpec::gaussian(), 1.0);
  const auto p = mean_shift_path(kde, {0.0, 0.3}, flow_config_for(kde));
  for (const auto& v : p.vertices) EXPECT_LT(std::abs(v.x), 1e-12);
}

TEST(MeanShift, PentagonEndpointsAreModes) {
  Rng rng(1);
  const auto ex = pentagon_example(rng, 500);
  const auto bw = default_bandwidths(ex.cloud.size(), ex.cloud.spread());
  const Kde kde(ex.cloud, KernelSpec::gaussian(), bw.h);
  FlowConfig cfg = flow_config_for(kde);
  cfg.min_displacement = 1e-10 * bw.h;
  cfg.max_steps = 100000;
  for (std::size_t i = 0; i < ex.cloud.size(); i += 5) {
    const auto p = mean_shift_path(kde, ex.cloud[i], cfg);
    EXPECT_LT(p.terminal_gradient_norm, 1e-6) << "start " << i;
  }
}

TEST(MeanShift, FarStartIsError) {
  const Kde kde(PointCloud({{0, 0}}), KernelSpec::truncated_gaussian(2.0), 0.1);
  EXPECT_THROW(mean_shift_path(kde, {5.0, 5.0}, FlowConfig{}), DomainError);
}

TEST(ClassifyCriticalPoint, SignPatterns) {
  EXPECT_EQ(classify_critical_point(SymMat2::diagonal(-1, -2), 1e-9), CriticalKind::maximum);
  EXPECT_EQ(classify_critical_point(SymMat2::diagonal(1, -1), 1e-9), CriticalKind::saddle);
  EXPECT_EQ(classify_critical_point(SymMat2::diagonal(1e-12, 1), 1e-9), CriticalKind::degenerate);
  EXPECT_EQ(classify_critical_point(SymMat2::diagonal(2, 3), 1e-9), CriticalKind::minimum);
}

TEST(FindCriticalPoints, SingleNormalHasOneMaximum) {
  const SingleNormal g{{0.2, -0.4}, 0.5};
  const auto cps = find_critical_points(g, Rect{-2, 2, -2, 2});
  ASSERT_EQ(cps.size(), 1u);
  EXPECT_EQ(cps[0].kind, CriticalKind::maximum);
  EXPECT_LT(distance(cps[0].location, g.mean), 1e-8);
}

// Roots of d/dx g(x, 0) by a dense scan with bisection refinement.
std::vector<double> axial_roots(const FilamentModel& m, double a, double b) {
  std::vector<double> roots;
  const int n = 20000;
  auto gx = [&](double x) { return m.gradient({x, 0.0}).x; };
  double prev = gx(a);
  for (int i = 1; i <= n; ++i) {
    const double x = a + (b - a) * i / n;
    const double cur = gx(x);
    if (cur == 0.0 || (prev < 0) != (cur < 0)) {
      double lo = x - (b - a) / n, hi = x;
      for (int k = 0; k < 80; ++k) {
        const double mid = 0.5 * (lo + hi);
        ((gx(lo) < 0) == (gx(mid) < 0) ? lo : hi) = mid;
      }
      roots.push_back(0.5 * (lo + hi));
    }
    prev = cur;
  }
  return roots;
}

TEST(FindCriticalPoints, TwoGaussianMatchesAxialScan) {
  for (double half : {0.6, 1.0, 1.5}) {
    const auto m = two_gaussian_model(half, 0.5);
    const auto cps = find_critical_points(m, m.region());
    const auto roots = axial_roots(m, m.region().xmin, m.region().xmax);
    ASSERT_EQ(roots.size(), 3u);
    ASSERT_EQ(cps.size(), 3u) << "half separation " << half;
    int maxima = 0, saddles = 0;
    for (const auto& c : cps) {
      EXPECT_NEAR(c.location.y, 0.0, 1e-9);
      const double best = std::min({std::abs(c.location.x - roots[0]), std::abs(c.location.x - roots[1]),
                                    std::abs(c.location.x - roots[2])});
      EXPECT_LT(best, 1e-8);
      maxima += c.kind == CriticalKind::maximum;
      saddles += c.kind == CriticalKind::saddle;
    }
    EXPECT_EQ(maxima, 2);
    EXPECT_EQ(saddles, 1);
  }
}

// Point in convex polygon (counter-clockwise hull) test with tolerance.
bool in_hull(const std::vector<Vec2>& pts, const Vec2& x, double tol) {
  std::vector<Vec2> p = pts;
  std::sort(p.begin(), p.end(), [](const Vec2& a, const Vec2& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  std::vector<Vec2> h;
  for (int pass = 0; pass < 2; ++pass) {
    const std::size_t base = h.size();
    for (const Vec2& q : p) {
      while (h.size() >= base + 2 && cross(h[h.size() - 1] - h[h.size() - 2], q - h[h.size() - 2]) <= 0) h.pop_back();
      h.push_back(q);
    }
    h.pop_back();
    std::reverse(p.begin(), p.end());
  }
  for (std::size_t i = 0; i < h.size(); ++i) {
    const Vec2 a = h[i], b = h[(i + 1) % h.size()];
    if (cross(b - a, x - a) / norm(b - a) < -tol) return false;
  }
  return true;
}

TEST(FindCriticalPoints, PentagonCriticalPointsInConvexHull) {
  for (std::uint64_t seed : {1, 2, 3}) {
    Rng rng(seed);
    const auto ex = pentagon_example(rng, 100);
    const auto cps = find_critical_points(ex.model, Rect{-0.2, 1.2, -0.2, 1.2});
    EXPECT_FALSE(cps.empty());
    const std::vector<Vec2> verts(ex.vertices.begin(), ex.vertices.end());
    for (const auto& c : cps) {
      EXPECT_TRUE(in_hull(verts, c.location, 1e-9)) << "seed " << seed << " at " << c.location.x << ","
                                                    << c.location.y;
      EXPECT_LT(norm(ex.model.gradient(c.location)), 1e-6);
    }
  }
}

TEST(FindCriticalPoints, UnboundedDomainIsError) {
  EXPECT_THROW(find_critical_points(QuadraticBowl{}, Rect{0, 0, 0, 1}), DomainError);
}
