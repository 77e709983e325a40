#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "field.hpp"
#include "geometry.hpp"

namespace pathdens {

enum class Profile { gaussian, truncated_gaussian };

/// Radial kernel profile K on [0, inf) together with the two constants that
/// turn it into a density: c_K normalizes c_K K(|u|) over the plane (used by
/// the density estimate) and the half-line constant normalizes K over
/// [0, inf) (used when smoothing distances to paths).
///
/// Profiles are written in terms of s = t^2/2, kappa(s) = K(t):
///   gaussian            kappa(s) = exp(-s)
///   truncated-gaussian  kappa(s) = exp(-s) - exp(-c^2/2) for t < c, else 0
/// The truncated profile is shifted so it stays continuous at the cutoff.
class KernelSpec {
 public:
  static KernelSpec gaussian() { return KernelSpec(Profile::gaussian, 0.0); }

  static KernelSpec truncated_gaussian(double cutoff) {
    if (!(cutoff > 0.0) || !std::isfinite(cutoff))
      throw DomainError("truncated-gaussian cutoff must be positive and finite");
    return KernelSpec(Profile::truncated_gaussian, cutoff);
  }

  Profile profile() const { return profile_; }
  double cutoff() const { return cutoff_; }
  std::string name() const {
    return profile_ == Profile::gaussian ? "gaussian" : "truncated-gaussian";
  }

  /// kappa(s), kappa'(s), kappa''(s) at s = t^2/2.
  struct Terms {
    double k0;
    double k1;
    double k2;
  };
  Terms terms_at_half_square(double s) const {
    if (profile_ == Profile::truncated_gaussian && s >= half_cut2_) return {0.0, 0.0, 0.0};
    const double e = std::exp(-s);
    return {e - floor_, -e, e};
  }

  /// Raw profile K(t), K(0) = 1.
  double value(double t) const {
    if (!(t >= 0.0)) throw DomainError("kernel argument must be nonnegative");
    return terms_at_half_square(0.5 * t * t).k0;
  }
  /// dK/dt.
  double derivative(double t) const {
    if (!(t >= 0.0)) throw DomainError("kernel argument must be nonnegative");
    return t * terms_at_half_square(0.5 * t * t).k1;
  }

  /// c_K with c_K * integral of K(|u|) over R^2 equal to 1.
  double normalizer() const { return normalizer_; }
  /// 1 / integral of K over [0, inf).
  double path_normalizer() const { return path_normalizer_; }
  /// Beyond this argument K is exactly zero in double precision.
  double support_radius() const {
    // exp(-s) underflows to +0 for s > 745.13; sqrt(2 * 745.2) = 38.61
    return profile_ == Profile::truncated_gaussian ? cutoff_ : 38.61;
  }
  /// sup |K'| over [0, inf); attained at t = 1 for the gaussian family.
  double derivative_bound() const { return std::exp(-0.5); }

  friend bool operator==(const KernelSpec& a, const KernelSpec& b) {
    return a.profile_ == b.profile_ && a.cutoff_ == b.cutoff_;
  }

 private:
  KernelSpec(Profile p, double cutoff) : profile_(p), cutoff_(cutoff) {
    constexpr double pi = std::numbers::pi;
    if (p == Profile::gaussian) {
      normalizer_ = 1.0 / (2.0 * pi);
      path_normalizer_ = 1.0 / std::sqrt(pi / 2.0);
    } else {
      half_cut2_ = 0.5 * cutoff * cutoff;
      floor_ = std::exp(-half_cut2_);
      const double planar = 2.0 * pi * ((1.0 - floor_) - floor_ * half_cut2_);
      const double half_line =
          std::sqrt(pi / 2.0) * std::erf(cutoff / std::numbers::sqrt2) - cutoff * floor_;
      normalizer_ = 1.0 / planar;
      path_normalizer_ = 1.0 / half_line;
    }
  }

  Profile profile_;
  double cutoff_;
  double half_cut2_{0.0};
  double floor_{0.0};
  double normalizer_{0.0};
  double path_normalizer_{0.0};
};

inline double kernel_value(const KernelSpec& k, double t) { return k.value(t); }

/// The sample X_1..X_n. All coordinates share one length unit.
class PointCloud {
 public:
  PointCloud() = default;
  explicit PointCloud(std::vector<Vec2> points) : points_(std::move(points)) {
    for (const auto& p : points_)
      if (!is_finite(p)) throw DomainError("point cloud contains a non-finite coordinate");
  }

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Vec2& operator[](std::size_t i) const { return points_[i]; }
  std::span<const Vec2> points() const { return points_; }
  auto begin() const { return points_.begin(); }
  auto end() const { return points_.end(); }

  Rect bounds() const {
    Rect r = Rect::empty();
    for (const auto& p : points_) r.include(p);
    return r;
  }
  /// Largest coordinate range; the length scale used for default bandwidths.
  double spread() const {
    const Rect r = bounds();
    return std::max(r.width(), r.height());
  }

 private:
  std::vector<Vec2> points_;
};

/// Kernel density estimate
///   g(x) = (1/n) sum_i (c_K / h^2) K(|x - X_i| / h)
/// with analytic gradient and Hessian. Direct summation over all points.
class Kde {
 public:
  Kde(const PointCloud& cloud, KernelSpec kernel, double bandwidth)
      : kernel_(kernel), h_(bandwidth) {
    if (cloud.empty()) throw DomainError("kernel density estimate needs a nonempty point cloud");
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth))
      throw DomainError("bandwidth must be positive and finite");
    xs_.reserve(cloud.size());
    ys_.reserve(cloud.size());
    for (const auto& p : cloud) {
      xs_.push_back(p.x);
      ys_.push_back(p.y);
    }
    inv_h2_ = 1.0 / (h_ * h_);
    scale_ = kernel_.normalizer() * inv_h2_ / static_cast<double>(xs_.size());
  }

  const KernelSpec& kernel() const { return kernel_; }
  double bandwidth() const { return h_; }
  std::size_t size() const { return xs_.size(); }
  Vec2 point(std::size_t i) const { return {xs_[i], ys_[i]}; }

  double value(const Vec2& x) const {
    double sum = 0.0;
    if (gaussian()) {
      const double c = 0.5 * inv_h2_;
      for (std::size_t i = 0; i < xs_.size(); ++i) {
        const double dx = x.x - xs_[i];
        const double dy = x.y - ys_[i];
        sum += std::exp(-c * (dx * dx + dy * dy));
      }
    } else {
      for (std::size_t i = 0; i < xs_.size(); ++i) sum += terms(x, i).k0;
    }
    return scale_ * sum;
  }

  FieldSample value_and_gradient(const Vec2& x) const {
    double sum = 0.0, gx = 0.0, gy = 0.0;
    if (gaussian()) {
      const double c = 0.5 * inv_h2_;
      for (std::size_t i = 0; i < xs_.size(); ++i) {
        const double dx = x.x - xs_[i];
        const double dy = x.y - ys_[i];
        const double e = std::exp(-c * (dx * dx + dy * dy));
        sum += e;
        gx += e * dx;
        gy += e * dy;
      }
      // d/dx exp(-|d|^2 / 2h^2) = -exp(.) d / h^2
      return {scale_ * sum, Vec2{gx, gy} * (-scale_ * inv_h2_)};
    }
    for (std::size_t i = 0; i < xs_.size(); ++i) {
      const auto t = terms(x, i);
      const double dx = x.x - xs_[i];
      const double dy = x.y - ys_[i];
      sum += t.k0;
      gx += t.k1 * dx;
      gy += t.k1 * dy;
    }
    return {scale_ * sum, Vec2{gx, gy} * (scale_ * inv_h2_)};
  }

  Vec2 gradient(const Vec2& x) const { return value_and_gradient(x).gradient; }

  SymMat2 hessian(const Vec2& x) const {
    double a = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs_.size(); ++i) {
      const auto t = terms(x, i);
      const double dx = x.x - xs_[i];
      const double dy = x.y - ys_[i];
      a += t.k1;
      sxx += t.k2 * dx * dx;
      sxy += t.k2 * dx * dy;
      syy += t.k2 * dy * dy;
    }
    // H = kappa'/h^2 I + kappa'' d d^T / h^4
    const double s1 = scale_ * inv_h2_;
    const double s2 = s1 * inv_h2_;
    return {s1 * a + s2 * sxx, s2 * sxy, s1 * a + s2 * syy};
  }

  /// Kernel-weighted mean of the data at x (one mean-shift update) and the
  /// raw weight sum. Weights are normalized before averaging so a single
  /// point maps exactly onto itself.
  Vec2 weighted_mean(const Vec2& x, double& weight_sum) const {
    weight_sum = 0.0;
    std::vector<double> w(xs_.size());
    for (std::size_t i = 0; i < xs_.size(); ++i) {
      w[i] = terms(x, i).k0;
      weight_sum += w[i];
    }
    if (!(weight_sum > 0.0)) return x;
    Vec2 m{0.0, 0.0};
    for (std::size_t i = 0; i < xs_.size(); ++i) {
      const double wi = w[i] / weight_sum;
      m.x += wi * xs_[i];
      m.y += wi * ys_[i];
    }
    return m;
  }

 private:
  bool gaussian() const { return kernel_.profile() == Profile::gaussian; }
  KernelSpec::Terms terms(const Vec2& x, std::size_t i) const {
    const double dx = x.x - xs_[i];
    const double dy = x.y - ys_[i];
    return kernel_.terms_at_half_square(0.5 * inv_h2_ * (dx * dx + dy * dy));
  }

  KernelSpec kernel_;
  double h_;
  double inv_h2_{0.0};
  double scale_{0.0};
  std::vector<double> xs_;
  std::vector<double> ys_;
};

inline double kde_density(const PointCloud& cloud, const KernelSpec& k, double h, const Vec2& x) {
  return Kde(cloud, k, h).value(x);
}
inline Vec2 kde_gradient(const PointCloud& cloud, const KernelSpec& k, double h, const Vec2& x) {
  return Kde(cloud, k, h).gradient(x);
}
inline SymMat2 kde_hessian(const PointCloud& cloud, const KernelSpec& k, double h, const Vec2& x) {
  return Kde(cloud, k, h).hessian(x);
}

}  // namespace pathdens
