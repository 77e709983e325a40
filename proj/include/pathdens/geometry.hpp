#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace pathdens {

struct Vec2 {
  double x{0.0};
  double y{0.0};

  constexpr Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
  constexpr Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
  constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }

  friend constexpr Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
  friend constexpr Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
  friend constexpr Vec2 operator-(const Vec2& a) { return {-a.x, -a.y}; }
  friend constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
  friend constexpr Vec2 operator/(Vec2 a, double s) { return {a.x / s, a.y / s}; }
  friend constexpr bool operator==(const Vec2&, const Vec2&) = default;
};

constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
constexpr double norm2(const Vec2& a) { return dot(a, a); }
inline double norm(const Vec2& a) { return std::hypot(a.x, a.y); }
inline double distance(const Vec2& a, const Vec2& b) { return norm(a - b); }
inline bool is_finite(const Vec2& a) { return std::isfinite(a.x) && std::isfinite(a.y); }

/// Symmetric 2x2 matrix [[xx, xy], [xy, yy]]. Symmetric by construction.
struct SymMat2 {
  double xx{0.0};
  double xy{0.0};
  double yy{0.0};

  constexpr SymMat2& operator+=(const SymMat2& o) { xx += o.xx; xy += o.xy; yy += o.yy; return *this; }
  constexpr SymMat2& operator*=(double s) { xx *= s; xy *= s; yy *= s; return *this; }
  friend constexpr SymMat2 operator+(SymMat2 a, const SymMat2& b) { return a += b; }
  friend constexpr SymMat2 operator*(SymMat2 a, double s) { return a *= s; }
  friend constexpr SymMat2 operator*(double s, SymMat2 a) { return a *= s; }
  friend constexpr bool operator==(const SymMat2&, const SymMat2&) = default;

  constexpr double yx() const { return xy; }
  constexpr double det() const { return xx * yy - xy * xy; }
  constexpr double trace() const { return xx + yy; }
  constexpr Vec2 apply(const Vec2& v) const { return {xx * v.x + xy * v.y, xy * v.x + yy * v.y}; }

  /// Eigenvalues in ascending order.
  std::array<double, 2> eigenvalues() const {
    const double mean = 0.5 * (xx + yy);
    const double half_diff = 0.5 * (xx - yy);
    const double radius = std::hypot(half_diff, xy);
    return {mean - radius, mean + radius};
  }

  static constexpr SymMat2 identity() { return {1.0, 0.0, 1.0}; }
  static constexpr SymMat2 diagonal(double a, double b) { return {a, 0.0, b}; }
  static constexpr SymMat2 outer(const Vec2& v) { return {v.x * v.x, v.x * v.y, v.y * v.y}; }
};

/// Solves H d = g. Returns false when H is numerically singular.
inline bool solve(const SymMat2& h, const Vec2& g, Vec2& out) {
  const double d = h.det();
  const double scale = std::max({std::abs(h.xx), std::abs(h.yy), std::abs(h.xy)});
  if (!(std::abs(d) > 1e-14 * scale * scale) || !std::isfinite(d)) return false;
  out = {(h.yy * g.x - h.xy * g.y) / d, (h.xx * g.y - h.xy * g.x) / d};
  return true;
}

/// Axis-aligned rectangle.
struct Rect {
  double xmin{0.0};
  double xmax{1.0};
  double ymin{0.0};
  double ymax{1.0};

  constexpr double width() const { return xmax - xmin; }
  constexpr double height() const { return ymax - ymin; }
  constexpr double area() const { return width() * height(); }
  double diameter() const { return std::hypot(width(), height()); }
  constexpr Vec2 center() const { return {0.5 * (xmin + xmax), 0.5 * (ymin + ymax)}; }
  constexpr bool valid() const { return xmax > xmin && ymax > ymin; }

  constexpr bool contains(const Vec2& p) const {
    return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax;
  }
  constexpr bool interior(const Vec2& p) const {
    return p.x > xmin && p.x < xmax && p.y > ymin && p.y < ymax;
  }
  constexpr Rect expanded(double m) const { return {xmin - m, xmax + m, ymin - m, ymax + m}; }

  /// Squared distance from p to the rectangle (0 inside).
  double distance2_to(const Vec2& p) const {
    const double dx = std::max({xmin - p.x, 0.0, p.x - xmax});
    const double dy = std::max({ymin - p.y, 0.0, p.y - ymax});
    return dx * dx + dy * dy;
  }

  /// Distance from p to the rectangle (0 inside).
  double distance_to(const Vec2& p) const {
    const double dx = std::max({xmin - p.x, 0.0, p.x - xmax});
    const double dy = std::max({ymin - p.y, 0.0, p.y - ymax});
    return std::hypot(dx, dy);
  }

  void include(const Vec2& p) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }

  static constexpr Rect empty() {
    constexpr double inf = std::numeric_limits<double>::infinity();
    return {inf, -inf, inf, -inf};
  }
  friend constexpr bool operator==(const Rect&, const Rect&) = default;
};

/// Squared distance from p to the closed segment [a, b].
inline double segment_distance2(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const Vec2 ap = p - a;
  const double len2 = norm2(ab);
  if (len2 <= 0.0) return norm2(ap);
  const double t = std::clamp(dot(ap, ab) / len2, 0.0, 1.0);
  return norm2(ap - ab * t);
}

inline double segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  return std::sqrt(segment_distance2(p, a, b));
}

/// True when the closed segment [a, b] meets the closed disk of radius r around c.
inline bool segment_hits_disk(const Vec2& a, const Vec2& b, const Vec2& c, double r) {
  return segment_distance2(c, a, b) <= r * r;
}

namespace detail {
inline int orientation(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double v = cross(b - a, c - a);
  if (v > 0.0) return 1;
  if (v < 0.0) return -1;
  return 0;
}
inline bool on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
         std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}
}  // namespace detail

/// Closed-segment intersection test, including collinear overlap.
inline bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  using detail::on_segment;
  using detail::orientation;
  const int o1 = orientation(p1, p2, q1);
  const int o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1);
  const int o4 = orientation(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(p1, p2, q1)) return true;
  if (o2 == 0 && on_segment(p1, p2, q2)) return true;
  if (o3 == 0 && on_segment(q1, q2, p1)) return true;
  if (o4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

}  // namespace pathdens
