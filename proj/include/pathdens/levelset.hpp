#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"
#include "grid.hpp"
#include "kernels.hpp"

namespace pathdens {

/// Subset of the nodes of a grid.
struct GridMask {
  GridSpec grid;
  std::vector<std::uint8_t> inside;

  static GridMask none(const GridSpec& g) { return {g, std::vector<std::uint8_t>(g.size(), 0)}; }
  static GridMask all(const GridSpec& g) { return {g, std::vector<std::uint8_t>(g.size(), 1)}; }

  bool contains(int i, int j) const { return inside[grid.index(i, j)] != 0; }
  std::size_t count() const { return static_cast<std::size_t>(std::count(inside.begin(), inside.end(), 1)); }
  bool empty() const { return count() == 0; }
  double fraction() const { return static_cast<double>(count()) / static_cast<double>(inside.size()); }

  std::vector<Vec2> nodes() const {
    std::vector<Vec2> out;
    for (std::size_t k = 0; k < inside.size(); ++k)
      if (inside[k]) out.push_back(grid.node(k));
    return out;
  }

  /// True when every node of this mask is also in `other` (same grid).
  bool subset_of(const GridMask& other) const {
    if (!(grid == other.grid)) throw DomainError("masks live on different grids");
    for (std::size_t k = 0; k < inside.size(); ++k)
      if (inside[k] && !other.inside[k]) return false;
    return true;
  }
};

/// Finite point sample of a set, optionally dilated: the set is
/// {x : dist(x, points) < radius}, or the points themselves when radius = 0.
struct PointSet {
  std::vector<Vec2> points;
  double radius{0.0};
};

/// Empirical q-quantile with the lower nearest-rank convention: the k-th
/// smallest value, k = max(1, floor(q n)).
inline double quantile_threshold(std::span<const double> values, double q) {
  if (!(q > 0.0 && q < 1.0)) throw DomainError("quantile must lie strictly between 0 and 1");
  if (values.empty()) throw DomainError("quantile of no values");
  std::vector<double> v(values.begin(), values.end());
  const std::size_t n = v.size();
  const std::size_t k = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(q * n + 1e-9)));
  std::nth_element(v.begin(), v.begin() + (k - 1), v.end());
  return v[k - 1];
}

/// Quantile of the field (bilinearly interpolated) over the data points.
inline double quantile_threshold(const GridField& field, const PointCloud& at, double q) {
  std::vector<double> vals;
  vals.reserve(at.size());
  for (const auto& p : at) vals.push_back(field.sample(p));
  return quantile_threshold(vals, q);
}

/// Nodes with value strictly above lambda.
inline GridMask level_set(const GridField& field, double lambda) {
  GridMask m = GridMask::none(field.grid);
  for (std::size_t k = 0; k < field.values.size(); ++k) m.inside[k] = field.values[k] > lambda ? 1 : 0;
  return m;
}

namespace detail {

// One-dimensional squared distance transform (Felzenszwalb-Huttenlocher)
// for samples spaced `h` apart: out[q] = min_p f[p] + (h (q - p))^2.
inline void distance_transform_1d(const std::vector<double>& f, double h, std::vector<double>& out) {
  const int n = static_cast<int>(f.size());
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<int> v(n);
  std::vector<double> z(n + 1);
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == inf) continue;
    while (k >= 0) {
      const int p = v[k];
      const double s = ((f[q] + h * h * q * q) - (f[p] + h * h * p * p)) / (2.0 * h * h * (q - p));
      if (s <= z[k]) {
        --k;
      } else {
        break;
      }
    }
    ++k;
    v[k] = q;
    z[k] = k == 0 ? -inf : ((f[q] + h * h * q * q) - (f[v[k - 1]] + h * h * v[k - 1] * v[k - 1])) /
                               (2.0 * h * h * (q - v[k - 1]));
    z[k + 1] = inf;
  }
  out.assign(n, inf);
  if (k < 0) return;
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const double d = h * (q - v[j]);
    out[q] = d * d + f[v[j]];
  }
}

}  // namespace detail

/// Squared Euclidean distance from every node to the nearest mask node.
/// Infinite everywhere when the mask is empty.
inline std::vector<double> squared_distance_to_mask(const GridMask& m) {
  const GridSpec& g = m.grid;
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> d(g.size(), inf);
  std::vector<double> col(g.ny), out;
  for (int i = 0; i < g.nx; ++i) {
    for (int j = 0; j < g.ny; ++j) col[j] = m.contains(i, j) ? 0.0 : inf;
    detail::distance_transform_1d(col, g.dy(), out);
    for (int j = 0; j < g.ny; ++j) d[g.index(i, j)] = out[j];
  }
  std::vector<double> row(g.nx);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) row[i] = d[g.index(i, j)];
    detail::distance_transform_1d(row, g.dx(), out);
    for (int i = 0; i < g.nx; ++i) d[g.index(i, j)] = out[i];
  }
  return d;
}

/// Nodes within distance < r of the mask (the mask itself when r = 0).
inline GridMask dilate(const GridMask& m, double r) {
  if (!(r >= 0.0)) throw DomainError("dilation radius must be nonnegative");
  if (r == 0.0) return m;
  const auto d2 = squared_distance_to_mask(m);
  GridMask out = m;
  for (std::size_t k = 0; k < d2.size(); ++k)
    if (d2[k] < r * r) out.inside[k] = 1;
  return out;
}

inline PointSet dilate(const PointSet& s, double r) {
  if (!(r >= 0.0)) throw DomainError("dilation radius must be nonnegative");
  return {s.points, s.radius + r};
}

/// Nearest-neighbour queries on a fixed point sample via a uniform bucket grid.
class NearestIndex {
 public:
  explicit NearestIndex(std::span<const Vec2> pts) : pts_(pts.begin(), pts.end()) {
    if (pts_.empty()) throw DomainError("nearest-point index needs a nonempty set");
    box_ = Rect::empty();
    for (const auto& p : pts_) box_.include(p);
    const double side = std::max({box_.width(), box_.height(), 1e-12});
    const int per_side = std::clamp(static_cast<int>(std::sqrt(static_cast<double>(pts_.size()))), 1, 1024);
    cell_ = side / per_side;
    nx_ = std::max(1, static_cast<int>(std::ceil(box_.width() / cell_)) + 1);
    ny_ = std::max(1, static_cast<int>(std::ceil(box_.height() / cell_)) + 1);
    buckets_.assign(static_cast<std::size_t>(nx_) * ny_, {});
    for (std::size_t k = 0; k < pts_.size(); ++k) {
      const auto [i, j] = cell_of(pts_[k]);
      buckets_[static_cast<std::size_t>(j) * nx_ + i].push_back(k);
    }
  }

  /// Distance from x to the nearest sample point.
  double distance(const Vec2& x) const {
    const auto [ci, cj] = cell_of(x);
    double best2 = std::numeric_limits<double>::infinity();
    // Cells in ring R + 1 are at least R cells away from x.
    const int max_ring = std::max(nx_, ny_);
    for (int ring = 0; ring <= max_ring; ++ring) {
      for (int j = cj - ring; j <= cj + ring; ++j) {
        if (j < 0 || j >= ny_) continue;
        const bool edge_row = j == cj - ring || j == cj + ring;
        for (int i = ci - ring; i <= ci + ring; i += edge_row ? 1 : 2 * std::max(ring, 1)) {
          if (i < 0 || i >= nx_) continue;
          for (std::size_t k : buckets_[static_cast<std::size_t>(j) * nx_ + i])
            best2 = std::min(best2, norm2(x - pts_[k]));
        }
      }
      const double reach = ring * cell_;
      if (best2 <= reach * reach) break;
    }
    return std::sqrt(best2);
  }

 private:
  std::pair<int, int> cell_of(const Vec2& p) const {
    const int i = std::clamp(static_cast<int>(std::floor((p.x - box_.xmin) / cell_)), 0, nx_ - 1);
    const int j = std::clamp(static_cast<int>(std::floor((p.y - box_.ymin) / cell_)), 0, ny_ - 1);
    return {i, j};
  }

  std::vector<Vec2> pts_;
  Rect box_;
  double cell_{1.0};
  int nx_{1}, ny_{1};
  std::vector<std::vector<std::size_t>> buckets_;
};

/// sup over a in A of the distance from a to B.
inline double directed_hausdorff(std::span<const Vec2> a, std::span<const Vec2> b) {
  if (a.empty() || b.empty()) throw DomainError("Hausdorff distance of an empty set");
  const NearestIndex index(b);
  double worst = 0.0;
  for (const auto& p : a) worst = std::max(worst, index.distance(p));
  return worst;
}

inline double hausdorff_distance(std::span<const Vec2> a, std::span<const Vec2> b) {
  return std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

inline double directed_hausdorff(const GridMask& a, const GridMask& b) {
  const auto pa = a.nodes();
  const auto pb = b.nodes();
  return directed_hausdorff(std::span<const Vec2>(pa), std::span<const Vec2>(pb));
}

inline double hausdorff_distance(const GridMask& a, const GridMask& b) {
  const auto pa = a.nodes();
  const auto pb = b.nodes();
  return hausdorff_distance(std::span<const Vec2>(pa), std::span<const Vec2>(pb));
}

/// Dilated point sets: distances shrink by the dilation radius.
inline double directed_hausdorff(const PointSet& a, const PointSet& b) {
  return std::max(0.0, directed_hausdorff(std::span<const Vec2>(a.points), std::span<const Vec2>(b.points)) -
                           b.radius);
}

/// Radius sigma sqrt(2 log(1 / (2 pi sigma^2 lambda))), defined for
/// 0 < 2 pi sigma^2 lambda < 1.
inline double d_of_lambda(double sigma, double lambda) {
  if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
  const double a = 2.0 * std::numbers::pi * sigma * sigma * lambda;
  if (!(a > 0.0) || a >= 1.0) throw DomainError("d(lambda) needs 0 < 2 pi sigma^2 lambda < 1");
  return sigma * std::sqrt(2.0 * std::log(1.0 / a));
}

inline std::optional<double> try_d_of_lambda(double sigma, double lambda) {
  const double a = 2.0 * std::numbers::pi * sigma * sigma * lambda;
  if (!(sigma > 0.0) || !(a > 0.0) || a >= 1.0) return std::nullopt;
  return d_of_lambda(sigma, lambda);
}

enum class ContainmentVariant {
  /// Saddle neighbourhoods are checked against the d(4 lambda) bound.
  saddle_bound,
  /// Saddle neighbourhoods are removed like maxima.
  exclude_saddles
};

struct ContainmentReport {
  ContainmentVariant variant{ContainmentVariant::saddle_bound};
  std::size_t level_cells{0};
  std::size_t excluded_cells{0};
  std::size_t checked_cells{0};
  std::size_t inside_cells{0};
  std::size_t saddle_cells{0};
  double radius{0.0};
  /// d(lambda) was outside its domain; the radius is epsilon alone.
  bool radius_at_limit{false};
  std::optional<double> saddle_radius;
  /// d(4 lambda) is undefined, so saddle cells are unconstrained.
  bool saddle_bound_vacuous{false};
  double fraction{1.0};
};

/// Fraction of level-set nodes within dist < d(lambda) + eps of the truth
/// sample, after removing nodes within nu of any maximum. Nodes within nu of
/// a saddle are either removed or held to d(4 lambda) + eps.
inline ContainmentReport containment_check(const GridMask& level, std::span<const Vec2> truth, double sigma,
                                           double lambda, double eps, std::span<const Vec2> maxima,
                                           std::span<const Vec2> saddles, double nu,
                                           ContainmentVariant variant = ContainmentVariant::saddle_bound) {
  if (truth.empty()) throw DomainError("containment check needs a nonempty truth set");
  ContainmentReport r;
  r.variant = variant;
  const auto main = try_d_of_lambda(sigma, lambda);
  r.radius_at_limit = !main;
  r.radius = main.value_or(0.0) + eps;
  if (variant == ContainmentVariant::saddle_bound) {
    if (const auto s = try_d_of_lambda(sigma, 4.0 * lambda)) r.saddle_radius = *s + eps;
    else r.saddle_bound_vacuous = true;
  }
  const NearestIndex index(truth);
  auto near_any = [&](const Vec2& x, std::span<const Vec2> pts) {
    return std::any_of(pts.begin(), pts.end(), [&](const Vec2& c) { return distance(c, x) < nu; });
  };
  for (std::size_t k = 0; k < level.inside.size(); ++k) {
    if (!level.inside[k]) continue;
    ++r.level_cells;
    const Vec2 x = level.grid.node(k);
    if (near_any(x, maxima)) {
      ++r.excluded_cells;
      continue;
    }
    const bool at_saddle = near_any(x, saddles);
    if (at_saddle && variant == ContainmentVariant::exclude_saddles) {
      ++r.excluded_cells;
      continue;
    }
    ++r.checked_cells;
    const double d = index.distance(x);
    if (at_saddle) {
      ++r.saddle_cells;
      if (r.saddle_bound_vacuous || d < *r.saddle_radius || d < r.radius) ++r.inside_cells;
    } else if (d < r.radius) {
      ++r.inside_cells;
    }
  }
  r.fraction = r.checked_cells == 0 ? 1.0 : static_cast<double>(r.inside_cells) / r.checked_cells;
  return r;
}

/// Hausdorff distance between the true and estimated level-set masks, or
/// nothing when either mask is empty.
inline std::optional<double> set_distance_consistency(const GridMask& truth, const GridMask& estimate) {
  if (truth.empty() || estimate.empty()) return std::nullopt;
  return hausdorff_distance(truth, estimate);
}

}  // namespace pathdens
