#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"

namespace pathdens {

/// Rectangular lattice of nx * ny nodes spanning `bounds` (corners included).
struct GridSpec {
  Rect bounds;
  int nx{2};
  int ny{2};

  void validate() const {
    if (nx < 2 || ny < 2) throw DomainError("grid needs at least 2x2 nodes");
    if (!bounds.valid()) throw DomainError("grid bounds are degenerate");
  }
  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  double dx() const { return bounds.width() / (nx - 1); }
  double dy() const { return bounds.height() / (ny - 1); }
  double cell_diagonal() const { return std::hypot(dx(), dy()); }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }
  Vec2 node(int i, int j) const { return {bounds.xmin + i * dx(), bounds.ymin + j * dy()}; }
  Vec2 node(std::size_t k) const {
    return node(static_cast<int>(k % nx), static_cast<int>(k / nx));
  }
  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Scalar values at every node of a GridSpec, row-major (j * nx + i).
struct GridField {
  GridSpec grid;
  std::vector<double> values;

  double at(int i, int j) const { return values[grid.index(i, j)]; }
  double max() const { return *std::max_element(values.begin(), values.end()); }
  double min() const { return *std::min_element(values.begin(), values.end()); }

  /// Bilinear interpolation; points outside the grid are clamped to it.
  double sample(const Vec2& p) const {
    const double fx = std::clamp((p.x - grid.bounds.xmin) / grid.dx(), 0.0, grid.nx - 1.0);
    const double fy = std::clamp((p.y - grid.bounds.ymin) / grid.dy(), 0.0, grid.ny - 1.0);
    const int i = std::min(static_cast<int>(fx), grid.nx - 2);
    const int j = std::min(static_cast<int>(fy), grid.ny - 2);
    const double u = fx - i;
    const double v = fy - j;
    return (1 - u) * (1 - v) * at(i, j) + u * (1 - v) * at(i + 1, j) +
           (1 - u) * v * at(i, j + 1) + u * v * at(i + 1, j + 1);
  }
};

}  // namespace pathdens
