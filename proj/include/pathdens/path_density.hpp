#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "flow.hpp"
#include "geometry.hpp"
#include "grid.hpp"
#include "kernels.hpp"
#include "parallel.hpp"

namespace pathdens {

/// Exact distance from x to the polyline through path.vertices[trim..].
/// A trim that reaches past the last vertex leaves only the terminal vertex.
inline double distance_to_path(const Vec2& x, std::span<const Vec2> vertices, std::size_t trim = 0) {
  if (vertices.empty()) throw DomainError("distance to an empty path");
  if (trim >= vertices.size()) trim = vertices.size() - 1;
  const auto v = vertices.subspan(trim);
  double best = norm2(x - v[0]);
  for (std::size_t i = 1; i < v.size(); ++i) best = std::min(best, segment_distance2(x, v[i - 1], v[i]));
  return std::sqrt(best);
}

inline double distance_to_path(const Vec2& x, const AscentPath& path, std::size_t trim = 0) {
  return distance_to_path(x, std::span<const Vec2>(path.vertices), trim);
}

/// One traced path per data point, in data order, plus a leading-vertex trim.
class PathEnsemble {
 public:
  PathEnsemble() = default;
  explicit PathEnsemble(std::vector<AscentPath> paths, std::size_t trim = 0)
      : paths_(std::move(paths)), trim_(trim) {
    if (paths_.empty()) throw DomainError("path ensemble is empty");
    bounds_.reserve(paths_.size());
    chunk_start_.reserve(paths_.size() + 1);
    for (const auto& p : paths_) {
      if (p.vertices.empty()) throw DomainError("path ensemble contains an empty path");
      const auto v = active(p);
      Rect r = Rect::empty();
      for (const auto& q : v) r.include(q);
      bounds_.push_back(r);
      chunk_start_.push_back(chunks_.size());
      for (std::size_t a = 0; a < v.size(); a += kChunk) {
        Rect c = Rect::empty();
        for (std::size_t b = a; b < std::min(a + kChunk + 1, v.size()); ++b) c.include(v[b]);
        chunks_.push_back(c);
      }
    }
    chunk_start_.push_back(chunks_.size());
  }

  std::size_t size() const { return paths_.size(); }
  std::size_t trim() const { return trim_; }
  const AscentPath& path(std::size_t i) const { return paths_[i]; }
  const std::vector<AscentPath>& paths() const { return paths_; }
  const Rect& bounds(std::size_t i) const { return bounds_[i]; }

  std::span<const Vec2> active_vertices(std::size_t i) const { return active(paths_[i]); }

  /// Equal to distance_to_path(x, path(i).vertices, trim()). Chunks of
  /// kChunk segments whose bounding box is no closer than the best segment
  /// so far are skipped, which leaves the minimum unchanged.
  double distance(const Vec2& x, std::size_t i) const {
    const auto v = active(paths_[i]);
    const std::size_t c0 = chunk_start_[i], nc = chunk_start_[i + 1] - c0;
    if (nc <= 2) return distance_to_path(x, v);
    auto scan = [&](std::size_t c, double best) {
      const std::size_t a = c * kChunk, b = std::min(a + kChunk, v.size() - 1);
      if (a == 0) best = std::min(best, norm2(x - v[0]));
      for (std::size_t k = a + 1; k <= b; ++k) best = std::min(best, segment_distance2(x, v[k - 1], v[k]));
      return best;
    };
    std::size_t first = 0;
    double first_lb = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < nc; ++c) {
      const double lb = chunks_[c0 + c].distance2_to(x);
      if (lb < first_lb) first_lb = lb, first = c;
    }
    double best = scan(first, std::numeric_limits<double>::infinity());
    for (std::size_t c = 0; c < nc; ++c)
      if (c != first && chunks_[c0 + c].distance2_to(x) < best) best = scan(c, best);
    return std::sqrt(best);
  }

  /// Same paths with a different trim.
  PathEnsemble with_trim(std::size_t trim) const { return PathEnsemble(paths_, trim); }

 private:
  std::span<const Vec2> active(const AscentPath& p) const {
    const std::size_t t = std::min(trim_, p.vertices.size() - 1);
    return std::span<const Vec2>(p.vertices).subspan(t);
  }

  static constexpr std::size_t kChunk = 8;

  std::vector<AscentPath> paths_;
  std::size_t trim_{0};
  std::vector<Rect> bounds_;
  std::vector<Rect> chunks_;               // boxes of vertices [8c, 8c + 8] of the active span
  std::vector<std::size_t> chunk_start_;  // first chunk of each path
};

/// Path-density estimate
///   p(x) = (1/n) sum_i (1/nu) K_1(d(x, P_i) / nu)
/// where d is the distance to the i-th traced path and K_1 is the profile
/// scaled to unit mass on [0, inf). Paths whose bounding box lies beyond the
/// kernel support contribute exactly zero and are skipped.
inline double estimate_path_density(const PathEnsemble& ensemble, const KernelSpec& k, double nu,
                                    const Vec2& x) {
  if (ensemble.size() == 0) throw DomainError("path ensemble is empty");
  if (!(nu > 0.0) || !std::isfinite(nu)) throw DomainError("path-density bandwidth must be positive");
  const double reach = k.support_radius() * nu;
  double sum = 0.0;
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    if (ensemble.bounds(i).distance_to(x) > reach) continue;
    const double t = ensemble.distance(x, i) / nu;
    sum += k.terms_at_half_square(0.5 * t * t).k0;
  }
  return k.path_normalizer() * sum / (nu * static_cast<double>(ensemble.size()));
}

/// Path density at every node of `grid`, equal node by node to
/// estimate_path_density. Each row visits the paths in the outer loop so a
/// path's vertices stay in cache across the row; every node still sums the
/// paths in ensemble order.
inline GridField path_density_field(const PathEnsemble& ensemble, const KernelSpec& k, double nu,
                                    const GridSpec& grid, unsigned workers = worker_count()) {
  grid.validate();
  if (ensemble.size() == 0) throw DomainError("path ensemble is empty");
  if (!(nu > 0.0) || !std::isfinite(nu)) throw DomainError("path-density bandwidth must be positive");
  const double reach = k.support_radius() * nu;
  const double n = static_cast<double>(ensemble.size());
  GridField field{grid, std::vector<double>(grid.size())};
  parallel_for(
      static_cast<std::size_t>(grid.ny),
      [&](std::size_t jj) {
        const int j = static_cast<int>(jj);
        Rect row = Rect::empty();
        std::vector<Vec2> nodes(static_cast<std::size_t>(grid.nx));
        for (int i = 0; i < grid.nx; ++i) row.include(nodes[static_cast<std::size_t>(i)] = grid.node(i, j));
        std::vector<double> sum(nodes.size(), 0.0);
        for (std::size_t p = 0; p < ensemble.size(); ++p) {
          const Rect& b = ensemble.bounds(p);
          if (b.xmin - row.xmax > reach || row.xmin - b.xmax > reach || b.ymin - row.ymax > reach ||
              row.ymin - b.ymax > reach)
            continue;
          for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (b.distance_to(nodes[i]) > reach) continue;
            const double t = ensemble.distance(nodes[i], p) / nu;
            sum[i] += k.terms_at_half_square(0.5 * t * t).k0;
          }
        }
        for (int i = 0; i < grid.nx; ++i) field.values[grid.index(i, j)] = k.path_normalizer() * sum[static_cast<std::size_t>(i)] / (nu * n);
      },
      workers);
  return field;
}

/// Path density at arbitrary points.
inline std::vector<double> path_density_at(const PathEnsemble& ensemble, const KernelSpec& k, double nu,
                                           std::span<const Vec2> points, unsigned workers = worker_count()) {
  std::vector<double> out(points.size());
  parallel_for(
      points.size(), [&](std::size_t i) { out[i] = estimate_path_density(ensemble, k, nu, points[i]); },
      workers);
  return out;
}

enum class BandwidthSource { user, rate_schedule };

/// KDE bandwidth h and path-density bandwidth nu.
struct BandwidthPlan {
  double h{0.0};
  double nu{0.0};
  BandwidthSource source{BandwidthSource::user};
  double c_h{0.0};
  double c_nu{0.0};

  void validate() const {
    if (!(h > 0.0) || !(nu > 0.0)) throw DomainError("bandwidths must be positive");
  }
};

/// Default constants of the rate schedule, in units of the data spread.
inline constexpr double kDefaultCh = 0.1;
inline constexpr double kDefaultCnu = 0.05;

/// Rate-optimal schedule
///   h  = c_h  * spread * (log n)^{1/4} / n^{1/8}
///   nu = c_nu * spread * log n / n^{1/3}
inline BandwidthPlan default_bandwidths(std::size_t n, double spread, double c_h = kDefaultCh,
                                        double c_nu = kDefaultCnu) {
  if (n < 2) throw DomainError("bandwidth schedule needs n >= 2");
  if (!(spread > 0.0) || !std::isfinite(spread)) throw DomainError("spread must be positive");
  if (!(c_h > 0.0) || !(c_nu > 0.0)) throw DomainError("bandwidth constants must be positive");
  const double dn = static_cast<double>(n);
  const double ln = std::log(dn);
  BandwidthPlan plan;
  plan.h = c_h * spread * std::pow(ln, 0.25) / std::pow(dn, 0.125);
  plan.nu = c_nu * spread * ln / std::cbrt(dn);
  plan.source = BandwidthSource::rate_schedule;
  plan.c_h = c_h;
  plan.c_nu = c_nu;
  return plan;
}

/// Ascent paths of `field` from every point of `cloud`, in cloud order.
template <ScalarFieldSource F>
std::vector<AscentPath> trace_paths(const F& field, std::span<const Vec2> starts, const FlowConfig& cfg,
                                    unsigned workers = worker_count()) {
  std::vector<AscentPath> paths(starts.size());
  parallel_for(
      starts.size(), [&](std::size_t i) { paths[i] = trace_ascent_path(field, starts[i], cfg); }, workers);
  return paths;
}

inline std::vector<AscentPath> mean_shift_paths(const Kde& kde, std::span<const Vec2> starts,
                                                const FlowConfig& cfg, unsigned workers = worker_count()) {
  std::vector<AscentPath> paths(starts.size());
  parallel_for(
      starts.size(), [&](std::size_t i) { paths[i] = mean_shift_path(kde, starts[i], cfg); }, workers);
  return paths;
}

/// Approximate peak of a KDE from its values at (up to 256) data points.
inline double kde_peak_estimate(const Kde& kde) {
  const std::size_t n = kde.size();
  const std::size_t stride = std::max<std::size_t>(1, n / 256);
  double peak = 0.0;
  for (std::size_t i = 0; i < n; i += stride) peak = std::max(peak, kde.value(kde.point(i)));
  return peak;
}

/// Flow defaults for tracing a KDE: step 0.1 h, grad_tolerance
/// 1e-7 max|g|/h, min_displacement 1e-6 h, 10000 steps.
inline FlowConfig flow_config_for(const Kde& kde) {
  return FlowConfig::for_scale(kde.bandwidth(), kde_peak_estimate(kde));
}

}  // namespace pathdens
