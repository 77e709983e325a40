#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "errors.hpp"
#include "field.hpp"
#include "geometry.hpp"
#include "kernels.hpp"

namespace pathdens {

/// Step control for ascent tracing.
///
/// The RK4 time step is step_scale / max(|grad g|, grad_tolerance), so
/// accepted steps have roughly constant arc length step_scale. A step that
/// would lower the field value is halved and retried. The time step is also
/// capped at 1 / kappa, where kappa is the gradient change per unit length
/// over the last accepted step; near a mode this cuts down on overshoot and
/// halving. Tracing stops when
/// |grad g| < grad_tolerance, when an accepted step moves less than
/// min_displacement, or after max_steps accepted steps.
struct FlowConfig {
  double step_scale{0.01};
  int max_steps{10000};
  double grad_tolerance{1e-9};
  double min_displacement{1e-9};
  /// Upper bound on the RK4 time step. Unbounded by default; closed-form
  /// comparisons cap it so the time discretization stays accurate.
  double max_time_step{std::numeric_limits<double>::infinity()};
  /// trim_hint marks the first vertex whose value exceeds the start value
  /// by this relative amount.
  double trim_fraction{0.1};

  void validate() const {
    if (!(step_scale > 0.0) || max_steps <= 0 || !(grad_tolerance > 0.0) ||
        !(min_displacement > 0.0) || !(max_time_step > 0.0) || !(trim_fraction >= 0.0))
      throw DomainError("flow configuration values must be positive");
  }

  /// Defaults for a field with feature length `scale` and peak value `peak`:
  /// grad_tolerance = 1e-7 peak / scale, min_displacement = 1e-6 scale.
  static FlowConfig for_scale(double scale, double peak) {
    FlowConfig c;
    c.step_scale = 0.1 * scale;
    c.grad_tolerance = 1e-7 * peak / scale;
    c.min_displacement = 1e-6 * scale;
    c.max_steps = 10000;
    return c;
  }
};

enum class StopReason { gradient, displacement, stalled, max_steps };

inline std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::gradient: return "gradient";
    case StopReason::displacement: return "displacement";
    case StopReason::stalled: return "stalled";
    case StopReason::max_steps: return "max_steps";
  }
  return "unknown";
}

/// A discretized integral curve or mean-shift trajectory.
struct AscentPath {
  std::vector<Vec2> vertices;
  std::vector<double> times;   // flow time per vertex (iteration index for mean shift)
  std::vector<double> values;  // field value per vertex
  int step_count{0};
  double terminal_gradient_norm{0.0};
  bool converged{false};
  std::size_t trim_hint{0};
  StopReason stop{StopReason::max_steps};

  std::size_t size() const { return vertices.size(); }
  const Vec2& start() const { return vertices.front(); }
  const Vec2& end() const { return vertices.back(); }

  double arc_length() const {
    double len = 0.0;
    for (std::size_t i = 1; i < vertices.size(); ++i) len += distance(vertices[i - 1], vertices[i]);
    return len;
  }
};

namespace detail {
inline std::size_t trim_index(const std::vector<double>& values, double fraction) {
  if (values.empty()) return 0;
  const double threshold = values.front() + fraction * std::abs(values.front());
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] > threshold) return i;
  return values.size() - 1;
}
}  // namespace detail

/// Steepest-ascent integral curve of `field` from x0 by classical RK4 with
/// arc-length normalized steps and halving on ascent violation.
template <ScalarFieldSource F>
AscentPath trace_ascent_path(const F& field, const Vec2& x0, const FlowConfig& cfg) {
  cfg.validate();
  if (!is_finite(x0)) throw DomainError("trace start point must be finite");

  AscentPath path;
  FieldSample cur = evaluate(field, x0);
  if (!std::isfinite(cur.value) || !is_finite(cur.gradient))
    throw NumericalError("non-finite field value at trace start", x0);
  Vec2 x = x0;
  double t = 0.0;
  path.vertices.push_back(x);
  path.times.push_back(t);
  path.values.push_back(cur.value);

  double shrink = 1.0;
  double curvature_cap = std::numeric_limits<double>::infinity();
  constexpr double min_shrink = 1e-12;
  path.stop = StopReason::max_steps;
  while (path.step_count < cfg.max_steps) {
    const double gn = norm(cur.gradient);
    if (gn < cfg.grad_tolerance) {
      path.stop = StopReason::gradient;
      break;
    }
    bool accepted = false;
    Vec2 xn;
    FieldSample next;
    double dt = 0.0;
    while (!accepted) {
      dt = std::min({shrink * cfg.step_scale / gn, cfg.max_time_step, curvature_cap});
      const Vec2 k1 = cur.gradient;
      const Vec2 k2 = field.gradient(x + k1 * (0.5 * dt));
      const Vec2 k3 = field.gradient(x + k2 * (0.5 * dt));
      const Vec2 k4 = field.gradient(x + k3 * dt);
      xn = x + (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (dt / 6.0);
      if (!is_finite(xn)) throw NumericalError("non-finite point along ascent path", x);
      next = evaluate(field, xn);
      if (!std::isfinite(next.value) || !is_finite(next.gradient))
        throw NumericalError("non-finite field value along ascent path", x);
      if (next.value >= cur.value) {
        accepted = true;
      } else {
        shrink *= 0.5;
        if (shrink < min_shrink) break;
      }
    }
    if (!accepted) {
      path.stop = StopReason::stalled;
      break;
    }
    if (distance(xn, x) < cfg.min_displacement) {
      path.stop = StopReason::displacement;
      break;
    }
    const double kappa = norm(next.gradient - cur.gradient) / distance(xn, x);
    if (kappa > 0.0) curvature_cap = 1.0 / kappa;
    x = xn;
    t += dt;
    cur = next;
    ++path.step_count;
    path.vertices.push_back(x);
    path.times.push_back(t);
    path.values.push_back(cur.value);
    shrink = std::min(1.0, shrink * 1.25);
  }
  path.terminal_gradient_norm = norm(cur.gradient);
  path.converged = path.terminal_gradient_norm < cfg.grad_tolerance;
  path.trim_hint = detail::trim_index(path.values, cfg.trim_fraction);
  return path;
}

/// Mean-shift trajectory x^{k+1} = sum X_i K(|x^k - X_i|/h) / sum K(...).
/// Stops when a move is shorter than min_displacement or after max_steps;
/// `converged` reports whether the endpoint is a mode of the estimate.
inline AscentPath mean_shift_path(const Kde& kde, const Vec2& x0, const FlowConfig& cfg) {
  cfg.validate();
  if (!is_finite(x0)) throw DomainError("mean-shift start point must be finite");
  const double value_scale =
      kde.kernel().normalizer() / (kde.bandwidth() * kde.bandwidth() * static_cast<double>(kde.size()));

  AscentPath path;
  Vec2 x = x0;
  double weight_sum = 0.0;
  Vec2 target = kde.weighted_mean(x, weight_sum);
  if (!(weight_sum > 0.0)) throw DomainError("mean shift: start too far from data (all kernel weights are zero)");
  path.vertices.push_back(x);
  path.times.push_back(0.0);
  path.values.push_back(value_scale * weight_sum);
  path.stop = StopReason::max_steps;
  while (path.step_count < cfg.max_steps) {
    if (distance(target, x) < cfg.min_displacement) {
      path.stop = StopReason::displacement;
      break;
    }
    x = target;
    ++path.step_count;
    target = kde.weighted_mean(x, weight_sum);
    if (!(weight_sum > 0.0)) throw NumericalError("mean shift: kernel weights vanished", x);
    path.vertices.push_back(x);
    path.times.push_back(static_cast<double>(path.step_count));
    path.values.push_back(value_scale * weight_sum);
  }
  path.terminal_gradient_norm = norm(kde.gradient(x));
  path.converged = path.terminal_gradient_norm < cfg.grad_tolerance;
  path.trim_hint = detail::trim_index(path.values, cfg.trim_fraction);
  return path;
}

enum class CriticalKind { minimum, saddle, maximum, degenerate };

inline std::string to_string(CriticalKind k) {
  switch (k) {
    case CriticalKind::minimum: return "minimum";
    case CriticalKind::saddle: return "saddle";
    case CriticalKind::maximum: return "maximum";
    case CriticalKind::degenerate: return "degenerate";
  }
  return "unknown";
}

struct CriticalPoint {
  Vec2 location;
  CriticalKind kind{CriticalKind::degenerate};
  std::array<double, 2> hessian_eigenvalues{};
  double gradient_norm{0.0};
};

/// Eigenvalue-sign classification; |lambda| < eps on either axis is degenerate.
inline CriticalKind classify_critical_point(const SymMat2& hessian, double eps) {
  const auto ev = hessian.eigenvalues();
  if (std::abs(ev[0]) < eps || std::abs(ev[1]) < eps) return CriticalKind::degenerate;
  if (ev[1] < 0.0) return CriticalKind::maximum;
  if (ev[0] > 0.0) return CriticalKind::minimum;
  return CriticalKind::saddle;
}

struct CriticalPointConfig {
  int seeds_x{24};
  int seeds_y{24};
  int max_iterations{80};
  /// Roots must satisfy |grad g| below this. Non-positive selects
  /// 1e-8 * max|g over seeds| / diameter.
  double grad_tolerance{0.0};
  /// Non-positive selects 1e-3 * domain diameter.
  double merge_radius{0.0};
  /// Non-positive selects 1e-6 * max|g over seeds| / diameter^2.
  double degeneracy_eps{0.0};
};

/// Newton iteration on grad g = 0 from a grid of seeds over `domain`.
/// Diverging seeds are dropped; nearby roots are merged. Degenerate roots
/// where the field is below 1e-12 of its largest seed value are dropped.
template <ScalarFieldSource F>
std::vector<CriticalPoint> find_critical_points(const F& field, const Rect& domain,
                                                const CriticalPointConfig& cfg = {}) {
  if (!domain.valid()) throw DomainError("critical point search needs a bounded, nondegenerate domain");
  const double diam = domain.diameter();
  const int sx = std::max(cfg.seeds_x, 1);
  const int sy = std::max(cfg.seeds_y, 1);

  std::vector<Vec2> seeds;
  seeds.reserve(static_cast<std::size_t>(sx * sy));
  double gmax = 0.0;
  for (int j = 0; j < sy; ++j) {
    for (int i = 0; i < sx; ++i) {
      const Vec2 s{domain.xmin + (i + 0.5) * domain.width() / sx,
                   domain.ymin + (j + 0.5) * domain.height() / sy};
      seeds.push_back(s);
      gmax = std::max(gmax, std::abs(field.value(s)));
    }
  }
  const double grad_tol = cfg.grad_tolerance > 0.0 ? cfg.grad_tolerance : 1e-8 * gmax / diam;
  const double merge = cfg.merge_radius > 0.0 ? cfg.merge_radius : 1e-3 * diam;
  const double eps = cfg.degeneracy_eps > 0.0 ? cfg.degeneracy_eps : 1e-6 * gmax / (diam * diam);
  const Rect box = domain.expanded(0.1 * diam);

  std::vector<CriticalPoint> found;
  for (const Vec2& seed : seeds) {
    Vec2 x = seed;
    bool ok = false;
    for (int it = 0; it < cfg.max_iterations; ++it) {
      const Vec2 g = field.gradient(x);
      const SymMat2 h = field.hessian(x);
      Vec2 d;
      if (!solve(h, g, d)) break;
      x -= d;
      if (!is_finite(x) || !box.contains(x)) break;
      if (norm(d) < 1e-13 * diam) {
        ok = true;
        break;
      }
    }
    if (!ok || !domain.contains(x)) continue;
    const double gn = norm(field.gradient(x));
    if (!(gn <= grad_tol)) continue;
    const bool duplicate = std::any_of(found.begin(), found.end(), [&](const CriticalPoint& c) {
      return distance(c.location, x) < merge;
    });
    if (duplicate) continue;
    const SymMat2 h = field.hessian(x);
    const CriticalKind kind = classify_critical_point(h, eps);
    // flat, numerically vanishing tails (far from any mass) are not critical points
    if (kind == CriticalKind::degenerate && std::abs(field.value(x)) < 1e-12 * gmax) continue;
    found.push_back({x, kind, h.eigenvalues(), gn});
  }
  return found;
}

}  // namespace pathdens
