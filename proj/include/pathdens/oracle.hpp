#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "errors.hpp"
#include "flow.hpp"
#include "geometry.hpp"
#include "grid.hpp"
#include "kernels.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "path_density.hpp"
#include "random.hpp"

namespace pathdens {

/// Monte-Carlo estimate of the probability that the ascent path of a random
/// draw meets a set.
struct PathMeasureEstimate {
  double value{0.0};
  double std_error{0.0};
  std::size_t n_mc{0};
  std::size_t hits{0};
};

/// Flow settings for tracing the true model: steps of sigma/40 so that the
/// default oracle radius sigma/20 spans two steps.
inline FlowConfig oracle_flow_config(const FilamentModel& model) {
  const double sigma = model.max_sigma();
  double peak = 0.0;
  const auto pts = model.structure_points();
  const std::size_t stride = std::max<std::size_t>(1, pts.size() / 512);
  for (std::size_t i = 0; i < pts.size(); i += stride) peak = std::max(peak, model.value(pts[i]));
  FlowConfig c = FlowConfig::for_scale(sigma, peak);
  c.step_scale = sigma / 40.0;
  c.max_steps = 100000;
  return c;
}

struct OracleConfig {
  std::size_t n_mc{100000};
  std::uint64_t seed{1};
  std::optional<FlowConfig> flow;
  unsigned workers{worker_count()};
  std::size_t block_size{1024};

  FlowConfig flow_for(const FilamentModel& model) const { return flow ? *flow : oracle_flow_config(model); }
};

/// Default inner radius of the extrapolation pair: max(2 path steps, sigma/20).
inline double default_oracle_radius(const FilamentModel& model, const OracleConfig& cfg) {
  return std::max(2.0 * cfg.flow_for(model).step_scale, model.max_sigma() / 20.0);
}

/// Closed disk queried by the hit counter. A path counts once per group when
/// it meets any disk of the group.
struct DiskQuery {
  Vec2 center;
  double radius{0.0};
  std::size_t group{0};
};

/// Uniform bucket grid over a fixed set of disks.
class DiskIndex {
 public:
  explicit DiskIndex(std::vector<DiskQuery> disks) : disks_(std::move(disks)) {
    if (disks_.empty()) throw DomainError("no disks to query");
    Rect box = Rect::empty();
    double rmax = 0.0;
    for (const auto& d : disks_) {
      if (!(d.radius > 0.0) || !is_finite(d.center)) throw DomainError("query disks need radius > 0");
      box.include(d.center);
      rmax = std::max(rmax, d.radius);
      groups_ = std::max(groups_, d.group + 1);
    }
    box_ = box.expanded(rmax);
    cell_ = std::max({2.0 * rmax, box_.width() / 1024.0, box_.height() / 1024.0});
    nx_ = std::max(1, static_cast<int>(std::ceil(box_.width() / cell_)));
    ny_ = std::max(1, static_cast<int>(std::ceil(box_.height() / cell_)));
    buckets_.assign(static_cast<std::size_t>(nx_) * ny_, {});
    for (std::size_t k = 0; k < disks_.size(); ++k) {
      const auto& d = disks_[k];
      const auto [i0, j0] = cell_of({d.center.x - d.radius, d.center.y - d.radius});
      const auto [i1, j1] = cell_of({d.center.x + d.radius, d.center.y + d.radius});
      for (int j = j0; j <= j1; ++j)
        for (int i = i0; i <= i1; ++i) buckets_[static_cast<std::size_t>(j) * nx_ + i].push_back(k);
    }
  }

  std::size_t group_count() const { return groups_; }
  const std::vector<DiskQuery>& disks() const { return disks_; }

  /// Calls fn(disk index) for disks whose bucket overlaps the box of segment ab.
  template <class Fn>
  void for_each_candidate(const Vec2& a, const Vec2& b, Fn&& fn) const {
    const double lo_x = std::min(a.x, b.x), hi_x = std::max(a.x, b.x);
    const double lo_y = std::min(a.y, b.y), hi_y = std::max(a.y, b.y);
    if (hi_x < box_.xmin || lo_x > box_.xmax || hi_y < box_.ymin || lo_y > box_.ymax) return;
    const auto [i0, j0] = cell_of({lo_x, lo_y});
    const auto [i1, j1] = cell_of({hi_x, hi_y});
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i)
        for (std::size_t k : buckets_[static_cast<std::size_t>(j) * nx_ + i]) fn(k);
  }

 private:
  std::pair<int, int> cell_of(const Vec2& p) const {
    const int i = std::clamp(static_cast<int>(std::floor((p.x - box_.xmin) / cell_)), 0, nx_ - 1);
    const int j = std::clamp(static_cast<int>(std::floor((p.y - box_.ymin) / cell_)), 0, ny_ - 1);
    return {i, j};
  }

  std::vector<DiskQuery> disks_;
  std::size_t groups_{0};
  Rect box_;
  double cell_{1.0};
  int nx_{1}, ny_{1};
  std::vector<std::vector<std::size_t>> buckets_;
};

/// Per-group hit counts over a set of paths. `terminal` counts paths whose
/// last vertex lies in the group. With pattern tracking (at most 64
/// groups), the joint hit pattern of every path is tallied as well.
struct HitTally {
  std::size_t paths{0};
  std::vector<std::uint64_t> hits;
  std::vector<std::uint64_t> terminal;
  bool track_patterns{false};
  std::map<std::uint64_t, std::uint64_t> patterns;

  HitTally() = default;
  HitTally(std::size_t groups, bool patterns_on)
      : hits(groups, 0), terminal(groups, 0), track_patterns(patterns_on) {
    if (patterns_on && groups > 64) throw DomainError("hit patterns support at most 64 groups");
  }

  void merge(const HitTally& o) {
    paths += o.paths;
    for (std::size_t g = 0; g < hits.size(); ++g) {
      hits[g] += o.hits[g];
      terminal[g] += o.terminal[g];
    }
    for (const auto& [k, v] : o.patterns) patterns[k] += v;
  }

  PathMeasureEstimate measure(std::size_t group) const {
    PathMeasureEstimate e;
    e.n_mc = paths;
    e.hits = hits[group];
    if (paths == 0) return e;
    const double p = static_cast<double>(hits[group]) / static_cast<double>(paths);
    e.value = p;
    e.std_error = std::sqrt(p * (1.0 - p) / static_cast<double>(paths));
    return e;
  }
};

/// Scratch state for tallying one path at a time.
class HitScratch {
 public:
  explicit HitScratch(std::size_t groups) : stamp_(groups, 0), terminal_stamp_(groups, 0) {}

  void tally(const DiskIndex& index, const AscentPath& path, HitTally& out) {
    ++path_id_;
    std::uint64_t pattern = 0;
    auto test = [&](const Vec2& a, const Vec2& b) {
      index.for_each_candidate(a, b, [&](std::size_t k) {
        const DiskQuery& d = index.disks()[k];
        if (stamp_[d.group] == path_id_) return;
        if (segment_hits_disk(a, b, d.center, d.radius)) {
          stamp_[d.group] = path_id_;
          ++out.hits[d.group];
          if (out.track_patterns) pattern |= std::uint64_t{1} << d.group;
        }
      });
    };
    const auto& v = path.vertices;
    if (v.size() == 1) test(v[0], v[0]);
    for (std::size_t i = 1; i < v.size(); ++i) test(v[i - 1], v[i]);

    ++terminal_id_;
    const Vec2 end = v.back();
    index.for_each_candidate(end, end, [&](std::size_t k) {
      const DiskQuery& d = index.disks()[k];
      if (terminal_stamp_[d.group] == terminal_id_) return;
      if (norm2(end - d.center) <= d.radius * d.radius) {
        terminal_stamp_[d.group] = terminal_id_;
        ++out.terminal[d.group];
      }
    });
    ++out.paths;
    if (out.track_patterns) ++out.patterns[pattern];
  }

 private:
  std::vector<std::uint64_t> stamp_;
  std::vector<std::uint64_t> terminal_stamp_;
  std::uint64_t path_id_{0};
  std::uint64_t terminal_id_{0};
};

/// Draws cfg.n_mc points from `sampler`, traces each one's ascent path on
/// `field` and tallies which disk groups the paths meet. Draws are made in
/// blocks with one RNG stream per block; block tallies are integer sums, so
/// the result does not depend on the worker count.
template <ScalarFieldSource F>
HitTally tally_true_paths(const F& field, const FilamentModel& sampler, const DiskIndex& index,
                          const OracleConfig& cfg, bool track_patterns = false) {
  if (cfg.n_mc == 0) throw DomainError("n_mc must be positive");
  const FlowConfig flow = cfg.flow_for(sampler);
  const std::size_t block = std::max<std::size_t>(1, cfg.block_size);
  const std::size_t blocks = (cfg.n_mc + block - 1) / block;
  HitTally total(index.group_count(), track_patterns);
  std::mutex m;
  parallel_for(
      blocks,
      [&](std::size_t b) {
        const std::size_t count = std::min(block, cfg.n_mc - b * block);
        Rng rng = make_stream(cfg.seed, b);
        const PointCloud pts = sampler.sample(count, rng);
        HitTally local(index.group_count(), track_patterns);
        HitScratch scratch(index.group_count());
        for (const Vec2& x : pts) scratch.tally(index, trace_ascent_path(field, x, flow), local);
        std::lock_guard lock(m);
        total.merge(local);
      },
      cfg.workers);
  return total;
}

/// pi(B(center, r)) by forward tracing from draws of the sampler.
template <ScalarFieldSource F>
PathMeasureEstimate path_measure(const F& field, const FilamentModel& sampler, const Vec2& center, double r,
                                 const OracleConfig& cfg) {
  if (!(r > 0.0)) throw DomainError("ball radius must be positive");
  const DiskIndex index({{center, r, 0}});
  return tally_true_paths(field, sampler, index, cfg).measure(0);
}

/// Mean and standard error of sum_g c_g 1{path meets group g}, from the
/// joint hit patterns of a pattern-tracking tally.
inline PathMeasureEstimate linear_combination(const HitTally& t, std::span<const double> coefficients) {
  if (!t.track_patterns) throw DomainError("linear combinations need a pattern-tracking tally");
  if (coefficients.size() != t.hits.size()) throw DomainError("one coefficient per group is required");
  double s1 = 0.0, s2 = 0.0;
  for (const auto& [pattern, count] : t.patterns) {
    double z = 0.0;
    for (std::size_t g = 0; g < coefficients.size(); ++g)
      if (pattern >> g & 1U) z += coefficients[g];
    s1 += z * static_cast<double>(count);
    s2 += z * z * static_cast<double>(count);
  }
  const double n = static_cast<double>(t.paths);
  PathMeasureEstimate e;
  e.n_mc = t.paths;
  if (t.paths == 0) return e;
  e.value = s1 / n;
  e.std_error = std::sqrt(std::max(0.0, s2 / n - e.value * e.value) / n);
  return e;
}

struct OracleValue {
  double value{0.0};
  double std_error{0.0};
  /// Some traced path ended inside B(x, r1): x is within r1 of a maximum,
  /// where the path density is infinite.
  bool saturated{false};
  std::size_t hits_inner{0};
  std::size_t hits_outer{0};
};

/// Path density from two nested balls, r2 = 2 r1:
///   p(x) ~ 2 pi(B(x, r1)) / r1 - pi(B(x, r2)) / r2
/// which cancels the first-order term of pi(B(x, r)) / r = p(x) + O(r).
/// Per draw the estimator is 1.5/r1 when the path meets the inner ball,
/// -1/r2 when it meets only the outer one and 0 otherwise; the standard
/// error is that of this per-draw variable.
inline OracleValue richardson_value(std::uint64_t inner, std::uint64_t outer, std::uint64_t terminal,
                                    std::size_t n, double r1) {
  OracleValue o;
  o.hits_inner = inner;
  o.hits_outer = outer;
  o.saturated = terminal > 0;
  if (n == 0 || outer == 0) return o;
  const double dn = static_cast<double>(n);
  const double a = 1.5 / r1;
  const double b = -1.0 / (2.0 * r1);
  const double ci = static_cast<double>(inner);
  const double co = static_cast<double>(outer - std::min(outer, inner));
  const double mean = (a * ci + b * co) / dn;
  const double second = (a * a * ci + b * b * co) / dn;
  o.value = mean;
  o.std_error = std::sqrt(std::max(0.0, second - mean * mean) / dn);
  return o;
}

/// Oracle path density at many points from one shared set of traced paths.
template <ScalarFieldSource F>
std::vector<OracleValue> path_density_oracle(const F& field, const FilamentModel& sampler,
                                             std::span<const Vec2> points, double r1, const OracleConfig& cfg) {
  if (!(r1 > 0.0)) throw DomainError("oracle radius must be positive");
  if (points.empty()) return {};
  std::vector<DiskQuery> disks;
  disks.reserve(2 * points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    disks.push_back({points[i], r1, 2 * i});
    disks.push_back({points[i], 2.0 * r1, 2 * i + 1});
  }
  const DiskIndex index(std::move(disks));
  const HitTally t = tally_true_paths(field, sampler, index, cfg);
  std::vector<OracleValue> out;
  out.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i)
    out.push_back(richardson_value(t.hits[2 * i], t.hits[2 * i + 1], t.terminal[2 * i], t.paths, r1));
  return out;
}

template <ScalarFieldSource F>
OracleValue path_density_oracle(const F& field, const FilamentModel& sampler, const Vec2& x, double r1,
                                const OracleConfig& cfg) {
  return path_density_oracle(field, sampler, std::span<const Vec2>(&x, 1), r1, cfg).front();
}

/// Oracle field over a grid. Saturated nodes are reported separately; their
/// value is the (finite, r1-limited) estimate.
struct OracleField {
  GridField field;
  std::vector<double> std_error;
  std::vector<bool> saturated;
  double r1{0.0};
  std::size_t n_mc{0};
};

template <ScalarFieldSource F>
OracleField path_density_oracle_field(const F& field, const FilamentModel& sampler, const GridSpec& grid,
                                      double r1, const OracleConfig& cfg) {
  grid.validate();
  std::vector<Vec2> nodes;
  nodes.reserve(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) nodes.push_back(grid.node(k));
  const auto vals = path_density_oracle(field, sampler, std::span<const Vec2>(nodes), r1, cfg);
  OracleField out{{grid, std::vector<double>(grid.size())}, std::vector<double>(grid.size()),
                  std::vector<bool>(grid.size()), r1, cfg.n_mc};
  for (std::size_t k = 0; k < vals.size(); ++k) {
    out.field.values[k] = vals[k].value;
    out.std_error[k] = vals[k].std_error;
    out.saturated[k] = vals[k].saturated;
  }
  return out;
}

/// Paths traced on the true field from the observed points.
template <ScalarFieldSource F>
PathEnsemble true_path_ensemble(const PointCloud& cloud, const F& field, const FlowConfig& flow,
                                std::size_t trim = 0, unsigned workers = worker_count()) {
  return PathEnsemble(trace_paths(field, cloud.points(), flow, workers), trim);
}

/// Path-density estimate with the observed points' paths traced on the true
/// field instead of the kernel estimate.
template <ScalarFieldSource F>
double estimate_with_true_paths(const PointCloud& cloud, const F& field, const KernelSpec& k, double nu,
                                const Vec2& x, const FlowConfig& flow, unsigned workers = worker_count()) {
  return estimate_path_density(true_path_ensemble(cloud, field, flow, 0, workers), k, nu, x);
}

/// Least-squares line y = a + b x with the slope's standard error and a
/// two-sided 95% Student-t interval.
struct LineFit {
  double intercept{std::numeric_limits<double>::quiet_NaN()};
  double slope{std::numeric_limits<double>::quiet_NaN()};
  double slope_se{std::numeric_limits<double>::quiet_NaN()};
  double ci_low{std::numeric_limits<double>::quiet_NaN()};
  double ci_high{std::numeric_limits<double>::quiet_NaN()};
  std::size_t points{0};
};

inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  LineFit f;
  f.points = x.size();
  if (x.size() != y.size() || x.size() < 2) return f;
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) return f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (x.size() < 3) return f;
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    rss += r * r;
  }
  const double df = n - 2.0;
  f.slope_se = std::sqrt(rss / df / sxx);
  const double t = boost::math::quantile(boost::math::students_t(df), 0.975);
  f.ci_low = f.slope - t * f.slope_se;
  f.ci_high = f.slope + t * f.slope_se;
  return f;
}

struct RateRow {
  std::size_t n{0};
  std::size_t replicate{0};
  double sup_error{0.0};
};

struct RateTable {
  std::vector<RateRow> rows;
  LineFit fit;  // log(sup_error) against log(n)
  std::vector<std::pair<std::size_t, double>> medians;
  std::size_t probes_used{0};
  std::size_t probes_excluded{0};
  double exclusion_radius{0.0};
};

inline double median(std::vector<double> v) {
  if (v.empty()) throw DomainError("median of an empty list");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

enum class Tracer { rk4, mean_shift };

struct ConvergenceOptions {
  KernelSpec kernel{KernelSpec::gaussian()};
  double c_h{kDefaultCh};
  double c_nu{kDefaultCnu};
  Tracer tracer{Tracer::rk4};
  std::size_t oracle_mc{200000};
  /// Oracle inner radius; non-positive selects default_oracle_radius.
  double oracle_radius{0.0};
  /// Probes this close to a true critical point are dropped; non-positive
  /// selects 2 nu at the smallest n.
  double exclusion_radius{0.0};
  unsigned workers{worker_count()};
};

/// Length scale of a model for the bandwidth schedule: the larger side of
/// its structure bounds padded by three noise scales.
inline double model_spread(const FilamentModel& m) {
  const Rect r = m.structure_bounds().expanded(3.0 * m.max_sigma());
  return std::max(r.width(), r.height());
}

/// Paths of the kernel estimate from every data point.
inline PathEnsemble kde_path_ensemble(const Kde& kde, const PointCloud& cloud, Tracer tracer, std::size_t trim,
                                      unsigned workers) {
  const FlowConfig flow = flow_config_for(kde);
  auto paths = tracer == Tracer::rk4 ? trace_paths(kde, cloud.points(), flow, workers)
                                     : mean_shift_paths(kde, cloud.points(), flow, workers);
  return PathEnsemble(std::move(paths), trim);
}

/// Sup-norm error of the path-density estimate against the oracle on a
/// fixed probe grid, over sample sizes and replicates, with a log-log fit.
inline RateTable convergence_experiment(const FilamentModel& model, const std::vector<std::size_t>& n_list,
                                        std::size_t replicates, const GridSpec& probe_grid, std::uint64_t seed,
                                        const ConvergenceOptions& opt = {}) {
  if (n_list.empty() || replicates == 0) throw DomainError("convergence experiment needs n values and replicates");
  for (std::size_t n : n_list)
    if (n < 2) throw DomainError("sample sizes must be at least 2");
  probe_grid.validate();
  RateTable table;
  const std::size_t n_min = *std::min_element(n_list.begin(), n_list.end());
  table.exclusion_radius = opt.exclusion_radius > 0.0
                               ? opt.exclusion_radius
                               : 2.0 * default_bandwidths(n_min, model_spread(model), opt.c_h, opt.c_nu).nu;

  const auto crit = find_critical_points(model, probe_grid.bounds);
  std::vector<Vec2> probes;
  for (std::size_t k = 0; k < probe_grid.size(); ++k) {
    const Vec2 p = probe_grid.node(k);
    const bool near = std::any_of(crit.begin(), crit.end(), [&](const CriticalPoint& c) {
      return distance(c.location, p) < table.exclusion_radius;
    });
    if (near) ++table.probes_excluded;
    else probes.push_back(p);
  }

  OracleConfig ocfg;
  ocfg.n_mc = opt.oracle_mc;
  ocfg.seed = stream_seed(seed, 0xA11CE);
  ocfg.workers = opt.workers;
  const double r1 = opt.oracle_radius > 0.0 ? opt.oracle_radius : default_oracle_radius(model, ocfg);
  const auto oracle = path_density_oracle(model, model, std::span<const Vec2>(probes), r1, ocfg);
  std::vector<Vec2> used;
  std::vector<double> truth;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    if (oracle[i].saturated) {
      ++table.probes_excluded;
      continue;
    }
    used.push_back(probes[i]);
    truth.push_back(oracle[i].value);
  }
  if (used.empty()) throw DomainError("every probe was excluded");
  table.probes_used = used.size();

  for (std::size_t a = 0; a < n_list.size(); ++a) {
    std::vector<double> errs;
    for (std::size_t rep = 0; rep < replicates; ++rep) {
      Rng rng = make_stream(seed, (static_cast<std::uint64_t>(n_list[a]) << 20) + rep);
      const PointCloud cloud = model.sample(n_list[a], rng);
      const BandwidthPlan bw = default_bandwidths(cloud.size(), cloud.spread(), opt.c_h, opt.c_nu);
      const Kde kde(cloud, opt.kernel, bw.h);
      const PathEnsemble ens = kde_path_ensemble(kde, cloud, opt.tracer, 0, opt.workers);
      const auto est = path_density_at(ens, opt.kernel, bw.nu, std::span<const Vec2>(used), opt.workers);
      double sup = 0.0;
      for (std::size_t i = 0; i < used.size(); ++i) sup = std::max(sup, std::abs(est[i] - truth[i]));
      table.rows.push_back({n_list[a], rep, sup});
      errs.push_back(sup);
    }
    table.medians.push_back({n_list[a], median(errs)});
  }

  std::vector<double> lx, ly;
  for (const auto& r : table.rows) {
    if (!(r.sup_error > 0.0)) continue;
    lx.push_back(std::log(static_cast<double>(r.n)));
    ly.push_back(std::log(r.sup_error));
  }
  table.fit = fit_line(lx, ly);
  return table;
}

}  // namespace pathdens
