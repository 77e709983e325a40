#pragma once

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "field.hpp"
#include "geometry.hpp"
#include "kernels.hpp"
#include "random.hpp"

namespace pathdens {

/// Probability density on the unit interval, rescaled to [0, length] by the
/// owning filament. Beta shapes must be >= 1/2 so the quadrature integrand
/// below stays bounded.
class WeightDensity {
 public:
  enum class Kind { uniform, beta };

  static WeightDensity uniform() { return WeightDensity(Kind::uniform, 1.0, 1.0); }
  static WeightDensity beta(double a, double b) {
    if (!(a >= 0.5) || !(b >= 0.5) || !std::isfinite(a) || !std::isfinite(b))
      throw DomainError("beta weight density needs shape parameters >= 1/2");
    return WeightDensity(Kind::beta, a, b);
  }

  Kind kind() const { return kind_; }
  double a() const { return a_; }
  double b() const { return b_; }

  /// Density on [0, 1].
  double pdf(double u) const {
    if (u < 0.0 || u > 1.0) return 0.0;
    if (kind_ == Kind::uniform) return 1.0;
    return std::exp((a_ - 1.0) * std::log(u) + (b_ - 1.0) * std::log1p(-u) - log_beta_);
  }

  /// Integrand after the substitution u = sin^2(theta/2), theta in [0, pi]:
  /// w(u) du = sin(theta/2)^{2a-1} cos(theta/2)^{2b-1} / B(a, b) dtheta.
  double theta_weight(double theta) const {
    const double s = std::sin(0.5 * theta);
    const double c = std::cos(0.5 * theta);
    if (kind_ == Kind::uniform) return s * c;
    return std::pow(s, 2.0 * a_ - 1.0) * std::pow(c, 2.0 * b_ - 1.0) * std::exp(-log_beta_);
  }

  double sample(Rng& rng) const {
    if (kind_ == Kind::uniform) return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    std::gamma_distribution<double> ga(a_, 1.0);
    std::gamma_distribution<double> gb(b_, 1.0);
    const double x = ga(rng);
    const double y = gb(rng);
    return x / (x + y);
  }

  friend bool operator==(const WeightDensity& l, const WeightDensity& r) {
    return l.kind_ == r.kind_ && l.a_ == r.a_ && l.b_ == r.b_;
  }

 private:
  WeightDensity(Kind k, double a, double b)
      : kind_(k), a_(a), b_(b), log_beta_(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b)) {}

  Kind kind_;
  double a_;
  double b_;
  double log_beta_;
};

/// Arclength-parameterized curve stored as a dense polyline.
class Filament {
 public:
  static constexpr double kVerticesPerSigma = 32.0;

  /// Densifies `control` so consecutive vertices are at most sigma/32 apart.
  Filament(const std::vector<Vec2>& control, double sigma, WeightDensity density)
      : density_(density), sigma_(sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("filament sigma must be positive");
    if (control.size() < 2) throw DomainError("filament needs at least two vertices");
    const double spacing = sigma / kVerticesPerSigma;
    vertices_.push_back(control.front());
    for (std::size_t i = 1; i < control.size(); ++i) {
      const Vec2 a = control[i - 1];
      const Vec2 b = control[i];
      if (!is_finite(a) || !is_finite(b)) throw DomainError("filament vertex is not finite");
      const double len = distance(a, b);
      if (len == 0.0) continue;
      const int pieces = std::max(1, static_cast<int>(std::ceil(len / spacing - 1e-9)));
      for (int k = 1; k <= pieces; ++k) {
        const double t = static_cast<double>(k) / pieces;
        vertices_.push_back(k == pieces ? b : a + (b - a) * t);
      }
    }
    if (vertices_.size() < 2) throw DomainError("filament has zero length");
    arclength_.resize(vertices_.size());
    arclength_[0] = 0.0;
    for (std::size_t i = 1; i < vertices_.size(); ++i)
      arclength_[i] = arclength_[i - 1] + distance(vertices_[i - 1], vertices_[i]);
  }

  static Filament straight(const Vec2& a, const Vec2& b, double sigma,
                           WeightDensity density = WeightDensity::uniform()) {
    return Filament({a, b}, sigma, density);
  }

  double length() const { return arclength_.back(); }
  double sigma() const { return sigma_; }
  const WeightDensity& density() const { return density_; }
  const std::vector<Vec2>& vertices() const { return vertices_; }
  const std::vector<double>& arclength() const { return arclength_; }

  /// f(s) for s in [0, length], by interpolation along the polyline.
  Vec2 point_at(double s) const {
    s = std::clamp(s, 0.0, length());
    auto it = std::upper_bound(arclength_.begin(), arclength_.end(), s);
    std::size_t i = static_cast<std::size_t>(it - arclength_.begin());
    if (i >= arclength_.size()) return vertices_.back();
    if (i == 0) return vertices_.front();
    const double seg = arclength_[i] - arclength_[i - 1];
    const double t = seg > 0.0 ? (s - arclength_[i - 1]) / seg : 0.0;
    return vertices_[i - 1] + (vertices_[i] - vertices_[i - 1]) * t;
  }

  /// Weight density on [0, length].
  double weight_at(double s) const { return density_.pdf(s / length()) / length(); }

  bool self_intersecting() const {
    const std::size_t m = vertices_.size() - 1;
    for (std::size_t i = 0; i < m; ++i) {
      const Rect bi = segment_box(i);
      for (std::size_t j = i + 2; j < m; ++j) {
        if (i == 0 && j == m - 1 && vertices_.front() == vertices_.back()) continue;
        const Rect bj = segment_box(j);
        if (bi.xmax < bj.xmin || bj.xmax < bi.xmin || bi.ymax < bj.ymin || bj.ymax < bi.ymin) continue;
        if (segments_intersect(vertices_[i], vertices_[i + 1], vertices_[j], vertices_[j + 1])) return true;
      }
    }
    return false;
  }

 private:
  Rect segment_box(std::size_t i) const {
    Rect r = Rect::empty();
    r.include(vertices_[i]);
    r.include(vertices_[i + 1]);
    return r;
  }

  std::vector<Vec2> vertices_;
  std::vector<double> arclength_;
  WeightDensity density_;
  double sigma_;
};

struct Cluster {
  Vec2 center;
  double sigma{0.1};
};

enum class QuadratureRule { trapezoid, gauss_legendre };

struct QuadratureSpec {
  int nodes_per_sigma{8};
  QuadratureRule rule{QuadratureRule::trapezoid};

  void validate() const {
    if (nodes_per_sigma < 2) throw DomainError("quadrature needs at least 2 nodes per sigma");
  }
};

/// Mixture of a uniform background on U0, filaments (normal noise around a
/// random point of a curve) and clusters (normal noise around a center):
///
///   g(x) = a0 1{x in U0} / |U0|
///        + sum_i a_i int w_i(s) phi_sigma_i(x - f_i(s)) ds
///        + sum_j a_j phi_sigma_j(x - z_j)
///
/// Filament line integrals are discretized once at construction; every node
/// of the discretization becomes a weighted isotropic normal.
class FilamentModel {
 public:
  FilamentModel(std::vector<Filament> filaments, std::vector<double> filament_weights,
                std::vector<Cluster> clusters, std::vector<double> cluster_weights, double background_weight,
                Rect region, QuadratureSpec quad = {})
      : filaments_(std::move(filaments)),
        filament_weights_(std::move(filament_weights)),
        clusters_(std::move(clusters)),
        cluster_weights_(std::move(cluster_weights)),
        background_weight_(background_weight),
        region_(region),
        quad_(quad) {
    validate();
    build_nodes();
  }

  const std::vector<Filament>& filaments() const { return filaments_; }
  const std::vector<double>& filament_weights() const { return filament_weights_; }
  const std::vector<Cluster>& clusters() const { return clusters_; }
  const std::vector<double>& cluster_weights() const { return cluster_weights_; }
  double background_weight() const { return background_weight_; }
  const Rect& region() const { return region_; }
  const QuadratureSpec& quadrature() const { return quad_; }
  std::size_t node_count() const { return px_.size(); }

  FilamentModel with_quadrature(const QuadratureSpec& q) const {
    return FilamentModel(filaments_, filament_weights_, clusters_, cluster_weights_, background_weight_,
                         region_, q);
  }

  /// Largest noise scale over all components.
  double max_sigma() const {
    double s = 0.0;
    for (const auto& f : filaments_) s = std::max(s, f.sigma());
    for (const auto& c : clusters_) s = std::max(s, c.sigma);
    return s;
  }

  /// Bounding box of filament vertices and cluster centers.
  Rect structure_bounds() const {
    Rect r = Rect::empty();
    for (const auto& f : filaments_)
      for (const auto& v : f.vertices()) r.include(v);
    for (const auto& c : clusters_) r.include(c.center);
    return r;
  }

  /// Points on filaments and cluster centers (the set the density concentrates on).
  std::vector<Vec2> structure_points() const {
    std::vector<Vec2> pts;
    for (const auto& f : filaments_) pts.insert(pts.end(), f.vertices().begin(), f.vertices().end());
    for (const auto& c : clusters_) pts.push_back(c.center);
    return pts;
  }

  double value(const Vec2& x) const {
    double v = background_term(x);
    for_each_near_node(x, [&](std::size_t k) {
      const double dx = x.x - px_[k];
      const double dy = x.y - py_[k];
      v += w_[k] * std::exp(-half_inv_s2_[k] * (dx * dx + dy * dy));
    });
    return v;
  }

  FieldSample value_and_gradient(const Vec2& x) const {
    check_differentiable(x);
    double v = background_term(x);
    double gx = 0.0, gy = 0.0;
    for_each_near_node(x, [&](std::size_t k) {
      const double dx = x.x - px_[k];
      const double dy = x.y - py_[k];
      const double e = w_[k] * std::exp(-half_inv_s2_[k] * (dx * dx + dy * dy));
      v += e;
      const double s = 2.0 * half_inv_s2_[k] * e;
      gx -= s * dx;
      gy -= s * dy;
    });
    return {v, {gx, gy}};
  }

  Vec2 gradient(const Vec2& x) const { return value_and_gradient(x).gradient; }

  SymMat2 hessian(const Vec2& x) const {
    check_differentiable(x);
    SymMat2 h;
    for_each_near_node(x, [&](std::size_t k) {
      const double dx = x.x - px_[k];
      const double dy = x.y - py_[k];
      const double inv_s2 = 2.0 * half_inv_s2_[k];
      const double e = w_[k] * std::exp(-half_inv_s2_[k] * (dx * dx + dy * dy));
      // phi (d d^T / s^4 - I / s^2)
      h.xx += e * (dx * dx * inv_s2 * inv_s2 - inv_s2);
      h.xy += e * (dx * dy * inv_s2 * inv_s2);
      h.yy += e * (dy * dy * inv_s2 * inv_s2 - inv_s2);
    });
    return h;
  }

  struct LabeledSample {
    PointCloud cloud;
    std::vector<int> component;  // 0 background, 1..F filaments, F+1.. clusters
  };

  /// n i.i.d. draws: pick a component by weight, then background -> uniform
  /// on U0, filament -> f(s) + N(0, sigma^2 I) with s ~ w, cluster -> center
  /// + N(0, sigma^2 I).
  LabeledSample sample_labeled(std::size_t n, Rng& rng) const {
    std::vector<double> cumulative;
    cumulative.push_back(background_weight_);
    for (double a : filament_weights_) cumulative.push_back(cumulative.back() + a);
    for (double a : cluster_weights_) cumulative.push_back(cumulative.back() + a);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Vec2> pts;
    std::vector<int> labels;
    pts.reserve(n);
    labels.reserve(n);
    const int nf = static_cast<int>(filaments_.size());
    for (std::size_t i = 0; i < n; ++i) {
      const double u = unit(rng) * cumulative.back();
      int c = static_cast<int>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
      c = std::min(c, static_cast<int>(cumulative.size()) - 1);
      while (c > 0 && component_weight(c) == 0.0) --c;
      Vec2 p;
      if (c == 0) {
        p = {region_.xmin + unit(rng) * region_.width(), region_.ymin + unit(rng) * region_.height()};
      } else if (c <= nf) {
        const Filament& f = filaments_[static_cast<std::size_t>(c - 1)];
        const Vec2 base = f.point_at(f.length() * f.density().sample(rng));
        const double zx = normal(rng);
        const double zy = normal(rng);
        p = base + Vec2{zx, zy} * f.sigma();
      } else {
        const Cluster& cl = clusters_[static_cast<std::size_t>(c - 1 - nf)];
        const double zx = normal(rng);
        const double zy = normal(rng);
        p = cl.center + Vec2{zx, zy} * cl.sigma;
      }
      pts.push_back(p);
      labels.push_back(c);
    }
    return {PointCloud(std::move(pts)), std::move(labels)};
  }

  PointCloud sample(std::size_t n, Rng& rng) const { return sample_labeled(n, rng).cloud; }

  /// Weight of component c in the labeling used by sample_labeled.
  double component_weight(int c) const {
    const int nf = static_cast<int>(filaments_.size());
    if (c == 0) return background_weight_;
    if (c <= nf) return filament_weights_[static_cast<std::size_t>(c - 1)];
    return cluster_weights_[static_cast<std::size_t>(c - 1 - nf)];
  }
  std::size_t component_count() const { return 1 + filaments_.size() + clusters_.size(); }

 private:
  void validate() const {
    quad_.validate();
    if (filament_weights_.size() != filaments_.size())
      throw DomainError("one weight per filament is required");
    if (cluster_weights_.size() != clusters_.size()) throw DomainError("one weight per cluster is required");
    double total = background_weight_;
    auto check = [](double a) {
      if (!(a >= 0.0 && a <= 1.0)) throw DomainError("component weights must lie in [0, 1]");
    };
    check(background_weight_);
    for (double a : filament_weights_) check(a), total += a;
    for (double a : cluster_weights_) check(a), total += a;
    if (std::abs(total - 1.0) > 1e-12) throw DomainError("component weights must sum to 1");
    for (const auto& c : clusters_)
      if (!(c.sigma > 0.0) || !is_finite(c.center)) throw DomainError("cluster needs a finite center and sigma > 0");
    if (background_weight_ > 0.0 && !region_.valid()) throw DomainError("background needs a nondegenerate region");
  }

  void add_node(Vec2 p, double weight, double sigma) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    px_.push_back(p.x);
    py_.push_back(p.y);
    w_.push_back(weight / (two_pi * sigma * sigma));
    half_inv_s2_.push_back(0.5 / (sigma * sigma));
  }

  void build_nodes() {
    constexpr double pi = std::numbers::pi;
    for (std::size_t i = 0; i < filaments_.size(); ++i) {
      const Filament& f = filaments_[i];
      const double alpha = filament_weights_[i];
      if (alpha == 0.0) continue;
      // theta spacing keeps arclength spacing (length/2) dtheta <= sigma / nodes_per_sigma
      const int intervals = std::max(
          16, static_cast<int>(std::ceil(pi * f.length() * quad_.nodes_per_sigma / (2.0 * f.sigma()))));
      std::vector<double> thetas;
      std::vector<double> weights;
      if (quad_.rule == QuadratureRule::trapezoid) {
        const double dt = pi / intervals;
        for (int k = 0; k <= intervals; ++k) {
          const double th = k * dt;
          thetas.push_back(th);
          weights.push_back((k == 0 || k == intervals ? 0.5 : 1.0) * dt * f.density().theta_weight(th));
        }
      } else {
        static constexpr std::array<double, 4> gl_x{-0.8611363115940526, -0.3399810435848563,
                                                    0.3399810435848563, 0.8611363115940526};
        static constexpr std::array<double, 4> gl_w{0.3478548451374538, 0.6521451548625461,
                                                    0.6521451548625461, 0.3478548451374538};
        const int panels = std::max(4, (intervals + 3) / 4);
        const double pw = pi / panels;
        for (int p = 0; p < panels; ++p) {
          const double mid = (p + 0.5) * pw;
          for (int q = 0; q < 4; ++q) {
            const double th = mid + 0.5 * pw * gl_x[q];
            thetas.push_back(th);
            weights.push_back(0.5 * pw * gl_w[q] * f.density().theta_weight(th));
          }
        }
      }
      // Normalizing the discrete weights keeps each filament's mass exactly alpha.
      const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
      for (std::size_t k = 0; k < thetas.size(); ++k) {
        if (weights[k] == 0.0) continue;
        const double u = 0.5 * (1.0 - std::cos(thetas[k]));
        add_node(f.point_at(u * f.length()), alpha * weights[k] / total, f.sigma());
      }
    }
    for (std::size_t j = 0; j < clusters_.size(); ++j)
      if (cluster_weights_[j] > 0.0) add_node(clusters_[j].center, cluster_weights_[j], clusters_[j].sigma);

    for (std::size_t begin = 0; begin < px_.size(); begin += kChunk) {
      NodeChunk c{begin, std::min(px_.size(), begin + kChunk), Rect::empty()};
      for (std::size_t k = c.begin; k < c.end; ++k) {
        c.box.include({px_[k], py_[k]});
        max_node_sigma_ = std::max(max_node_sigma_, std::sqrt(0.5 / half_inv_s2_[k]));
      }
      max_chunk_diag_ = std::max(max_chunk_diag_, c.box.diameter());
      chunks_.push_back(c);
    }
  }

  // A block of nodes is skipped when each of its terms is below e^-46 times
  // the term of the nearest node, so pruning never changes the value by
  // more than ~1e-17 relative.
  static constexpr double kRelativeCut = 46.0;
  static constexpr std::size_t kChunk = 16;
  struct NodeChunk {
    std::size_t begin, end;
    Rect box;
  };

  template <class Fn>
  void for_each_near_node(const Vec2& x, Fn&& fn) const {
    thread_local std::vector<double> dist;
    dist.resize(chunks_.size());
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < chunks_.size(); ++c) {
      dist[c] = chunks_[c].box.distance_to(x);
      nearest = std::min(nearest, dist[c]);
    }
    const double ref = nearest + max_chunk_diag_;
    const double cut2 = ref * ref + 2.0 * kRelativeCut * max_node_sigma_ * max_node_sigma_;
    for (std::size_t c = 0; c < chunks_.size(); ++c) {
      if (dist[c] * dist[c] > cut2) continue;
      for (std::size_t k = chunks_[c].begin; k < chunks_[c].end; ++k) fn(k);
    }
  }

  double background_term(const Vec2& x) const {
    if (background_weight_ == 0.0 || !region_.contains(x)) return 0.0;
    return background_weight_ / region_.area();
  }

  void check_differentiable(const Vec2& x) const {
    if (background_weight_ > 0.0 && region_.contains(x) && !region_.interior(x))
      throw DomainError("density is not differentiable on the background boundary");
  }

  std::vector<Filament> filaments_;
  std::vector<double> filament_weights_;
  std::vector<Cluster> clusters_;
  std::vector<double> cluster_weights_;
  double background_weight_;
  Rect region_;
  QuadratureSpec quad_;

  std::vector<double> px_, py_, w_, half_inv_s2_;
  std::vector<NodeChunk> chunks_;
  double max_chunk_diag_{0.0};
  double max_node_sigma_{0.0};
};

inline double density(const FilamentModel& m, const Vec2& x) { return m.value(x); }
inline Vec2 gradient(const FilamentModel& m, const Vec2& x) { return m.gradient(x); }
inline SymMat2 hessian(const FilamentModel& m, const Vec2& x) { return m.hessian(x); }

/// Equal-weight mixture of normals at (-d, 0) and (d, 0).
inline FilamentModel two_gaussian_model(double half_separation = 1.0, double sigma = 0.5) {
  const Rect region{-half_separation - 4 * sigma, half_separation + 4 * sigma, -4 * sigma, 4 * sigma};
  return FilamentModel({}, {}, {{{-half_separation, 0.0}, sigma}, {{half_separation, 0.0}, sigma}}, {0.5, 0.5},
                       0.0, region);
}

/// Largest-remainder split of n proportional to `shares`; each count is
/// within 1 of its exact share.
inline std::vector<std::size_t> apportion(std::size_t n, const std::vector<double>& shares) {
  const double total = std::accumulate(shares.begin(), shares.end(), 0.0);
  std::vector<std::size_t> counts(shares.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t used = 0;
  for (std::size_t i = 0; i < shares.size(); ++i) {
    const double exact = static_cast<double>(n) * shares[i] / total;
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    used += counts[i];
    remainders.push_back({exact - std::floor(exact), i});
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; used < n; ++k, ++used) ++counts[remainders[k % remainders.size()].second];
  return counts;
}

struct PentagonExample {
  FilamentModel model;
  PointCloud cloud;
  std::array<Vec2, 5> vertices;
  std::vector<std::size_t> edge_counts;
  std::size_t background_count{0};
  int attempts{1};
};

inline constexpr double kPentagonSigma = 0.03;

/// Five uniform random vertices in [0,1]^2 joined in draw order (redrawn
/// until the edge polygon is simple). Each edge is a filament with a
/// Beta(1/2, 1/2) weight density rescaled to the edge; n points are split
/// over the edges in proportion to their lengths and perturbed by
/// N(0, 0.03^2 I). `background` extra points are uniform on [0,1]^2.
inline PentagonExample pentagon_example(Rng& rng, std::size_t n = 500, std::size_t background = 0,
                                        double sigma = kPentagonSigma) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::array<Vec2, 5> v{};
  int attempts = 0;
  for (;;) {
    ++attempts;
    for (auto& p : v) {
      const double x = unit(rng);
      const double y = unit(rng);
      p = {x, y};
    }
    bool simple = true;
    for (int i = 0; i < 5 && simple; ++i)
      for (int j = i + 2; j < 5 && simple; ++j) {
        if (i == 0 && j == 4) continue;
        if (segments_intersect(v[i], v[(i + 1) % 5], v[j], v[(j + 1) % 5])) simple = false;
      }
    // adjacent edges folding back onto each other also make the outline non-simple
    for (int i = 0; i < 5 && simple; ++i) {
      const Vec2 a = v[i], b = v[(i + 1) % 5], c = v[(i + 2) % 5];
      if (cross(b - a, c - b) == 0.0 && dot(b - a, c - b) < 0.0) simple = false;
    }
    if (simple) break;
  }

  std::vector<Filament> edges;
  std::vector<double> lengths;
  for (int i = 0; i < 5; ++i) {
    edges.push_back(Filament::straight(v[i], v[(i + 1) % 5], sigma, WeightDensity::beta(0.5, 0.5)));
    lengths.push_back(edges.back().length());
  }
  const double total_len = std::accumulate(lengths.begin(), lengths.end(), 0.0);
  const double filament_mass =
      static_cast<double>(n) / static_cast<double>(n + background);
  std::vector<double> weights;
  for (double l : lengths) weights.push_back(filament_mass * l / total_len);
  // absorb rounding so weights sum to exactly 1 - background share
  const double bg_weight = 1.0 - std::accumulate(weights.begin(), weights.end(), 0.0);
  FilamentModel model(edges, weights, {}, {}, background > 0 ? bg_weight : 0.0, Rect{0.0, 1.0, 0.0, 1.0});
  if (background == 0) {
    // renormalize exactly for the background-free case
    const double s = std::accumulate(weights.begin(), weights.end(), 0.0);
    for (auto& w : weights) w /= s;
    model = FilamentModel(edges, weights, {}, {}, 0.0, Rect{0.0, 1.0, 0.0, 1.0});
  }

  const auto counts = apportion(n, lengths);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Vec2> pts;
  pts.reserve(n + background);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    for (std::size_t k = 0; k < counts[e]; ++k) {
      const Vec2 base = edges[e].point_at(edges[e].length() * edges[e].density().sample(rng));
      const double zx = normal(rng);
      const double zy = normal(rng);
      pts.push_back(base + Vec2{zx, zy} * sigma);
    }
  }
  for (std::size_t k = 0; k < background; ++k) {
    const double x = unit(rng);
    const double y = unit(rng);
    pts.push_back({x, y});
  }
  return {std::move(model), PointCloud(std::move(pts)), v, counts, background, attempts};
}

}  // namespace pathdens
