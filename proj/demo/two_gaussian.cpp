// Two normal blobs: sample, trace ascent paths of the kernel estimate and
// print the path density along the x axis next to its Monte-Carlo value.
#include <cstdio>

#include <pathdens/pathdens.hpp>

using namespace pathdens;

int main() {
  const FilamentModel model = two_gaussian_model(1.0, 0.5);
  Rng rng(2024);
  const PointCloud cloud = model.sample(800, rng);

  const BandwidthPlan bw = default_bandwidths(cloud.size(), cloud.spread());
  const Kde kde(cloud, KernelSpec::gaussian(), bw.h);
  const PathEnsemble paths = kde_path_ensemble(kde, cloud, Tracer::rk4, 0, worker_count());
  std::printf("n = %zu  h = %.4f  nu = %.4f\n", cloud.size(), bw.h, bw.nu);

  // probes off the axis avoid the two modes, where the density is infinite
  std::vector<Vec2> probes;
  for (double x = -2.0; x <= 2.0 + 1e-9; x += 0.5) probes.push_back({x, 0.4});

  OracleConfig cfg;
  cfg.n_mc = 20000;
  const auto truth = path_density_oracle(model, model, std::span<const Vec2>(probes),
                                         default_oracle_radius(model, cfg), cfg);

  std::printf("%8s %8s %10s %10s\n", "x", "y", "estimate", "oracle");
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const double est = estimate_path_density(paths, KernelSpec::gaussian(), bw.nu, probes[i]);
    std::printf("%8.2f %8.2f %10.4f %10.4f%s\n", probes[i].x, probes[i].y, est, truth[i].value,
                truth[i].saturated ? "  (near a mode)" : "");
  }
}
