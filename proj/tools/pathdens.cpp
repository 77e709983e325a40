// Command-line front end: simulate, estimate, oracle, converge.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <pathdens/pathdens.hpp>

namespace fs = std::filesystem;
using namespace pathdens;

namespace {

/// Exit-code classes beyond the library's own errors.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Flat JSON object: every key names a long flag ("n", "quantile", ...).
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConversionError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config must be a JSON object");
    std::vector<CLI::ConfigItem> items;
    for (auto it = j.begin(); it != j.end(); ++it) {
      CLI::ConfigItem item;
      item.name = it.key();
      auto text = [](const nlohmann::json& v) -> std::string {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
        if (v.is_number()) return v.dump();
        throw CLI::ConversionError("unsupported config value " + v.dump());
      };
      if (it->is_array()) {
        for (const auto& v : *it) item.inputs.push_back(text(v));
      } else {
        item.inputs.push_back(text(*it));
      }
      items.push_back(std::move(item));
    }
    return items;
  }
};

struct Options {
  std::string out{"."};
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;

  // simulate / model selection
  std::string model;
  std::vector<std::size_t> n;
  std::optional<std::size_t> background;

  // estimate
  std::string input;
  std::string kernel{"gaussian"};
  double cutoff{3.0};
  std::optional<double> h;
  std::optional<double> nu;
  double c_h{kDefaultCh};
  double c_nu{kDefaultCnu};
  int grid{200};
  std::vector<double> bounds;
  double quantile{0.9};
  std::optional<double> lambda;
  std::string trim{"auto"};
  std::string tracer{"rk4"};

  // oracle / converge
  std::size_t n_mc{100000};
  std::optional<double> radius;
  std::size_t reps{10};
  int probe_grid{20};
};

unsigned workers_of(const Options& o) { return o.workers ? std::max(1u, *o.workers) : worker_count(); }

std::ofstream open_out(const Options& o, const std::string& name) {
  fs::create_directories(o.out);
  const fs::path p = fs::path(o.out) / name;
  std::ofstream f(p, std::ios::binary);
  if (!f) throw UsageError("cannot write " + p.string());
  return f;
}

KernelSpec kernel_of(const Options& o) {
  if (o.kernel == "gaussian") return KernelSpec::gaussian();
  if (o.kernel == "truncated-gaussian") return KernelSpec::truncated_gaussian(o.cutoff);
  throw UsageError("unknown kernel '" + o.kernel + "' (gaussian | truncated-gaussian)");
}

Tracer tracer_of(const Options& o) {
  if (o.tracer == "rk4") return Tracer::rk4;
  if (o.tracer == "meanshift") return Tracer::mean_shift;
  throw UsageError("unknown tracer '" + o.tracer + "' (rk4 | meanshift)");
}

std::size_t sample_size(const Options& o) {
  if (o.n.empty()) return 500;
  if (o.n.size() != 1) throw UsageError("--n takes a single count here");
  if (o.n[0] < 1) throw UsageError("--n must be positive");
  return o.n[0];
}

struct ModelChoice {
  FilamentModel model;
  std::optional<PointCloud> cloud;  // builtin generators produce their own sample
  nlohmann::json notes;
};

/// Builtin model by name, or a model document by path.
ModelChoice load_model(const Options& o, bool need_cloud) {
  if (o.model.empty()) throw UsageError("--model is required (pentagon | pentagon-bg | two-gaussian | model.json)");
  if (o.model == "pentagon" || o.model == "pentagon-bg") {
    if (!o.seed) throw UsageError("--seed is required for the " + o.model + " model");
    Rng rng(*o.seed);
    const std::size_t n = sample_size(o);
    const std::size_t bg = o.model == "pentagon-bg" ? o.background.value_or(500) : 0;
    auto ex = pentagon_example(rng, n, bg);
    nlohmann::json notes = {{"generator", o.model},
                            {"seed", *o.seed},
                            {"rng", "mt19937_64"},
                            {"vertex_draws", ex.attempts},
                            {"edge_weight_density", "beta(1/2,1/2) rescaled to each edge"},
                            {"edge_counts", ex.edge_counts},
                            {"background_points", bg}};
    nlohmann::json verts = nlohmann::json::array();
    for (const auto& v : ex.vertices) verts.push_back({v.x, v.y});
    notes["vertices"] = verts;
    return {std::move(ex.model), std::move(ex.cloud), notes};
  }
  if (o.model == "two-gaussian") {
    ModelChoice c{two_gaussian_model(), std::nullopt, {{"generator", "two-gaussian"}}};
    if (need_cloud) {
      if (!o.seed) throw UsageError("--seed is required for simulate");
      Rng rng(*o.seed);
      c.cloud = c.model.sample(sample_size(o), rng);
      c.notes["seed"] = *o.seed;
    }
    return c;
  }
  if (!fs::exists(o.model)) {
    if (o.model.find(".json") == std::string::npos)
      throw UsageError("unknown model '" + o.model + "' (pentagon | pentagon-bg | two-gaussian | model.json)");
    throw UsageError("model file not found: " + o.model);
  }
  FilamentModel m = [&] {
    try {
      return read_model_json(o.model);
    } catch (const DataError& e) {
      throw UsageError(e.what());
    }
  }();
  ModelChoice c{std::move(m), std::nullopt, {{"source", o.model}}};
  if (need_cloud) {
    if (!o.seed) throw UsageError("--seed is required for simulate");
    Rng rng(*o.seed);
    c.cloud = c.model.sample(sample_size(o), rng);
  }
  return c;
}

Rect bounds_or(const Options& o, Rect fallback) {
  if (o.bounds.empty()) return fallback;
  if (o.bounds.size() != 4) throw UsageError("--bounds takes xmin,xmax,ymin,ymax");
  const Rect r{o.bounds[0], o.bounds[1], o.bounds[2], o.bounds[3]};
  if (!r.valid()) throw UsageError("--bounds must satisfy xmin < xmax and ymin < ymax");
  return r;
}

Rect padded(const Rect& r) {
  const double m = 0.05 * std::max(r.width(), r.height());
  return r.expanded(m > 0.0 ? m : 0.5);
}

int cmd_simulate(const Options& o) {
  ModelChoice c = load_model(o, true);
  {
    auto f = open_out(o, "points.csv");
    write_points_csv(f, *c.cloud);
  }
  auto f = open_out(o, "model.json");
  f << model_to_json(c.model, c.notes).dump(2) << '\n';
  std::cerr << "simulate: " << c.cloud->size() << " points -> " << (fs::path(o.out) / "points.csv").string() << '\n';
  return 0;
}

int cmd_estimate(const Options& o) {
  const std::string input = o.input.empty() ? (fs::path(o.out) / "points.csv").string() : o.input;
  const PointCloud cloud = read_points_csv(input);
  if (cloud.size() < 2) throw DataError(input + ": need at least 2 points");
  const unsigned workers = workers_of(o);
  const KernelSpec k = kernel_of(o);

  BandwidthPlan bw = default_bandwidths(cloud.size(), cloud.spread() > 0 ? cloud.spread() : 1.0, o.c_h, o.c_nu);
  if (o.h || o.nu) bw.source = BandwidthSource::user;
  if (o.h) bw.h = *o.h;
  if (o.nu) bw.nu = *o.nu;
  bw.validate();

  const Kde kde(cloud, k, bw.h);
  std::optional<std::size_t> fixed_trim;
  if (o.trim != "auto") {
    try {
      std::size_t pos = 0;
      const long t = std::stol(o.trim, &pos);
      if (pos != o.trim.size() || t < 0) throw std::invalid_argument("trim");
      fixed_trim = static_cast<std::size_t>(t);
    } catch (const std::exception&) {
      throw UsageError("--trim takes a nonnegative count or 'auto'");
    }
  }
  const PathEnsemble ens = kde_path_ensemble(kde, cloud, tracer_of(o), 0, workers);

  if (o.grid < 2) throw UsageError("--grid needs at least 2 nodes per side");
  const GridSpec grid{bounds_or(o, padded(cloud.bounds())), o.grid, o.grid};
  const GridField field = path_density_field(ens, k, bw.nu, grid, workers);
  const auto at_data = path_density_at(ens, k, bw.nu, cloud.points(), workers);
  const double lambda = o.lambda ? *o.lambda : quantile_threshold(at_data, o.quantile);
  const GridMask mask = level_set(field, lambda);

  {
    auto f = open_out(o, "paths.csv");
    write_paths_csv(f, ens.paths());
  }
  {
    auto f = open_out(o, "field.csv");
    write_field_csv(f, field);
  }
  {
    auto f = open_out(o, "levelset.csv");
    write_mask_csv(f, mask);
  }
  {
    auto f = open_out(o, "figure.svg");
    FigureInput fig{&cloud, &ens.paths(), fixed_trim.value_or(0), !fixed_trim, &mask,
                    "path density, n = " + std::to_string(cloud.size())};
    write_figure_svg(f, fig);
  }
  std::size_t converged = 0;
  for (const auto& p : ens.paths()) converged += p.converged ? 1 : 0;
  nlohmann::json s = {{"n", cloud.size()},
                      {"h", bw.h},
                      {"nu", bw.nu},
                      {"bandwidth_source", bw.source == BandwidthSource::user ? "user" : "rate-schedule"},
                      {"c_h", o.c_h},
                      {"c_nu", o.c_nu},
                      {"kernel", k.name()},
                      {"tracer", o.tracer},
                      {"lambda", lambda},
                      {"quantile", o.lambda ? nlohmann::json() : nlohmann::json(o.quantile)},
                      {"levelset_cells", mask.count()},
                      {"grid_cells", grid.size()},
                      {"paths_converged", converged},
                      {"trim", fixed_trim ? nlohmann::json(*fixed_trim) : nlohmann::json("auto")}};
  auto f = open_out(o, "summary.json");
  f << s.dump(2) << '\n';
  std::cerr << "estimate: h=" << bw.h << " nu=" << bw.nu << " lambda=" << lambda << " cells=" << mask.count() << '\n';
  return 0;
}

int cmd_oracle(const Options& o) {
  if (o.model.empty()) throw UsageError("oracle needs --model (a model.json file or builtin name)");
  const ModelChoice c = load_model(o, false);
  OracleConfig cfg;
  cfg.n_mc = o.n_mc;
  cfg.seed = o.seed.value_or(1);
  cfg.workers = workers_of(o);
  const double r1 = o.radius ? *o.radius : default_oracle_radius(c.model, cfg);
  if (!(r1 > 0.0)) throw UsageError("--radius must be positive");
  if (o.grid < 2) throw UsageError("--grid needs at least 2 nodes per side");
  const Rect fallback = c.model.structure_bounds().expanded(3.0 * c.model.max_sigma());
  const GridSpec grid{bounds_or(o, fallback), o.grid, o.grid};
  const OracleField of = path_density_oracle_field(c.model, c.model, grid, r1, cfg);
  {
    auto f = open_out(o, "oracle_field.csv");
    write_field_csv(f, of.field);
  }
  {
    auto f = open_out(o, "oracle_detail.csv");
    f << "x,y,value,std_error,saturated\n";
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const Vec2 p = grid.node(k);
      f << format_number(p.x) << ',' << format_number(p.y) << ',' << format_number(of.field.values[k]) << ','
        << format_number(of.std_error[k]) << ',' << (of.saturated[k] ? 1 : 0) << '\n';
    }
  }
  std::size_t sat = 0;
  for (bool b : of.saturated) sat += b ? 1 : 0;
  nlohmann::json s = {{"n_mc", cfg.n_mc}, {"r1", r1}, {"r2", 2 * r1}, {"seed", cfg.seed}, {"saturated_nodes", sat}};
  auto f = open_out(o, "oracle_summary.json");
  f << s.dump(2) << '\n';
  return 0;
}

int cmd_converge(const Options& o) {
  const ModelChoice c = load_model(o, false);
  std::vector<std::size_t> ns = o.n.empty() ? std::vector<std::size_t>{200, 800, 3200} : o.n;
  if (o.reps == 0) throw UsageError("--reps must be positive");
  if (o.probe_grid < 2) throw UsageError("--probe-grid needs at least 2");
  ConvergenceOptions opt;
  opt.kernel = kernel_of(o);
  opt.c_h = o.c_h;
  opt.c_nu = o.c_nu;
  opt.tracer = tracer_of(o);
  opt.oracle_mc = o.n_mc;
  opt.oracle_radius = o.radius.value_or(0.0);
  opt.workers = workers_of(o);
  const Rect fallback = c.model.structure_bounds().expanded(3.0 * c.model.max_sigma());
  const GridSpec probes{bounds_or(o, fallback), o.probe_grid, o.probe_grid};
  const RateTable t = convergence_experiment(c.model, ns, o.reps, probes, o.seed.value_or(1), opt);
  {
    auto f = open_out(o, "rate_table.csv");
    write_rate_table_csv(f, t);
  }
  auto f = open_out(o, "rate_summary.json");
  f << rate_summary_json(t).dump(2) << '\n';
  std::cerr << "converge: slope " << t.fit.slope << " [" << t.fit.ci_low << ", " << t.fit.ci_high << "]\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Filament detection by path density of kernel-density ascent paths"};
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file whose keys mirror the long flags");
  app.require_subcommand(1);
  app.fallthrough();
  app.set_help_flag("--help", "Print this help message and exit");

  Options o;
  app.add_option("--out", o.out, "Output directory")->capture_default_str();
  app.add_option("--seed", o.seed, "Random seed");
  app.add_option("--workers", o.workers, "Worker threads (default: PATHDENS_WORKERS or all cores)");
  app.add_option("--model", o.model, "pentagon | pentagon-bg | two-gaussian | path to model.json");
  app.add_option("--n", o.n, "Points to simulate (filament points for pentagon models); comma list for converge")
      ->delimiter(',');
  app.add_option("--background", o.background, "Uniform background points for pentagon-bg");
  app.add_option("--input", o.input, "Point CSV with x,y header (default: <out>/points.csv)");
  app.add_option("--kernel", o.kernel, "gaussian | truncated-gaussian")->capture_default_str();
  app.add_option("--cutoff", o.cutoff, "Cutoff of the truncated-gaussian kernel")->capture_default_str();
  app.add_option("--h", o.h, "KDE bandwidth (default: rate schedule)");
  app.add_option("--nu", o.nu, "Path-density bandwidth (default: rate schedule)");
  app.add_option("--c-h", o.c_h, "Rate-schedule constant for h, in units of the data spread")->capture_default_str();
  app.add_option("--c-nu", o.c_nu, "Rate-schedule constant for nu, in units of the data spread")->capture_default_str();
  app.add_option("--grid", o.grid, "Grid nodes per side")->capture_default_str();
  app.add_option("--bounds", o.bounds, "Grid bounds xmin,xmax,ymin,ymax")->delimiter(',')->expected(4);
  app.add_option("--quantile", o.quantile, "Level at this quantile of the estimate over the data")->capture_default_str();
  app.add_option("--lambda", o.lambda, "Absolute level (overrides --quantile)");
  app.add_option("--trim", o.trim, "Leading path vertices hidden in panel C, or 'auto'")->capture_default_str();
  app.add_option("--tracer", o.tracer, "rk4 | meanshift")->capture_default_str();
  app.add_option("--n-mc", o.n_mc, "Monte-Carlo paths for the oracle")->capture_default_str();
  app.add_option("--radius", o.radius, "Oracle inner radius r1 (r2 = 2 r1)");
  app.add_option("--reps", o.reps, "Replicates per sample size")->capture_default_str();
  app.add_option("--probe-grid", o.probe_grid, "Probe grid nodes per side for converge")->capture_default_str();

  auto* sim = app.add_subcommand("simulate", "Draw a point cloud from a model; writes points.csv and model.json");
  auto* est = app.add_subcommand("estimate", "Trace paths and estimate the path density; writes paths, field, level set, figure");
  auto* orc = app.add_subcommand("oracle", "Monte-Carlo path density of a model on a grid");
  auto* cvg = app.add_subcommand("converge", "Sup-error of the estimate against the oracle over sample sizes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*sim) return cmd_simulate(o);
    if (*est) return cmd_estimate(o);
    if (*orc) return cmd_oracle(o);
    if (*cvg) return cmd_converge(o);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << " (last valid point " << e.last_valid().x << ", "
              << e.last_valid().y << ")\n";
    return 4;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 4;
  }
  return 2;
}
