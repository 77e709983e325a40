#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "flow.hpp"
#include "grid.hpp"
#include "kernels.hpp"
#include "levelset.hpp"
#include "model.hpp"
#include "oracle.hpp"
#include "path_density.hpp"

namespace pathdens {

/// Shortest decimal text that parses back to the same double.
inline std::string format_number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(out);
}

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace detail

/// Reads a point cloud from CSV text. A header row is required; the columns
/// named x and y are used (or the first two columns when neither is named).
/// Blank lines and lines starting with '#' are skipped.
inline PointCloud parse_points_csv(std::istream& in, const std::string& source = "input") {
  std::string line;
  std::size_t line_no = 0;
  std::size_t cx = 0, cy = 1, width = 0;
  bool have_header = false;
  std::vector<Vec2> pts;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto cells = detail::split_csv(t);
    if (!have_header) {
      have_header = true;
      width = cells.size();
      std::size_t fx = width, fy = width;
      for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto name = detail::lower(cells[i]);
        if (name == "x" && fx == width) fx = i;
        if (name == "y" && fy == width) fy = i;
      }
      if (fx < width && fy < width) {
        cx = fx;
        cy = fy;
      } else if (width < 2) {
        throw DataError(source + " line " + std::to_string(line_no) + ": header needs at least two columns");
      } else {
        double probe;
        if (detail::parse_double(cells[0], probe))
          throw DataError(source + " line " + std::to_string(line_no) + ": missing header row (expected x,y)");
      }
      continue;
    }
    if (cells.size() != width)
      throw DataError(source + " line " + std::to_string(line_no) + ": expected " + std::to_string(width) +
                      " fields, found " + std::to_string(cells.size()));
    double x, y;
    if (!detail::parse_double(cells[cx], x) || !detail::parse_double(cells[cy], y))
      throw DataError(source + " line " + std::to_string(line_no) + ": coordinates are not finite numbers");
    pts.push_back({x, y});
  }
  if (!have_header) throw DataError(source + ": empty file");
  return PointCloud(std::move(pts));
}

inline PointCloud read_points_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return parse_points_csv(in, path);
}

inline void write_points_csv(std::ostream& out, const PointCloud& cloud) {
  out << "x,y\n";
  for (const auto& p : cloud) out << format_number(p.x) << ',' << format_number(p.y) << '\n';
}

inline void write_paths_csv(std::ostream& out, const std::vector<AscentPath>& paths) {
  out << "path_id,step,x,y\n";
  for (std::size_t i = 0; i < paths.size(); ++i)
    for (std::size_t s = 0; s < paths[i].vertices.size(); ++s)
      out << i << ',' << s << ',' << format_number(paths[i].vertices[s].x) << ','
          << format_number(paths[i].vertices[s].y) << '\n';
}

/// Grid field as a comment line with the lattice followed by x,y,value rows
/// in node order (j * nx + i).
inline void write_field_csv(std::ostream& out, const GridField& f) {
  const auto& g = f.grid;
  out << "# grid nx=" << g.nx << " ny=" << g.ny << " xmin=" << format_number(g.bounds.xmin)
      << " xmax=" << format_number(g.bounds.xmax) << " ymin=" << format_number(g.bounds.ymin)
      << " ymax=" << format_number(g.bounds.ymax) << '\n';
  out << "x,y,value\n";
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Vec2 p = g.node(k);
    out << format_number(p.x) << ',' << format_number(p.y) << ',' << format_number(f.values[k]) << '\n';
  }
}

inline GridField parse_field_csv(std::istream& in, const std::string& source = "field") {
  std::string line;
  std::size_t line_no = 0;
  GridSpec g;
  bool have_grid = false, have_header = false;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto t = detail::trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      if (t.find("grid") == std::string_view::npos) continue;
      std::istringstream ss{std::string(t.substr(1))};
      std::string word;
      int seen = 0;
      while (ss >> word) {
        const auto eq = word.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = word.substr(0, eq);
        double v;
        if (!detail::parse_double(std::string_view(word).substr(eq + 1), v))
          throw DataError(source + " line " + std::to_string(line_no) + ": bad grid value for " + key);
        if (key == "nx") g.nx = static_cast<int>(v), ++seen;
        else if (key == "ny") g.ny = static_cast<int>(v), ++seen;
        else if (key == "xmin") g.bounds.xmin = v, ++seen;
        else if (key == "xmax") g.bounds.xmax = v, ++seen;
        else if (key == "ymin") g.bounds.ymin = v, ++seen;
        else if (key == "ymax") g.bounds.ymax = v, ++seen;
      }
      if (seen != 6) throw DataError(source + " line " + std::to_string(line_no) + ": incomplete grid line");
      have_grid = true;
      continue;
    }
    if (!have_header) {
      have_header = true;
      continue;
    }
    const auto cells = detail::split_csv(t);
    double v;
    if (cells.size() != 3 || !detail::parse_double(cells[2], v))
      throw DataError(source + " line " + std::to_string(line_no) + ": expected x,y,value");
    values.push_back(v);
  }
  if (!have_grid) throw DataError(source + ": missing '# grid' line");
  try {
    g.validate();
  } catch (const DomainError& e) {
    throw DataError(source + ": " + e.what());
  }
  if (values.size() != g.size())
    throw DataError(source + ": expected " + std::to_string(g.size()) + " rows, found " + std::to_string(values.size()));
  return {g, std::move(values)};
}

inline void write_mask_csv(std::ostream& out, const GridMask& m) {
  out << "i,j,x,y\n";
  for (int j = 0; j < m.grid.ny; ++j)
    for (int i = 0; i < m.grid.nx; ++i)
      if (m.contains(i, j)) {
        const Vec2 p = m.grid.node(i, j);
        out << i << ',' << j << ',' << format_number(p.x) << ',' << format_number(p.y) << '\n';
      }
}

inline void write_rate_table_csv(std::ostream& out, const RateTable& t) {
  out << "n,replicate,sup_error\n";
  for (const auto& r : t.rows) out << r.n << ',' << r.replicate << ',' << format_number(r.sup_error) << '\n';
}

namespace detail {
inline nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }
}  // namespace detail

inline nlohmann::json rate_summary_json(const RateTable& t) {
  nlohmann::json j;
  j["slope"] = detail::number_or_null(t.fit.slope);
  j["intercept"] = detail::number_or_null(t.fit.intercept);
  j["slope_std_error"] = detail::number_or_null(t.fit.slope_se);
  j["slope_ci95"] = {detail::number_or_null(t.fit.ci_low), detail::number_or_null(t.fit.ci_high)};
  j["rows"] = t.rows.size();
  nlohmann::json med = nlohmann::json::array();
  for (const auto& [n, m] : t.medians) med.push_back({{"n", n}, {"median_sup_error", m}});
  j["medians"] = med;
  j["probes_used"] = t.probes_used;
  j["probes_excluded"] = t.probes_excluded;
  j["exclusion_radius"] = t.exclusion_radius;
  return j;
}

// Model documents --------------------------------------------------------

inline nlohmann::json to_json(const WeightDensity& w) {
  if (w.kind() == WeightDensity::Kind::uniform) return {{"type", "uniform"}};
  return {{"type", "beta"}, {"a", w.a()}, {"b", w.b()}};
}

inline nlohmann::json model_to_json(const FilamentModel& m, const nlohmann::json& notes = nlohmann::json::object()) {
  nlohmann::json j;
  j["format"] = "pathdens-model-1";
  j["background_weight"] = m.background_weight();
  const Rect& r = m.region();
  j["region"] = {{"xmin", r.xmin}, {"xmax", r.xmax}, {"ymin", r.ymin}, {"ymax", r.ymax}};
  nlohmann::json fils = nlohmann::json::array();
  for (std::size_t i = 0; i < m.filaments().size(); ++i) {
    const Filament& f = m.filaments()[i];
    nlohmann::json poly = nlohmann::json::array();
    for (const auto& v : f.vertices()) poly.push_back({v.x, v.y});
    fils.push_back({{"weight", m.filament_weights()[i]},
                    {"sigma", f.sigma()},
                    {"density", to_json(f.density())},
                    {"polyline", poly}});
  }
  j["filaments"] = fils;
  nlohmann::json cls = nlohmann::json::array();
  for (std::size_t i = 0; i < m.clusters().size(); ++i) {
    const Cluster& c = m.clusters()[i];
    cls.push_back({{"weight", m.cluster_weights()[i]}, {"sigma", c.sigma}, {"center", {c.center.x, c.center.y}}});
  }
  j["clusters"] = cls;
  j["quadrature"] = {{"nodes_per_sigma", m.quadrature().nodes_per_sigma},
                     {"rule", m.quadrature().rule == QuadratureRule::trapezoid ? "trapezoid" : "gauss-legendre"}};
  j["notes"] = notes;
  return j;
}

/// Parses a model document; structural problems raise DataError.
inline FilamentModel model_from_json(const nlohmann::json& j) {
  try {
    auto vec = [](const nlohmann::json& a) {
      if (!a.is_array() || a.size() != 2) throw DataError("points must be [x, y] pairs");
      return Vec2{a.at(0).get<double>(), a.at(1).get<double>()};
    };
    std::vector<Filament> fils;
    std::vector<double> fw;
    for (const auto& f : j.value("filaments", nlohmann::json::array())) {
      std::vector<Vec2> poly;
      for (const auto& v : f.at("polyline")) poly.push_back(vec(v));
      WeightDensity w = WeightDensity::uniform();
      if (f.contains("density")) {
        const auto type = f["density"].value("type", std::string("uniform"));
        if (type == "beta") w = WeightDensity::beta(f["density"].at("a").get<double>(), f["density"].at("b").get<double>());
        else if (type != "uniform") throw DataError("unknown weight density '" + type + "'");
      }
      fils.emplace_back(poly, f.at("sigma").get<double>(), w);
      fw.push_back(f.at("weight").get<double>());
    }
    std::vector<Cluster> cls;
    std::vector<double> cw;
    for (const auto& c : j.value("clusters", nlohmann::json::array())) {
      cls.push_back({vec(c.at("center")), c.at("sigma").get<double>()});
      cw.push_back(c.at("weight").get<double>());
    }
    Rect region{0.0, 1.0, 0.0, 1.0};
    if (j.contains("region")) {
      const auto& r = j["region"];
      region = {r.at("xmin").get<double>(), r.at("xmax").get<double>(), r.at("ymin").get<double>(),
                r.at("ymax").get<double>()};
    }
    QuadratureSpec q;
    if (j.contains("quadrature")) {
      q.nodes_per_sigma = j["quadrature"].value("nodes_per_sigma", 8);
      const auto rule = j["quadrature"].value("rule", std::string("trapezoid"));
      if (rule == "gauss-legendre") q.rule = QuadratureRule::gauss_legendre;
      else if (rule != "trapezoid") throw DataError("unknown quadrature rule '" + rule + "'");
    }
    return FilamentModel(std::move(fils), std::move(fw), std::move(cls), std::move(cw),
                         j.value("background_weight", 0.0), region, q);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed model document: ") + e.what());
  } catch (const DomainError& e) {
    throw DataError(std::string("invalid model: ") + e.what());
  }
}

inline FilamentModel read_model_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace pathdens
