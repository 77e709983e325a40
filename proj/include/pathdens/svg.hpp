#pragma once

#include <charconv>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "flow.hpp"
#include "geometry.hpp"
#include "kernels.hpp"
#include "levelset.hpp"

namespace pathdens {

namespace detail {
inline std::string svg_num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 2);
  return std::string(buf, res.ptr);
}

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}
}  // namespace detail

/// Maps a data rectangle onto a square panel with y pointing up.
class PanelFrame {
 public:
  PanelFrame(Rect data, double x0, double y0, double size) : x0_(x0), y0_(y0), size_(size) {
    const double mx = 0.05 * data.width(), my = 0.05 * data.height();
    data_ = {data.xmin - mx, data.xmax + mx, data.ymin - my, data.ymax + my};
    if (!(data_.width() > 0.0)) data_ = {data_.xmin - 0.5, data_.xmax + 0.5, data_.ymin, data_.ymax};
    if (!(data_.height() > 0.0)) data_ = {data_.xmin, data_.xmax, data_.ymin - 0.5, data_.ymax + 0.5};
    scale_ = size_ / std::max(data_.width(), data_.height());
  }
  double sx(double x) const { return x0_ + (x - data_.xmin) * scale_; }
  double sy(double y) const { return y0_ + size_ - (y - data_.ymin) * scale_; }
  double length(double d) const { return d * scale_; }

 private:
  Rect data_;
  double x0_, y0_, size_;
  double scale_{1.0};
};

struct FigureInput {
  const PointCloud* cloud{nullptr};
  const std::vector<AscentPath>* paths{nullptr};
  std::size_t trim{0};
  bool auto_trim{false};  // use each path's trim_hint instead of `trim`
  const GridMask* mask{nullptr};
  std::string title;
};

/// Four panels: (A) data, (B) all paths, (C) trimmed paths, (D) level-set
/// mask. Self-contained SVG 1.1; panels share the data bounding box plus 5%.
inline void write_figure_svg(std::ostream& out, const FigureInput& in) {
  constexpr double panel = 360.0, gap = 30.0, top = 40.0;
  const double width = 2 * panel + 3 * gap;
  const double height = top + 2 * panel + 3 * gap;
  Rect box = in.cloud ? in.cloud->bounds() : Rect{0, 1, 0, 1};
  if (in.cloud && in.cloud->empty()) box = {0, 1, 0, 1};

  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << detail::svg_num(width)
      << "\" height=\"" << detail::svg_num(height) << "\" viewBox=\"0 0 " << detail::svg_num(width) << ' '
      << detail::svg_num(height) << "\">\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << detail::svg_num(width) << "\" height=\"" << detail::svg_num(height)
      << "\" fill=\"white\"/>\n";
  if (!in.title.empty())
    out << "<text x=\"" << detail::svg_num(gap) << "\" y=\"26\" font-family=\"sans-serif\" font-size=\"16\">"
        << detail::xml_escape(in.title) << "</text>\n";

  const char* labels[4] = {"A  data", "B  ascent paths", "C  trimmed paths", "D  level set"};
  for (int p = 0; p < 4; ++p) {
    const double x0 = gap + (p % 2) * (panel + gap);
    const double y0 = top + gap + (p / 2) * (panel + gap);
    const PanelFrame f(box, x0, y0, panel);
    out << "<g id=\"panel-" << static_cast<char>('A' + p) << "\">\n";
    out << "<clipPath id=\"clip-" << p << "\"><rect x=\"" << detail::svg_num(x0) << "\" y=\"" << detail::svg_num(y0)
        << "\" width=\"" << detail::svg_num(panel) << "\" height=\"" << detail::svg_num(panel) << "\"/></clipPath>\n";
    out << "<rect x=\"" << detail::svg_num(x0) << "\" y=\"" << detail::svg_num(y0) << "\" width=\""
        << detail::svg_num(panel) << "\" height=\"" << detail::svg_num(panel)
        << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";
    out << "<text x=\"" << detail::svg_num(x0 + 6) << "\" y=\"" << detail::svg_num(y0 - 6)
        << "\" font-family=\"sans-serif\" font-size=\"13\">" << labels[p] << "</text>\n";
    out << "<g clip-path=\"url(#clip-" << p << ")\">\n";
    if (p == 0 && in.cloud) {
      for (const auto& q : *in.cloud)
        out << "<circle cx=\"" << detail::svg_num(f.sx(q.x)) << "\" cy=\"" << detail::svg_num(f.sy(q.y))
            << "\" r=\"1.2\" fill=\"black\"/>\n";
    }
    if ((p == 1 || p == 2) && in.paths) {
      for (const auto& path : *in.paths) {
        std::size_t start = 0;
        if (p == 2) start = std::min(in.auto_trim ? path.trim_hint : in.trim, path.vertices.size() - 1);
        if (path.vertices.size() - start < 2) {
          const Vec2 v = path.vertices[start];
          out << "<circle cx=\"" << detail::svg_num(f.sx(v.x)) << "\" cy=\"" << detail::svg_num(f.sy(v.y))
              << "\" r=\"0.8\" fill=\"black\"/>\n";
          continue;
        }
        out << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"0.4\" points=\"";
        for (std::size_t s = start; s < path.vertices.size(); ++s) {
          if (s > start) out << ' ';
          out << detail::svg_num(f.sx(path.vertices[s].x)) << ',' << detail::svg_num(f.sy(path.vertices[s].y));
        }
        out << "\"/>\n";
      }
    }
    if (p == 3 && in.mask) {
      const auto& g = in.mask->grid;
      const double w = f.length(g.dx()), h = f.length(g.dy());
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
          if (!in.mask->contains(i, j)) continue;
          const Vec2 c = g.node(i, j);
          out << "<rect x=\"" << detail::svg_num(f.sx(c.x) - 0.5 * w) << "\" y=\"" << detail::svg_num(f.sy(c.y) - 0.5 * h)
              << "\" width=\"" << detail::svg_num(w) << "\" height=\"" << detail::svg_num(h) << "\" fill=\"black\"/>\n";
        }
    }
    out << "</g>\n</g>\n";
  }
  out << "</svg>\n";
}

}  // namespace pathdens
