#include <gtest/gtest.h>

#include <sstream>
#include <string>
#include <vector>

#include <pathdens/io.hpp>
#include <pathdens/svg.hpp>

using namespace pathdens;

namespace {

std::string data_error(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_points_csv(in, "pts.csv");
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

// Minimal XML check: tags balance, attributes are quoted, one root element.
bool balanced_xml(const std::string& s, std::string& why) {
  std::vector<std::string> stack;
  std::size_t pos = 0, roots = 0;
  while ((pos = s.find('<', pos)) != std::string::npos) {
    const auto end = s.find('>', pos);
    if (end == std::string::npos) return why = "unterminated tag", false;
    const std::string tag = s.substr(pos + 1, end - pos - 1);
    pos = end + 1;
    if (tag.empty()) return why = "empty tag", false;
    if (tag[0] == '?' || tag[0] == '!') continue;
    if (std::count(tag.begin(), tag.end(), '"') % 2) return why = "unbalanced quotes in <" + tag + ">", false;
    if (tag[0] == '/') {
      const std::string name = tag.substr(1);
      if (stack.empty() || stack.back() != name) return why = "mismatched </" + name + ">", false;
      stack.pop_back();
      continue;
    }
    const std::string name = tag.substr(0, tag.find_first_of(" \n/"));
    if (stack.empty()) ++roots;
    if (tag.back() != '/') stack.push_back(name);
  }
  if (!stack.empty()) return why = "unclosed <" + stack.back() + ">", false;
  if (roots != 1) return why = "expected one root element", false;
  return true;
}

}  // namespace

TEST(PointsCsv, RoundTripIsExact) {
  Rng rng(1);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Vec2> pts;
  for (int i = 0; i < 200; ++i) pts.push_back({g(rng) * 1e-3, g(rng) * 1e5});
  pts.push_back({0.1, 1.0 / 3.0});
  std::stringstream s;
  write_points_csv(s, PointCloud(pts));
  const auto back = parse_points_csv(s);
  ASSERT_EQ(back.size(), pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    EXPECT_EQ(back[i].x, pts[i].x);
    EXPECT_EQ(back[i].y, pts[i].y);
  }
}

TEST(PointsCsv, NamedColumnsCommentsAndCrlf) {
  std::istringstream in("# slice 20-25\r\nid,Y,z,X\r\n1,2.5,9,-1\r\n\r\n2,3e-1,9,4\r\n");
  const auto c = parse_points_csv(in);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].x, -1.0);
  EXPECT_EQ(c[0].y, 2.5);
  EXPECT_EQ(c[1].x, 4.0);
  EXPECT_EQ(c[1].y, 0.3);
}

TEST(PointsCsv, UnnamedColumnsUseFirstTwo) {
  std::istringstream in("ra,dec\n10,20\n");
  const auto c = parse_points_csv(in);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].x, 10.0);
  EXPECT_EQ(c[0].y, 20.0);
}

TEST(PointsCsv, MalformedRowsNameTheLine) {
  EXPECT_EQ(data_error("x,y\n1,2\n3,abc\n"), "pts.csv line 3: coordinates are not finite numbers");
  EXPECT_NE(data_error("x,y\n1,2\n\n4\n").find("line 4"), std::string::npos);
  EXPECT_NE(data_error("x,y\n1,2\n1,nan\n").find("line 3"), std::string::npos);
  EXPECT_NE(data_error("x,y\n1,2,3\n").find("line 2"), std::string::npos);
}

TEST(PointsCsv, HeaderIsRequired) {
  EXPECT_NE(data_error("1,2\n3,4\n").find("missing header"), std::string::npos);
  EXPECT_NE(data_error("").find("empty"), std::string::npos);
  EXPECT_NE(data_error("x\n1\n").find("two columns"), std::string::npos);
  EXPECT_THROW(read_points_csv("/nonexistent/points.csv"), DataError);
}

TEST(FieldCsv, RoundTrip) {
  const GridSpec g{{-1, 2, 0.5, 1.5}, 7, 4};
  GridField f{g, {}};
  for (std::size_t k = 0; k < g.size(); ++k) f.values.push_back(std::sin(0.7 * k) / 3);
  std::stringstream s;
  write_field_csv(s, f);
  const auto back = parse_field_csv(s);
  EXPECT_TRUE(back.grid == g);
  EXPECT_EQ(back.values, f.values);
}

TEST(FieldCsv, Errors) {
  std::istringstream missing("x,y,value\n0,0,1\n");
  EXPECT_THROW(parse_field_csv(missing), DataError);
  std::istringstream short_rows("# grid nx=2 ny=2 xmin=0 xmax=1 ymin=0 ymax=1\nx,y,value\n0,0,1\n");
  EXPECT_THROW(parse_field_csv(short_rows), DataError);
}

TEST(MaskCsv, ListsInsideNodes) {
  const GridSpec g{{0, 1, 0, 1}, 3, 2};
  GridMask m = GridMask::none(g);
  m.inside[g.index(2, 1)] = 1;
  m.inside[g.index(0, 0)] = 1;
  std::ostringstream out;
  write_mask_csv(out, m);
  EXPECT_EQ(out.str(), "i,j,x,y\n0,0,0,0\n2,1,1,1\n");
}

TEST(RateTable, CsvAndSummary) {
  RateTable t;
  t.rows = {{200, 0, 0.5}, {800, 0, 0.25}};
  t.medians = {{200, 0.5}, {800, 0.25}};
  t.fit.slope = -0.5;
  std::ostringstream out;
  write_rate_table_csv(out, t);
  EXPECT_EQ(out.str(), "n,replicate,sup_error\n200,0,0.5\n800,0,0.25\n");
  const auto j = rate_summary_json(t);
  EXPECT_EQ(j["slope"].get<double>(), -0.5);
  EXPECT_TRUE(j["slope_std_error"].is_null());
  EXPECT_EQ(j["rows"].get<int>(), 2);
}

TEST(ModelJson, RoundTripPreservesDensity) {
  const Filament arc({{0.1, 0.2}, {0.4, 0.5}, {0.9, 0.1}}, 0.05, WeightDensity::beta(0.5, 0.5));
  const FilamentModel m({arc}, {0.6}, {{{0.5, 0.3}, 0.06}}, {0.3}, 0.1, Rect{0, 1, 0, 1});
  const auto back = model_from_json(nlohmann::json::parse(model_to_json(m).dump()));
  for (Vec2 x : {Vec2{0.2, 0.3}, Vec2{0.5, 0.3}, Vec2{0.9, 0.9}, Vec2{1.2, 0.5}}) {
    EXPECT_EQ(back.value(x), m.value(x));
  }
  EXPECT_EQ(back.filaments().size(), 1u);
  EXPECT_EQ(back.filaments()[0].density().kind(), WeightDensity::Kind::beta);
}

TEST(ModelJson, MalformedDocumentsAreDataErrors) {
  EXPECT_THROW(model_from_json(nlohmann::json::parse(R"({"clusters":[{"center":[0],"sigma":1,"weight":1}]})")),
               DataError);
  EXPECT_THROW(model_from_json(nlohmann::json::parse(R"({"clusters":[{"center":[0,0],"sigma":-1,"weight":1}]})")),
               DataError);
  EXPECT_THROW(model_from_json(nlohmann::json::parse(R"({"clusters":[{"center":[0,0],"sigma":1,"weight":0.5}]})")),
               DataError);
  EXPECT_THROW(read_model_json("/nonexistent/model.json"), DataError);
}

TEST(Svg, WellFormedAndSelfContained) {
  const PointCloud cloud({{0, 0}, {1, 1}, {0.5, 0.2}});
  std::vector<AscentPath> paths(2);
  paths[0].vertices = {{0, 0}, {0.2, 0.1}, {0.4, 0.2}, {0.5, 0.2}};
  paths[1].vertices = {{1, 1}};
  const GridSpec g{{0, 1, 0, 1}, 4, 4};
  GridMask m = GridMask::none(g);
  m.inside[5] = 1;
  std::ostringstream out;
  write_figure_svg(out, {&cloud, &paths, 3, false, &m, "a < b & \"c\""});
  const std::string s = out.str();
  std::string why;
  EXPECT_TRUE(balanced_xml(s, why)) << why;
  EXPECT_EQ(s.find("href"), std::string::npos);
  EXPECT_EQ(s.find("http://", s.find("<svg") + 40), std::string::npos);
  EXPECT_EQ(s.find("url(http"), std::string::npos);
  EXPECT_NE(s.find("a &lt; b &amp; &quot;c&quot;"), std::string::npos);
  for (char p : {'A', 'B', 'C', 'D'}) EXPECT_NE(s.find(std::string("id=\"panel-") + p), std::string::npos);
}

TEST(Svg, TrimStartsPanelCAtVertex) {
  const PointCloud cloud({{0, 0}, {1, 1}});
  std::vector<AscentPath> paths(1);
  paths[0].vertices = {{0, 0}, {0.25, 0}, {0.5, 0}, {0.75, 0}, {1, 0}};
  std::ostringstream a, b;
  write_figure_svg(a, {&cloud, &paths, 0, false, nullptr, ""});
  write_figure_svg(b, {&cloud, &paths, 3, false, nullptr, ""});
  auto polylines = [](const std::string& s) {
    std::vector<std::size_t> counts;
    for (std::size_t p = s.find("points=\""); p != std::string::npos; p = s.find("points=\"", p + 1)) {
      const auto e = s.find('"', p + 8);
      counts.push_back(static_cast<std::size_t>(std::count(s.begin() + p, s.begin() + e, ',')));
    }
    return counts;
  };
  EXPECT_EQ(polylines(a.str()), (std::vector<std::size_t>{5, 5}));
  EXPECT_EQ(polylines(b.str()), (std::vector<std::size_t>{5, 2}));
}

TEST(FormatNumber, ShortestRoundTrip) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(-2.0), "-2");
  EXPECT_EQ(format_number(1e-300), "1e-300");
  for (double v : {1.0 / 3, 2.0 / 7, 12345.678901234567}) EXPECT_EQ(std::stod(format_number(v)), v);
}
