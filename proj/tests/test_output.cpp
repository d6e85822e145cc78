#include <gtest/gtest.h>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <random>
#include <regex>
#include <sstream>

#include <abslab/config.hpp>
#include <abslab/csv.hpp>
#include <abslab/plot.hpp>

#include "fixtures.hpp"

using namespace abslab;

namespace {

double parse(const std::string& s) {
  double x = 0.0;
  std::from_chars(s.data(), s.data() + s.size(), x);
  return x;
}

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

TEST(Csv, RoundTripsEveryBitPattern) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 100000; ++i) {
    const std::uint64_t bits = rng();
    double x;
    std::memcpy(&x, &bits, sizeof x);
    if (!std::isfinite(x)) continue;
    const double y = parse(format_double(x));
    ASSERT_EQ(std::memcmp(&x, &y, sizeof x), 0) << format_double(x);
  }
}

TEST(Csv, SpecialValuesAndLayout) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(NAN), "nan");
  EXPECT_EQ(format_double(-INFINITY), "-inf");
  std::ostringstream os;
  write_csv_header(os, {"a", "b"});
  write_csv_row(os, {1.0, 0.5});
  EXPECT_EQ(os.str(), "a,b\n1,0.5\n");
}

TEST(Csv, TraceColumnOrder) {
  auto sc = fixture::protocol("dry", 20.0, "lyapunov");
  sc.duration = 2.5;
  const auto out = run(sc);
  std::ostringstream os;
  out.trace.write_csv(os);
  std::istringstream is(os.str());
  std::string header;
  std::getline(is, header);
  EXPECT_EQ(header, "t,v,w,lambda,lambda_ref,mu,Tb_cmd,Tb_applied,W_lyap");
  std::string line;
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    ASSERT_EQ(count(line, ","), 8u);
    ++rows;
  }
  EXPECT_EQ(rows, out.trace.size());
}

TEST(Plot, SingleSeriesIsOnePolylineWithTwoPoints) {
  PlotDocument doc{"t", "x", "y", {{"s", {0.0, 1.0}, {0.0, 1.0}}}};
  const std::string svg = render_svg(doc);
  EXPECT_EQ(count(svg, "<polyline"), 1u);
  std::smatch m;
  ASSERT_TRUE(std::regex_search(svg, m, std::regex("<polyline[^>]*points=\"([^\"]*)\"")));
  const std::string pts = m[1];
  EXPECT_EQ(count(pts, ","), 2u);
  EXPECT_EQ(count(pts, " "), 1u);
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_EQ(svg.find("href"), std::string::npos);
}

TEST(Plot, RejectsInvalidDocuments) {
  EXPECT_THROW(render_svg(PlotDocument{"t", "x", "y", {}}), ConfigError);
  EXPECT_THROW(render_svg(PlotDocument{"t", "x", "y", {{"s", {0.0, 1.0}, {0.0}}}}), ConfigError);
  EXPECT_THROW(render_svg(PlotDocument{"t", "x", "y", {{"s", {}, {}}}}), ConfigError);
  const auto dir = std::filesystem::temp_directory_path() / "abslab_plot_reject";
  std::filesystem::remove_all(dir);
  EXPECT_THROW(emit_plot(PlotDocument{"t", "x", "y", {}}, (dir / "p.svg").string()), ConfigError);
  EXPECT_FALSE(std::filesystem::exists(dir / "p.svg"));
}

TEST(Plot, UnwritablePathIsAnIoError) {
  EXPECT_THROW(emit_plot(PlotDocument{"t", "x", "y", {{"s", {0.0}, {0.0}}}}, "/nonexistent/dir/p.svg"), IoError);
}

TEST(Plot, SlipFigureHasThreeSeriesAndLegend) {
  PlotDocument doc{"slip <&>", "t [s]", "slip", {}};
  doc.series.push_back({"slip", {0, 1, 2, 3}, {0, 0.1, 0.17, 0.16}});
  doc.series.push_back({"reference", {0, 3}, {0.17, 0.17}});
  doc.series.push_back({"disturbance", {2, 2}, {0, 0.2}});
  const std::string svg = render_svg(doc);
  EXPECT_EQ(count(svg, "<polyline"), 3u);
  EXPECT_EQ(count(svg, "class=\"legend\""), 3u);
  for (const char* l : {">slip<", ">reference<", ">disturbance<"}) EXPECT_NE(svg.find(l), std::string::npos);
  EXPECT_NE(svg.find("slip &lt;&amp;&gt;"), std::string::npos);
}

TEST(Manifest, HashStableAndSensitive) {
  const auto sc = fixture::protocol("dry", 20.0, "pid");
  const json a = scenario_to_json(sc);
  EXPECT_EQ(config_hash(a), config_hash(scenario_to_json(sc)));
  EXPECT_EQ(config_hash(a).size(), 16u);
  auto other = sc;
  other.initial_speed = 20.000000000000004;
  EXPECT_NE(config_hash(a), config_hash(scenario_to_json(other)));
  const json m = make_manifest(a, 7, "simulate");
  EXPECT_EQ(m.at("config_hash"), config_hash(a));
  EXPECT_EQ(m.at("seed"), 7);
  EXPECT_TRUE(m.contains("version"));
  EXPECT_EQ(m.at("config"), a);
}

TEST(Manifest, FnvReferenceValues) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
}

TEST(Manifest, LoadingAManifestReproducesTheConfig) {
  const auto sc = fixture::protocol("wet", 20.0, "lyapunov");
  const json canon = scenario_to_json(sc);
  const auto path = std::filesystem::temp_directory_path() / "abslab_manifest_test.json";
  {
    std::ofstream(path) << make_manifest(canon, 1, "simulate").dump(2);
  }
  const auto loaded = load_config(path.string());
  EXPECT_EQ(scenario_to_json(scenario_from_json(loaded.document, loaded.base_dir)).dump(), canon.dump());
  std::filesystem::remove(path);
}

}  // namespace
