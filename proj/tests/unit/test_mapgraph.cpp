#include <algorithm>
#include <random>
#include <set>

#include "doctest.h"
#include "simra/error.hpp"
#include "simra/graph_io.hpp"
#include "simra/mapgraph.hpp"
#include "simra/matching.hpp"
#include "simra/synth.hpp"
#include "support/oracles.hpp"

using namespace simra;

namespace {

LocalProjection const kProj(GeoPoint{52.5, 13.4});

GeoPoint at(double x, double y) { return kProj.to_geo({x, y}); }

ExtractWay way(std::string id, std::vector<std::pair<double, double>> const& xy) {
  ExtractWay w;
  w.id = std::move(id);
  for (auto [x, y] : xy) w.coords.push_back(at(x, y));
  return w;
}

ErrorKind build_error(MapExtract const& ex) {
  try {
    build_graph(ex, {});
  } catch (Error const& e) {
    return e.kind();
  }
  FAIL("expected a build failure");
  return ErrorKind::Io;
}

// Vertical and horizontal streets at random offsets; some stop exactly on a
// crossing street to form T-junctions. Every crossing is offered as a
// junction candidate.
struct RandomGrid {
  MapExtract extract;
  std::vector<oracle::WayLine> lines;
};

RandomGrid random_grid(std::mt19937_64& rng) {
  auto positions = [&](int n) {
    std::vector<double> out;
    while (static_cast<int>(out.size()) < n) {
      double const v = 50.0 * static_cast<double>(1 + rng() % 20);
      if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
    }
    std::sort(out.begin(), out.end());
    return out;
  };
  int const nx = 1 + static_cast<int>(rng() % 4);
  int const ny = 1 + static_cast<int>(rng() % 4);
  auto const xs = positions(nx);
  auto const ys = positions(ny);
  RandomGrid g;
  std::set<std::pair<double, double>> junctions;
  auto add_line = [&](std::string const& id, bool vertical, double fixed, std::vector<double> const& cross) {
    double lo = -20.0, hi = 1100.0;
    if (rng() % 3 == 0) lo = cross[rng() % cross.size()];
    if (rng() % 3 == 0) hi = cross[rng() % cross.size()];
    if (hi <= lo) {
      lo = -20.0;
      hi = 1100.0;
    }
    std::vector<double> stops = {lo};
    for (double c : cross) {
      if (c > lo && c < hi) stops.push_back(c);
    }
    stops.push_back(hi);
    std::vector<std::pair<double, double>> pts;
    oracle::WayLine line{id, {}};
    for (double s : stops) {
      auto const p = vertical ? std::pair{fixed, s} : std::pair{s, fixed};
      pts.push_back(p);
      line.pts.push_back({p.first, p.second});
    }
    for (double c : cross) {
      if (c >= lo && c <= hi) junctions.insert(vertical ? std::pair{fixed, c} : std::pair{c, fixed});
    }
    g.extract.ways.push_back(way(id, pts));
    g.lines.push_back(line);
  };
  for (int i = 0; i < nx; ++i) add_line("v" + std::to_string(i), true, xs[static_cast<std::size_t>(i)], ys);
  for (int i = 0; i < ny; ++i) add_line("h" + std::to_string(i), false, ys[static_cast<std::size_t>(i)], xs);
  int k = 0;
  for (auto [x, y] : junctions) g.extract.junctions.push_back(ExtractJunction{"j" + std::to_string(k++), at(x, y), std::nullopt});
  return g;
}

}  // namespace

TEST_CASE("a single straight way is one edge") {
  MapExtract ex;
  ex.ways.push_back(way("a", {{0, 0}, {120, 0}}));
  auto const g = build_graph(ex, {});
  CHECK(g.nodes.empty());
  REQUIRE(g.edges.size() == 1);
  CHECK(g.edges[0].id == "a:0");
  CHECK_FALSE(g.edges[0].from);
  CHECK_FALSE(g.edges[0].to);
  CHECK(g.edges[0].length_m == doctest::Approx(120.0).epsilon(1e-4));
}

TEST_CASE("a plus crossing is one node and four edges") {
  MapExtract ex;
  ex.ways.push_back(way("ew", {{-100, 0}, {0, 0}, {100, 0}}));
  ex.ways.push_back(way("ns", {{0, -80}, {0, 0}, {0, 80}}));
  ex.junctions.push_back({"x", at(0, 0), std::nullopt});
  auto const g = build_graph(ex, {});
  REQUIRE(g.nodes.size() == 1);
  CHECK(g.nodes[0].id == "x");
  REQUIRE(g.edges.size() == 4);
  CHECK(g.edges[0].id == "ew:0");
  CHECK(g.edges[0].to == 0u);
  CHECK(g.edges[1].from == 0u);
  double total = 0;
  for (auto const& e : g.edges) total += e.length_m;
  CHECK(total == doctest::Approx(360.0).epsilon(1e-4));
  for (auto const& e : g.edges) {
    CHECK(e.polygon.front() == e.polygon.back());
    CHECK(e.polygon.size() >= 4);
  }
  CHECK(g.nodes[0].polygon.front() == g.nodes[0].polygon.back());
}

TEST_CASE("a junction where only two arms meet is not a node") {
  MapExtract ex;
  ex.ways.push_back(way("a", {{0, 0}, {100, 0}}));
  ex.ways.push_back(way("b", {{100, 0}, {100, 100}}));
  ex.junctions.push_back({"corner", at(100, 0), std::nullopt});
  auto const g = build_graph(ex, {});
  CHECK(g.nodes.empty());
  CHECK(g.edges.size() == 2);
  ex.junctions[0].arity = 3;  // extractor saw an arm outside the extract
  CHECK(build_graph(ex, {}).nodes.size() == 1);
}

TEST_CASE("a T junction is a node") {
  MapExtract ex;
  ex.ways.push_back(way("main", {{0, 0}, {100, 0}, {200, 0}}));
  ex.ways.push_back(way("side", {{100, 90}, {100, 0}}));
  ex.junctions.push_back({"t", at(100, 0), std::nullopt});
  auto const g = build_graph(ex, {});
  CHECK(g.nodes.size() == 1);
  CHECK(g.edges.size() == 3);
}

TEST_CASE("the grid fixture has four nodes and twelve edges") {
  GridSpec const spec;
  auto const ex = grid_extract(spec);
  std::vector<oracle::WayLine> lines;
  LocalProjection const proj(spec.origin);
  for (auto const& w : ex.ways) {
    oracle::WayLine line{w.id, {}};
    for (auto const& p : w.coords) {
      auto const xy = proj.to_local(p);
      line.pts.push_back({xy.x, xy.y});
    }
    lines.push_back(line);
  }
  auto const want = oracle::expected_counts(lines);
  CHECK(want.nodes == 4);
  CHECK(want.edges == 12);
  BuildParams bp;
  bp.region = spec.region;
  auto const g = build_graph(ex, bp);
  CHECK(g.nodes.size() == want.nodes);
  CHECK(g.edges.size() == want.edges);
  CHECK(g.find_edge("h1:2"));
  CHECK(g.find_node("j01"));
}

TEST_CASE("random street grids match the brute-force crossing scan") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 60; ++trial) {
    auto const grid = random_grid(rng);
    auto const want = oracle::expected_counts(grid.lines);
    auto const g = build_graph(grid.extract, {});
    INFO("trial " << trial);
    CHECK(g.nodes.size() == want.nodes);
    CHECK(g.edges.size() == want.edges);
  }
}

TEST_CASE("dangling references are listed") {
  MapExtract ex;
  auto w = way("a", {{0, 0}, {50, 0}});
  w.from_ref = "ghost";
  ex.ways.push_back(w);
  try {
    build_graph(ex, {});
    FAIL("expected error");
  } catch (Error const& e) {
    CHECK(e.kind() == ErrorKind::Build);
    CHECK(std::string(e.what()).find("a->ghost") != std::string::npos);
  }
}

TEST_CASE("degenerate extracts are build errors") {
  CHECK(build_error({}) == ErrorKind::Build);
  MapExtract dup;
  dup.ways.push_back(way("a", {{0, 0}, {10, 0}}));
  dup.ways.push_back(way("a", {{0, 5}, {10, 5}}));
  CHECK(build_error(dup) == ErrorKind::Build);
  MapExtract point;
  point.ways.push_back(way("p", {{0, 0}}));
  CHECK(build_error(point) == ErrorKind::Build);
}

TEST_CASE("containment prefers nodes, then smaller ids") {
  MapExtract ex;
  ex.ways.push_back(way("ew", {{-100, 0}, {0, 0}, {100, 0}}));
  ex.ways.push_back(way("ns", {{0, -80}, {0, 0}, {0, 80}}));
  ex.junctions.push_back({"x", at(0, 0), std::nullopt});
  auto const g = build_graph(ex, {});
  GraphIndex const index(g);
  auto const c = index.containing(at(2, 1));
  REQUIRE(c);
  CHECK(c->kind == ElementKind::Node);
  auto const e = index.containing(at(50, 3));
  REQUIRE(e);
  CHECK(g.id_of(*e) == "ew:1");
  CHECK_FALSE(index.containing(at(50, 30)));
}

TEST_CASE("extract records round-trip") {
  auto const ex = grid_extract({});
  auto const again = parse_extract(serialize_extract(ex));
  REQUIRE(again.ways.size() == ex.ways.size());
  REQUIRE(again.junctions.size() == ex.junctions.size());
  for (std::size_t i = 0; i < ex.ways.size(); ++i) {
    CHECK(again.ways[i].id == ex.ways[i].id);
    CHECK(again.ways[i].coords == ex.ways[i].coords);
  }
  CHECK_THROWS_AS(parse_extract("{\"type\":\"way\"}\n"), Error);
  CHECK_THROWS_AS(parse_extract("not json\n"), Error);
}

TEST_CASE("graph files round-trip with counters") {
  auto g = build_graph(grid_extract({}), {});
  g.nodes[1].r = 7;
  g.nodes[1].s[2] = 3;
  g.edges[4].r = {5, 2};
  g.edges[4].n[7][1] = 4;
  auto const text = serialize_graph(g);
  auto const back = parse_graph(text);
  CHECK(serialize_graph(back) == text);
  CHECK(back.nodes[1].s[2] == 3);
  CHECK(back.edges[4].n[7][1] == 4);
  CHECK(back.edges[4].length_m == g.edges[4].length_m);
  CHECK_THROWS_AS(parse_graph("{}"), Error);
  CHECK_THROWS_AS(parse_graph("[1,2"), Error);
}

TEST_CASE("geojson has one polygon per element") {
  auto const g = build_graph(grid_extract({}), {});
  auto const doc = graph_to_geojson(g);
  std::size_t polygons = 0;
  for (std::size_t pos = 0; (pos = doc.find("\"Polygon\"", pos)) != std::string::npos; ++pos) ++polygons;
  CHECK(polygons == g.nodes.size() + g.edges.size());
}

TEST_CASE("OSM extracts keep cyclable ways and their junctions") {
  std::string const xml = R"(<?xml version="1.0"?>
<osm version="0.6">
  <node id="1" lat="52.5000" lon="13.4000"/>
  <node id="2" lat="52.5000" lon="13.4020"/>
  <node id="3" lat="52.5000" lon="13.4040"/>
  <node id="4" lat="52.4990" lon="13.4020"/>
  <node id="5" lat="52.5010" lon="13.4020"/>
  <node id="6" lat="52.5020" lon="13.4020"/>
  <way id="10"><nd ref="1"/><nd ref="2"/><nd ref="3"/><tag k="highway" v="residential"/></way>
  <way id="11"><nd ref="4"/><nd ref="2"/><nd ref="5"/><tag k="highway" v="tertiary"/></way>
  <way id="12"><nd ref="5"/><nd ref="6"/><tag k="highway" v="motorway"/></way>
  <way id="13"><nd ref="5"/><nd ref="6"/><tag k="highway" v="footway"/><tag k="bicycle" v="yes"/></way>
  <way id="14"><nd ref="1"/><nd ref="4"/><tag k="highway" v="primary"/><tag k="bicycle" v="no"/></way>
  <way id="15"><nd ref="1"/><nd ref="4"/><tag k="building" v="yes"/></way>
</osm>)";
  auto const ex = extract_from_osm_xml(xml);
  std::vector<std::string> ids;
  for (auto const& w : ex.ways) ids.push_back(w.id);
  CHECK(ids == std::vector<std::string>{"w10", "w11", "w13"});
  auto const g = build_graph(ex, {});
  REQUIRE(g.nodes.size() == 1);
  CHECK(g.nodes[0].id == "n2");
  CHECK(g.edges.size() == 5);
  CHECK_THROWS_AS(extract_from_osm_xml("<osm><way id=\"1\"><nd ref=\"9\"/><nd ref=\"8\"/>"
                                       "<tag k=\"highway\" v=\"path\"/></way></osm>"),
                  Error);
  CHECK_THROWS_AS(extract_from_osm_xml("<html/>"), Error);
}
