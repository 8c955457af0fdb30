#include <algorithm>
#include <random>

#include "doctest.h"
#include "simra/error.hpp"
#include "simra/graph_io.hpp"
#include "simra/matching.hpp"
#include "simra/synth.hpp"
#include "support/oracles.hpp"
#include "support/properties.hpp"

using namespace simra;

namespace {

GridSpec const kSpec;
LocalProjection const kProj(kSpec.origin);

MapGraph grid_graph() {
  BuildParams bp;
  bp.region = kSpec.region;
  return build_graph(grid_extract(kSpec), bp);
}

GeoPoint at(double x, double y) { return kProj.to_geo({x, y}); }

// One fix per second along straight legs, sampled every `step` meters.
Ride ride_along(std::vector<std::pair<double, double>> const& legs, double step = 5.0) {
  Ride ride;
  ride.ride_id = std::string(32, 'a');
  ride.region = kSpec.region;
  TimestampMs ts = 1'000'000;
  auto push = [&](double x, double y) {
    RideSample s;
    s.timestamp = ts;
    s.location = at(x, y);
    s.accuracy_m = 4.0;
    s.accel = {0, 0, 9.81};
    ride.samples.push_back(s);
    ts += 1000;
  };
  push(legs[0].first, legs[0].second);
  for (std::size_t i = 1; i < legs.size(); ++i) {
    auto [ax, ay] = legs[i - 1];
    auto [bx, by] = legs[i];
    double const len = std::hypot(bx - ax, by - ay);
    int const n = std::max(1, static_cast<int>(std::ceil(len / step)));
    for (int k = 1; k <= n; ++k) {
      double const t = static_cast<double>(k) / n;
      push(ax + t * (bx - ax), ay + t * (by - ay));
    }
  }
  return ride;
}

TimestampMs time_near(Ride const& ride, double x, double y) {
  auto const target = at(x, y);
  TimestampMs best = 0;
  double best_d = 1e18;
  for (auto const& s : ride.samples) {
    double const d = haversine_m(*s.location, target);
    if (d < best_d) {
      best_d = d;
      best = s.timestamp;
    }
  }
  return best;
}

Incident incident_at(Ride const& ride, double x, double y, IncidentType type, bool scary) {
  Incident inc;
  inc.location = at(x, y);
  inc.timestamp = time_near(ride, x, y);
  inc.type = type;
  inc.scary = scary;
  return inc;
}

using oracle::Step;

Step edge(std::string id, int dir) { return {ElementKind::Edge, std::move(id), dir}; }
Step node(std::string id) { return {ElementKind::Node, std::move(id), std::nullopt}; }

}  // namespace

TEST_CASE("a fix inside a polygon is not moved") {
  auto const g = grid_graph();
  GraphIndex const index(g);
  auto const p = at(300, 202);
  auto const s = index.snap(p, 25.0);
  REQUIRE(s.element);
  CHECK(g.id_of(*s.element) == "h0:1");
  CHECK(s.snap_distance_m == 0.0);
  CHECK(s.location == p);
}

TEST_CASE("snap distance matches a dense scan of the centerline") {
  auto const g = grid_graph();
  GraphIndex const index(g);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> along(220.0, 380.0);
  std::uniform_real_distribution<double> off(5.5, 24.0);
  std::vector<oracle::Pt> const h0 = {{0, 200}, {600, 200}};
  for (int i = 0; i < 200; ++i) {
    double const x = along(rng);
    double const y = 200.0 + (rng() % 2 ? off(rng) : -off(rng));
    auto const s = index.snap(at(x, y), 25.0);
    REQUIRE(s.element);
    CHECK(g.id_of(*s.element) == "h0:1");
    double const want = oracle::dense_nearest(h0, {x, y}, 0.01);
    CHECK(s.snap_distance_m == doctest::Approx(want).epsilon(1e-3));
    auto const xy = kProj.to_local(s.location);
    CHECK(xy.y == doctest::Approx(200.0).epsilon(1e-3));
  }
}

TEST_CASE("a fix far from every street stays unmatched") {
  auto const g = grid_graph();
  GraphIndex const index(g);
  auto const s = index.snap(at(300, 700), 25.0);
  CHECK_FALSE(s.element);
  auto const ride = ride_along({{300, 700}, {500, 700}});
  auto const m = match_ride(ride, index);
  CHECK(m.traversal.empty());
  CHECK(m.unmatched_point_fraction == 1.0);
}

TEST_CASE("inaccurate fixes are dropped before matching") {
  auto const g = grid_graph();
  GraphIndex const index(g);
  auto ride = ride_along({{250, 200}, {350, 200}});
  for (auto& s : ride.samples) s.accuracy_m = 80.0;
  auto const m = match_ride(ride, index);
  CHECK(m.traversal.empty());
  CHECK(m.unmatched_point_fraction == 1.0);
  CHECK_THROWS_AS(smooth_trace(ride.samples, index), Error);
}

TEST_CASE("a ride inside one block is one traversal") {
  auto const g = grid_graph();
  GraphIndex const index(g);
  auto const m = match_ride(ride_along({{350, 200}, {250, 200}}), index);
  CHECK(oracle::steps_of(m) == std::vector<Step>{edge("h0:1", 1)});
  CHECK(m.unmatched_point_fraction == 0.0);
  CHECK(m.traversal[0].enter_ts < m.traversal[0].exit_ts);
}

TEST_CASE("crossing a junction yields edge, node, edge") {
  auto const g = grid_graph();
  GraphIndex const index(g);
  auto const m = match_ride(ride_along({{100, 200}, {300, 200}}), index);
  CHECK(oracle::steps_of(m) == std::vector<Step>{edge("h0:0", 0), node("j00"), edge("h0:1", 0)});
  auto const turn = match_ride(ride_along({{300, 400}, {200, 400}, {200, 300}}), index);
  CHECK(oracle::steps_of(turn) == std::vector<Step>{edge("h1:1", 1), node("j01"), edge("v0:1", 1)});
}

TEST_CASE("a junction skipped between fixes is still traversed") {
  auto const g = grid_graph();
  GraphIndex const index(g);
  auto const m = match_ride(ride_along({{150, 200}, {250, 200}}, 50.0), index);
  CHECK(oracle::steps_of(m) == std::vector<Step>{edge("h0:0", 0), node("j00"), edge("h0:1", 0)});
}

TEST_CASE("routes match the noise-free ground truth") {
  auto const g = grid_graph();
  GraphIndex const index(g);
  std::vector<std::vector<std::pair<double, double>>> const routes = {
      {{30, 200}, {570, 200}},
      {{200, 20}, {200, 400}, {580, 400}},
      {{480, 400}, {400, 400}, {400, 200}, {200, 200}, {200, 560}},
  };
  for (auto const& r : routes) {
    std::vector<oracle::Pt> pts;
    for (auto [x, y] : r) pts.push_back({x, y});
    CHECK(oracle::steps_of(match_ride(ride_along(r), index)) ==
          oracle::grid_route_truth(pts, kSpec.spacing_m, g.buffer_width_m));
  }
}

TEST_CASE("incidents land on the element and direction of the traversal") {
  auto g = grid_graph();
  GraphIndex const index(g);
  auto ride = ride_along({{100, 200}, {300, 200}});
  ride.incidents.push_back(incident_at(ride, 260, 200, IncidentType::ClosePass, true));
  ride.incidents.push_back(incident_at(ride, 201, 201, IncidentType::NearHook, false));
  ride.incidents.push_back(incident_at(ride, 120, 200, IncidentType::Unlabeled, false));
  ride.incidents.push_back(incident_at(ride, 300, 800, IncidentType::HeadOn, true));
  auto const m = match_ride(ride, index);
  REQUIRE(m.incidents.size() == 3);
  CHECK(m.incidents[0].element.id == "h0:1");
  CHECK(m.incidents[0].direction == 0);
  CHECK(m.incidents[1].element.id == "j00");
  CHECK(m.incidents[2].type == IncidentType::Unlabeled);

  std::vector<MatchedRide> const batch = {m};
  populate(g, batch);
  auto const e = *g.find_edge("h0:1");
  auto const row = static_cast<std::size_t>(IncidentType::ClosePass) - 1;
  CHECK(g.edges[e].r == std::array<std::int64_t, 2>{1, 0});
  CHECK(g.edges[e].s[row][0] == 1);
  auto const n = *g.find_node("j00");
  CHECK(g.nodes[n].r == 1);
  CHECK(g.nodes[n].n[static_cast<std::size_t>(IncidentType::NearHook) - 1] == 1);
  std::int64_t labeled = 0;
  for (auto const& x : g.edges) {
    for (auto const& t : x.s) labeled += t[0] + t[1];
    for (auto const& t : x.n) labeled += t[0] + t[1];
  }
  for (auto const& x : g.nodes) {
    for (auto v : x.s) labeled += v;
    for (auto v : x.n) labeled += v;
  }
  CHECK(labeled == 2);
}

TEST_CASE("out and back through a junction counts both directions") {
  auto g = grid_graph();
  GraphIndex const index(g);
  auto const m = match_ride(ride_along({{150, 200}, {200, 200}, {200, 260}, {200, 200}, {130, 200}}), index);
  std::vector<MatchedRide> const batch = {m};
  populate(g, batch);
  auto const h = *g.find_edge("h0:0");
  CHECK(g.edges[h].r == std::array<std::int64_t, 2>{1, 1});
  CHECK(g.nodes[*g.find_node("j00")].r == 2);
  // Turning around mid-block is a single visit, entered from j00.
  auto const v = *g.find_edge("v0:1");
  CHECK(g.edges[v].r == std::array<std::int64_t, 2>{1, 0});
}

TEST_CASE("populate rejects unknown elements without touching the graph") {
  auto g = grid_graph();
  auto const before = serialize_graph(g);
  MatchedRide good;
  good.ride_id = "good";
  good.traversal.push_back({{ElementKind::Edge, "h0:1"}, 0, 0, 1});
  MatchedRide bad;
  bad.ride_id = "bad";
  bad.traversal.push_back({{ElementKind::Edge, "h9:9"}, 0, 0, 1});
  std::vector<MatchedRide> const batch = {good, bad};
  try {
    populate(g, batch);
    FAIL("expected error");
  } catch (Error const& e) {
    CHECK(e.kind() == ErrorKind::Consistency);
  }
  CHECK(serialize_graph(g) == before);

  MatchedRide orphan = good;
  orphan.incidents.push_back({0, {ElementKind::Node, "j11"}, std::nullopt, IncidentType::Other, true});
  std::vector<MatchedRide> const second = {orphan};
  CHECK_THROWS_AS(populate(g, second), Error);
  MatchedRide no_dir = good;
  no_dir.traversal[0].direction.reset();
  std::vector<MatchedRide> const third = {no_dir};
  CHECK_THROWS_AS(populate(g, third), Error);
  CHECK(serialize_graph(g) == before);
}

TEST_CASE("populate does not depend on ride order") {
  auto const base = grid_graph();
  GraphIndex const index(base);
  std::mt19937_64 rng(11);
  std::vector<MatchedRide> matched;
  for (int i = 0; i < 20; ++i) {
    auto const synth = synth_grid_ride(kSpec, {}, rng);
    matched.push_back(match_ride(synth.ride, index));
  }
  auto a = base;
  populate(a, matched);
  std::shuffle(matched.begin(), matched.end(), rng);
  auto b = base;
  populate(b, matched);
  CHECK(serialize_graph(a) == serialize_graph(b));
  auto const want = oracle::recount(matched);
  for (auto const& e : a.edges) {
    auto const it = want.find({1, e.id});
    auto const r = it == want.end() ? std::array<std::int64_t, 2>{} : it->second.r;
    CHECK(e.r == r);
  }
}

TEST_CASE("matched rides round-trip") {
  auto const g = grid_graph();
  GraphIndex const index(g);
  std::mt19937_64 rng(3);
  std::vector<MatchedRide> matched;
  for (int i = 0; i < 5; ++i) matched.push_back(match_ride(synth_grid_ride(kSpec, {}, rng).ride, index));
  auto const back = parse_matched(serialize_matched(matched));
  CHECK(back.size() == matched.size());
  CHECK(serialize_matched(back) == serialize_matched(matched));
  CHECK_THROWS_AS(parse_matched("{\"ride_id\":1}\n"), Error);
}

TEST_CASE("matching properties on noisy synthetic rides") {
  auto const out = props::matching_suite(99, 15);
  INFO(out.detail);
  CHECK(out.pass);
}
