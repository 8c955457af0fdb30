#include "simra/graph_io.hpp"

#include "json.hpp"
#include "simra/error.hpp"

namespace simra {

using nlohmann::json;

namespace {

constexpr std::string_view kGraphFormat = "simra-graph v1";

json point_json(GeoPoint const& p) { return json::array({p.lat, p.lon}); }

json ring_json(std::vector<GeoPoint> const& ring) {
  json out = json::array();
  for (auto const& p : ring) out.push_back(point_json(p));
  return out;
}

// GeoJSON wants [lon, lat].
json geojson_ring(std::vector<GeoPoint> const& ring) {
  json out = json::array();
  for (auto const& p : ring) out.push_back(json::array({p.lon, p.lat}));
  return json::array({out});
}

GeoPoint read_point(json const& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

std::vector<GeoPoint> read_ring(json const& j) {
  std::vector<GeoPoint> out;
  for (auto const& p : j) out.push_back(read_point(p));
  return out;
}

json directional_json(DirectionalCounts const& c) {
  json out = json::array();
  for (auto const& row : c) out.push_back(json::array({row[0], row[1]}));
  return out;
}

DirectionalCounts read_directional(json const& j) {
  DirectionalCounts c{};
  if (j.size() != kLabeledTypeCount) throw std::invalid_argument("expected 8 rows of counts");
  for (std::size_t t = 0; t < kLabeledTypeCount; ++t) {
    if (j[t].size() != 2) throw std::invalid_argument("expected 2 directions per row");
    c[t] = {j[t][0].get<std::int64_t>(), j[t][1].get<std::int64_t>()};
  }
  return c;
}

TypeCounts read_counts(json const& j) {
  TypeCounts c{};
  if (j.size() != kLabeledTypeCount) throw std::invalid_argument("expected 8 counts");
  for (std::size_t t = 0; t < kLabeledTypeCount; ++t) c[t] = j[t].get<std::int64_t>();
  return c;
}

char const* kind_name(ElementKind k) { return k == ElementKind::Node ? "node" : "edge"; }

ElementKind kind_from(std::string const& s) {
  if (s == "node") return ElementKind::Node;
  if (s == "edge") return ElementKind::Edge;
  throw std::invalid_argument("unknown element kind '" + s + "'");
}

json direction_json(std::optional<int> d) { return d ? json(*d) : json(nullptr); }

std::optional<int> read_direction(json const& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<int>();
}

}  // namespace

std::string serialize_graph(MapGraph const& graph) {
  json doc;
  doc["format"] = kGraphFormat;
  doc["region"] = graph.region;
  doc["buffer_width_m"] = graph.buffer_width_m;
  doc["origin"] = point_json(graph.origin);
  json nodes = json::array();
  for (auto const& n : graph.nodes) {
    nodes.push_back({{"id", n.id},
                     {"center", point_json(n.center)},
                     {"polygon", ring_json(n.polygon)},
                     {"r", n.r},
                     {"s", n.s},
                     {"n", n.n}});
  }
  json edges = json::array();
  for (auto const& e : graph.edges) {
    edges.push_back({{"id", e.id},
                     {"from", e.from ? json(graph.nodes[*e.from].id) : json(nullptr)},
                     {"to", e.to ? json(graph.nodes[*e.to].id) : json(nullptr)},
                     {"length_m", e.length_m},
                     {"centerline", ring_json(e.centerline)},
                     {"polygon", ring_json(e.polygon)},
                     {"r", e.r},
                     {"s", directional_json(e.s)},
                     {"n", directional_json(e.n)}});
  }
  doc["nodes"] = std::move(nodes);
  doc["edges"] = std::move(edges);
  return doc.dump(1) + "\n";
}

MapGraph parse_graph(std::string_view json_text) {
  MapGraph graph;
  try {
    auto const doc = json::parse(json_text);
    if (doc.at("format").get<std::string>() != kGraphFormat) {
      throw std::invalid_argument("unsupported graph format");
    }
    graph.region = doc.at("region").get<std::string>();
    graph.buffer_width_m = doc.at("buffer_width_m").get<double>();
    graph.origin = read_point(doc.at("origin"));
    for (auto const& j : doc.at("nodes")) {
      Intersection n;
      n.id = j.at("id").get<std::string>();
      n.center = read_point(j.at("center"));
      n.polygon = read_ring(j.at("polygon"));
      n.r = j.at("r").get<std::int64_t>();
      n.s = read_counts(j.at("s"));
      n.n = read_counts(j.at("n"));
      graph.nodes.push_back(std::move(n));
    }
    std::vector<std::pair<json, json>> refs;
    for (auto const& j : doc.at("edges")) {
      StreetSegment e;
      e.id = j.at("id").get<std::string>();
      e.length_m = j.at("length_m").get<double>();
      e.centerline = read_ring(j.at("centerline"));
      e.polygon = read_ring(j.at("polygon"));
      auto const r = j.at("r");
      if (r.size() != 2) throw std::invalid_argument("edge ride counts need 2 directions");
      e.r = {r[0].get<std::int64_t>(), r[1].get<std::int64_t>()};
      e.s = read_directional(j.at("s"));
      e.n = read_directional(j.at("n"));
      refs.emplace_back(j.at("from"), j.at("to"));
      graph.edges.push_back(std::move(e));
    }
    for (std::size_t i = 0; i < graph.edges.size(); ++i) {
      auto resolve = [&](json const& ref) -> std::optional<std::size_t> {
        if (ref.is_null()) return std::nullopt;
        auto idx = graph.find_node(ref.get<std::string>());
        if (!idx) fail(ErrorKind::Build, "edge '" + graph.edges[i].id + "' references unknown node");
        return idx;
      };
      graph.edges[i].from = resolve(refs[i].first);
      graph.edges[i].to = resolve(refs[i].second);
    }
  } catch (Error const&) {
    throw;
  } catch (std::exception const& e) {
    fail(ErrorKind::Format, std::string("graph file: ") + e.what());
  }
  graph.validate();
  return graph;
}

std::string graph_to_geojson(MapGraph const& graph) {
  json features = json::array();
  for (auto const& n : graph.nodes) {
    features.push_back({{"type", "Feature"},
                        {"geometry", {{"type", "Polygon"}, {"coordinates", geojson_ring(n.polygon)}}},
                        {"properties", {{"id", n.id}, {"kind", "node"}, {"r", n.r}, {"s", n.s}, {"n", n.n}}}});
  }
  for (auto const& e : graph.edges) {
    features.push_back(
        {{"type", "Feature"},
         {"geometry", {{"type", "Polygon"}, {"coordinates", geojson_ring(e.polygon)}}},
         {"properties",
          {{"id", e.id},
           {"kind", "edge"},
           {"from", e.from ? json(graph.nodes[*e.from].id) : json(nullptr)},
           {"to", e.to ? json(graph.nodes[*e.to].id) : json(nullptr)},
           {"r", e.r},
           {"s", directional_json(e.s)},
           {"n", directional_json(e.n)},
           {"l", e.length_m}}}});
  }
  json doc = {{"type", "FeatureCollection"}, {"features", features}};
  return doc.dump() + "\n";
}

std::string serialize_matched(std::vector<MatchedRide> const& rides) {
  std::string out;
  for (auto const& m : rides) {
    json traversal = json::array();
    for (auto const& t : m.traversal) {
      traversal.push_back({{"kind", kind_name(t.element.kind)},
                           {"id", t.element.id},
                           {"direction", direction_json(t.direction)},
                           {"enter_ts", t.enter_ts},
                           {"exit_ts", t.exit_ts}});
    }
    json incidents = json::array();
    for (auto const& i : m.incidents) {
      incidents.push_back({{"index", i.incident_index},
                           {"kind", kind_name(i.element.kind)},
                           {"id", i.element.id},
                           {"direction", direction_json(i.direction)},
                           {"type", static_cast<int>(i.type)},
                           {"scary", i.scary}});
    }
    json j = {{"ride_id", m.ride_id},
              {"traversal", traversal},
              {"incidents", incidents},
              {"unmatched_point_fraction", m.unmatched_point_fraction}};
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<MatchedRide> parse_matched(std::string_view jsonl) {
  std::vector<MatchedRide> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < jsonl.size()) {
    auto end = jsonl.find('\n', pos);
    if (end == std::string_view::npos) end = jsonl.size();
    auto const line = jsonl.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      auto const j = json::parse(line);
      MatchedRide m;
      m.ride_id = j.at("ride_id").get<std::string>();
      m.unmatched_point_fraction = j.at("unmatched_point_fraction").get<double>();
      for (auto const& t : j.at("traversal")) {
        m.traversal.push_back({{kind_from(t.at("kind").get<std::string>()), t.at("id").get<std::string>()},
                               read_direction(t.at("direction")),
                               t.at("enter_ts").get<TimestampMs>(),
                               t.at("exit_ts").get<TimestampMs>()});
      }
      for (auto const& i : j.at("incidents")) {
        auto type = incident_type_from_code(i.at("type").get<long>());
        if (!type) throw std::invalid_argument("unknown incident type code");
        m.incidents.push_back({i.at("index").get<std::size_t>(),
                               {kind_from(i.at("kind").get<std::string>()), i.at("id").get<std::string>()},
                               read_direction(i.at("direction")),
                               *type,
                               i.at("scary").get<bool>()});
      }
      out.push_back(std::move(m));
    } catch (std::exception const& e) {
      fail(ErrorKind::Format, "matched rides line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace simra
