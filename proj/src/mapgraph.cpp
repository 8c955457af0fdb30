#include "simra/mapgraph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "planar.hpp"
#include "simra/error.hpp"

namespace simra {

using nlohmann::json;

namespace {

template <typename T>
std::optional<std::size_t> find_sorted(std::vector<T> const& items, std::string_view id) {
  auto it = std::lower_bound(items.begin(), items.end(), id,
                             [](T const& item, std::string_view key) { return item.id < key; });
  if (it == items.end() || it->id != id) return std::nullopt;
  return static_cast<std::size_t>(it - items.begin());
}

bool ring_ok(std::vector<GeoPoint> const& ring) {
  if (ring.size() < 4 || ring.front() != ring.back()) return false;
  std::set<std::pair<double, double>> distinct;
  for (auto const& p : ring) distinct.emplace(p.lat, p.lon);
  return distinct.size() >= 3;
}

GeoPoint read_point(json const& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw std::invalid_argument("expected [lat, lon]");
  }
  GeoPoint p{j[0].get<double>(), j[1].get<double>()};
  if (!is_valid(p)) throw std::invalid_argument("coordinate out of range");
  return p;
}

}  // namespace

std::optional<std::size_t> MapGraph::find_node(std::string_view id) const {
  return find_sorted(nodes, id);
}

std::optional<std::size_t> MapGraph::find_edge(std::string_view id) const {
  return find_sorted(edges, id);
}

std::optional<ElementRef> MapGraph::find(ElementKind kind, std::string_view id) const {
  auto idx = kind == ElementKind::Node ? find_node(id) : find_edge(id);
  if (!idx) return std::nullopt;
  return ElementRef{kind, *idx};
}

std::string const& MapGraph::id_of(ElementRef ref) const {
  return ref.kind == ElementKind::Node ? nodes.at(ref.index).id : edges.at(ref.index).id;
}

void MapGraph::validate() const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    auto const& n = nodes[i];
    if (i > 0 && !(nodes[i - 1].id < n.id)) {
      fail(ErrorKind::Build, "node ids unsorted or duplicated at '" + n.id + "'");
    }
    if (!ring_ok(n.polygon)) fail(ErrorKind::Build, "node '" + n.id + "' has a degenerate polygon");
    if (n.r < 0) fail(ErrorKind::Build, "node '" + n.id + "' has negative ride count");
    for (std::size_t t = 0; t < kLabeledTypeCount; ++t) {
      if (n.s[t] < 0 || n.n[t] < 0) fail(ErrorKind::Build, "node '" + n.id + "' has negative counts");
    }
  }
  for (std::size_t i = 0; i < edges.size(); ++i) {
    auto const& e = edges[i];
    if (i > 0 && !(edges[i - 1].id < e.id)) {
      fail(ErrorKind::Build, "edge ids unsorted or duplicated at '" + e.id + "'");
    }
    if ((e.from && *e.from >= nodes.size()) || (e.to && *e.to >= nodes.size())) {
      fail(ErrorKind::Build, "edge '" + e.id + "' references a missing node");
    }
    if (!(e.length_m > 0.0) || !std::isfinite(e.length_m)) {
      fail(ErrorKind::Build, "edge '" + e.id + "' has non-positive length");
    }
    if (e.centerline.size() < 2) fail(ErrorKind::Build, "edge '" + e.id + "' has no centerline");
    if (!ring_ok(e.polygon)) fail(ErrorKind::Build, "edge '" + e.id + "' has a degenerate polygon");
    for (int d = 0; d < 2; ++d) {
      if (e.r[d] < 0) fail(ErrorKind::Build, "edge '" + e.id + "' has negative ride count");
      for (std::size_t t = 0; t < kLabeledTypeCount; ++t) {
        if (e.s[t][d] < 0 || e.n[t][d] < 0) {
          fail(ErrorKind::Build, "edge '" + e.id + "' has negative counts");
        }
      }
    }
  }
}

MapExtract parse_extract(std::string_view jsonl) {
  MapExtract extract;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    auto end = jsonl.find('\n', pos);
    if (end == std::string_view::npos) end = jsonl.size();
    auto line = jsonl.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      auto const j = json::parse(line);
      auto const type = j.at("type").get<std::string>();
      if (type == "way") {
        ExtractWay way;
        way.id = j.at("id").get<std::string>();
        for (auto const& c : j.at("coords")) way.coords.push_back(read_point(c));
        if (j.contains("from") && !j["from"].is_null()) way.from_ref = j["from"].get<std::string>();
        if (j.contains("to") && !j["to"].is_null()) way.to_ref = j["to"].get<std::string>();
        if (way.coords.size() < 2) throw std::invalid_argument("way needs at least two coordinates");
        extract.ways.push_back(std::move(way));
      } else if (type == "junction") {
        ExtractJunction junction;
        junction.id = j.at("id").get<std::string>();
        junction.location = read_point(json::array({j.at("lat"), j.at("lon")}));
        if (j.contains("arity") && !j["arity"].is_null()) junction.arity = j["arity"].get<int>();
        extract.junctions.push_back(std::move(junction));
      } else {
        throw std::invalid_argument("unknown record type '" + type + "'");
      }
    } catch (Error const&) {
      throw;
    } catch (std::exception const& e) {
      fail(ErrorKind::Format, "extract line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return extract;
}

std::string serialize_extract(MapExtract const& extract) {
  std::string out;
  for (auto const& junction : extract.junctions) {
    json j = {{"type", "junction"},
              {"id", junction.id},
              {"lat", junction.location.lat},
              {"lon", junction.location.lon}};
    if (junction.arity) j["arity"] = *junction.arity;
    out += j.dump() + "\n";
  }
  for (auto const& way : extract.ways) {
    json coords = json::array();
    for (auto const& p : way.coords) coords.push_back({p.lat, p.lon});
    json j = {{"type", "way"}, {"id", way.id}, {"coords", coords}};
    j["from"] = way.from_ref ? json(*way.from_ref) : json(nullptr);
    j["to"] = way.to_ref ? json(*way.to_ref) : json(nullptr);
    out += j.dump() + "\n";
  }
  return out;
}

MapGraph build_graph(MapExtract const& extract, BuildParams const& params) {
  if (!(params.buffer_width_m > 0.0) || !(params.vertex_match_m >= 0.0)) {
    fail(ErrorKind::InvalidArgument, "buffer width must be positive");
  }
  if (extract.ways.empty()) {
    fail(ErrorKind::Build, "map extract contains no ways");
  }

  std::unordered_map<std::string, std::size_t> junction_index;
  for (std::size_t i = 0; i < extract.junctions.size(); ++i) {
    if (!junction_index.emplace(extract.junctions[i].id, i).second) {
      fail(ErrorKind::Build, "duplicate junction id '" + extract.junctions[i].id + "'");
    }
  }
  std::set<std::string> way_ids;
  std::vector<std::string> dangling;
  for (auto const& way : extract.ways) {
    if (!way_ids.insert(way.id).second) fail(ErrorKind::Build, "duplicate way id '" + way.id + "'");
    if (way.coords.size() < 2) fail(ErrorKind::Build, "way '" + way.id + "' has fewer than two points");
    for (auto const* ref : {&way.from_ref, &way.to_ref}) {
      if (*ref && !junction_index.contains(**ref)) dangling.push_back(way.id + "->" + **ref);
    }
  }
  if (!dangling.empty()) {
    std::string msg = "dangling way references:";
    for (auto const& d : dangling) msg += " " + d;
    fail(ErrorKind::Build, msg);
  }

  double min_lat = 90, max_lat = -90, min_lon = 180, max_lon = -180;
  for (auto const& way : extract.ways) {
    for (auto const& p : way.coords) {
      min_lat = std::min(min_lat, p.lat);
      max_lat = std::max(max_lat, p.lat);
      min_lon = std::min(min_lon, p.lon);
      max_lon = std::max(max_lon, p.lon);
    }
  }
  MapGraph graph;
  graph.region = params.region;
  graph.buffer_width_m = params.buffer_width_m;
  graph.origin = {(min_lat + max_lat) / 2.0, (min_lon + max_lon) / 2.0};
  LocalProjection const proj(graph.origin);

  // Bucket junctions on a planar grid for vertex matching.
  double const cell = std::max(params.vertex_match_m, 1.0);
  auto cell_of = [&](LocalXY const& xy) {
    return std::pair<long, long>{static_cast<long>(std::floor(xy.x / cell)),
                                 static_cast<long>(std::floor(xy.y / cell))};
  };
  std::map<std::pair<long, long>, std::vector<std::size_t>> grid;
  std::vector<LocalXY> junction_xy;
  for (std::size_t i = 0; i < extract.junctions.size(); ++i) {
    junction_xy.push_back(proj.to_local(extract.junctions[i].location));
    grid[cell_of(junction_xy.back())].push_back(i);
  }
  auto match_vertex = [&](GeoPoint const& p) -> std::optional<std::size_t> {
    auto const xy = proj.to_local(p);
    auto const [cx, cy] = cell_of(xy);
    std::optional<std::size_t> best;
    double best_d = params.vertex_match_m;
    for (long dx = -1; dx <= 1; ++dx) {
      for (long dy = -1; dy <= 1; ++dy) {
        auto it = grid.find({cx + dx, cy + dy});
        if (it == grid.end()) continue;
        for (auto j : it->second) {
          double const d = std::hypot(xy.x - junction_xy[j].x, xy.y - junction_xy[j].y);
          if (d <= best_d && (!best || d < best_d || j < *best)) {
            best = j;
            best_d = d;
          }
        }
      }
    }
    return best;
  };

  // Junction occupied by each way vertex, and street arms per junction.
  std::vector<std::vector<std::optional<std::size_t>>> vertex_junction(extract.ways.size());
  std::vector<int> arms(extract.junctions.size(), 0);
  for (std::size_t w = 0; w < extract.ways.size(); ++w) {
    auto const& way = extract.ways[w];
    auto& vj = vertex_junction[w];
    vj.resize(way.coords.size());
    for (std::size_t k = 0; k < way.coords.size(); ++k) {
      bool const first = k == 0;
      bool const last = k + 1 == way.coords.size();
      if (first && way.from_ref) {
        vj[k] = junction_index.at(*way.from_ref);
      } else if (last && way.to_ref) {
        vj[k] = junction_index.at(*way.to_ref);
      } else {
        vj[k] = match_vertex(way.coords[k]);
      }
      if (vj[k]) arms[*vj[k]] += (first || last) ? 1 : 2;
    }
  }

  std::vector<std::size_t> node_junctions;
  for (std::size_t j = 0; j < extract.junctions.size(); ++j) {
    if (std::max(arms[j], extract.junctions[j].arity.value_or(0)) > 2) node_junctions.push_back(j);
  }
  std::sort(node_junctions.begin(), node_junctions.end(), [&](std::size_t a, std::size_t b) {
    return extract.junctions[a].id < extract.junctions[b].id;
  });
  std::unordered_map<std::size_t, std::size_t> node_of_junction;
  for (std::size_t i = 0; i < node_junctions.size(); ++i) {
    auto const& junction = extract.junctions[node_junctions[i]];
    node_of_junction[node_junctions[i]] = i;
    Intersection node;
    node.id = junction.id;
    node.center = junction.location;
    node.polygon = planar::unproject_ring(
        proj, planar::disc(planar::project(proj, junction.location), params.buffer_width_m));
    graph.nodes.push_back(std::move(node));
  }

  for (std::size_t w = 0; w < extract.ways.size(); ++w) {
    auto const& way = extract.ways[w];
    auto const& vj = vertex_junction[w];
    auto node_at = [&](std::size_t k) -> std::optional<std::size_t> {
      if (!vj[k]) return std::nullopt;
      auto it = node_of_junction.find(*vj[k]);
      if (it == node_of_junction.end()) return std::nullopt;
      return it->second;
    };
    std::size_t start = 0;
    int part = 0;
    for (std::size_t k = 1; k < way.coords.size(); ++k) {
      bool const last = k + 1 == way.coords.size();
      if (!last && !node_at(k)) continue;
      StreetSegment edge;
      edge.id = way.id + ":" + std::to_string(part++);
      edge.from = node_at(start);
      edge.to = node_at(k);
      for (std::size_t v = start; v <= k; ++v) {
        auto const node = node_at(v);
        edge.centerline.push_back(node ? graph.nodes[*node].center : way.coords[v]);
      }
      edge.length_m = polyline_length_m(edge.centerline);
      if (!(edge.length_m > 0.0)) {
        fail(ErrorKind::Build, "street segment '" + edge.id + "' has zero length");
      }
      auto const poly =
          planar::buffer_line(planar::project(proj, edge.centerline), params.buffer_width_m / 2.0);
      edge.polygon = planar::unproject_ring(proj, poly);
      graph.edges.push_back(std::move(edge));
      start = k;
    }
  }
  std::sort(graph.edges.begin(), graph.edges.end(),
            [](StreetSegment const& a, StreetSegment const& b) { return a.id < b.id; });
  graph.validate();
  return graph;
}

}  // namespace simra
