#include "simra/report.hpp"

#include <map>

#include "json.hpp"
#include "simra/error.hpp"

namespace simra {

using nlohmann::json;

namespace {

constexpr std::string_view kReportFormat = "simra-report v1";
constexpr int kRawScale = 2;
constexpr int kAdjustedScale = 4;

json opt_exact(std::optional<Rational> const& v) { return v ? json(exact_string(*v)) : json(nullptr); }

json opt_display(std::optional<Rational> const& v, int scale) {
  return v ? json(format_scaled(*v, scale)) : json(nullptr);
}

json matrix_json(ScoreMatrix const& m, int scale) {
  json cells = json::array();
  json by_direction = json::array();
  json by_direction_display = json::array();
  for (std::size_t t = 0; t < kLabeledTypeCount; ++t) {
    json row = json::array();
    for (int d = 0; d < m.columns; ++d) row.push_back(opt_exact(m.cells[t][d]));
    cells.push_back(std::move(row));
    by_direction.push_back(exact_string(m.by_direction[t]));
    by_direction_display.push_back(format_scaled(m.by_direction[t], scale));
  }
  json by_category = json::array();
  json by_category_display = json::array();
  for (int d = 0; d < m.columns; ++d) {
    by_category.push_back(opt_exact(m.by_category[d]));
    by_category_display.push_back(opt_display(m.by_category[d], scale));
  }
  return {{"cells", cells},
          {"by_direction", by_direction},
          {"by_direction_display", by_direction_display},
          {"by_category", by_category},
          {"by_category_display", by_category_display},
          {"total", exact_string(m.total)},
          {"total_display", format_scaled(m.total, scale)}};
}

json ring_json(std::vector<GeoPoint> const& ring) {
  json out = json::array();
  for (auto const& p : ring) out.push_back(json::array({p.lat, p.lon}));
  return out;
}

char const* kind_name(ElementKind k) { return k == ElementKind::Node ? "node" : "edge"; }

json hotspot_list(std::vector<HotspotEntry> const& list, bool adjusted_edges) {
  json out = json::array();
  for (auto const& e : list) {
    int const scale = adjusted_edges && e.kind == ElementKind::Edge ? kAdjustedScale : kRawScale;
    out.push_back({{"rank", e.rank},
                   {"kind", kind_name(e.kind)},
                   {"id", e.id},
                   {"value", exact_string(e.value)},
                   {"display", format_scaled(e.value, scale)},
                   {"scale", scale},
                   {"total_rides", e.total_rides}});
  }
  return out;
}

json selection_json(Selection const& sel) {
  switch (sel.mode) {
    case SelectionMode::TopK:
      return {{"mode", "top_k"}, {"k", sel.k}};
    case SelectionMode::Threshold:
      return {{"mode", "threshold"}, {"threshold", exact_string(sel.threshold)}};
    case SelectionMode::All:
      break;
  }
  return {{"mode", "all"}};
}

}  // namespace

std::string build_report(MapGraph const& graph, GraphScores const& scores,
                         HotspotRanking const& ranking, ScoreConfig const& cfg) {
  json elements = json::array();
  for (auto const& s : scores.scores) {
    auto const ref = graph.find(s.kind, s.id);
    if (!ref) fail(ErrorKind::Consistency, "score for unknown element '" + s.id + "'");
    auto const& polygon = ref->kind == ElementKind::Node ? graph.nodes[ref->index].polygon
                                                         : graph.edges[ref->index].polygon;
    json e = {{"kind", kind_name(s.kind)},
              {"id", s.id},
              {"total_rides", s.total_rides},
              {"partial", s.partial},
              {"score", matrix_json(s.score, kRawScale)},
              {"polygon", ring_json(polygon)}};
    if (s.kind == ElementKind::Edge) e["length_m"] = s.length_m;
    if (s.length_adjusted) e["length_adjusted"] = matrix_json(*s.length_adjusted, kAdjustedScale);
    elements.push_back(std::move(e));
  }
  json hotspots = {{"separate", ranking.separate}};
  if (ranking.separate) {
    hotspots["nodes"] = hotspot_list(ranking.nodes, true);
    hotspots["edges"] = hotspot_list(ranking.edges, true);
  } else {
    hotspots["combined"] = hotspot_list(ranking.combined, false);
  }
  json doc = {{"format", kReportFormat},
              {"region", graph.region},
              {"config",
               {{"alpha", exact_string(cfg.alpha)},
                {"min_rides", cfg.min_rides},
                {"length_adjusted", cfg.length_adjusted},
                {"pool_directions", cfg.pool_directions},
                {"selection", selection_json(cfg.selection)}}},
              {"elements", elements},
              {"unscored", scores.unscored},
              {"hotspots", hotspots}};
  return doc.dump(1) + "\n";
}

std::string hotspots_geojson(std::string_view report_json) {
  json features = json::array();
  try {
    auto const doc = json::parse(report_json);
    if (doc.at("format").get<std::string>() != kReportFormat) {
      throw std::invalid_argument("unsupported report format");
    }
    std::map<std::pair<std::string, std::string>, json const*> polygons;
    for (auto const& e : doc.at("elements")) {
      polygons[{e.at("kind").get<std::string>(), e.at("id").get<std::string>()}] = &e.at("polygon");
    }
    auto const& hotspots = doc.at("hotspots");
    for (auto const* list : {"combined", "nodes", "edges"}) {
      if (!hotspots.contains(list)) continue;
      for (auto const& h : hotspots.at(list)) {
        auto const key = std::pair{h.at("kind").get<std::string>(), h.at("id").get<std::string>()};
        auto const it = polygons.find(key);
        if (it == polygons.end()) throw std::invalid_argument("hotspot '" + key.second + "' has no element");
        json ring = json::array();
        for (auto const& p : *it->second) ring.push_back(json::array({p.at(1), p.at(0)}));
        json props = h;
        props["list"] = list;
        features.push_back({{"type", "Feature"},
                            {"geometry", {{"type", "Polygon"}, {"coordinates", json::array({ring})}}},
                            {"properties", props}});
      }
    }
  } catch (Error const&) {
    throw;
  } catch (std::exception const& e) {
    fail(ErrorKind::Format, std::string("report: ") + e.what());
  }
  json out = {{"type", "FeatureCollection"}, {"features", features}};
  return out.dump() + "\n";
}

}  // namespace simra
