#include "simra/matching.hpp"

#include <boost/geometry/index/rtree.hpp>
#include <cmath>

#include "planar.hpp"
#include "simra/error.hpp"

namespace simra {

namespace bgi = boost::geometry::index;
namespace bg = boost::geometry;

struct GraphIndex::Impl {
  using Value = std::pair<planar::Box, ElementRef>;

  LocalProjection proj;
  std::vector<planar::Polygon> node_polys;
  std::vector<planar::Polygon> edge_polys;
  std::vector<planar::Line> centerlines;
  std::vector<planar::Point> node_centers;
  bgi::rtree<Value, bgi::quadratic<16>> tree;

  planar::Polygon const& polygon(ElementRef ref) const {
    return ref.kind == ElementKind::Node ? node_polys[ref.index] : edge_polys[ref.index];
  }
};

GraphIndex::GraphIndex(MapGraph const& graph) : graph_(&graph), impl_(std::make_unique<Impl>()) {
  impl_->proj = LocalProjection(graph.origin);
  std::vector<Impl::Value> values;
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    impl_->node_polys.push_back(planar::project_ring(impl_->proj, graph.nodes[i].polygon));
    impl_->node_centers.push_back(planar::project(impl_->proj, graph.nodes[i].center));
    values.emplace_back(bg::return_envelope<planar::Box>(impl_->node_polys.back()),
                        ElementRef{ElementKind::Node, i});
  }
  for (std::size_t i = 0; i < graph.edges.size(); ++i) {
    impl_->edge_polys.push_back(planar::project_ring(impl_->proj, graph.edges[i].polygon));
    impl_->centerlines.push_back(planar::project(impl_->proj, graph.edges[i].centerline));
    values.emplace_back(bg::return_envelope<planar::Box>(impl_->edge_polys.back()),
                        ElementRef{ElementKind::Edge, i});
  }
  impl_->tree = decltype(impl_->tree)(values.begin(), values.end());
}

GraphIndex::~GraphIndex() = default;
GraphIndex::GraphIndex(GraphIndex&&) noexcept = default;
GraphIndex& GraphIndex::operator=(GraphIndex&&) noexcept = default;

std::optional<ElementRef> GraphIndex::containing(GeoPoint const& p) const {
  auto const pt = planar::project(impl_->proj, p);
  std::optional<ElementRef> best;
  for (auto it = impl_->tree.qbegin(bgi::intersects(pt)); it != impl_->tree.qend(); ++it) {
    auto const ref = it->second;
    if (best && !(ref < *best)) continue;
    if (bg::covered_by(pt, impl_->polygon(ref))) best = ref;
  }
  return best;
}

SnappedPoint GraphIndex::snap(GeoPoint const& p, double snap_radius_m) const {
  SnappedPoint out;
  out.location = p;
  if (auto inside = containing(p)) {
    out.element = inside;
    return out;
  }
  auto const pt = planar::project(impl_->proj, p);
  planar::Box const query{{pt.x() - snap_radius_m, pt.y() - snap_radius_m},
                          {pt.x() + snap_radius_m, pt.y() + snap_radius_m}};
  std::optional<ElementRef> nearest;
  double nearest_d = std::numeric_limits<double>::infinity();
  for (auto it = impl_->tree.qbegin(bgi::intersects(query)); it != impl_->tree.qend(); ++it) {
    auto const ref = it->second;
    double const d = bg::distance(pt, impl_->polygon(ref));
    if (d < nearest_d || (d == nearest_d && nearest && ref < *nearest)) {
      nearest = ref;
      nearest_d = d;
    }
  }
  if (!nearest || nearest_d > snap_radius_m) {
    return out;
  }
  planar::Point foot;
  if (nearest->kind == ElementKind::Edge) {
    foot = planar::project_onto(impl_->centerlines[nearest->index], pt).foot;
  } else {
    foot = impl_->node_centers[nearest->index];
  }
  out.location = impl_->proj.to_geo({foot.x(), foot.y()});
  out.snap_distance_m = std::hypot(pt.x() - foot.x(), pt.y() - foot.y());
  // Re-resolve: the foot may fall inside a node disc that owns the spot.
  out.element = containing(out.location);
  if (!out.element) out.element = nearest;
  return out;
}

double GraphIndex::arc_position(std::size_t edge, GeoPoint const& p) const {
  return planar::project_onto(impl_->centerlines.at(edge), planar::project(impl_->proj, p)).arc_length;
}

SmoothedTrace smooth_trace(std::span<RideSample const> samples, GraphIndex const& index,
                           MatchConfig const& cfg) {
  SmoothedTrace trace;
  for (auto const& s : samples) {
    if (!s.location || s.accuracy_m.value_or(0.0) > cfg.max_accuracy_m) continue;
    auto snapped = index.snap(*s.location, cfg.snap_radius_m);
    snapped.timestamp = s.timestamp;
    if (!snapped.element) ++trace.unmatched;
    trace.points.push_back(snapped);
  }
  if (trace.points.empty()) {
    fail(ErrorKind::InsufficientData, "empty trace: no GPS fix passes the accuracy cutoff");
  }
  return trace;
}

namespace {

struct Entry {
  ElementRef element;
  std::optional<int> direction;
  TimestampMs enter_ts = 0;
  TimestampMs exit_ts = 0;
  std::size_t first_point = 0;  // indices into the matched points
  std::size_t last_point = 0;
};

std::optional<std::size_t> shared_node(StreetSegment const& a, StreetSegment const& b) {
  for (auto const& x : {a.from, a.to}) {
    if (!x) continue;
    if (x == b.from || x == b.to) return x;
  }
  return std::nullopt;
}

}  // namespace

MatchedRide match_ride(Ride const& ride, GraphIndex const& index, MatchConfig const& cfg) {
  auto const& graph = index.graph();
  MatchedRide matched;
  matched.ride_id = ride.ride_id;

  std::vector<SnappedPoint> points;
  std::size_t total_fixes = 0;
  try {
    auto trace = smooth_trace(ride.samples, index, cfg);
    total_fixes = trace.points.size();
    for (auto& p : trace.points) {
      if (p.element) points.push_back(p);
    }
  } catch (Error const& e) {
    if (e.kind() != ErrorKind::InsufficientData) throw;
  }
  matched.unmatched_point_fraction =
      total_fixes == 0 ? 1.0
                       : static_cast<double>(total_fixes - points.size()) / static_cast<double>(total_fixes);

  std::vector<Entry> entries;
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto const& p = points[i];
    if (!entries.empty() && entries.back().element == *p.element) {
      entries.back().exit_ts = p.timestamp;
      entries.back().last_point = i;
      continue;
    }
    // Two consecutive edges meeting at a node: the ride crossed it even if
    // no fix landed inside its polygon.
    if (!entries.empty() && entries.back().element.kind == ElementKind::Edge &&
        p.element->kind == ElementKind::Edge) {
      auto const node = shared_node(graph.edges[entries.back().element.index], graph.edges[p.element->index]);
      if (node) {
        Entry gap;
        gap.element = {ElementKind::Node, *node};
        gap.enter_ts = entries.back().exit_ts;
        gap.exit_ts = p.timestamp;
        gap.first_point = gap.last_point = entries.back().last_point;
        entries.push_back(gap);
      }
    }
    entries.push_back({*p.element, std::nullopt, p.timestamp, p.timestamp, i, i});
  }

  for (std::size_t k = 0; k < entries.size(); ++k) {
    auto& entry = entries[k];
    if (entry.element.kind != ElementKind::Edge) continue;
    auto const& edge = graph.edges[entry.element.index];
    bool const loop = edge.from && edge.from == edge.to;
    auto node_before = k > 0 && entries[k - 1].element.kind == ElementKind::Node
                           ? std::optional<std::size_t>(entries[k - 1].element.index)
                           : std::nullopt;
    auto node_after = k + 1 < entries.size() && entries[k + 1].element.kind == ElementKind::Node
                          ? std::optional<std::size_t>(entries[k + 1].element.index)
                          : std::nullopt;
    if (!loop && node_before && (node_before == edge.from || node_before == edge.to)) {
      entry.direction = node_before == edge.from ? 0 : 1;
    } else if (!loop && node_after && (node_after == edge.to || node_after == edge.from)) {
      entry.direction = node_after == edge.to ? 0 : 1;
    } else {
      // Progress of the projections along the centerline; widen to the
      // neighbouring fixes when the entry holds a single point.
      auto first = entry.first_point;
      auto last = entry.last_point;
      if (first == last) {
        if (first > 0) --first;
        if (last + 1 < points.size()) ++last;
      }
      double const delta = index.arc_position(entry.element.index, points[last].location) -
                           index.arc_position(entry.element.index, points[first].location);
      entry.direction = delta < 0.0 ? 1 : 0;
    }
  }

  for (auto const& entry : entries) {
    matched.traversal.push_back(
        {{entry.element.kind, graph.id_of(entry.element)}, entry.direction, entry.enter_ts, entry.exit_ts});
  }

  for (std::size_t i = 0; i < ride.incidents.size(); ++i) {
    auto const& incident = ride.incidents[i];
    auto const snapped = index.snap(incident.location, cfg.snap_radius_m);
    if (!snapped.element) continue;
    // Traversal entry on the same element: the one spanning the incident
    // time, else the nearest in time.
    std::optional<std::size_t> chosen;
    TimestampMs chosen_gap = 0;
    for (std::size_t k = 0; k < entries.size(); ++k) {
      if (entries[k].element != *snapped.element) continue;
      TimestampMs gap = 0;
      if (incident.timestamp < entries[k].enter_ts) gap = entries[k].enter_ts - incident.timestamp;
      if (incident.timestamp > entries[k].exit_ts) gap = incident.timestamp - entries[k].exit_ts;
      if (!chosen || gap < chosen_gap) {
        chosen = k;
        chosen_gap = gap;
      }
    }
    if (!chosen) continue;
    matched.incidents.push_back({i,
                                 {snapped.element->kind, graph.id_of(*snapped.element)},
                                 entries[*chosen].direction,
                                 incident.type,
                                 incident.scary});
  }
  return matched;
}

void populate(MapGraph& graph, std::span<MatchedRide const> matched) {
  struct Resolved {
    ElementRef ref;
    int direction = 0;
  };
  auto resolve = [&](ElementKey const& key, std::optional<int> direction,
                     std::string const& ride_id) -> Resolved {
    auto ref = graph.find(key.kind, key.id);
    if (!ref) {
      fail(ErrorKind::Consistency, "ride " + ride_id + " references unknown element '" + key.id + "'");
    }
    if (key.kind == ElementKind::Edge && (!direction || (*direction != 0 && *direction != 1))) {
      fail(ErrorKind::Consistency, "ride " + ride_id + " has no valid direction on edge '" + key.id + "'");
    }
    return {*ref, direction.value_or(0)};
  };

  // Resolve everything first so a bad record leaves the graph untouched.
  std::vector<Resolved> rides;
  struct IncidentUpdate {
    Resolved at;
    std::size_t row;
    bool scary;
  };
  std::vector<IncidentUpdate> incidents;
  for (auto const& m : matched) {
    for (auto const& entry : m.traversal) rides.push_back(resolve(entry.element, entry.direction, m.ride_id));
    for (auto const& inc : m.incidents) {
      if (inc.type == IncidentType::Unlabeled) continue;
      bool traversed = false;
      for (auto const& entry : m.traversal) traversed = traversed || entry.element == inc.element;
      if (!traversed) {
        fail(ErrorKind::Consistency, "ride " + m.ride_id + " has an incident on '" + inc.element.id +
                                         "' without traversing it");
      }
      incidents.push_back({resolve(inc.element, inc.direction, m.ride_id), type_row(inc.type), inc.scary});
    }
  }

  for (auto const& r : rides) {
    if (r.ref.kind == ElementKind::Node) {
      ++graph.nodes[r.ref.index].r;
    } else {
      ++graph.edges[r.ref.index].r[static_cast<std::size_t>(r.direction)];
    }
  }
  for (auto const& u : incidents) {
    auto const d = static_cast<std::size_t>(u.at.direction);
    if (u.at.ref.kind == ElementKind::Node) {
      auto& node = graph.nodes[u.at.ref.index];
      ++(u.scary ? node.s : node.n)[u.row];
    } else {
      auto& edge = graph.edges[u.at.ref.index];
      ++(u.scary ? edge.s : edge.n)[u.row][d];
    }
  }
}

}  // namespace simra
