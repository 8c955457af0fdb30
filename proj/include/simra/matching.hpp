#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "simra/mapgraph.hpp"
#include "simra/ride.hpp"

namespace simra {

struct MatchConfig {
  double snap_radius_m = 25.0;
  double max_accuracy_m = 30.0;
};

// Graph element named by id, independent of any in-memory graph layout.
struct ElementKey {
  ElementKind kind = ElementKind::Node;
  std::string id;

  bool operator==(ElementKey const&) const = default;
};

struct TraversalEntry {
  ElementKey element;
  std::optional<int> direction;  // edges only
  TimestampMs enter_ts = 0;
  TimestampMs exit_ts = 0;

  bool operator==(TraversalEntry const&) const = default;
};

struct MatchedIncident {
  std::size_t incident_index = 0;
  ElementKey element;
  std::optional<int> direction;
  IncidentType type = IncidentType::Unlabeled;
  bool scary = false;

  bool operator==(MatchedIncident const&) const = default;
};

struct MatchedRide {
  std::string ride_id;
  std::vector<TraversalEntry> traversal;
  std::vector<MatchedIncident> incidents;
  double unmatched_point_fraction = 0.0;

  bool operator==(MatchedRide const&) const = default;
};

struct SnappedPoint {
  TimestampMs timestamp = 0;
  GeoPoint location;                  // after snapping
  std::optional<ElementRef> element;  // containing element, if any
  double snap_distance_m = 0.0;       // 0 when the fix was already inside
};

struct SmoothedTrace {
  std::vector<SnappedPoint> points;
  std::size_t unmatched = 0;
};

// Read-only planar view of a graph with a spatial index. Build once, share
// across matching threads.
class GraphIndex {
 public:
  explicit GraphIndex(MapGraph const& graph);
  ~GraphIndex();
  GraphIndex(GraphIndex&&) noexcept;
  GraphIndex& operator=(GraphIndex&&) noexcept;

  MapGraph const& graph() const { return *graph_; }

  /// Element whose polygon contains the point; nodes win over edges, then
  /// the smaller id.
  std::optional<ElementRef> containing(GeoPoint const& p) const;

  /// Snap a point: unchanged if contained, otherwise projected onto the
  /// centerline of the nearest element within `snap_radius_m`.
  SnappedPoint snap(GeoPoint const& p, double snap_radius_m) const;

  /// Arc-length position of a point projected onto an edge's centerline.
  double arc_position(std::size_t edge, GeoPoint const& p) const;

 private:
  struct Impl;
  MapGraph const* graph_;
  std::unique_ptr<Impl> impl_;
};

/// Drops fixes with accuracy above the cutoff and snaps the rest. Throws
/// InsufficientData when no fix survives.
SmoothedTrace smooth_trace(std::span<RideSample const> samples, GraphIndex const& index,
                           MatchConfig const& cfg = {});

MatchedRide match_ride(Ride const& ride, GraphIndex const& index, MatchConfig const& cfg = {});

/// Adds ride and incident counts from matched rides. All references are
/// checked before anything is modified; unknown elements raise Consistency.
void populate(MapGraph& graph, std::span<MatchedRide const> matched);

}  // namespace simra
