#pragma once

#include <cmath>
#include <span>

namespace simra {

struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  bool operator==(GeoPoint const&) const = default;
};

bool is_valid(GeoPoint const& p);

constexpr double kEarthRadiusM = 6371008.8;

/// Great-circle distance in meters.
double haversine_m(GeoPoint const& a, GeoPoint const& b);

/// Sum of haversine distances between consecutive points.
double polyline_length_m(std::span<GeoPoint const> points);

// Planar coordinates in meters relative to a reference point.
struct LocalXY {
  double x = 0.0;  // east
  double y = 0.0;  // north
};

// Equirectangular projection around a fixed origin. Accurate to well under
// a meter over city-sized extents, which is all the matcher needs.
class LocalProjection {
 public:
  LocalProjection() = default;
  explicit LocalProjection(GeoPoint origin);

  LocalXY to_local(GeoPoint const& p) const;
  GeoPoint to_geo(LocalXY const& xy) const;
  GeoPoint origin() const { return origin_; }

 private:
  GeoPoint origin_;
  double cos_lat_ = 1.0;
};

}  // namespace simra
