#include "simra/geo.hpp"

#include <algorithm>
#include <numbers>

namespace simra {

namespace {
constexpr double kDegToRad = std::numbers::pi / 180.0;
}

bool is_valid(GeoPoint const& p) {
  return std::isfinite(p.lat) && std::isfinite(p.lon) && p.lat >= -90.0 &&
         p.lat <= 90.0 && p.lon >= -180.0 && p.lon <= 180.0;
}

double haversine_m(GeoPoint const& a, GeoPoint const& b) {
  double const phi1 = a.lat * kDegToRad;
  double const phi2 = b.lat * kDegToRad;
  double const dphi = (b.lat - a.lat) * kDegToRad;
  double const dlambda = (b.lon - a.lon) * kDegToRad;
  double const s1 = std::sin(dphi / 2.0);
  double const s2 = std::sin(dlambda / 2.0);
  double const h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

double polyline_length_m(std::span<GeoPoint const> points) {
  double total = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    total += haversine_m(points[i - 1], points[i]);
  }
  return total;
}

LocalProjection::LocalProjection(GeoPoint origin)
    : origin_(origin), cos_lat_(std::cos(origin.lat * kDegToRad)) {}

LocalXY LocalProjection::to_local(GeoPoint const& p) const {
  return {(p.lon - origin_.lon) * kDegToRad * kEarthRadiusM * cos_lat_,
          (p.lat - origin_.lat) * kDegToRad * kEarthRadiusM};
}

GeoPoint LocalProjection::to_geo(LocalXY const& xy) const {
  return {origin_.lat + xy.y / (kDegToRad * kEarthRadiusM),
          origin_.lon + xy.x / (kDegToRad * kEarthRadiusM * cos_lat_)};
}

}  // namespace simra
