#pragma once

#include <memory>
#include <span>
#include <string>

#include "simra/ride.hpp"

namespace simra {

// Maps UTC timestamps to local hour-of-day for an IANA zone.
class RegionClock {
 public:
  explicit RegionClock(std::string const& iana_zone);

  int local_hour(TimestampMs ts) const;
  std::string const& zone() const { return zone_; }

 private:
  struct Impl;
  std::string zone_;
  std::shared_ptr<Impl const> impl_;
};

struct WaitParams {
  double speed_ms = 1.0;  // below this a fix-to-fix interval counts as stationary
  double min_s = 3.0;     // shortest stationary span that counts as waiting
};

/// Statistics contributed by a single ride.
ProfileStats ride_stats(Ride const& ride, RegionClock const& clock, WaitParams const& params = {});

/// Sum of ride_stats over all rides, computed on up to `jobs` threads. The
/// result does not depend on `jobs`.
ProfileStats compute_stats(std::span<Ride const> rides, RegionClock const& clock,
                           WaitParams const& params = {}, unsigned jobs = 1);

}  // namespace simra
