#include "simra/profile_stats.hpp"

#include <absl/time/time.h>

#include <vector>

#include "simra/error.hpp"
#include "simra/privacy.hpp"
#include "simra/util.hpp"

namespace simra {

struct RegionClock::Impl {
  absl::TimeZone tz;
};

RegionClock::RegionClock(std::string const& iana_zone) : zone_(iana_zone) {
  auto impl = std::make_shared<Impl>();
  if (!absl::LoadTimeZone(iana_zone, &impl->tz)) {
    fail(ErrorKind::InvalidArgument, "unknown time zone '" + iana_zone + "'");
  }
  impl_ = std::move(impl);
}

int RegionClock::local_hour(TimestampMs ts) const {
  auto const t = absl::FromUnixMillis(ts);
  return impl_->tz.At(t).cs.hour();
}

ProfileStats ride_stats(Ride const& ride, RegionClock const& clock, WaitParams const& params) {
  ProfileStats stats;
  if (ride.samples.empty()) {
    return stats;
  }
  stats.ride_duration_ms = ride.end_ts() - ride.start_ts();
  for (auto const& inc : ride.incidents) {
    if (inc.labeled()) ++stats.incident_count;
  }
  stats.ride_time_histogram[static_cast<std::size_t>(clock.local_hour(ride.start_ts()))] = 1;

  auto const fixes = usable_fixes(ride);
  auto const min_ms = params.min_s * 1000.0;
  std::optional<TimestampMs> span_start;
  TimestampMs span_end = 0;
  auto close_span = [&] {
    if (span_start && static_cast<double>(span_end - *span_start) >= min_ms) {
      stats.wait_duration_ms += span_end - *span_start;
    }
    span_start.reset();
  };
  for (std::size_t k = 1; k < fixes.size(); ++k) {
    auto const& a = ride.samples[fixes[k - 1]];
    auto const& b = ride.samples[fixes[k]];
    double const dt_s = static_cast<double>(b.timestamp - a.timestamp) / 1000.0;
    double const speed = haversine_m(*a.location, *b.location) / dt_s;
    if (speed < params.speed_ms) {
      if (!span_start) span_start = a.timestamp;
      span_end = b.timestamp;
    } else {
      close_span();
    }
  }
  close_span();
  return stats;
}

ProfileStats compute_stats(std::span<Ride const> rides, RegionClock const& clock,
                           WaitParams const& params, unsigned jobs) {
  std::vector<ProfileStats> partial(rides.size());
  parallel_for(rides.size(), jobs, [&](std::size_t i) {
    partial[i] = ride_stats(rides[i], clock, params);
  });
  ProfileStats total;
  for (auto const& p : partial) total.merge(p);
  return total;
}

}  // namespace simra
