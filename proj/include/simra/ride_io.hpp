#pragma once

#include <string>
#include <string_view>

#include "simra/ride.hpp"

namespace simra {

inline constexpr std::string_view kRideMagic = "simra-spec v1";
inline constexpr std::string_view kBlockSeparator = "=========================";

/// Parses a ride file. Format errors carry the offending line number;
/// semantic problems (timestamp order, unknown incident codes, incidents
/// outside the ride span) raise Validation.
Ride parse_ride(std::string_view bytes);

/// Canonical rendering: fixed column order, 6 decimals for coordinates,
/// 3 for acceleration and orientation, 2 for accuracy, '\n' line endings.
std::string serialize_ride(Ride const& ride);

Profile parse_profile(std::string_view bytes);
std::string serialize_profile(Profile const& profile);

Ride load_ride_file(std::string const& path);
void save_ride_file(Ride const& ride, std::string const& path);

}  // namespace simra
