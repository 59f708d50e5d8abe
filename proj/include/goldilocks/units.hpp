#pragma once

#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

namespace goldilocks {

// Internal convention: hbar = 1, all energies and rates in rad/ps, times in ps.
// Spectroscopic wavenumbers convert via E/hbar = 2*pi*c*nu with c in cm/ps.

inline constexpr double kSpeedOfLightCmPerPs = 0.0299792458;
inline constexpr double kCm1ToRadPs = 2.0 * std::numbers::pi * kSpeedOfLightCmPerPs;

enum class Unit { RadPerPs, WaveNumber };

inline double to_rad_per_ps(double value, Unit unit) {
    return unit == Unit::WaveNumber ? value * kCm1ToRadPs : value;
}

/// Accepts the spellings used in files ("cm-1", "rad/ps") and on the CLI ("rad-ps").
inline Unit parse_unit(std::string_view tag) {
    if (tag == "cm-1" || tag == "cm^-1") return Unit::WaveNumber;
    if (tag == "rad/ps" || tag == "rad-ps") return Unit::RadPerPs;
    throw std::invalid_argument("unknown unit tag '" + std::string(tag) +
                                "' (expected cm-1 or rad/ps)");
}

inline const char* unit_name(Unit unit) {
    return unit == Unit::WaveNumber ? "cm-1" : "rad/ps";
}

} // namespace goldilocks
