// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

namespace hoopstat {

// Court regions in canonical order. Every count vector in the system is
// indexed by this order.
enum class Region : std::size_t { ATB = 0, LC3, RC3, ITP, MID, RA, FT };

inline constexpr std::size_t kNumRegions = 7;

inline constexpr std::array<Region, kNumRegions> kAllRegions = {
    Region::ATB, Region::LC3, Region::RC3, Region::ITP,
    Region::MID, Region::RA,  Region::FT};

inline constexpr std::array<std::string_view, kNumRegions> kRegionCodes = {
    "ATB", "LC3", "RC3", "ITP", "MID", "RA", "FT"};

inline constexpr std::array<int, kNumRegions> kRegionPoints = {3, 3, 3, 2, 2, 2, 1};

constexpr std::size_t index_of(Region r) { return static_cast<std::size_t>(r); }
constexpr std::string_view code_of(Region r) { return kRegionCodes[index_of(r)]; }
constexpr int point_value(Region r) { return kRegionPoints[index_of(r)]; }

// Case-sensitive lookup of a region code.
constexpr std::optional<Region> parse_region(std::string_view code) {
  for (std::size_t k = 0; k < kNumRegions; ++k) {
    if (kRegionCodes[k] == code) return kAllRegions[k];
  }
  return std::nullopt;
}

inline std::vector<int> default_point_values() {
  return {kRegionPoints.begin(), kRegionPoints.end()};
}

}  // namespace hoopstat
