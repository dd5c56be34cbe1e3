// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace hoopstat {

enum class EntityKind { Team, Player };

std::string_view to_string(EntityKind kind);
EntityKind parse_entity_kind(std::string_view s);

// Attempts and makes per region for one entity-season.
struct RegionCounts {
  std::string entity_id;
  int season = 0;
  std::vector<std::int64_t> attempts;
  std::vector<std::int64_t> makes;

  std::size_t num_regions() const { return attempts.size(); }
  std::int64_t total_attempts() const;
  std::int64_t total_makes() const;
  // "<entity_id>_<season>", used for labels and file names.
  std::string label() const;

  friend bool operator==(const RegionCounts&, const RegionCounts&) = default;
};

// Throws DataError if makes/attempts are inconsistent.
void validate(const RegionCounts& row);

struct Dataset {
  EntityKind kind = EntityKind::Team;
  std::vector<RegionCounts> rows;

  std::size_t size() const { return rows.size(); }
  std::size_t num_regions() const { return rows.empty() ? 0 : rows.front().num_regions(); }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Checks the Dataset invariants: nonempty, unique keys, equal K, valid counts.
void validate(const Dataset& data);

// Event-level CSV: `entity_id,season,region,made`.
Dataset parse_shot_events(std::istream& in, EntityKind kind = EntityKind::Team);

// Aggregate CSV: `entity_id,season,region,attempts,makes`.
Dataset parse_aggregates(std::istream& in, EntityKind kind = EntityKind::Team);

// Writes the aggregate CSV form, one line per (entity, season, region).
void write_aggregates(std::ostream& out, const Dataset& data);

struct TopNResult {
  Dataset data;
  // Set when n exceeded the available row count.
  bool truncated = false;
};

// The n entities with the most total attempts, ties broken by entity_id.
// Restricted to `season` when given; otherwise the dataset must hold a
// single season.
TopNResult top_n_shot_takers(const Dataset& data, std::size_t n,
                             std::optional<int> season = std::nullopt);

// SHA-256 of the canonical aggregate serialization.
std::string fingerprint(const Dataset& data);

}  // namespace hoopstat
