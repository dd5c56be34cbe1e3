// Apache License, Version 2.0, refer to LICENSE.txt

#include "hoopstat/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <utility>

#include "hoopstat/errors.hpp"
#include "hoopstat/hash.hpp"
#include "hoopstat/region.hpp"

namespace hoopstat {

std::string_view to_string(EntityKind kind) {
  return kind == EntityKind::Team ? "team" : "player";
}

EntityKind parse_entity_kind(std::string_view s) {
  if (s == "team") return EntityKind::Team;
  if (s == "player") return EntityKind::Player;
  throw ConfigError("entity kind must be 'team' or 'player', got '" + std::string(s) + "'");
}

std::int64_t RegionCounts::total_attempts() const {
  return std::accumulate(attempts.begin(), attempts.end(), std::int64_t{0});
}

std::int64_t RegionCounts::total_makes() const {
  return std::accumulate(makes.begin(), makes.end(), std::int64_t{0});
}

std::string RegionCounts::label() const { return entity_id + "_" + std::to_string(season); }

void validate(const RegionCounts& row) {
  if (row.attempts.size() != row.makes.size()) {
    throw DataError(row.label() + ": attempts and makes have different lengths");
  }
  for (std::size_t k = 0; k < row.attempts.size(); ++k) {
    if (row.attempts[k] < 0 || row.makes[k] < 0) {
      throw DataError(row.label() + ": negative count in region " + std::to_string(k));
    }
    if (row.makes[k] > row.attempts[k]) {
      throw DataError(row.label() + ": makes exceed attempts in region " + std::to_string(k));
    }
  }
}

void validate(const Dataset& data) {
  if (data.rows.empty()) throw DataError("dataset has no rows");
  const std::size_t k = data.num_regions();
  if (k == 0) throw DataError("dataset has zero regions");
  std::set<std::pair<std::string, int>> seen;
  for (const auto& row : data.rows) {
    validate(row);
    if (row.num_regions() != k) {
      throw DataError(row.label() + ": region count differs from the rest of the dataset");
    }
    if (!seen.emplace(row.entity_id, row.season).second) {
      throw DataError("duplicate entity-season " + row.label());
    }
  }
}

namespace {

constexpr std::size_t kMaxReportedErrors = 20;

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  if (s.empty()) return false;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

// Reads lines, strips BOM/CR, checks the header and hands data lines to `fn`
// together with their 1-based line number. Errors from `fn` are collected.
template <typename Fn>
void for_each_record(std::istream& in, std::string_view header, std::size_t arity, Fn&& fn) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> errors;
  bool have_header = false;
  std::size_t records = 0;

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string_view view = line;
    if (lineno == 1 && view.substr(0, 3) == "\xEF\xBB\xBF") view.remove_prefix(3);
    if (view.empty()) continue;
    if (!have_header) {
      if (view != header) {
        throw DataError("line " + std::to_string(lineno) + ": expected header '" +
                        std::string(header) + "', got '" + std::string(view) + "'");
      }
      have_header = true;
      continue;
    }
    auto fields = split(view);
    if (fields.size() != arity) {
      errors.push_back("line " + std::to_string(lineno) + ": expected " + std::to_string(arity) +
                       " fields, got " + std::to_string(fields.size()));
      continue;
    }
    try {
      fn(fields, lineno);
      ++records;
    } catch (const DataError& e) {
      errors.push_back("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!have_header) throw DataError("empty input: no header line");
  if (!errors.empty()) {
    std::ostringstream msg;
    msg << errors.size() << " invalid row(s)";
    for (std::size_t i = 0; i < std::min(errors.size(), kMaxReportedErrors); ++i) {
      msg << "\n  " << errors[i];
    }
    if (errors.size() > kMaxReportedErrors) msg << "\n  ...";
    throw DataError(msg.str());
  }
  if (records == 0) throw DataError("empty input: header but no data rows");
}

using Key = std::pair<std::string, int>;

struct RowKey {
  std::string entity_id;
  int season;
  Region region;
};

RowKey parse_key(const std::vector<std::string_view>& f) {
  if (f[0].empty()) throw DataError("empty entity_id");
  RowKey key{std::string(f[0]), 0, Region::ATB};
  if (!parse_number(f[1], key.season) || key.season < 1000 || key.season > 9999) {
    throw DataError("season must be a 4-digit year, got '" + std::string(f[1]) + "'");
  }
  auto region = parse_region(f[2]);
  if (!region) throw DataError("unknown region code '" + std::string(f[2]) + "'");
  key.region = *region;
  return key;
}

RegionCounts& slot(std::map<Key, RegionCounts>& groups, const RowKey& key) {
  auto [it, inserted] = groups.try_emplace(Key{key.entity_id, key.season});
  if (inserted) {
    it->second.entity_id = key.entity_id;
    it->second.season = key.season;
    it->second.attempts.assign(kNumRegions, 0);
    it->second.makes.assign(kNumRegions, 0);
  }
  return it->second;
}

Dataset collect(std::map<Key, RegionCounts>& groups, EntityKind kind) {
  Dataset out;
  out.kind = kind;
  out.rows.reserve(groups.size());
  for (auto& [key, row] : groups) out.rows.push_back(std::move(row));
  return out;
}

}  // namespace

Dataset parse_shot_events(std::istream& in, EntityKind kind) {
  std::map<Key, RegionCounts> groups;
  for_each_record(in, "entity_id,season,region,made", 4,
                  [&](const std::vector<std::string_view>& f, std::size_t) {
                    const RowKey key = parse_key(f);
                    if (f[3] != "0" && f[3] != "1") {
                      throw DataError("made must be 0 or 1, got '" + std::string(f[3]) + "'");
                    }
                    auto& row = slot(groups, key);
                    const auto k = index_of(key.region);
                    row.attempts[k] += 1;
                    row.makes[k] += f[3] == "1" ? 1 : 0;
                  });
  return collect(groups, kind);
}

Dataset parse_aggregates(std::istream& in, EntityKind kind) {
  std::map<Key, RegionCounts> groups;
  std::set<std::tuple<std::string, int, std::size_t>> seen;
  for_each_record(in, "entity_id,season,region,attempts,makes", 5,
                  [&](const std::vector<std::string_view>& f, std::size_t) {
                    const RowKey key = parse_key(f);
                    std::int64_t attempts = 0;
                    std::int64_t makes = 0;
                    if (!parse_number(f[3], attempts) || !parse_number(f[4], makes)) {
                      throw DataError("attempts and makes must be integers");
                    }
                    if (attempts < 0 || makes < 0) throw DataError("negative counts");
                    if (makes > attempts) throw DataError("makes exceed attempts");
                    if (!seen.emplace(key.entity_id, key.season, index_of(key.region)).second) {
                      throw DataError("duplicate region " + std::string(code_of(key.region)) +
                                      " for " + key.entity_id + "," + std::to_string(key.season));
                    }
                    auto& row = slot(groups, key);
                    row.attempts[index_of(key.region)] = attempts;
                    row.makes[index_of(key.region)] = makes;
                  });
  return collect(groups, kind);
}

void write_aggregates(std::ostream& out, const Dataset& data) {
  out << "entity_id,season,region,attempts,makes\n";
  for (const auto& row : data.rows) {
    if (row.num_regions() != kNumRegions) {
      throw DataError("aggregate CSV requires the 7 court regions; " + row.label() + " has " +
                      std::to_string(row.num_regions()));
    }
    for (std::size_t k = 0; k < kNumRegions; ++k) {
      out << row.entity_id << ',' << row.season << ',' << kRegionCodes[k] << ','
          << row.attempts[k] << ',' << row.makes[k] << '\n';
    }
  }
}

TopNResult top_n_shot_takers(const Dataset& data, std::size_t n, std::optional<int> season) {
  if (data.rows.empty()) throw DataError("top_n_shot_takers: dataset is empty");
  if (n == 0) throw ConfigError("top_n_shot_takers: n must be at least 1");

  std::vector<const RegionCounts*> pool;
  for (const auto& row : data.rows) {
    if (!season || row.season == *season) pool.push_back(&row);
  }
  if (!season) {
    for (const auto* row : pool) {
      if (row->season != pool.front()->season) {
        throw ConfigError("top_n_shot_takers: dataset spans multiple seasons; pass a season");
      }
    }
  }
  if (pool.empty()) {
    throw DataError("top_n_shot_takers: no rows for season " + std::to_string(*season));
  }

  std::sort(pool.begin(), pool.end(), [](const RegionCounts* a, const RegionCounts* b) {
    const auto na = a->total_attempts();
    const auto nb = b->total_attempts();
    if (na != nb) return na > nb;
    return a->entity_id < b->entity_id;
  });

  TopNResult result;
  result.truncated = n > pool.size();
  pool.resize(std::min(n, pool.size()));
  // Output keeps the (entity_id, season) order of every other Dataset.
  std::sort(pool.begin(), pool.end(), [](const RegionCounts* a, const RegionCounts* b) {
    return std::tie(a->entity_id, a->season) < std::tie(b->entity_id, b->season);
  });
  result.data.kind = data.kind;
  for (const auto* row : pool) result.data.rows.push_back(*row);
  return result;
}

std::string fingerprint(const Dataset& data) {
  std::ostringstream canon;
  canon << to_string(data.kind) << '\n';
  for (const auto& row : data.rows) {
    canon << row.entity_id << ',' << row.season;
    for (std::size_t k = 0; k < row.num_regions(); ++k) {
      canon << ',' << row.attempts[k] << '/' << row.makes[k];
    }
    canon << '\n';
  }
  return sha256_hex(canon.str());
}

}  // namespace hoopstat
