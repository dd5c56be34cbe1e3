// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <string>
#include <vector>

#include <httplib.h>

#include "hoopstat/report.hpp"

namespace hoopstat {

// One player's EPAA artifact within a season.
struct PlayerEpaa {
  std::string entity_id;
  int season = 0;
  std::string label;
  std::int64_t n_shots = 0;
  double epaa_mean = 0.0;
  double games_divisor = 1.0;
  SummaryRow summary;  // per-game scale
  std::filesystem::path draws_path;
  std::string draws_sha256;
  std::vector<std::int64_t> diffs;
};

struct SeasonEpaa {
  RankKey rank_by = RankKey::Mean;
  std::map<std::string, PlayerEpaa> players;  // by entity_id
};

struct TeamSeasonCounts {
  std::string team;
  int season = 0;
  std::vector<std::int64_t> attempts;
  std::vector<std::int64_t> makes;
};

struct ArtifactEntry {
  std::string kind;  // "posterior" or "epaa"
  std::filesystem::path path;
  std::string sha256;
};

// Immutable index of everything under an artifacts directory.
struct ArtifactCatalog {
  std::map<int, SeasonEpaa> epaa;                      // by season
  std::map<int, std::vector<std::string>> teams;       // season -> team ids
  std::vector<TeamSeasonCounts> team_counts;           // sorted by (team, season)
  std::vector<ArtifactEntry> artifacts;

  // Scans `root` recursively for posterior directories (meta.json) and EPAA
  // outputs (epaa_table.json), checking every recorded content hash.
  // Throws DataError if nothing loadable is found or a hash disagrees.
  static ArtifactCatalog load(const std::filesystem::path& root);

  std::vector<int> seasons() const;
  // Season table ranked with rank_entities, exactly as the CLI ranks it.
  std::vector<RankedRow> ranked_table(int season) const;
};

struct ServiceOptions {
  std::string cors_origin = "*";
  // Above this many samples the density endpoint returns a histogram.
  std::size_t histogram_threshold = 20000;
  std::size_t histogram_bins = 100;
};

// Read-only JSON API. Every /api route answers 503 until a catalog is set.
class Service {
 public:
  explicit Service(ServiceOptions options = {});

  void set_catalog(std::shared_ptr<const ArtifactCatalog> catalog);
  void install(httplib::Server& server);
  // Logs one JSON object per request to `log`.
  void install_request_log(httplib::Server& server, std::ostream& log);

 private:
  std::shared_ptr<const ArtifactCatalog> catalog() const;

  ServiceOptions options_;
  mutable std::mutex mutex_;
  std::shared_ptr<const ArtifactCatalog> catalog_;
  std::mutex log_mutex_;
};

}  // namespace hoopstat
