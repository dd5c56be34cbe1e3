// Apache License, Version 2.0, refer to LICENSE.txt

#include "hoopstat/service.hpp"

#include <algorithm>
#include <chrono>
#include <set>
#include <sstream>

#include "hoopstat/errors.hpp"
#include "hoopstat/hash.hpp"
#include "hoopstat/region.hpp"

namespace hoopstat {

namespace fs = std::filesystem;

namespace {

std::vector<std::int64_t> read_diffs(const std::string& bytes, const fs::path& path) {
  std::vector<std::int64_t> out;
  std::istringstream lines(bytes);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(Json::parse(line).at("total").get<std::int64_t>());
    } catch (const Json::exception& e) {
      throw DataError(path.string() + ": " + e.what());
    }
  }
  return out;
}

void load_epaa(const fs::path& table_path, ArtifactCatalog& cat) {
  const Json table = read_json(table_path);
  const fs::path dir = table_path.parent_path();
  try {
    const RankKey rank_by = parse_rank_key(table.value("rank_by", std::string("mean")));
    const double divisor = table.at("games_divisor").get<double>();
    for (const auto& row : table.at("rows")) {
      PlayerEpaa p;
      p.entity_id = row.at("entity_id").get<std::string>();
      p.season = row.at("season").get<int>();
      p.label = row.at("label").get<std::string>();
      p.n_shots = row.at("n_shots").get<std::int64_t>();
      p.epaa_mean = row.at("epaa_mean").get<double>();
      p.games_divisor = divisor;
      p.summary = summary_from_json(row.at("summary"));
      p.draws_path = dir / row.at("draws").get<std::string>();
      const std::string bytes = read_file(p.draws_path);
      p.draws_sha256 = sha256_hex(bytes);
      if (p.draws_sha256 != row.at("draws_sha256").get<std::string>()) {
        throw DataError(p.draws_path.string() + " does not match its recorded hash");
      }
      p.diffs = read_diffs(bytes, p.draws_path);
      cat.artifacts.push_back({"epaa_draws", p.draws_path, p.draws_sha256});

      auto& season = cat.epaa[p.season];
      season.rank_by = rank_by;
      const std::string id = p.entity_id;
      if (!season.players.emplace(id, std::move(p)).second) {
        throw DataError("player " + id + " appears in more than one EPAA artifact for season " +
                        std::to_string(row.at("season").get<int>()));
      }
    }
  } catch (const Json::exception& e) {
    throw DataError(table_path.string() + ": " + e.what());
  } catch (const std::runtime_error& e) {
    if (dynamic_cast<const DataError*>(&e)) throw;
    throw DataError(table_path.string() + ": " + e.what());
  }
  cat.artifacts.push_back({"epaa", dir, sha256_file(table_path)});
}

void load_posterior_meta(const fs::path& meta_path, ArtifactCatalog& cat,
                         std::set<std::pair<std::string, int>>& seen_teams) {
  const Json meta = read_json(meta_path);
  if (meta.value("artifact", std::string()) != "posterior") return;
  const fs::path dir = meta_path.parent_path();
  const std::string draws_hash = sha256_file(dir / "draws.jsonl");
  if (meta.contains("draws_sha256") && meta["draws_sha256"] != draws_hash) {
    throw DataError((dir / "draws.jsonl").string() + " does not match its recorded hash");
  }
  cat.artifacts.push_back({"posterior", dir, draws_hash});
  if (meta.value("entity_kind", std::string()) != "team") return;
  try {
    for (const auto& row : meta.at("counts")) {
      TeamSeasonCounts t;
      t.team = row.at("entity_id").get<std::string>();
      t.season = row.at("season").get<int>();
      t.attempts = row.at("attempts").get<std::vector<std::int64_t>>();
      t.makes = row.at("makes").get<std::vector<std::int64_t>>();
      if (!seen_teams.emplace(t.team, t.season).second) continue;
      cat.teams[t.season].push_back(t.team);
      cat.team_counts.push_back(std::move(t));
    }
  } catch (const Json::exception& e) {
    throw DataError(meta_path.string() + ": " + e.what());
  }
}

}  // namespace

ArtifactCatalog ArtifactCatalog::load(const fs::path& root) {
  if (!fs::is_directory(root)) throw DataError("artifacts directory not found: " + root.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    const auto name = entry.path().filename();
    if (name == "epaa_table.json" || name == "meta.json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  ArtifactCatalog cat;
  std::set<std::pair<std::string, int>> seen_teams;
  for (const auto& f : files) {
    if (f.filename() == "epaa_table.json") {
      load_epaa(f, cat);
    } else {
      load_posterior_meta(f, cat, seen_teams);
    }
  }
  if (cat.artifacts.empty()) {
    throw DataError("no artifacts found under " + root.string());
  }
  for (auto& [season, ids] : cat.teams) std::sort(ids.begin(), ids.end());
  std::sort(cat.team_counts.begin(), cat.team_counts.end(),
            [](const TeamSeasonCounts& a, const TeamSeasonCounts& b) {
              return std::tie(a.team, a.season) < std::tie(b.team, b.season);
            });
  return cat;
}

std::vector<int> ArtifactCatalog::seasons() const {
  std::set<int> s;
  for (const auto& [season, _] : epaa) s.insert(season);
  for (const auto& [season, _] : teams) s.insert(season);
  return {s.begin(), s.end()};
}

std::vector<RankedRow> ArtifactCatalog::ranked_table(int season) const {
  const auto& s = epaa.at(season);
  std::vector<SummaryRow> rows;
  for (const auto& [id, p] : s.players) rows.push_back(p.summary);
  return rank_entities(std::move(rows), s.rank_by);
}

Service::Service(ServiceOptions options) : options_(std::move(options)) {}

void Service::set_catalog(std::shared_ptr<const ArtifactCatalog> catalog) {
  std::lock_guard lock(mutex_);
  catalog_ = std::move(catalog);
}

std::shared_ptr<const ArtifactCatalog> Service::catalog() const {
  std::lock_guard lock(mutex_);
  return catalog_;
}

namespace {

void send_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, Json{{"error", message}});
}

std::vector<std::string> split_ids(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string id;
  while (std::getline(ss, id, ',')) {
    if (!id.empty()) out.push_back(id);
  }
  return out;
}

// Parses ?players=...; returns false after writing a 400 response.
bool parse_players(const httplib::Request& req, httplib::Response& res,
                   std::vector<std::string>& out) {
  out = split_ids(req.get_param_value("players"));
  if (out.empty() || out.size() > 4) {
    send_error(res, 400, "select between 1 and 4 players");
    return false;
  }
  return true;
}

bool parse_season(const httplib::Request& req, httplib::Response& res, int& season) {
  const auto s = req.get_param_value("season");
  try {
    std::size_t used = 0;
    season = std::stoi(s, &used);
    if (used == s.size()) return true;
  } catch (const std::exception&) {
  }
  send_error(res, 400, "season must be an integer year");
  return false;
}

Json histogram(const std::vector<std::int64_t>& values, std::size_t bins) {
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  const double lo = static_cast<double>(*mn);
  const double width = *mx > *mn ? static_cast<double>(*mx - *mn) / static_cast<double>(bins) : 1.0;
  std::vector<std::size_t> counts(bins, 0);
  for (auto v : values) {
    auto b = static_cast<std::size_t>((static_cast<double>(v) - lo) / width);
    counts[std::min(b, bins - 1)]++;
  }
  std::vector<double> edges(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) edges[i] = lo + width * static_cast<double>(i);
  return Json{{"edges", edges}, {"counts", counts}};
}

Json ranked_row_json(const RankedRow& r, const PlayerEpaa& p) {
  return Json{{"rank", r.rank},
              {"player", p.entity_id},
              {"season", p.season},
              {"label", p.label},
              {"n_shots", p.n_shots},
              {"epaa_mean", p.epaa_mean},
              {"mean", r.summary.mean},
              {"median", r.summary.median},
              {"sd", r.summary.sd},
              {"ci80", {r.summary.ci80.lo, r.summary.ci80.hi}},
              {"ci95", {r.summary.ci95.lo, r.summary.ci95.hi}}};
}

const PlayerEpaa* find_by_label(const SeasonEpaa& season, const std::string& label) {
  for (const auto& [id, p] : season.players) {
    if (p.label == label) return &p;
  }
  return nullptr;
}

}  // namespace

void Service::install(httplib::Server& server) {
  const auto origin = options_.cors_origin;
  server.set_post_routing_handler([origin](const httplib::Request&, httplib::Response& res) {
    if (!origin.empty()) res.set_header("Access-Control-Allow-Origin", origin);
  });
  server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, HEAD, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });

  server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, Json{{"status", "ok"}});
  });

  // Wraps a handler so it only runs with a loaded catalog.
  auto guarded = [this](auto handler) {
    return [this, handler](const httplib::Request& req, httplib::Response& res) {
      auto cat = catalog();
      if (!cat) {
        send_error(res, 503, "artifacts are still loading");
        return;
      }
      handler(*cat, req, res);
    };
  };

  server.Get("/api/catalog", guarded([](const ArtifactCatalog& cat, const httplib::Request&,
                                        httplib::Response& res) {
    Json entities = Json::object();
    for (int season : cat.seasons()) {
      Json players = Json::array();
      if (auto it = cat.epaa.find(season); it != cat.epaa.end()) {
        for (const auto& [id, p] : it->second.players) players.push_back(id);
      }
      Json teams = Json::array();
      if (auto it = cat.teams.find(season); it != cat.teams.end()) teams = it->second;
      entities[std::to_string(season)] = Json{{"players", players}, {"teams", teams}};
    }
    Json artifacts = Json::array();
    for (const auto& a : cat.artifacts) {
      artifacts.push_back({{"kind", a.kind}, {"path", a.path.string()}, {"sha256", a.sha256}});
    }
    send_json(res, 200,
              Json{{"seasons", cat.seasons()}, {"entities", entities}, {"artifacts", artifacts}});
  }));

  server.Get("/api/epaa/density", guarded([this](const ArtifactCatalog& cat,
                                                 const httplib::Request& req,
                                                 httplib::Response& res) {
    int season = 0;
    std::vector<std::string> ids;
    if (!parse_season(req, res, season) || !parse_players(req, res, ids)) return;
    auto it = cat.epaa.find(season);
    if (it == cat.epaa.end()) return send_error(res, 404, "no EPAA artifacts for that season");
    Json players = Json::array();
    for (const auto& id : ids) {
      auto p = it->second.players.find(id);
      if (p == it->second.players.end()) return send_error(res, 400, "unknown player " + id);
      const auto& pe = p->second;
      Json entry{{"player", pe.entity_id},
                 {"label", pe.label},
                 {"n", pe.diffs.size()},
                 {"epaa_mean", pe.epaa_mean},
                 {"epaa_mean_per_game", pe.summary.mean},
                 {"games_divisor", pe.games_divisor}};
      if (pe.diffs.size() > options_.histogram_threshold) {
        entry["histogram"] = histogram(pe.diffs, options_.histogram_bins);
      } else {
        entry["diffs"] = pe.diffs;
      }
      players.push_back(std::move(entry));
    }
    send_json(res, 200, Json{{"season", season}, {"players", players}});
  }));

  server.Get("/api/epaa/table", guarded([](const ArtifactCatalog& cat,
                                           const httplib::Request& req, httplib::Response& res) {
    int season = 0;
    if (!parse_season(req, res, season)) return;
    auto it = cat.epaa.find(season);
    if (it == cat.epaa.end()) return send_error(res, 404, "unknown season");
    Json rows = Json::array();
    for (const auto& r : cat.ranked_table(season)) {
      rows.push_back(ranked_row_json(r, *find_by_label(it->second, r.summary.label)));
    }
    send_json(res, 200, Json{{"season", season}, {"rows", rows}});
  }));

  server.Get("/api/epaa/draws", guarded([](const ArtifactCatalog& cat,
                                           const httplib::Request& req, httplib::Response& res) {
    int season = 0;
    if (!parse_season(req, res, season)) return;
    auto it = cat.epaa.find(season);
    const auto player = req.get_param_value("player");
    if (it == cat.epaa.end()) return send_error(res, 404, "unknown season");
    auto p = it->second.players.find(player);
    if (p == it->second.players.end()) return send_error(res, 404, "unknown player " + player);
    std::string bytes;
    try {
      bytes = read_file(p->second.draws_path);
    } catch (const std::exception& e) {
      return send_error(res, 500, e.what());
    }
    if (sha256_hex(bytes) != p->second.draws_sha256) {
      return send_error(res, 500, "artifact changed on disk since it was loaded");
    }
    res.set_header("X-Content-SHA256", p->second.draws_sha256);
    res.set_header("Content-Disposition", "attachment; filename=\"" + p->second.entity_id + "_" +
                                              std::to_string(season) + "_epaa.jsonl\"");
    res.set_header("Access-Control-Expose-Headers", "X-Content-SHA256, Content-Disposition");
    res.status = 200;
    res.set_content(std::move(bytes), "application/x-ndjson");
  }));

  server.Get("/api/teams/trends", guarded([](const ArtifactCatalog& cat,
                                             const httplib::Request& req, httplib::Response& res) {
    const auto team_filter = req.get_param_value("team");
    Json rows = Json::array();
    for (const auto& t : cat.team_counts) {
      if (!team_filter.empty() && t.team != team_filter) continue;
      std::int64_t total = 0;
      for (auto n : t.attempts) total += n;
      for (std::size_t k = 0; k < t.attempts.size(); ++k) {
        Json row{{"team", t.team},
                 {"season", t.season},
                 {"region", k < kNumRegions ? std::string(kRegionCodes[k]) : std::to_string(k + 1)},
                 {"attempts", t.attempts[k]},
                 {"makes", t.makes[k]},
                 {"attempt_share", total > 0 ? static_cast<double>(t.attempts[k]) /
                                                   static_cast<double>(total)
                                             : 0.0}};
        row["make_rate"] = t.attempts[k] > 0 ? Json(static_cast<double>(t.makes[k]) /
                                                    static_cast<double>(t.attempts[k]))
                                             : Json(nullptr);
        rows.push_back(std::move(row));
      }
    }
    if (!team_filter.empty() && rows.empty()) return send_error(res, 404, "unknown team");
    send_json(res, 200, Json{{"rows", rows}});
  }));

  server.Get("/api/epaa/timeseries", guarded([](const ArtifactCatalog& cat,
                                                const httplib::Request& req,
                                                httplib::Response& res) {
    std::vector<std::string> ids;
    if (!parse_players(req, res, ids)) return;
    Json series = Json::array();
    for (const auto& id : ids) {
      Json points = Json::array();
      for (const auto& [season, s] : cat.epaa) {
        auto p = s.players.find(id);
        if (p == s.players.end()) continue;
        for (const auto& r : cat.ranked_table(season)) {
          if (r.summary.label != p->second.label) continue;
          points.push_back({{"season", season},
                            {"epaa_mean", p->second.epaa_mean},
                            {"mean", r.summary.mean},
                            {"rank", r.rank}});
        }
      }
      if (points.empty()) return send_error(res, 400, "unknown player " + id);
      series.push_back({{"player", id}, {"points", points}});
    }
    send_json(res, 200, Json{{"series", series}});
  }));
}

void Service::install_request_log(httplib::Server& server, std::ostream& log) {
  server.set_logger([this, &log](const httplib::Request& req, const httplib::Response& res) {
    Json entry{{"method", req.method},
               {"path", req.path},
               {"status", res.status},
               {"bytes", res.body.size()},
               {"remote", req.remote_addr}};
    if (!req.params.empty()) {
      Json params = Json::object();
      for (const auto& [k, v] : req.params) params[k] = v;
      entry["params"] = params;
    }
    std::lock_guard lock(log_mutex_);
    log << entry.dump() << '\n' << std::flush;
  });
}

}  // namespace hoopstat
