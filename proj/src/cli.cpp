// Apache License, Version 2.0, refer to LICENSE.txt

#include "hoopstat/cli.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <iomanip>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "hoopstat/dataset.hpp"
#include "hoopstat/diagnostics.hpp"
#include "hoopstat/errors.hpp"
#include "hoopstat/hash.hpp"
#include "hoopstat/io.hpp"
#include "hoopstat/predictive.hpp"
#include "hoopstat/report.hpp"
#include "hoopstat/sampler.hpp"
#include "hoopstat/service.hpp"

namespace hoopstat {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kDefaultSeed = 0;

// Records what a command read and wrote; written as manifest.json.
class Manifest {
 public:
  Manifest(std::string command, std::vector<std::string> argv, std::uint64_t seed)
      : command_(std::move(command)), argv_(std::move(argv)), seed_(seed),
        start_(std::chrono::steady_clock::now()) {}

  void input(const fs::path& path) {
    if (fs::is_directory(path)) {
      for (const char* name : {"meta.json", "draws.jsonl"}) {
        if (fs::exists(path / name)) inputs_[(path / name).string()] = sha256_file(path / name);
      }
    } else {
      inputs_[path.string()] = sha256_file(path);
    }
  }
  void output(const fs::path& path) { outputs_.push_back(path.string()); }

  void write(const fs::path& path) const {
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start_;
    Json j{{"command", command_},
           {"argv", argv_},
           {"seed", seed_},
           {"inputs", inputs_},
           {"outputs", outputs_},
           {"duration_seconds", elapsed.count()}};
    write_text(path, j.dump(2) + "\n");
  }

 private:
  std::string command_;
  std::vector<std::string> argv_;
  std::uint64_t seed_;
  std::chrono::steady_clock::time_point start_;
  std::map<std::string, std::string> inputs_;
  std::vector<std::string> outputs_;
};

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("HOOPSTAT_SEED"); env && *env) {
    std::uint64_t seed = 0;
    std::string_view s(env);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), seed);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
      throw ConfigError("HOOPSTAT_SEED must be an unsigned integer, got '" + std::string(s) + "'");
    }
    return seed;
  }
  return kDefaultSeed;
}

// Per-entity seed so one entity's draws do not depend on which others run.
std::uint64_t entity_seed(std::uint64_t seed, std::size_t row) {
  return Rng::substream(seed, {row, 0x656e74ULL}).next();
}

template <typename T>
std::string str(const T& v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

Dataset read_dataset(const fs::path& path, EntityKind kind) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file " + path.string());
  std::string first;
  std::getline(in, first);
  if (!first.empty() && first.back() == '\r') first.pop_back();
  if (first.rfind("\xEF\xBB\xBF", 0) == 0) first.erase(0, 3);
  in.clear();
  in.seekg(0);
  try {
    if (first == "entity_id,season,region,made") return parse_shot_events(in, kind);
    return parse_aggregates(in, kind);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

std::vector<double> column(const std::vector<TraceRow>& rows) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.value);
  return out;
}

// ---------------------------------------------------------------- ingest

struct IngestCommand {
  std::string data;
  std::string kind = "team";
  std::optional<std::size_t> top;
  std::optional<int> season;
  std::string out;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("ingest", "Aggregate event or aggregate CSV into region counts");
    c->add_option("--data", data, "Event or aggregate CSV")->required();
    c->add_option("--kind", kind, "team or player")->check(CLI::IsMember({"team", "player"}));
    c->add_option("--top", top, "Keep the top N shot takers");
    c->add_option("--season", season, "Season filter for --top");
    c->add_option("--out", out, "Output aggregate CSV")->required();
  }

  std::vector<std::string> argv() const {
    std::vector<std::string> a{"ingest", "--data", data, "--kind", kind, "--out", out};
    if (top) a.insert(a.end(), {"--top", std::to_string(*top)});
    if (season) a.insert(a.end(), {"--season", std::to_string(*season)});
    return a;
  }

  int run(std::ostream& out_stream, std::ostream& err) const {
    Manifest manifest("ingest", argv(), 0);
    manifest.input(data);
    Dataset ds = read_dataset(data, parse_entity_kind(kind));
    if (top) {
      auto r = top_n_shot_takers(ds, *top, season);
      if (r.truncated) err << "warning: --top " << *top << " exceeds available rows\n";
      ds = std::move(r.data);
    }
    std::ostringstream csv;
    write_aggregates(csv, ds);
    write_text(out, csv.str());
    manifest.output(out);
    manifest.write(out + ".manifest.json");
    out_stream << "wrote " << ds.size() << " entity-seasons to " << out << '\n';
    return kExitOk;
  }
};

// ---------------------------------------------------------------- fit

struct FitCommand {
  std::string data;
  std::string kind = "team";
  std::size_t L = 20;
  std::size_t J = 20;
  double alpha = 5.0;
  double beta = 5.0;
  double gamma = 5.0;
  double beta_a = 1.0;
  double beta_b = 1.0;
  std::size_t iters = 10000;
  std::size_t burn_in = 3000;
  std::size_t thin = 1;
  std::size_t chains = 1;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> top;
  std::optional<int> season;
  std::string out;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("fit", "Fit the shot-profile mixture by Gibbs sampling");
    c->add_option("--data", data, "Event or aggregate CSV")->required();
    c->add_option("--kind", kind, "team or player")->check(CLI::IsMember({"team", "player"}));
    c->add_option("--L", L, "Shot selection clusters")->check(CLI::PositiveNumber);
    c->add_option("--J", J, "Shot accuracy clusters")->check(CLI::PositiveNumber);
    c->add_option("--alpha", alpha, "Selection profile concentration");
    c->add_option("--beta", beta, "Selection weight concentration");
    c->add_option("--gamma", gamma, "Accuracy weight concentration");
    c->add_option("--beta-a", beta_a, "Accuracy Beta prior, first shape");
    c->add_option("--beta-b", beta_b, "Accuracy Beta prior, second shape");
    c->add_option("--iters", iters, "Gibbs sweeps per chain");
    c->add_option("--burn-in", burn_in, "Sweeps discarded per chain");
    c->add_option("--thin", thin, "Keep every n-th sweep after burn-in");
    c->add_option("--chains", chains, "Independent chains, run in parallel");
    c->add_option("--seed", seed, "Random seed (falls back to HOOPSTAT_SEED)");
    c->add_option("--top", top, "Fit only the top N shot takers");
    c->add_option("--season", season, "Season filter for --top");
    c->add_option("--out", out, "Posterior output directory")->required();
  }

  std::vector<std::string> argv(std::uint64_t s) const {
    std::vector<std::string> a{"fit",       "--data",         data,
                               "--kind",    kind,             "--L",
                               str(L),      "--J",            str(J),
                               "--alpha",   str(alpha),       "--beta",
                               str(beta),   "--gamma",        str(gamma),
                               "--beta-a",  str(beta_a),      "--beta-b",
                               str(beta_b), "--iters",        str(iters),
                               "--burn-in", str(burn_in),     "--thin",
                               str(thin),   "--chains",       str(chains),
                               "--seed",    std::to_string(s), "--out",
                               out};
    if (top) a.insert(a.end(), {"--top", std::to_string(*top)});
    if (season) a.insert(a.end(), {"--season", std::to_string(*season)});
    return a;
  }

  int run(std::ostream& o, std::ostream& err) const {
    const auto s = resolve_seed(seed);
    Priors priors;
    priors.selection_clusters = L;
    priors.accuracy_clusters = J;
    priors.profile_concentration = alpha;
    priors.selection_weight_concentration = beta;
    priors.accuracy_weight_concentration = gamma;
    priors.accuracy_prior_a = beta_a;
    priors.accuracy_prior_b = beta_b;
    validate(priors);
    ChainConfig config;
    config.iterations = iters;
    config.burn_in = burn_in;
    config.thin = thin;
    config.chains = chains;
    config.seed = s;
    validate(config);

    Manifest manifest("fit", argv(s), s);
    manifest.input(data);
    Dataset ds = read_dataset(data, parse_entity_kind(kind));
    if (top) {
      auto r = top_n_shot_takers(ds, *top, season);
      if (r.truncated) err << "warning: --top " << *top << " exceeds available rows\n";
      ds = std::move(r.data);
    }
    validate(ds);
    if (L > ds.size() || J > ds.size()) {
      err << "warning: more clusters (L=" << L << ", J=" << J << ") than entities (" << ds.size()
          << "); some clusters start empty\n";
    }

    const auto posterior = run_chain(ds, priors, config);
    save_posterior(out, posterior);
    manifest.output(fs::path(out) / "meta.json");
    manifest.output(fs::path(out) / "draws.jsonl");

    o << "fitted " << ds.size() << " " << kind << " entity-seasons; " << posterior.draws.size()
      << " retained draws in " << out << "\n\n";
    std::string ess_csv = "selector,ess,clamped,degenerate\n";
    std::vector<std::string> selectors{"logpost"};
    for (std::size_t l = 1; l <= L; ++l) selectors.push_back("pi[" + std::to_string(l) + "]");
    for (std::size_t j = 1; j <= J; ++j) selectors.push_back("theta[" + std::to_string(j) + "]");
    if (posterior.draws.size() >= 10) {
      o << std::left << std::setw(12) << "selector" << std::right << std::setw(12) << "ESS"
        << "  flags\n";
      for (const auto& sel : selectors) {
        const auto e = effective_sample_size(column(trace_export(posterior, sel)));
        const std::string flags = std::string(e.clamped ? "clamped " : "") +
                                  (e.degenerate ? "degenerate" : "");
        o << std::left << std::setw(12) << sel << std::right << std::setw(12) << fixed(e.ess, 1)
          << "  " << flags << '\n';
        ess_csv += sel + ',' + str(e.ess) + ',' + (e.clamped ? "1" : "0") + ',' +
                   (e.degenerate ? "1" : "0") + '\n';
      }
    } else {
      o << "(fewer than 10 draws: ESS not computed)\n";
    }
    write_text(fs::path(out) / "ess.csv", ess_csv);
    manifest.output(fs::path(out) / "ess.csv");

    if (L == 1 && J == 1) print_conjugate_check(o, ds, priors, posterior);
    manifest.write(fs::path(out) / "manifest.json");
    return kExitOk;
  }

  // With one cluster of each kind the profiles have closed-form posteriors.
  static void print_conjugate_check(std::ostream& o, const Dataset& ds, const Priors& priors,
                                    const PosteriorDraws& posterior) {
    const auto K = ds.num_regions();
    std::vector<double> n(K, 0.0);
    std::vector<double> m(K, 0.0);
    for (const auto& row : ds.rows) {
      for (std::size_t k = 0; k < K; ++k) {
        n[k] += static_cast<double>(row.attempts[k]);
        m[k] += static_cast<double>(row.makes[k]);
      }
    }
    const double total = std::accumulate(n.begin(), n.end(), 0.0);
    const double a0 = static_cast<double>(K) * priors.profile_concentration + total;
    o << "\nregion  p_mean      p_closed    q_mean      q_closed\n";
    const double draws = static_cast<double>(posterior.draws.size());
    for (std::size_t k = 0; k < K; ++k) {
      double pm = 0.0;
      double qm = 0.0;
      for (const auto& d : posterior.draws) {
        pm += d.selection(0, k);
        qm += d.accuracy(0, k);
      }
      const double p_closed = (priors.profile_concentration + n[k]) / a0;
      const double q_closed = (priors.accuracy_prior_a + m[k]) /
                              (priors.accuracy_prior_a + priors.accuracy_prior_b + n[k]);
      o << std::left << std::setw(8)
        << (K == kNumRegions ? std::string(kRegionCodes[k]) : std::to_string(k + 1)) << std::right
        << fixed(pm / draws, 6) << "    " << fixed(p_closed, 6) << "    " << fixed(qm / draws, 6)
        << "    " << fixed(q_closed, 6) << '\n';
    }
  }
};

// ---------------------------------------------------------------- ep

Json points_meta(const std::string& artifact, const std::string& label,
                 const PredictiveConfig& cfg, const PosteriorDraws& posterior,
                 const std::string& body) {
  return Json{{"artifact", artifact},
              {"label", label},
              {"n_shots", cfg.n_shots},
              {"games_divisor", cfg.games_divisor},
              {"samples_per_draw", cfg.samples_per_draw},
              {"seed", cfg.seed},
              {"posterior_fingerprint", posterior.dataset_fingerprint},
              {"points_sha256", sha256_hex(body)}};
}

struct EpCommand {
  std::string posterior;
  std::int64_t n_shots = 8000;
  double games = 72.0;
  std::string entity = "all";
  std::size_t samples_per_draw = 1;
  std::string rank_by = "mean";
  std::optional<std::uint64_t> seed;
  std::string out;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("ep", "Posterior predictive expected points");
    c->add_option("--posterior", posterior, "Posterior directory from fit")->required();
    c->add_option("--n-shots", n_shots, "Hypothetical season shot count")->check(CLI::PositiveNumber);
    c->add_option("--games", games, "Games per season for per-game scaling")
        ->check(CLI::PositiveNumber);
    c->add_option("--entity", entity, "Entity id, <id>_<season>, or all");
    c->add_option("--samples-per-draw", samples_per_draw, "Predictive samples per draw")
        ->check(CLI::PositiveNumber);
    c->add_option("--rank-by", rank_by, "mean or median")->check(CLI::IsMember({"mean", "median"}));
    c->add_option("--seed", seed, "Random seed (falls back to HOOPSTAT_SEED)");
    c->add_option("--out", out, "Output directory")->required();
  }

  std::vector<std::string> argv(std::uint64_t s) const {
    return {"ep",          "--posterior",  posterior,          "--n-shots", str(n_shots),
            "--games",     str(games),     "--entity",         entity,      "--samples-per-draw",
            str(samples_per_draw),         "--rank-by",        rank_by,     "--seed",
            std::to_string(s),             "--out",            out};
  }

  int run(std::ostream& o, std::ostream&) const {
    const auto s = resolve_seed(seed);
    Manifest manifest("ep", argv(s), s);
    manifest.input(posterior);
    const auto post = load_posterior(posterior);

    std::vector<std::size_t> rows;
    if (entity == "all") {
      for (std::size_t i = 0; i < post.data.size(); ++i) rows.push_back(i);
    } else {
      rows.push_back(post.find_entity(entity));
    }

    std::vector<SummaryRow> summaries;
    Json entities = Json::array();
    for (auto i : rows) {
      const auto& counts = post.data.rows[i];
      PredictiveConfig cfg;
      cfg.n_shots = n_shots;
      cfg.games_divisor = games;
      cfg.samples_per_draw = samples_per_draw;
      cfg.seed = entity_seed(s, i);
      const auto points = expected_points(counts, post, cfg);
      const auto body = points_jsonl(points);
      const fs::path dir = fs::path(out) / "entities" / counts.label();
      write_text(dir / "points.jsonl", body);
      write_text(dir / "meta.json",
                 points_meta("points", counts.label(), cfg, post, body).dump(2) + "\n");
      manifest.output(dir / "points.jsonl");
      summaries.push_back(summarize(counts.label(), points.per_game));
      entities.push_back({{"label", counts.label()},
                          {"entity_id", counts.entity_id},
                          {"season", counts.season},
                          {"mean_total", points.mean()},
                          {"draws", (fs::path("entities") / counts.label() / "points.jsonl").string()},
                          {"draws_sha256", sha256_hex(body)}});
    }

    const auto ranked = rank_entities(summaries, parse_rank_key(rank_by));
    write_text(fs::path(out) / "summary.csv", ranked_csv(ranked));
    Json rows_json = Json::array();
    for (const auto& r : ranked) {
      Json row = to_json(r.summary);
      row["rank"] = r.rank;
      rows_json.push_back(row);
    }
    write_text(fs::path(out) / "summary.json",
               Json{{"artifact", "ep"},
                    {"n_shots", n_shots},
                    {"games_divisor", games},
                    {"rank_by", rank_by},
                    {"posterior_fingerprint", post.dataset_fingerprint},
                    {"rows", rows_json},
                    {"entities", entities}}
                       .dump(2) +
                   "\n");
    manifest.output(fs::path(out) / "summary.csv");
    manifest.output(fs::path(out) / "summary.json");
    manifest.write(fs::path(out) / "manifest.json");

    o << "rank  entity                 mean/game  median     95% interval\n";
    for (const auto& r : ranked) {
      o << std::left << std::setw(6) << r.rank << std::setw(22) << r.summary.label << std::right
        << std::setw(10) << fixed(r.summary.mean, 2) << std::setw(9) << fixed(r.summary.median, 2)
        << "   (" << fixed(r.summary.ci95.lo, 2) << ", " << fixed(r.summary.ci95.hi, 2) << ")\n";
    }
    return kExitOk;
  }
};

// ---------------------------------------------------------------- epaa

struct EpaaCommand {
  std::string player_posterior;
  std::string team_posterior;
  std::string n_shots = "observed";
  double games = 72.0;
  std::string player = "all";
  std::size_t samples_per_draw = 1;
  std::string rank_by = "mean";
  std::optional<std::uint64_t> seed;
  std::string out;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("epaa", "Expected points above an average team");
    c->add_option("--player-posterior", player_posterior, "Player posterior directory")->required();
    c->add_option("--team-posterior", team_posterior, "Team posterior directory")->required();
    c->add_option("--n-shots", n_shots, "Shot count, or 'observed' for each player's own total");
    c->add_option("--games", games, "Games per season for per-game scaling")
        ->check(CLI::PositiveNumber);
    c->add_option("--player", player, "Player id, <id>_<season>, or all");
    c->add_option("--samples-per-draw", samples_per_draw, "Predictive samples per draw")
        ->check(CLI::PositiveNumber);
    c->add_option("--rank-by", rank_by, "mean or median")->check(CLI::IsMember({"mean", "median"}));
    c->add_option("--seed", seed, "Random seed (falls back to HOOPSTAT_SEED)");
    c->add_option("--out", out, "Output directory")->required();
  }

  std::vector<std::string> argv(std::uint64_t s) const {
    return {"epaa",
            "--player-posterior", player_posterior,
            "--team-posterior", team_posterior,
            "--n-shots", n_shots,
            "--games", str(games),
            "--player", player,
            "--samples-per-draw", str(samples_per_draw),
            "--rank-by", rank_by,
            "--seed", std::to_string(s),
            "--out", out};
  }

  int run(std::ostream& o, std::ostream&) const {
    const auto s = resolve_seed(seed);
    std::optional<std::int64_t> fixed_shots;
    if (n_shots != "observed") {
      std::int64_t v = 0;
      auto [ptr, ec] = std::from_chars(n_shots.data(), n_shots.data() + n_shots.size(), v);
      if (ec != std::errc{} || ptr != n_shots.data() + n_shots.size() || v < 1) {
        throw ConfigError("--n-shots must be a positive integer or 'observed'");
      }
      fixed_shots = v;
    }

    Manifest manifest("epaa", argv(s), s);
    manifest.input(player_posterior);
    manifest.input(team_posterior);
    const auto players = load_posterior(player_posterior);
    const auto teams = load_posterior(team_posterior);
    if (players.num_regions() != teams.num_regions()) {
      throw DataError("posterior region counts differ: players have " +
                      std::to_string(players.num_regions()) + ", teams have " +
                      std::to_string(teams.num_regions()));
    }

    std::vector<std::size_t> rows;
    if (player == "all") {
      for (std::size_t i = 0; i < players.data.size(); ++i) rows.push_back(i);
    } else {
      rows.push_back(players.find_entity(player));
    }

    std::vector<SummaryRow> summaries;
    std::map<std::string, Json> extra;
    for (auto i : rows) {
      const auto& counts = players.data.rows[i];
      PredictiveConfig cfg;
      cfg.n_shots = fixed_shots ? *fixed_shots : counts.total_attempts();
      if (cfg.n_shots < 1) throw DataError(counts.label() + " has no observed shots");
      cfg.games_divisor = games;
      cfg.samples_per_draw = samples_per_draw;
      cfg.seed = entity_seed(s, i);
      const auto result = epaa(counts, players, teams, cfg);
      const auto body = points_jsonl(result);
      const fs::path rel = fs::path("players") / counts.label();
      const fs::path dir = fs::path(out) / rel;
      write_text(dir / "points.jsonl", body);
      Json meta = points_meta("epaa_points", counts.label(), cfg, players, body);
      meta["team_posterior_fingerprint"] = teams.dataset_fingerprint;
      meta["epaa_mean"] = result.epaa_mean;
      write_text(dir / "meta.json", meta.dump(2) + "\n");
      manifest.output(dir / "points.jsonl");
      summaries.push_back(summarize(counts.label(), result.per_game));
      extra[counts.label()] = Json{{"entity_id", counts.entity_id},
                                   {"season", counts.season},
                                   {"n_shots", cfg.n_shots},
                                   {"epaa_mean", result.epaa_mean},
                                   {"draws", (rel / "points.jsonl").string()},
                                   {"draws_sha256", sha256_hex(body)}};
    }

    const auto ranked = rank_entities(summaries, parse_rank_key(rank_by));
    std::string csv =
        "rank,label,entity_id,season,n_shots,epaa_mean,mean,median,sd,ci80_lo,ci80_hi,ci95_lo,"
        "ci95_hi\n";
    Json rows_json = Json::array();
    for (const auto& r : ranked) {
      const auto& e = extra.at(r.summary.label);
      const auto& sm = r.summary;
      csv += std::to_string(r.rank) + ',' + sm.label + ',' + e["entity_id"].get<std::string>() +
             ',' + std::to_string(e["season"].get<int>()) + ',' +
             std::to_string(e["n_shots"].get<std::int64_t>()) + ',' +
             str(e["epaa_mean"].get<double>()) + ',' + str(sm.mean) + ',' + str(sm.median) + ',' +
             str(sm.sd) + ',' + str(sm.ci80.lo) + ',' + str(sm.ci80.hi) + ',' + str(sm.ci95.lo) +
             ',' + str(sm.ci95.hi) + '\n';
      Json row = e;
      row["rank"] = r.rank;
      row["label"] = sm.label;
      row["summary"] = to_json(sm);
      rows_json.push_back(std::move(row));
    }
    write_text(fs::path(out) / "epaa_table.csv", csv);
    write_text(fs::path(out) / "epaa_table.json",
               Json{{"artifact", "epaa"},
                    {"games_divisor", games},
                    {"rank_by", rank_by},
                    {"player_posterior_fingerprint", players.dataset_fingerprint},
                    {"team_posterior_fingerprint", teams.dataset_fingerprint},
                    {"rows", rows_json}}
                       .dump(2) +
                   "\n");
    manifest.output(fs::path(out) / "epaa_table.csv");
    manifest.output(fs::path(out) / "epaa_table.json");
    manifest.write(fs::path(out) / "manifest.json");

    o << "rank  player                 EPAA/game     sd     95% interval\n";
    for (const auto& r : ranked) {
      o << std::left << std::setw(6) << r.rank << std::setw(22) << r.summary.label << std::right
        << std::setw(10) << fixed(r.summary.mean, 2) << std::setw(8) << fixed(r.summary.sd, 2)
        << "   (" << fixed(r.summary.ci95.lo, 2) << ", " << fixed(r.summary.ci95.hi, 2) << ")\n";
    }
    return kExitOk;
  }
};

// ---------------------------------------------------------------- simulate

struct SimulateCommand {
  std::string truth;
  std::int64_t shots = 5000;
  int season = 2021;
  std::string kind = "team";
  std::optional<std::uint64_t> seed;
  std::string out;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("simulate", "Simulate a dataset from known parameters");
    c->add_option("--truth", truth, "ModelState JSON {p, q, w, z, pi, theta}")->required();
    c->add_option("--shots-per-entity", shots, "Shot attempts per entity")
        ->check(CLI::NonNegativeNumber);
    c->add_option("--season", season, "Season year for the simulated rows");
    c->add_option("--kind", kind, "team or player")->check(CLI::IsMember({"team", "player"}));
    c->add_option("--seed", seed, "Random seed (falls back to HOOPSTAT_SEED)");
    c->add_option("--out", out, "Output aggregate CSV")->required();
  }

  std::vector<std::string> argv(std::uint64_t s) const {
    return {"simulate", "--truth", truth, "--shots-per-entity", str(shots), "--season",
            str(season), "--kind", kind, "--seed", std::to_string(s), "--out", out};
  }

  int run(std::ostream& o, std::ostream&) const {
    const auto s = resolve_seed(seed);
    Manifest manifest("simulate", argv(s), s);
    manifest.input(truth);
    const auto state = model_state_from_json(read_json(truth));
    if (state.num_regions() != kNumRegions) {
      throw DataError("truth must describe the " + std::to_string(kNumRegions) +
                      " court regions, found " + std::to_string(state.num_regions()));
    }
    std::vector<std::int64_t> per_entity(state.num_entities(), shots);
    auto ds = simulate_dataset(state, per_entity, s, season);
    ds.kind = parse_entity_kind(kind);
    std::ostringstream csv;
    write_aggregates(csv, ds);
    write_text(out, csv.str());
    manifest.output(out);
    manifest.write(out + ".manifest.json");
    o << "simulated " << ds.size() << " entities to " << out << '\n';
    return kExitOk;
  }
};

// ---------------------------------------------------------------- report

struct ReportCommand {
  std::string epaa_dir;
  std::string metrics;
  std::string out;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("report", "Correlate EPAA with external player metrics");
    c->add_option("--epaa", epaa_dir, "Output directory of the epaa command")->required();
    c->add_option("--metrics", metrics, "CSV entity_id,season,metric,value")->required();
    c->add_option("--out", out, "Directory for correlations.csv / correlations.json");
  }

  int run(std::ostream& o, std::ostream&) const {
    const Json table = read_json(fs::path(epaa_dir) / "epaa_table.json");
    std::map<std::string, double> epaa_by_label;
    for (const auto& row : table.at("rows")) {
      epaa_by_label[row.at("label").get<std::string>()] = row.at("summary").at("mean").get<double>();
    }
    std::ifstream in(metrics);
    if (!in) throw DataError("cannot open metrics file " + metrics);
    const auto metric_table = parse_metrics(in);

    std::map<std::string, const std::map<std::string, double>*> series{{"EPAA", &epaa_by_label}};
    for (const auto& [name, values] : metric_table) series[name] = &values;

    std::string csv = "x,y,r,n\n";
    Json rows = Json::array();
    o << std::left << std::setw(12) << "x" << std::setw(12) << "y" << std::right << std::setw(10)
      << "r" << std::setw(6) << "n" << '\n';
    for (auto a = series.begin(); a != series.end(); ++a) {
      for (auto b = std::next(a); b != series.end(); ++b) {
        const auto c = correlate(*a->second, *b->second);
        csv += a->first + ',' + b->first + ',' + str(c.r) + ',' + std::to_string(c.n) + '\n';
        rows.push_back({{"x", a->first}, {"y", b->first}, {"r", c.r}, {"n", c.n}});
        o << std::left << std::setw(12) << a->first << std::setw(12) << b->first << std::right
          << std::setw(10) << fixed(c.r, 3) << std::setw(6) << c.n << '\n';
      }
    }
    if (!out.empty()) {
      write_text(fs::path(out) / "correlations.csv", csv);
      write_text(fs::path(out) / "correlations.json", Json{{"correlations", rows}}.dump(2) + "\n");
    }
    return kExitOk;
  }
};

// ---------------------------------------------------------------- trace

struct TraceCommand {
  std::string posterior;
  std::string selector = "logpost";
  std::string out;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("trace", "Export the trace of one scalar for plotting");
    c->add_option("--posterior", posterior, "Posterior directory")->required();
    c->add_option("--selector", selector, "logpost, p[l][k], q[j][k], pi[l], theta[j], w[i], z[i]");
    c->add_option("--out", out, "CSV file (default: standard output)");
  }

  int run(std::ostream& o, std::ostream& err) const {
    const auto post = load_posterior(posterior);
    const auto rows = trace_export(post, selector);
    std::string csv = "chain,iteration,value\n";
    for (const auto& r : rows) {
      csv += std::to_string(r.chain) + ',' + std::to_string(r.iteration) + ',' + str(r.value) + '\n';
    }
    if (out.empty()) {
      o << csv;
    } else {
      write_text(out, csv);
    }
    if (rows.size() >= 10) {
      const auto e = effective_sample_size(column(rows));
      err << selector << ": ESS " << fixed(e.ess, 1) << " of " << rows.size()
          << (e.clamped ? " (clamped)" : "") << (e.degenerate ? " (degenerate)" : "") << '\n';
    }
    return kExitOk;
  }
};

// ---------------------------------------------------------------- serve

std::atomic<httplib::Server*> g_server{nullptr};

extern "C" void stop_server(int) {
  if (auto* s = g_server.load()) s->stop();
}

struct ServeCommand {
  std::string artifacts;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string cors_origin = "*";

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("serve", "Serve artifacts over a read-only JSON API");
    c->add_option("--artifacts", artifacts, "Directory holding fit/epaa outputs")->required();
    c->add_option("--port", port, "TCP port (0 picks a free one)");
    c->add_option("--host", host, "Bind address");
    c->add_option("--cors-origin", cors_origin, "Access-Control-Allow-Origin value");
  }

  int run(std::ostream& o, std::ostream& err) const {
    auto catalog = std::make_shared<const ArtifactCatalog>(ArtifactCatalog::load(artifacts));
    ServiceOptions options;
    options.cors_origin = cors_origin;
    Service service(options);
    service.set_catalog(catalog);
    httplib::Server server;
    service.install(server);
    service.install_request_log(server, err);
    int bound = -1;
    if (port == 0) {
      bound = server.bind_to_any_port(host);
    } else if (port > 0 && port <= 65535 && server.bind_to_port(host, port)) {
      bound = port;
    }
    if (bound <= 0) {
      err << "error: cannot bind " << host << ":" << port << '\n';
      return kExitFailure;
    }
    g_server = &server;
    std::signal(SIGINT, stop_server);
    std::signal(SIGTERM, stop_server);
    o << "hoopstat: serving " << catalog->artifacts.size() << " artifacts from " << artifacts
      << " at http://" << host << ":" << bound << std::endl;
    const bool ok = server.listen_after_bind();
    g_server = nullptr;
    return ok ? kExitOk : kExitFailure;
  }
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"hoopstat: Bayesian shot-profile clustering, expected points and EPAA"};
  app.require_subcommand(1);
  IngestCommand ingest;
  FitCommand fit;
  EpCommand ep;
  EpaaCommand epaa_cmd;
  SimulateCommand simulate;
  ReportCommand report;
  TraceCommand trace;
  ServeCommand serve;
  ingest.add(app);
  fit.add(app);
  ep.add(app);
  epaa_cmd.add(app);
  simulate.add(app);
  report.add(app);
  trace.add(app);
  serve.add(app);
  std::string manifest_path;
  auto* replay = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  replay->add_option("manifest", manifest_path, "manifest.json")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << "run 'hoopstat --help' for usage\n";
    return kExitUsage;
  }

  try {
    const auto* cmd = app.get_subcommands().front();
    const std::string name = cmd->get_name();
    if (name == "ingest") return ingest.run(out, err);
    if (name == "fit") return fit.run(out, err);
    if (name == "ep") return ep.run(out, err);
    if (name == "epaa") return epaa_cmd.run(out, err);
    if (name == "simulate") return simulate.run(out, err);
    if (name == "report") return report.run(out, err);
    if (name == "trace") return trace.run(out, err);
    if (name == "serve") return serve.run(out, err);
    if (name == "replay") {
      const Json manifest = read_json(manifest_path);
      return run_cli(manifest.at("argv").get<std::vector<std::string>>(), out, err);
    }
    err << "usage error: unknown command " << name << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace hoopstat
