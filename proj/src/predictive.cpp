// Apache License, Version 2.0, refer to LICENSE.txt

#include "hoopstat/predictive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "hoopstat/errors.hpp"
#include "hoopstat/io.hpp"
#include "hoopstat/parallel.hpp"

namespace hoopstat {

namespace {

constexpr std::uint64_t kPointsStream = 0x706f696e7473ULL;
constexpr std::uint64_t kPickStream = 0x7069636bULL;
constexpr std::uint64_t kTeamSeedSalt = 0x9e3779b97f4a7c15ULL;

std::vector<double> normalise_log(std::span<const double> lw) {
  const double max_log = *std::max_element(lw.begin(), lw.end());
  std::vector<double> out(lw.size());
  double total = 0.0;
  for (std::size_t i = 0; i < lw.size(); ++i) {
    out[i] = std::exp(lw[i] - max_log);
    total += out[i];
  }
  for (auto& x : out) x /= total;
  return out;
}

std::size_t sample_index(std::span<const double> probs, double u) {
  for (std::size_t i = 0; i < probs.size(); ++i) {
    u -= probs[i];
    if (u < 0.0) return i;
  }
  for (std::size_t i = probs.size(); i-- > 0;) {
    if (probs[i] > 0.0) return i;
  }
  return 0;
}

std::int64_t sample_points(const ModelState& draw, const MembershipProbs& mp,
                           std::int64_t n_shots, std::span<const int> values, Rng& rng,
                           RegionDetail* detail) {
  const auto K = draw.num_regions();
  const auto l = sample_index(mp.selection, rng.uniform());
  const auto j = sample_index(mp.accuracy, rng.uniform());
  std::vector<std::int64_t> attempts(K);
  rng.multinomial(n_shots, draw.selection.row(l), attempts);
  std::vector<std::int64_t> makes(K);
  std::int64_t total = 0;
  for (std::size_t k = 0; k < K; ++k) {
    makes[k] = rng.binomial(attempts[k], draw.accuracy(j, k));
    total += makes[k] * values[k];
  }
  if (detail) *detail = {std::move(attempts), std::move(makes)};
  return total;
}

void check_regions(const RegionCounts& counts, const PosteriorDraws& posterior) {
  if (counts.num_regions() != posterior.num_regions()) {
    throw DataError(counts.label() + " has " + std::to_string(counts.num_regions()) +
                    " regions; posterior has " + std::to_string(posterior.num_regions()));
  }
}

PointsDraws make_points(std::string label, std::size_t n, const PredictiveConfig& cfg) {
  PointsDraws out;
  out.entity_label = std::move(label);
  out.n_shots = cfg.n_shots;
  out.games_divisor = cfg.games_divisor;
  out.draw_index.resize(n);
  out.totals.resize(n);
  out.per_game.resize(n);
  if (cfg.keep_region_detail) out.region_detail.resize(n);
  return out;
}

}  // namespace

void validate(const PredictiveConfig& cfg) {
  if (cfg.n_shots < 1) throw ConfigError("n_shots must be at least 1");
  if (!(cfg.games_divisor > 0.0) || !std::isfinite(cfg.games_divisor)) {
    throw ConfigError("games divisor must be positive");
  }
  if (cfg.samples_per_draw < 1) throw ConfigError("samples_per_draw must be at least 1");
}

MembershipProbs membership_probs(const RegionCounts& counts, const ModelState& draw) {
  const auto K = draw.num_regions();
  if (counts.num_regions() != K) {
    throw DataError(counts.label() + ": region count does not match the posterior draw");
  }
  const auto L = draw.num_selection_clusters();
  const auto J = draw.num_accuracy_clusters();

  std::vector<double> lw(L);
  for (std::size_t l = 0; l < L; ++l) {
    double s = std::log(draw.selection_weights[l]);
    for (std::size_t k = 0; k < K; ++k) {
      s += xlogy(static_cast<double>(counts.attempts[k]), std::log(draw.selection(l, k)));
    }
    lw[l] = s;
  }
  std::vector<double> la(J);
  for (std::size_t j = 0; j < J; ++j) {
    double s = std::log(draw.accuracy_weights[j]);
    for (std::size_t k = 0; k < K; ++k) {
      const double q = draw.accuracy(j, k);
      s += xlogy(static_cast<double>(counts.makes[k]), std::log(q)) +
           xlogy(static_cast<double>(counts.attempts[k] - counts.makes[k]), std::log1p(-q));
    }
    la[j] = s;
  }

  // A lone cluster is chosen with certainty, whatever the likelihood.
  if (L == 1) lw[0] = 0.0;
  if (J == 1) la[0] = 0.0;
  auto all_impossible = [](const std::vector<double>& v) {
    return std::none_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  if (all_impossible(lw) || all_impossible(la)) {
    std::ostringstream msg;
    msg << counts.label() << ": every cluster has zero probability;";
    const bool selection = all_impossible(lw);
    const auto C = selection ? L : J;
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t k = 0; k < K; ++k) {
        const bool bad =
            selection ? (draw.selection(c, k) == 0.0 && counts.attempts[k] > 0)
                      : ((draw.accuracy(c, k) == 0.0 && counts.makes[k] > 0) ||
                         (draw.accuracy(c, k) == 1.0 && counts.makes[k] < counts.attempts[k]));
        if (bad) {
          msg << ' ' << (selection ? "selection" : "accuracy") << " cluster " << c + 1
              << " region " << k + 1;
          break;
        }
      }
    }
    throw NumericError(msg.str());
  }
  return {normalise_log(lw), normalise_log(la)};
}

double PointsDraws::mean() const {
  if (totals.empty()) return 0.0;
  double s = 0.0;
  for (auto t : totals) s += static_cast<double>(t);
  return s / static_cast<double>(totals.size());
}

PointsDraws expected_points(const RegionCounts& counts, const PosteriorDraws& posterior,
                            const PredictiveConfig& cfg) {
  validate(cfg);
  if (posterior.draws.empty()) throw DataError("posterior has no draws");
  check_regions(counts, posterior);
  const auto S = posterior.draws.size();
  const auto R = cfg.samples_per_draw;
  PointsDraws out = make_points(counts.label(), S * R, cfg);
  const auto& values = posterior.priors.point_values;

  std::vector<MembershipProbs> probs(S);
  parallel_for(S, [&](std::size_t s) { probs[s] = membership_probs(counts, posterior.draws[s]); });
  parallel_for(S * R, [&](std::size_t idx) {
    const auto s = idx / R;
    const auto r = idx % R;
    Rng rng = Rng::substream(cfg.seed, {s, r, kPointsStream});
    out.draw_index[idx] = s;
    out.totals[idx] = sample_points(posterior.draws[s], probs[s], cfg.n_shots, values, rng,
                                    cfg.keep_region_detail ? &out.region_detail[idx] : nullptr);
    out.per_game[idx] = static_cast<double>(out.totals[idx]) / cfg.games_divisor;
  });
  return out;
}

PointsDraws average_team_points(const PosteriorDraws& team_posterior, const PredictiveConfig& cfg,
                                std::size_t num_draws) {
  validate(cfg);
  if (team_posterior.draws.empty()) throw DataError("team posterior has no draws");
  const auto& teams = team_posterior.data.rows;
  if (teams.empty()) throw DataError("team posterior has no entities");
  const auto S_post = team_posterior.draws.size();
  const auto S = num_draws > 0 ? num_draws : S_post;
  const auto R = cfg.samples_per_draw;
  PointsDraws out = make_points("average-team", S * R, cfg);
  const auto& values = team_posterior.priors.point_values;

  parallel_for(S * R, [&](std::size_t idx) {
    const auto s = idx / R;
    const auto r = idx % R;
    const auto& draw = team_posterior.draws[s % S_post];
    Rng pick = Rng::substream(cfg.seed, {s, r, kPickStream});
    const auto& team = teams[pick.uniform_index(teams.size())];
    const auto mp = membership_probs(team, draw);
    Rng rng = Rng::substream(cfg.seed, {s, r, kPointsStream});
    out.draw_index[idx] = s % S_post;
    out.totals[idx] = sample_points(draw, mp, cfg.n_shots, values, rng,
                                    cfg.keep_region_detail ? &out.region_detail[idx] : nullptr);
    out.per_game[idx] = static_cast<double>(out.totals[idx]) / cfg.games_divisor;
  });
  return out;
}

EpaaDraws epaa(const RegionCounts& player, const PosteriorDraws& player_posterior,
               const PosteriorDraws& team_posterior, const PredictiveConfig& cfg) {
  if (player_posterior.num_regions() != team_posterior.num_regions()) {
    throw DataError("player posterior has " + std::to_string(player_posterior.num_regions()) +
                    " regions but team posterior has " +
                    std::to_string(team_posterior.num_regions()));
  }
  if (player_posterior.priors.point_values != team_posterior.priors.point_values) {
    throw DataError("player and team posteriors use different region point values");
  }
  const auto mine = expected_points(player, player_posterior, cfg);
  PredictiveConfig team_cfg = cfg;
  team_cfg.seed = cfg.seed ^ kTeamSeedSalt;
  team_cfg.keep_region_detail = false;
  const auto avg = average_team_points(team_posterior, team_cfg, player_posterior.draws.size());

  EpaaDraws out;
  out.player_label = player.label();
  out.n_shots = cfg.n_shots;
  out.games_divisor = cfg.games_divisor;
  out.draw_index = mine.draw_index;
  out.diffs.resize(mine.totals.size());
  out.per_game.resize(mine.totals.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < mine.totals.size(); ++i) {
    out.diffs[i] = mine.totals[i] - avg.totals[i];
    out.per_game[i] = static_cast<double>(out.diffs[i]) / cfg.games_divisor;
    sum += static_cast<double>(out.diffs[i]);
  }
  out.epaa_mean = sum / static_cast<double>(out.diffs.size());
  return out;
}

Dataset simulate_dataset(const ModelState& truth, std::span<const std::int64_t> shots,
                         std::uint64_t seed, int season) {
  validate(truth);
  if (shots.size() != truth.num_entities()) {
    throw ConfigError("shots_per_entity has " + std::to_string(shots.size()) +
                      " entries but the truth has " + std::to_string(truth.num_entities()) +
                      " entities");
  }
  const auto K = truth.num_regions();
  const auto width = std::max<std::size_t>(3, std::to_string(shots.size()).size());
  Dataset out;
  out.kind = EntityKind::Team;
  for (std::size_t i = 0; i < shots.size(); ++i) {
    if (shots[i] < 0) throw ConfigError("shots per entity must be non-negative");
    Rng rng = Rng::substream(seed, {i});
    RegionCounts row;
    std::string num = std::to_string(i + 1);
    row.entity_id = "S" + std::string(width - num.size(), '0') + num;
    row.season = season;
    row.attempts.assign(K, 0);
    row.makes.assign(K, 0);
    rng.multinomial(shots[i], truth.selection.row(truth.selection_of[i]), row.attempts);
    for (std::size_t k = 0; k < K; ++k) {
      row.makes[k] = rng.binomial(row.attempts[k], truth.accuracy(truth.accuracy_of[i], k));
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

namespace {

double binomial_pmf(std::int64_t n, std::int64_t x, double p) {
  if (p <= 0.0) return x == 0 ? 1.0 : 0.0;
  if (p >= 1.0) return x == n ? 1.0 : 0.0;
  return std::exp(log_choose(n, x) + static_cast<double>(x) * std::log(p) +
                  static_cast<double>(n - x) * std::log1p(-p));
}

// Point-total pmf for a known selection row and accuracy row.
std::vector<double> profile_pmf(std::span<const double> selection, std::span<const double> accuracy,
                                std::int64_t n_shots, std::span<const int> values,
                                std::size_t max_points) {
  const auto K = selection.size();
  const auto N = static_cast<std::size_t>(n_shots);
  // state(remaining shots, points so far)
  Matrix state(N + 1, max_points + 1, 0.0);
  state(N, 0) = 1.0;
  double tail = std::accumulate(selection.begin(), selection.end(), 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    const bool last = k + 1 == K;
    const double cond = last ? 1.0 : (tail > 0.0 ? std::clamp(selection[k] / tail, 0.0, 1.0) : 0.0);
    tail -= selection[k];
    Matrix next(N + 1, max_points + 1, 0.0);
    for (std::size_t r = 0; r <= N; ++r) {
      for (std::size_t t = 0; t <= max_points; ++t) {
        const double mass = state(r, t);
        if (mass == 0.0) continue;
        for (std::size_t a = 0; a <= r; ++a) {
          if (last && a != r) continue;
          const double pa = last ? 1.0 : binomial_pmf(static_cast<std::int64_t>(r),
                                                      static_cast<std::int64_t>(a), cond);
          if (pa == 0.0) continue;
          for (std::size_t m = 0; m <= a; ++m) {
            const double pm = binomial_pmf(static_cast<std::int64_t>(a),
                                           static_cast<std::int64_t>(m), accuracy[k]);
            if (pm == 0.0) continue;
            next(r - a, t + m * static_cast<std::size_t>(values[k])) += mass * pa * pm;
          }
        }
      }
    }
    state = std::move(next);
  }
  std::vector<double> pmf(max_points + 1, 0.0);
  for (std::size_t t = 0; t <= max_points; ++t) pmf[t] = state(0, t);
  return pmf;
}

}  // namespace

std::vector<double> exact_points_pmf(const RegionCounts& counts, std::span<const ModelState> draws,
                                     std::int64_t n_shots, std::span<const int> point_values) {
  if (draws.empty()) throw DataError("exact_points_pmf: no draws");
  if (n_shots < 0) throw ConfigError("exact_points_pmf: negative shot count");
  const int top = *std::max_element(point_values.begin(), point_values.end());
  const auto max_points = static_cast<std::size_t>(n_shots) * static_cast<std::size_t>(top);
  std::vector<double> pmf(max_points + 1, 0.0);
  const double draw_weight = 1.0 / static_cast<double>(draws.size());
  for (const auto& draw : draws) {
    const auto mp = membership_probs(counts, draw);
    for (std::size_t l = 0; l < mp.selection.size(); ++l) {
      for (std::size_t j = 0; j < mp.accuracy.size(); ++j) {
        const double w = draw_weight * mp.selection[l] * mp.accuracy[j];
        if (w == 0.0) continue;
        const auto part = profile_pmf(draw.selection.row(l), draw.accuracy.row(j), n_shots,
                                      point_values, max_points);
        for (std::size_t t = 0; t <= max_points; ++t) pmf[t] += w * part[t];
      }
    }
  }
  return pmf;
}

namespace {

template <typename Values>
std::string jsonl(const std::vector<std::size_t>& draw_index, const Values& totals,
                  const std::vector<double>& per_game) {
  std::string out;
  for (std::size_t i = 0; i < totals.size(); ++i) {
    out += Json{{"draw_index", draw_index[i]}, {"total", totals[i]}, {"per_game", per_game[i]}}
               .dump();
    out += '\n';
  }
  return out;
}

}  // namespace

std::string points_jsonl(const PointsDraws& points) {
  return jsonl(points.draw_index, points.totals, points.per_game);
}

std::string points_jsonl(const EpaaDraws& e) { return jsonl(e.draw_index, e.diffs, e.per_game); }

}  // namespace hoopstat
