// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hoopstat/dataset.hpp"
#include "hoopstat/model.hpp"
#include "hoopstat/random.hpp"

namespace hoopstat {

struct PredictiveConfig {
  // Hypothetical number of shots the entity takes.
  std::int64_t n_shots = 8000;
  // Games in the season, for per-game scaling.
  double games_divisor = 72.0;
  std::size_t samples_per_draw = 1;
  std::uint64_t seed = 0;
  // Keep the simulated per-region attempts and makes of every sample.
  bool keep_region_detail = false;
};

void validate(const PredictiveConfig& cfg);

struct MembershipProbs {
  std::vector<double> selection;  // length L, sums to 1
  std::vector<double> accuracy;   // length J, sums to 1
};

// Posterior probability of each cluster for an entity with these counts,
// given one parameter draw (Bayes' theorem in log space).
MembershipProbs membership_probs(const RegionCounts& counts, const ModelState& draw);

struct RegionDetail {
  std::vector<std::int64_t> attempts;
  std::vector<std::int64_t> makes;
};

// Simulated season point totals, one per (draw, repetition).
struct PointsDraws {
  std::string entity_label;
  std::int64_t n_shots = 0;
  double games_divisor = 1.0;
  std::vector<std::size_t> draw_index;
  std::vector<std::int64_t> totals;
  std::vector<double> per_game;
  std::vector<RegionDetail> region_detail;  // empty unless requested

  double mean() const;
};

// Player minus average-team point totals on the same number of shots,
// paired by posterior draw index.
struct EpaaDraws {
  std::string player_label;
  std::int64_t n_shots = 0;
  double games_divisor = 1.0;
  std::vector<std::size_t> draw_index;
  std::vector<std::int64_t> diffs;
  std::vector<double> per_game;
  double epaa_mean = 0.0;  // mean of diffs, season-total scale
};

// Posterior predictive points for one entity. Each retained draw resamples
// memberships from membership_probs, then region attempts from the selection
// profile and makes from the accuracy profile. Every (draw, repetition) uses
// its own random stream derived from (cfg.seed, draw, repetition).
PointsDraws expected_points(const RegionCounts& counts, const PosteriorDraws& posterior,
                            const PredictiveConfig& cfg);

// Points for the "average team": for every draw a team is picked uniformly
// from the posterior's entities and simulated as in expected_points. With
// `num_draws` > 0 the draw index cycles through the posterior that many times
// over (used to pair with a posterior of a different length).
PointsDraws average_team_points(const PosteriorDraws& team_posterior, const PredictiveConfig& cfg,
                                std::size_t num_draws = 0);

// Expected points above average. The player side uses cfg.seed; the team
// side a seed derived from it, so the two sides are independent.
EpaaDraws epaa(const RegionCounts& player, const PosteriorDraws& player_posterior,
               const PosteriorDraws& team_posterior, const PredictiveConfig& cfg);

// Forward simulation: attempts ~ Multinomial(shots[i], selection row of
// entity i), makes ~ Binomial(attempts, accuracy row of entity i). Entities
// are named S001, S002, ... in the given season.
Dataset simulate_dataset(const ModelState& truth, std::span<const std::int64_t> shots,
                         std::uint64_t seed, int season = 2021);

// Exact predictive probability mass of the point total (index = points) for
// an entity, averaged over the given draws. Cost grows like n_shots^3, so it
// is meant for small n_shots.
std::vector<double> exact_points_pmf(const RegionCounts& counts, std::span<const ModelState> draws,
                                     std::int64_t n_shots, std::span<const int> point_values);

// One JSON object per line: {"draw_index", "per_game", "total"}.
std::string points_jsonl(const PointsDraws& points);
std::string points_jsonl(const EpaaDraws& epaa);

}  // namespace hoopstat
