// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <vector>

#include "hoopstat/dataset.hpp"
#include "hoopstat/model.hpp"
#include "hoopstat/random.hpp"

namespace hoopstat {

struct KMeansResult {
  std::vector<std::size_t> labels;
  Matrix centroids;
  double inertia = 0.0;  // within-cluster sum of squares
};

// Lloyd's algorithm with k-means++ seeding, best of `restarts` runs. Empty
// clusters are re-seeded at the point farthest from its centroid; a cluster
// can stay empty only when there are fewer distinct points than k.
KMeansResult kmeans(const Matrix& points, std::size_t k, Rng& rng, std::size_t restarts = 10,
                    std::size_t max_iterations = 300);

// Per-entity attempt shares (rows sum to 1; zero-shot entities get 1/K).
Matrix attempt_share_features(const Dataset& data);
// Per-entity make rates per region, 0 where a region has no attempts.
Matrix make_rate_features(const Dataset& data);

// Chain starting point: memberships from k-means on shot shares and make
// rates, profiles from member means, weights from membership fractions.
ModelState kmeans_init(const Dataset& data, const Priors& priors, std::uint64_t seed);

}  // namespace hoopstat
