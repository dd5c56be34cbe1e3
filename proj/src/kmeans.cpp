// Apache License, Version 2.0, refer to LICENSE.txt

#include "hoopstat/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "hoopstat/errors.hpp"

namespace hoopstat {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    d += diff * diff;
  }
  return d;
}

Matrix seed_plus_plus(const Matrix& points, std::size_t k, Rng& rng) {
  const auto n = points.rows();
  Matrix centroids(k, points.cols());
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  std::size_t pick = rng.uniform_index(n);
  for (std::size_t c = 0; c < k; ++c) {
    std::copy_n(points.row(pick).begin(), points.cols(), centroids.row(c).begin());
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(points.row(i), centroids.row(c)));
      total += nearest[i];
    }
    if (c + 1 == k) break;
    if (total <= 0.0) {
      pick = rng.uniform_index(n);
      continue;
    }
    double target = rng.uniform() * total;
    pick = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      target -= nearest[i];
      if (target < 0.0) {
        pick = i;
        break;
      }
    }
  }
  return centroids;
}

std::size_t assign(const Matrix& points, const Matrix& centroids, std::vector<std::size_t>& labels,
                   std::vector<double>& dist) {
  std::size_t changed = 0;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.rows(); ++c) {
      const double d = squared_distance(points.row(i), centroids.row(c));
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    if (labels[i] != best) ++changed;
    labels[i] = best;
    dist[i] = best_d;
  }
  return changed;
}

// Returns the sizes of every cluster after recomputing centroids.
std::vector<std::size_t> update_centroids(const Matrix& points,
                                          const std::vector<std::size_t>& labels,
                                          Matrix& centroids) {
  std::vector<std::size_t> sizes(centroids.rows(), 0);
  Matrix sums(centroids.rows(), points.cols());
  for (std::size_t i = 0; i < points.rows(); ++i) {
    ++sizes[labels[i]];
    for (std::size_t d = 0; d < points.cols(); ++d) sums(labels[i], d) += points(i, d);
  }
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    if (sizes[c] == 0) continue;
    for (std::size_t d = 0; d < points.cols(); ++d) {
      centroids(c, d) = sums(c, d) / static_cast<double>(sizes[c]);
    }
  }
  return sizes;
}

// Moves each empty centroid onto the point farthest from its own centroid,
// taken from a cluster that can spare a member. Returns true if anything moved.
bool reseed_empty(const Matrix& points, std::vector<std::size_t>& labels,
                  std::vector<double>& dist, std::vector<std::size_t>& sizes, Matrix& centroids) {
  bool moved = false;
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    if (sizes[c] != 0) continue;
    std::size_t far = points.rows();
    double far_d = 0.0;
    for (std::size_t i = 0; i < points.rows(); ++i) {
      if (sizes[labels[i]] > 1 && dist[i] > far_d) {
        far_d = dist[i];
        far = i;
      }
    }
    if (far == points.rows()) continue;  // every point coincides with its centroid
    std::copy_n(points.row(far).begin(), points.cols(), centroids.row(c).begin());
    --sizes[labels[far]];
    labels[far] = c;
    sizes[c] = 1;
    dist[far] = 0.0;
    moved = true;
  }
  return moved;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, std::size_t k, Rng& rng, std::size_t restarts,
                    std::size_t max_iterations) {
  const auto n = points.rows();
  if (n == 0) throw DataError("kmeans: no points");
  if (k == 0) throw ConfigError("kmeans: k must be positive");

  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (std::size_t run = 0; run < std::max<std::size_t>(restarts, 1); ++run) {
    Matrix centroids = seed_plus_plus(points, k, rng);
    std::vector<std::size_t> labels(n, k);
    std::vector<double> dist(n, 0.0);
    for (std::size_t iter = 0; iter < max_iterations; ++iter) {
      const auto changed = assign(points, centroids, labels, dist);
      auto sizes = update_centroids(points, labels, centroids);
      const bool reseeded = reseed_empty(points, labels, dist, sizes, centroids);
      if (reseeded) update_centroids(points, labels, centroids);
      if (changed == 0 && !reseeded) break;
    }
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      inertia += squared_distance(points.row(i), centroids.row(labels[i]));
    }
    if (inertia < best.inertia) {
      best.labels = std::move(labels);
      best.centroids = std::move(centroids);
      best.inertia = inertia;
    }
  }
  return best;
}

Matrix attempt_share_features(const Dataset& data) {
  const auto K = data.num_regions();
  Matrix out(data.size(), K);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& row = data.rows[i];
    const auto total = row.total_attempts();
    for (std::size_t k = 0; k < K; ++k) {
      out(i, k) = total > 0 ? static_cast<double>(row.attempts[k]) / static_cast<double>(total)
                            : 1.0 / static_cast<double>(K);
    }
  }
  return out;
}

Matrix make_rate_features(const Dataset& data) {
  const auto K = data.num_regions();
  Matrix out(data.size(), K);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& row = data.rows[i];
    for (std::size_t k = 0; k < K; ++k) {
      out(i, k) = row.attempts[k] > 0
                      ? static_cast<double>(row.makes[k]) / static_cast<double>(row.attempts[k])
                      : 0.0;
    }
  }
  return out;
}

namespace {

std::vector<double> membership_fractions(const std::vector<std::size_t>& labels,
                                         std::size_t clusters) {
  const double n = static_cast<double>(labels.size());
  const double floor = 1.0 / (n + static_cast<double>(clusters));
  std::vector<double> weights(clusters, 0.0);
  for (auto c : labels) weights[c] += 1.0;
  double total = 0.0;
  for (auto& w : weights) {
    w = std::max(w / n, floor);
    total += w;
  }
  for (auto& w : weights) w /= total;
  return weights;
}

}  // namespace

ModelState kmeans_init(const Dataset& data, const Priors& priors, std::uint64_t seed) {
  validate(data);
  validate(priors);
  const auto I = data.size();
  const auto K = data.num_regions();
  const auto L = priors.selection_clusters;
  const auto J = priors.accuracy_clusters;
  if (K != priors.num_regions()) throw ConfigError("dataset and priors disagree on region count");

  Rng rng = Rng::substream(seed, {0x6b6d65616e73ULL});
  const Matrix shares = attempt_share_features(data);
  const Matrix rates = make_rate_features(data);

  ModelState state;
  state.selection_of = kmeans(shares, L, rng).labels;
  state.accuracy_of = kmeans(rates, J, rng).labels;

  state.selection = Matrix(L, K, 0.0);
  std::vector<std::size_t> selection_sizes(L, 0);
  for (std::size_t i = 0; i < I; ++i) {
    const auto l = state.selection_of[i];
    ++selection_sizes[l];
    for (std::size_t k = 0; k < K; ++k) state.selection(l, k) += shares(i, k);
  }
  for (std::size_t l = 0; l < L; ++l) {
    auto row = state.selection.row(l);
    if (selection_sizes[l] == 0) {
      std::fill(row.begin(), row.end(), 1.0 / static_cast<double>(K));
      continue;
    }
    // Normalise by the row sum rather than the member count so the row is a
    // simplex to rounding.
    const double sum = std::accumulate(row.begin(), row.end(), 0.0);
    for (auto& x : row) x /= sum;
  }

  Matrix made(J, K, 0.0);
  Matrix tried(J, K, 0.0);
  for (std::size_t i = 0; i < I; ++i) {
    const auto j = state.accuracy_of[i];
    for (std::size_t k = 0; k < K; ++k) {
      made(j, k) += static_cast<double>(data.rows[i].makes[k]);
      tried(j, k) += static_cast<double>(data.rows[i].attempts[k]);
    }
  }
  state.accuracy = Matrix(J, K, 0.5);
  for (std::size_t j = 0; j < J; ++j) {
    for (std::size_t k = 0; k < K; ++k) {
      if (tried(j, k) > 0.0) state.accuracy(j, k) = made(j, k) / tried(j, k);
    }
  }

  state.selection_weights = membership_fractions(state.selection_of, L);
  state.accuracy_weights = membership_fractions(state.accuracy_of, J);
  return state;
}

}  // namespace hoopstat
