// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hoopstat/dataset.hpp"
#include "hoopstat/region.hpp"

namespace hoopstat {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<const double> values() const { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Hyperparameters of the two-facet mixture.
struct Priors {
  std::size_t selection_clusters = 20;  // L
  std::size_t accuracy_clusters = 20;   // J
  // Dirichlet concentration of each selection profile.
  double profile_concentration = 5.0;
  // Dirichlet concentration of the selection-cluster weights.
  double selection_weight_concentration = 5.0;
  // Dirichlet concentration of the accuracy-cluster weights.
  double accuracy_weight_concentration = 5.0;
  // Beta prior on every per-region make probability.
  double accuracy_prior_a = 1.0;
  double accuracy_prior_b = 1.0;
  // Points per made shot in each region; its length fixes K.
  std::vector<int> point_values = default_point_values();

  std::size_t num_regions() const { return point_values.size(); }

  friend bool operator==(const Priors&, const Priors&) = default;
};

void validate(const Priors& priors);

// One full parameter draw. Memberships are zero-based cluster indices.
struct ModelState {
  Matrix selection;                         // L x K, rows on the simplex
  Matrix accuracy;                          // J x K, entries in [0, 1]
  std::vector<std::size_t> selection_of;    // length I, values < L
  std::vector<std::size_t> accuracy_of;     // length I, values < J
  std::vector<double> selection_weights;    // length L simplex
  std::vector<double> accuracy_weights;     // length J simplex

  std::size_t num_selection_clusters() const { return selection.rows(); }
  std::size_t num_accuracy_clusters() const { return accuracy.rows(); }
  std::size_t num_regions() const { return selection.cols(); }
  std::size_t num_entities() const { return selection_of.size(); }

  friend bool operator==(const ModelState&, const ModelState&) = default;
};

inline constexpr double kSimplexTolerance = 1e-12;

// Throws NumericError naming the first violated invariant.
void validate(const ModelState& state);
void check_dimensions(const ModelState& state, const Dataset& data, const Priors& priors);

struct ChainConfig {
  std::size_t iterations = 10000;
  std::size_t burn_in = 3000;
  std::size_t thin = 1;
  std::uint64_t seed = 0;
  // Independent chains; their retained draws are concatenated in order.
  std::size_t chains = 1;

  std::size_t retained_per_chain() const {
    return iterations > burn_in ? (iterations - burn_in) / thin : 0;
  }
  std::size_t retained() const { return chains * retained_per_chain(); }

  friend bool operator==(const ChainConfig&, const ChainConfig&) = default;
};

void validate(const ChainConfig& config);

struct EntityKey {
  std::string entity_id;
  int season = 0;

  std::string label() const { return entity_id + "_" + std::to_string(season); }
  friend bool operator==(const EntityKey&, const EntityKey&) = default;
};

// Retained chain plus everything needed to interpret and reuse it.
struct PosteriorDraws {
  std::vector<ModelState> draws;
  Priors priors;
  ChainConfig config;
  std::string dataset_fingerprint;
  std::vector<EntityKey> entity_index;
  // The fitted counts, row i matching entity_index[i].
  Dataset data;

  std::size_t num_regions() const { return priors.num_regions(); }
  // Row index of an entity, matched by "<id>_<season>" label or by bare id
  // when that id is unique. Throws DataError listing valid ids otherwise.
  std::size_t find_entity(std::string_view id_or_label) const;

  friend bool operator==(const PosteriorDraws&, const PosteriorDraws&) = default;
};

// Log joint density of data and parameters, up to the multinomial and
// binomial coefficients (constant in the parameters).
double log_joint(const ModelState& state, const Dataset& data, const Priors& priors);

// x * log(y) with the 0 * log(0) = 0 convention.
inline double xlogy(double x, double log_y) { return x == 0.0 ? 0.0 : x * log_y; }

}  // namespace hoopstat
