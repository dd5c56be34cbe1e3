// Apache License, Version 2.0, refer to LICENSE.txt

#include "hoopstat/model.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "hoopstat/errors.hpp"
#include "hoopstat/random.hpp"

namespace hoopstat {

void validate(const Priors& priors) {
  if (priors.selection_clusters < 1 || priors.accuracy_clusters < 1) {
    throw ConfigError("cluster counts L and J must be at least 1");
  }
  const double concentrations[] = {priors.profile_concentration,
                                   priors.selection_weight_concentration,
                                   priors.accuracy_weight_concentration, priors.accuracy_prior_a,
                                   priors.accuracy_prior_b};
  for (double c : concentrations) {
    if (!(c > 0.0) || !std::isfinite(c)) {
      throw ConfigError("prior concentrations must be positive and finite");
    }
  }
  if (priors.point_values.empty()) throw ConfigError("at least one region is required");
  for (int v : priors.point_values) {
    if (v < 0) throw ConfigError("region point values must be non-negative");
  }
}

namespace {

void check_simplex(std::span<const double> v, const std::string& what) {
  double sum = 0.0;
  for (double x : v) {
    if (!(x >= 0.0 && x <= 1.0)) throw NumericError(what + " has an entry outside [0, 1]");
    sum += x;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << what << " sums to " << sum << ", not 1";
    throw NumericError(msg.str());
  }
}

}  // namespace

void validate(const ModelState& state) {
  const auto L = state.num_selection_clusters();
  const auto J = state.num_accuracy_clusters();
  if (L == 0 || J == 0) throw NumericError("state has no clusters");
  if (state.accuracy.cols() != state.selection.cols()) {
    throw NumericError("selection and accuracy profiles disagree on region count");
  }
  if (state.selection_weights.size() != L || state.accuracy_weights.size() != J) {
    throw NumericError("cluster weight vectors do not match cluster counts");
  }
  if (state.accuracy_of.size() != state.selection_of.size()) {
    throw NumericError("membership vectors have different lengths");
  }
  for (std::size_t l = 0; l < L; ++l) {
    check_simplex(state.selection.row(l), "selection profile " + std::to_string(l + 1));
  }
  for (double x : state.accuracy.values()) {
    if (!(x >= 0.0 && x <= 1.0)) throw NumericError("accuracy profile entry outside [0, 1]");
  }
  check_simplex(state.selection_weights, "selection weights");
  check_simplex(state.accuracy_weights, "accuracy weights");
  for (auto w : state.selection_of) {
    if (w >= L) throw NumericError("selection membership out of range");
  }
  for (auto z : state.accuracy_of) {
    if (z >= J) throw NumericError("accuracy membership out of range");
  }
}

void check_dimensions(const ModelState& state, const Dataset& data, const Priors& priors) {
  if (state.num_selection_clusters() != priors.selection_clusters ||
      state.num_accuracy_clusters() != priors.accuracy_clusters) {
    throw ConfigError("state cluster counts do not match priors");
  }
  if (state.num_regions() != priors.num_regions() || data.num_regions() != priors.num_regions()) {
    throw ConfigError("region count mismatch between data, state and priors");
  }
  if (state.num_entities() != data.size()) {
    throw ConfigError("state membership length does not match dataset size");
  }
}

void validate(const ChainConfig& config) {
  if (config.iterations < 1) throw ConfigError("iterations must be positive");
  if (config.thin < 1) throw ConfigError("thin must be positive");
  if (config.chains < 1) throw ConfigError("chains must be positive");
  if (config.burn_in >= config.iterations) {
    throw ConfigError("burn-in (" + std::to_string(config.burn_in) +
                      ") must be smaller than iterations (" + std::to_string(config.iterations) + ")");
  }
  if (config.retained_per_chain() < 1) {
    throw ConfigError("configuration retains no draws");
  }
}

std::size_t PosteriorDraws::find_entity(std::string_view id_or_label) const {
  std::size_t found = entity_index.size();
  std::size_t matches = 0;
  for (std::size_t i = 0; i < entity_index.size(); ++i) {
    if (entity_index[i].label() == id_or_label) return i;
    if (entity_index[i].entity_id == id_or_label) {
      found = i;
      ++matches;
    }
  }
  if (matches == 1) return found;
  std::ostringstream msg;
  msg << (matches > 1 ? "ambiguous entity '" : "unknown entity '") << id_or_label
      << "'; valid ids:";
  for (const auto& key : entity_index) msg << ' ' << key.label();
  throw DataError(msg.str());
}

namespace {

double log_dirichlet(std::span<const double> x, double concentration) {
  const double k = static_cast<double>(x.size());
  double out = lgamma_safe(k * concentration) - k * lgamma_safe(concentration);
  for (double v : x) out += xlogy(concentration - 1.0, std::log(v));
  return out;
}

}  // namespace

double log_joint(const ModelState& state, const Dataset& data, const Priors& priors) {
  const auto K = state.num_regions();
  double out = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& row = data.rows[i];
    const auto l = state.selection_of[i];
    const auto j = state.accuracy_of[i];
    out += std::log(state.selection_weights[l]) + std::log(state.accuracy_weights[j]);
    for (std::size_t k = 0; k < K; ++k) {
      const double n = static_cast<double>(row.attempts[k]);
      const double m = static_cast<double>(row.makes[k]);
      const double q = state.accuracy(j, k);
      out += xlogy(n, std::log(state.selection(l, k)));
      out += xlogy(m, std::log(q)) + xlogy(n - m, std::log1p(-q));
    }
  }
  for (std::size_t l = 0; l < state.num_selection_clusters(); ++l) {
    out += log_dirichlet(state.selection.row(l), priors.profile_concentration);
  }
  const double a = priors.accuracy_prior_a;
  const double b = priors.accuracy_prior_b;
  const double log_beta_norm = lgamma_safe(a + b) - lgamma_safe(a) - lgamma_safe(b);
  for (double q : state.accuracy.values()) {
    out += log_beta_norm + xlogy(a - 1.0, std::log(q)) + xlogy(b - 1.0, std::log1p(-q));
  }
  out += log_dirichlet(state.selection_weights, priors.selection_weight_concentration);
  out += log_dirichlet(state.accuracy_weights, priors.accuracy_weight_concentration);
  return out;
}

}  // namespace hoopstat
