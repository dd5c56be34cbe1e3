// Apache License, Version 2.0, refer to LICENSE.txt

#include "hoopstat/sampler.hpp"

#include <cmath>
#include <exception>
#include <sstream>
#include <thread>

#include "hoopstat/errors.hpp"
#include "hoopstat/kmeans.hpp"

namespace hoopstat {

namespace {

std::string dump_weights(std::string_view block, std::size_t entity, const Dataset& data,
                         std::span<const double> log_weights, const char* reason) {
  std::ostringstream msg;
  msg.precision(17);
  msg << block << " membership update failed for entity " << entity << " ("
      << data.rows[entity].label() << "): " << reason << "\n  log-weights:";
  for (double lw : log_weights) msg << ' ' << lw;
  msg << "\n  attempts:";
  for (auto n : data.rows[entity].attempts) msg << ' ' << n;
  msg << "\n  makes:";
  for (auto m : data.rows[entity].makes) msg << ' ' << m;
  return msg.str();
}

std::size_t sample_membership(Rng& rng, std::span<const double> log_weights,
                              std::string_view block, std::size_t entity, const Dataset& data) {
  try {
    return rng.categorical_log(log_weights);
  } catch (const NumericError& e) {
    throw NumericError(dump_weights(block, entity, data, log_weights, e.what()));
  }
}

}  // namespace

void gibbs_sweep(ModelState& state, const Dataset& data, const Priors& priors, Rng& rng) {
  const auto I = data.size();
  const auto K = priors.num_regions();
  const auto L = priors.selection_clusters;
  const auto J = priors.accuracy_clusters;

  // Selection memberships.
  {
    Matrix log_profile(L, K);
    std::vector<double> log_weight(L);
    for (std::size_t l = 0; l < L; ++l) {
      log_weight[l] = std::log(state.selection_weights[l]);
      for (std::size_t k = 0; k < K; ++k) log_profile(l, k) = std::log(state.selection(l, k));
    }
    std::vector<double> lw(L);
    for (std::size_t i = 0; i < I; ++i) {
      const auto& n = data.rows[i].attempts;
      for (std::size_t l = 0; l < L; ++l) {
        double s = log_weight[l];
        for (std::size_t k = 0; k < K; ++k) s += xlogy(static_cast<double>(n[k]), log_profile(l, k));
        lw[l] = s;
      }
      state.selection_of[i] = sample_membership(rng, lw, "selection", i, data);
    }
  }

  // Accuracy memberships.
  {
    Matrix log_make(J, K);
    Matrix log_miss(J, K);
    std::vector<double> log_weight(J);
    for (std::size_t j = 0; j < J; ++j) {
      log_weight[j] = std::log(state.accuracy_weights[j]);
      for (std::size_t k = 0; k < K; ++k) {
        log_make(j, k) = std::log(state.accuracy(j, k));
        log_miss(j, k) = std::log1p(-state.accuracy(j, k));
      }
    }
    std::vector<double> lw(J);
    for (std::size_t i = 0; i < I; ++i) {
      const auto& n = data.rows[i].attempts;
      const auto& m = data.rows[i].makes;
      for (std::size_t j = 0; j < J; ++j) {
        double s = log_weight[j];
        for (std::size_t k = 0; k < K; ++k) {
          const double made = static_cast<double>(m[k]);
          const double missed = static_cast<double>(n[k] - m[k]);
          s += xlogy(made, log_make(j, k)) + xlogy(missed, log_miss(j, k));
        }
        lw[j] = s;
      }
      state.accuracy_of[i] = sample_membership(rng, lw, "accuracy", i, data);
    }
  }

  // Sufficient statistics under the new memberships.
  Matrix selection_counts(L, K, 0.0);
  Matrix made(J, K, 0.0);
  Matrix missed(J, K, 0.0);
  std::vector<double> selection_sizes(L, 0.0);
  std::vector<double> accuracy_sizes(J, 0.0);
  for (std::size_t i = 0; i < I; ++i) {
    const auto l = state.selection_of[i];
    const auto j = state.accuracy_of[i];
    selection_sizes[l] += 1.0;
    accuracy_sizes[j] += 1.0;
    for (std::size_t k = 0; k < K; ++k) {
      const auto n = data.rows[i].attempts[k];
      const auto m = data.rows[i].makes[k];
      selection_counts(l, k) += static_cast<double>(n);
      made(j, k) += static_cast<double>(m);
      missed(j, k) += static_cast<double>(n - m);
    }
  }

  // Selection profiles.
  std::vector<double> alpha(K);
  for (std::size_t l = 0; l < L; ++l) {
    for (std::size_t k = 0; k < K; ++k) {
      alpha[k] = priors.profile_concentration + selection_counts(l, k);
    }
    rng.dirichlet(alpha, state.selection.row(l));
  }

  // Accuracy profiles.
  for (std::size_t j = 0; j < J; ++j) {
    for (std::size_t k = 0; k < K; ++k) {
      state.accuracy(j, k) =
          rng.beta(priors.accuracy_prior_a + made(j, k), priors.accuracy_prior_b + missed(j, k));
    }
  }

  // Cluster weights.
  for (std::size_t l = 0; l < L; ++l) {
    selection_sizes[l] += priors.selection_weight_concentration;
  }
  rng.dirichlet(selection_sizes, state.selection_weights);
  for (std::size_t j = 0; j < J; ++j) accuracy_sizes[j] += priors.accuracy_weight_concentration;
  rng.dirichlet(accuracy_sizes, state.accuracy_weights);
}

namespace {

constexpr std::uint64_t kSweepStream = 0x7377656570ULL;

std::vector<ModelState> run_one_chain(const Dataset& data, const Priors& priors,
                                      const ChainConfig& config, std::size_t chain,
                                      const SweepObserver& observer) {
  ModelState state = kmeans_init(data, priors, config.seed + chain);
  check_dimensions(state, data, priors);
  Rng rng = Rng::substream(config.seed, {chain, kSweepStream});

  std::vector<ModelState> kept;
  kept.reserve(config.retained_per_chain());
  for (std::size_t iter = 1; iter <= config.iterations; ++iter) {
    gibbs_sweep(state, data, priors, rng);
    if (iter > config.burn_in && (iter - config.burn_in) % config.thin == 0) {
      kept.push_back(state);
    }
    if (observer) observer(chain, iter);
  }
  return kept;
}

}  // namespace

PosteriorDraws run_chain(const Dataset& data, const Priors& priors, const ChainConfig& config,
                         const SweepObserver& observer) {
  validate(config);
  validate(priors);
  validate(data);
  if (data.num_regions() != priors.num_regions()) {
    throw ConfigError("dataset has " + std::to_string(data.num_regions()) +
                      " regions but priors define " + std::to_string(priors.num_regions()));
  }

  std::vector<std::vector<ModelState>> per_chain(config.chains);
  if (config.chains == 1) {
    per_chain[0] = run_one_chain(data, priors, config, 0, observer);
  } else {
    std::vector<std::exception_ptr> errors(config.chains);
    std::vector<std::thread> workers;
    for (std::size_t c = 0; c < config.chains; ++c) {
      workers.emplace_back([&, c] {
        try {
          per_chain[c] = run_one_chain(data, priors, config, c, observer);
        } catch (...) {
          errors[c] = std::current_exception();
        }
      });
    }
    for (auto& t : workers) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  PosteriorDraws out;
  out.priors = priors;
  out.config = config;
  out.dataset_fingerprint = fingerprint(data);
  out.data = data;
  for (const auto& row : data.rows) out.entity_index.push_back({row.entity_id, row.season});
  out.draws.reserve(config.retained());
  for (auto& chain : per_chain) {
    for (auto& s : chain) out.draws.push_back(std::move(s));
  }
  return out;
}

}  // namespace hoopstat
