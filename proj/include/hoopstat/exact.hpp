// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <vector>

#include "hoopstat/dataset.hpp"
#include "hoopstat/model.hpp"
#include "hoopstat/random.hpp"

namespace hoopstat {

// Largest L^I * J^I the enumeration accepts.
inline constexpr std::uint64_t kExactEnumerationLimit = 1'000'000;

// Exact posterior of a small instance, by enumerating every membership
// assignment and integrating profiles and weights out analytically
// (Dirichlet-multinomial and beta-binomial marginal likelihoods).
struct ExactPosterior {
  Matrix selection_probs;         // I x L, P(selection_of[i] = l | data)
  Matrix accuracy_probs;          // I x J
  Matrix selection_coclustering;  // I x I, P(selection_of[a] == selection_of[b] | data)
  Matrix accuracy_coclustering;   // I x I
  Matrix selection_profile_mean;  // L x K, posterior mean of each selection profile
  Matrix accuracy_profile_mean;   // J x K

  // Every assignment with its posterior probability; memberships are encoded
  // as base-L / base-J digits with entity 0 least significant.
  struct Assignment {
    std::uint64_t selection_code;
    std::uint64_t accuracy_code;
    double probability;
  };
  std::vector<Assignment> support;
};

// Throws ConfigError if L^I * J^I exceeds kExactEnumerationLimit.
ExactPosterior exact_posterior_tiny(const Dataset& data, const Priors& priors);

// A draw from the exact joint posterior: memberships from the enumeration,
// then profiles and weights from their conditionals given the memberships.
ModelState draw_exact_posterior(const ExactPosterior& exact, const Dataset& data,
                                const Priors& priors, Rng& rng);

}  // namespace hoopstat
