// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <functional>

#include "hoopstat/dataset.hpp"
#include "hoopstat/model.hpp"
#include "hoopstat/random.hpp"

namespace hoopstat {

// One systematic Gibbs sweep, updating in this fixed order:
//   selection memberships, accuracy memberships, selection profiles,
//   accuracy profiles, selection weights, accuracy weights.
// Every block is drawn from its conjugate full conditional; clusters with no
// members draw from the prior.
void gibbs_sweep(ModelState& state, const Dataset& data, const Priors& priors, Rng& rng);

// Called after every sweep with the 1-based iteration number (all chains).
using SweepObserver = std::function<void(std::size_t chain, std::size_t iteration)>;

// k-means initialisation followed by `iterations` sweeps per chain, keeping
// every `thin`-th state after burn-in. Chains run concurrently with seeds
// derived from (config.seed, chain index); output is schedule independent.
PosteriorDraws run_chain(const Dataset& data, const Priors& priors, const ChainConfig& config,
                         const SweepObserver& observer = {});

}  // namespace hoopstat
