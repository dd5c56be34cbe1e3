// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "hoopstat/dataset.hpp"
#include "hoopstat/model.hpp"

namespace hoopstat {

using Json = nlohmann::json;

// Wire form of a ModelState: {p, q, w, z, pi, theta}; memberships are
// written 1-based.
Json to_json(const ModelState& state);
ModelState model_state_from_json(const Json& j);

Json to_json(const Priors& priors);
Priors priors_from_json(const Json& j);

Json to_json(const ChainConfig& config);
ChainConfig chain_config_from_json(const Json& j);

Json to_json(const RegionCounts& row);
RegionCounts region_counts_from_json(const Json& j);

// Posterior directory layout: meta.json (priors, config, fingerprint,
// entity index and fitted counts) and draws.jsonl (one state per line).
void save_posterior(const std::filesystem::path& dir, const PosteriorDraws& posterior);
PosteriorDraws load_posterior(const std::filesystem::path& dir);

void write_text(const std::filesystem::path& path, const std::string& text);
Json read_json(const std::filesystem::path& path);

}  // namespace hoopstat
