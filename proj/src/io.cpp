// Apache License, Version 2.0, refer to LICENSE.txt

#include "hoopstat/io.hpp"

#include <fstream>
#include <sstream>

#include "hoopstat/errors.hpp"
#include "hoopstat/hash.hpp"

namespace hoopstat {

namespace fs = std::filesystem;

namespace {

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j, const char* name) {
  if (!j.is_array() || j.empty()) throw DataError(std::string(name) + " must be a nonempty array");
  const auto rows = j.size();
  const auto cols = j.front().size();
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      throw DataError(std::string(name) + " rows must have equal length");
    }
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

std::vector<std::size_t> labels_from_json(const Json& j, const char* name) {
  std::vector<std::size_t> out;
  for (const auto& v : j) {
    const auto x = v.get<std::int64_t>();
    if (x < 1) throw DataError(std::string(name) + " memberships are 1-based");
    out.push_back(static_cast<std::size_t>(x - 1));
  }
  return out;
}

std::vector<std::size_t> one_based(const std::vector<std::size_t>& v) {
  std::vector<std::size_t> out(v);
  for (auto& x : out) ++x;
  return out;
}

}  // namespace

Json to_json(const ModelState& s) {
  return Json{{"p", matrix_to_json(s.selection)},
              {"q", matrix_to_json(s.accuracy)},
              {"w", one_based(s.selection_of)},
              {"z", one_based(s.accuracy_of)},
              {"pi", s.selection_weights},
              {"theta", s.accuracy_weights}};
}

ModelState model_state_from_json(const Json& j) {
  try {
    ModelState s;
    s.selection = matrix_from_json(j.at("p"), "p");
    s.accuracy = matrix_from_json(j.at("q"), "q");
    s.selection_of = labels_from_json(j.at("w"), "w");
    s.accuracy_of = labels_from_json(j.at("z"), "z");
    s.selection_weights = j.at("pi").get<std::vector<double>>();
    s.accuracy_weights = j.at("theta").get<std::vector<double>>();
    validate(s);
    return s;
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed model state: ") + e.what());
  } catch (const NumericError& e) {
    throw DataError(std::string("invalid model state: ") + e.what());
  }
}

Json to_json(const Priors& p) {
  return Json{{"L", p.selection_clusters},
              {"J", p.accuracy_clusters},
              {"alpha", p.profile_concentration},
              {"beta", p.selection_weight_concentration},
              {"gamma", p.accuracy_weight_concentration},
              {"beta_a", p.accuracy_prior_a},
              {"beta_b", p.accuracy_prior_b},
              {"point_values", p.point_values}};
}

Priors priors_from_json(const Json& j) {
  Priors p;
  p.selection_clusters = j.at("L").get<std::size_t>();
  p.accuracy_clusters = j.at("J").get<std::size_t>();
  p.profile_concentration = j.at("alpha").get<double>();
  p.selection_weight_concentration = j.at("beta").get<double>();
  p.accuracy_weight_concentration = j.at("gamma").get<double>();
  p.accuracy_prior_a = j.at("beta_a").get<double>();
  p.accuracy_prior_b = j.at("beta_b").get<double>();
  p.point_values = j.at("point_values").get<std::vector<int>>();
  validate(p);
  return p;
}

Json to_json(const ChainConfig& c) {
  return Json{{"iterations", c.iterations}, {"burn_in", c.burn_in}, {"thin", c.thin},
              {"seed", c.seed},             {"chains", c.chains}};
}

ChainConfig chain_config_from_json(const Json& j) {
  ChainConfig c;
  c.iterations = j.at("iterations").get<std::size_t>();
  c.burn_in = j.at("burn_in").get<std::size_t>();
  c.thin = j.at("thin").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.chains = j.value("chains", std::size_t{1});
  validate(c);
  return c;
}

Json to_json(const RegionCounts& row) {
  return Json{{"entity_id", row.entity_id},
              {"season", row.season},
              {"attempts", row.attempts},
              {"makes", row.makes}};
}

RegionCounts region_counts_from_json(const Json& j) {
  RegionCounts row;
  row.entity_id = j.at("entity_id").get<std::string>();
  row.season = j.at("season").get<int>();
  row.attempts = j.at("attempts").get<std::vector<std::int64_t>>();
  row.makes = j.at("makes").get<std::vector<std::int64_t>>();
  validate(row);
  return row;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

Json read_json(const fs::path& path) {
  try {
    return Json::parse(read_file(path));
  } catch (const Json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void save_posterior(const fs::path& dir, const PosteriorDraws& posterior) {
  fs::create_directories(dir);
  std::string draws;
  for (const auto& s : posterior.draws) {
    draws += to_json(s).dump();
    draws += '\n';
  }
  write_text(dir / "draws.jsonl", draws);

  Json index = Json::array();
  for (const auto& key : posterior.entity_index) {
    index.push_back({{"entity_id", key.entity_id}, {"season", key.season}});
  }
  Json counts = Json::array();
  for (const auto& row : posterior.data.rows) counts.push_back(to_json(row));

  Json meta{{"artifact", "posterior"},
            {"format_version", 1},
            {"entity_kind", to_string(posterior.data.kind)},
            {"priors", to_json(posterior.priors)},
            {"config", to_json(posterior.config)},
            {"dataset_fingerprint", posterior.dataset_fingerprint},
            {"entity_index", index},
            {"counts", counts},
            {"draws_sha256", sha256_hex(draws)}};
  write_text(dir / "meta.json", meta.dump(2) + "\n");
}

PosteriorDraws load_posterior(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("posterior directory not found: " + dir.string());
  const Json meta = read_json(dir / "meta.json");
  PosteriorDraws out;
  try {
    if (meta.at("artifact") != "posterior") {
      throw DataError(dir.string() + " does not hold a posterior artifact");
    }
    out.priors = priors_from_json(meta.at("priors"));
    out.config = chain_config_from_json(meta.at("config"));
    out.dataset_fingerprint = meta.at("dataset_fingerprint").get<std::string>();
    out.data.kind = parse_entity_kind(meta.at("entity_kind").get<std::string>());
    for (const auto& key : meta.at("entity_index")) {
      out.entity_index.push_back(
          {key.at("entity_id").get<std::string>(), key.at("season").get<int>()});
    }
    for (const auto& row : meta.at("counts")) out.data.rows.push_back(region_counts_from_json(row));
  } catch (const Json::exception& e) {
    throw DataError(dir.string() + "/meta.json: " + e.what());
  } catch (const ConfigError& e) {
    throw DataError(dir.string() + "/meta.json: " + e.what());
  }
  validate(out.data);
  if (fingerprint(out.data) != out.dataset_fingerprint) {
    throw DataError(dir.string() + ": stored counts do not match the dataset fingerprint");
  }

  const std::string draws = read_file(dir / "draws.jsonl");
  if (meta.contains("draws_sha256") && meta["draws_sha256"] != sha256_hex(draws)) {
    throw DataError(dir.string() + "/draws.jsonl does not match its recorded hash");
  }
  std::istringstream lines(draws);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.draws.push_back(model_state_from_json(Json::parse(line)));
    } catch (const std::exception& e) {
      throw DataError(dir.string() + "/draws.jsonl line " + std::to_string(lineno) + ": " +
                      e.what());
    }
    try {
      check_dimensions(out.draws.back(), out.data, out.priors);
    } catch (const ConfigError& e) {
      throw DataError(dir.string() + "/draws.jsonl line " + std::to_string(lineno) + ": " +
                      e.what());
    }
  }
  if (out.draws.size() != out.config.retained()) {
    throw DataError(dir.string() + ": expected " + std::to_string(out.config.retained()) +
                    " draws, found " + std::to_string(out.draws.size()));
  }
  return out;
}

}  // namespace hoopstat
