// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hoopstat/dataset.hpp"
#include "hoopstat/model.hpp"

namespace hoopstat::testing {

inline RegionCounts make_counts(std::string id, std::vector<std::int64_t> attempts,
                                std::vector<std::int64_t> makes, int season = 2021) {
  return RegionCounts{std::move(id), season, std::move(attempts), std::move(makes)};
}

inline Priors tiny_priors(std::size_t L, std::size_t J, std::vector<int> points = {2, 3}) {
  Priors p;
  p.selection_clusters = L;
  p.accuracy_clusters = J;
  p.point_values = std::move(points);
  return p;
}

// Three entities over two regions, counts at most 5.
inline Dataset tiny_dataset() {
  Dataset d;
  d.rows = {make_counts("A", {5, 0}, {0, 0}), make_counts("B", {0, 5}, {0, 0}),
            make_counts("C", {5, 0}, {0, 0})};
  return d;
}

// One-cluster state whose selection row and accuracy row are given.
inline ModelState single_cluster_state(std::vector<double> selection, std::vector<double> accuracy,
                                       std::size_t entities = 1) {
  ModelState s;
  const auto K = selection.size();
  s.selection = Matrix(1, K);
  s.accuracy = Matrix(1, K);
  for (std::size_t k = 0; k < K; ++k) {
    s.selection(0, k) = selection[k];
    s.accuracy(0, k) = accuracy[k];
  }
  s.selection_of.assign(entities, 0);
  s.accuracy_of.assign(entities, 0);
  s.selection_weights = {1.0};
  s.accuracy_weights = {1.0};
  return s;
}

inline PosteriorDraws posterior_of(std::vector<ModelState> draws, Dataset data,
                                   std::vector<int> points) {
  PosteriorDraws post;
  post.draws = std::move(draws);
  post.priors.selection_clusters = post.draws.front().num_selection_clusters();
  post.priors.accuracy_clusters = post.draws.front().num_accuracy_clusters();
  post.priors.point_values = std::move(points);
  post.config.iterations = post.draws.size() + 1;
  post.config.burn_in = 1;
  post.data = std::move(data);
  for (const auto& r : post.data.rows) post.entity_index.push_back({r.entity_id, r.season});
  post.dataset_fingerprint = fingerprint(post.data);
  return post;
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            ("hoopstat_test_" + std::to_string(stamp) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace hoopstat::testing
