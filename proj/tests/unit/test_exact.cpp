// Apache License, Version 2.0, refer to LICENSE.txt

#include <catch_amalgamated.hpp>

#include "hoopstat/errors.hpp"
#include "hoopstat/exact.hpp"
#include "support.hpp"

using namespace hoopstat;
using Catch::Approx;

namespace {

// Golden values from an independent enumeration of the collapsed model.
constexpr double kSelectionCo12 = 0.10813672175617478;
constexpr double kSelectionCo13 = 0.8943846117869161;
constexpr double kAccuracyCo12 = 0.5664206642066415;
constexpr double kAccuracyCo13 = 0.7970479704797043;
constexpr double kSelectionMeanFirst = 0.5465283830726255;
constexpr double kAccuracyMeanFirst = 0.261465471797575;
constexpr double kAccuracyMeanSecond = 0.3214285714285714;

// Mixed counts, L = 2, J = 3.
constexpr double kMixedSelectionCo12 = 0.4585373685478048;
constexpr double kMixedSelectionCo13 = 0.5500521794974698;
constexpr double kMixedSelectionCo23 = 0.5424259452516667;
constexpr double kMixedAccuracyCo12 = 0.2659035879374858;
constexpr double kMixedAccuracyCo13 = 0.4199867928681489;
constexpr double kMixedAccuracyCo23 = 0.4067796610169492;
constexpr double kMixedAccuracyMean[2] = {0.48691515640668187, 0.5080710250201778};

}  // namespace

TEST_CASE("single entity with two labels is split evenly") {
  Dataset d;
  d.rows = {testing::make_counts("A", {3, 2}, {1, 1})};
  const auto exact = exact_posterior_tiny(d, testing::tiny_priors(2, 2));
  CHECK(exact.selection_probs(0, 0) == Approx(0.5).margin(1e-12));
  CHECK(exact.selection_probs(0, 1) == Approx(0.5).margin(1e-12));
  CHECK(exact.accuracy_probs(0, 0) == Approx(0.5).margin(1e-12));
}

TEST_CASE("identical entities share their marginals") {
  Dataset d;
  d.rows = {testing::make_counts("A", {3, 2}, {1, 1}), testing::make_counts("B", {3, 2}, {1, 1})};
  const auto exact = exact_posterior_tiny(d, testing::tiny_priors(3, 2));
  for (std::size_t l = 0; l < 3; ++l) {
    CHECK(exact.selection_probs(0, l) == Approx(exact.selection_probs(1, l)).margin(1e-12));
  }
}

TEST_CASE("golden tiny instance") {
  const auto exact = exact_posterior_tiny(testing::tiny_dataset(), testing::tiny_priors(2, 2));
  CHECK(exact.selection_coclustering(0, 2) > exact.selection_coclustering(0, 1));
  CHECK(exact.selection_coclustering(0, 1) == Approx(kSelectionCo12).margin(1e-12));
  CHECK(exact.selection_coclustering(0, 2) == Approx(kSelectionCo13).margin(1e-12));
  CHECK(exact.selection_coclustering(1, 2) == Approx(kSelectionCo12).margin(1e-12));
  CHECK(exact.accuracy_coclustering(0, 1) == Approx(kAccuracyCo12).margin(1e-12));
  CHECK(exact.accuracy_coclustering(0, 2) == Approx(kAccuracyCo13).margin(1e-12));
  CHECK(exact.selection_profile_mean(0, 0) == Approx(kSelectionMeanFirst).margin(1e-12));
  CHECK(exact.selection_profile_mean(1, 0) == Approx(kSelectionMeanFirst).margin(1e-12));
  CHECK(exact.accuracy_profile_mean(0, 0) == Approx(kAccuracyMeanFirst).margin(1e-12));
  CHECK(exact.accuracy_profile_mean(1, 1) == Approx(kAccuracyMeanSecond).margin(1e-12));
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(exact.selection_probs(i, 0) == Approx(0.5).margin(1e-12));
    CHECK(exact.selection_coclustering(i, i) == Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("golden mixed-count instance") {
  Dataset d;
  d.rows = {testing::make_counts("A", {3, 1}, {2, 0}), testing::make_counts("B", {1, 4}, {0, 3}),
            testing::make_counts("C", {2, 2}, {1, 1})};
  const auto exact = exact_posterior_tiny(d, testing::tiny_priors(2, 3));
  CHECK(exact.selection_coclustering(0, 1) == Approx(kMixedSelectionCo12).margin(1e-12));
  CHECK(exact.selection_coclustering(0, 2) == Approx(kMixedSelectionCo13).margin(1e-12));
  CHECK(exact.selection_coclustering(1, 2) == Approx(kMixedSelectionCo23).margin(1e-12));
  CHECK(exact.accuracy_coclustering(0, 1) == Approx(kMixedAccuracyCo12).margin(1e-12));
  CHECK(exact.accuracy_coclustering(0, 2) == Approx(kMixedAccuracyCo13).margin(1e-12));
  CHECK(exact.accuracy_coclustering(1, 2) == Approx(kMixedAccuracyCo23).margin(1e-12));
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(exact.accuracy_profile_mean(j, 0) == Approx(kMixedAccuracyMean[0]).margin(1e-12));
    CHECK(exact.accuracy_profile_mean(j, 1) == Approx(kMixedAccuracyMean[1]).margin(1e-12));
  }
}

TEST_CASE("support probabilities sum to one") {
  const auto exact = exact_posterior_tiny(testing::tiny_dataset(), testing::tiny_priors(2, 2));
  double total = 0.0;
  for (const auto& a : exact.support) total += a.probability;
  CHECK(total == Approx(1.0).margin(1e-12));
  CHECK(exact.support.size() == 64);
}

TEST_CASE("enumeration refuses large instances") {
  Dataset d;
  for (int i = 0; i < 4; ++i) d.rows.push_back(testing::make_counts("E" + std::to_string(i), {1, 1}, {0, 0}));
  CHECK_NOTHROW(exact_posterior_tiny(d, testing::tiny_priors(5, 5)));  // 5^4 * 5^4 = 390625
  CHECK_THROWS_AS(exact_posterior_tiny(d, testing::tiny_priors(6, 6)), ConfigError);
}

TEST_CASE("exact draws follow the enumerated memberships") {
  const auto data = testing::tiny_dataset();
  const auto priors = testing::tiny_priors(2, 2);
  const auto exact = exact_posterior_tiny(data, priors);
  Rng rng(3);
  const int n = 40000;
  double co13 = 0.0;
  for (int r = 0; r < n; ++r) {
    const auto s = draw_exact_posterior(exact, data, priors, rng);
    REQUIRE_NOTHROW(validate(s));
    co13 += s.selection_of[0] == s.selection_of[2] ? 1.0 : 0.0;
  }
  CHECK(co13 / n == Approx(kSelectionCo13).margin(0.01));
}
