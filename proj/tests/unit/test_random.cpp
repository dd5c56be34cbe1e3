// Apache License, Version 2.0, refer to LICENSE.txt

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "hoopstat/errors.hpp"
#include "hoopstat/random.hpp"

using namespace hoopstat;
using Catch::Approx;

namespace {

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

template <typename Draw>
Moments moments(std::size_t n, Draw draw) {
  double sum = 0.0;
  double sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = draw();
    sum += x;
    sq += x * x;
  }
  const double mean = sum / static_cast<double>(n);
  return {mean, sq / static_cast<double>(n) - mean * mean};
}

}  // namespace

TEST_CASE("streams are reproducible and substreams differ") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  auto s1 = Rng::substream(42, {1, 2});
  auto s2 = Rng::substream(42, {1, 2});
  auto s3 = Rng::substream(42, {2, 1});
  const auto x = s1.next();
  CHECK(x == s2.next());
  CHECK(x != s3.next());
}

TEST_CASE("uniform variates stay in range") {
  Rng rng(1);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    const double v = rng.uniform_open();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    REQUIRE(v > 0.0);
    REQUIRE(v < 1.0);
  }
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 70000; ++i) ++hits[rng.uniform_index(7)];
  for (int h : hits) CHECK(std::abs(h - 10000) < 500);
}

TEST_CASE("normal moments") {
  Rng rng(2);
  const auto m = moments(200000, [&] { return rng.normal(); });
  CHECK(std::abs(m.mean) < 0.01);
  CHECK(m.var == Approx(1.0).margin(0.02));
}

TEST_CASE("gamma moments across shapes") {
  Rng rng(3);
  for (double shape : {0.05, 0.3, 1.0, 2.5, 40.0}) {
    const auto m = moments(200000, [&] { return rng.gamma(shape); });
    INFO("shape " << shape);
    CHECK(m.mean == Approx(shape).epsilon(0.03));
    CHECK(m.var == Approx(shape).epsilon(0.08));
  }
  for (int i = 0; i < 1000; ++i) CHECK(std::isfinite(rng.log_gamma_variate(1e-3)));
}

TEST_CASE("beta moments") {
  Rng rng(4);
  const double a = 5.0, b = 1.0;
  const auto m = moments(200000, [&] { return rng.beta(a, b); });
  CHECK(m.mean == Approx(a / (a + b)).margin(0.003));
  CHECK(m.var == Approx(a * b / ((a + b) * (a + b) * (a + b + 1))).epsilon(0.05));
}

TEST_CASE("dirichlet lands on the simplex with the right mean") {
  Rng rng(5);
  const std::vector<double> alpha{15.0, 5.0};
  std::vector<double> out(2);
  double first = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    rng.dirichlet(alpha, out);
    REQUIRE(std::abs(out[0] + out[1] - 1.0) < 1e-12);
    first += out[0];
  }
  CHECK(first / n == Approx(0.75).margin(0.003));

  const std::vector<double> tiny(5, 1e-3);
  std::vector<double> sparse(5);
  rng.dirichlet(tiny, sparse);
  CHECK(std::accumulate(sparse.begin(), sparse.end(), 0.0) == Approx(1.0).margin(1e-12));
}

TEST_CASE("binomial moments and edge cases") {
  Rng rng(6);
  CHECK(rng.binomial(0, 0.3) == 0);
  CHECK(rng.binomial(50, 0.0) == 0);
  CHECK(rng.binomial(50, 1.0) == 50);
  for (auto [n, p] : {std::pair<std::int64_t, double>{10, 0.3}, {8000, 0.45}, {100000, 0.001}}) {
    const auto m = moments(100000, [&] { return static_cast<double>(rng.binomial(n, p)); });
    const double mean = static_cast<double>(n) * p;
    INFO("n " << n << " p " << p);
    CHECK(m.mean == Approx(mean).epsilon(0.01));
    CHECK(m.var == Approx(mean * (1 - p)).epsilon(0.05));
  }
}

TEST_CASE("binomial quantile is monotone in p") {
  Rng rng(7);
  for (int i = 0; i < 2000; ++i) {
    const double u = rng.uniform();
    const std::int64_t n = 1 + static_cast<std::int64_t>(rng.uniform_index(500));
    const double p = rng.uniform();
    const double p2 = std::min(1.0, p + 0.05 * rng.uniform());
    REQUIRE(binomial_quantile(n, p, u) <= binomial_quantile(n, p2, u));
  }
}

TEST_CASE("multinomial preserves the count") {
  Rng rng(8);
  const std::vector<double> probs{0.5, 0.0, 0.25, 0.25};
  std::vector<std::int64_t> out(4);
  std::vector<double> share(4, 0.0);
  for (int i = 0; i < 20000; ++i) {
    rng.multinomial(40, probs, out);
    REQUIRE(std::accumulate(out.begin(), out.end(), std::int64_t{0}) == 40);
    REQUIRE(out[1] == 0);
    for (int k = 0; k < 4; ++k) share[k] += static_cast<double>(out[k]);
  }
  CHECK(share[0] / (40.0 * 20000) == Approx(0.5).margin(0.005));
  CHECK(share[2] / (40.0 * 20000) == Approx(0.25).margin(0.005));
}

TEST_CASE("categorical in log space") {
  Rng rng(9);
  const std::vector<double> logw{-1000.0, -1000.0 + std::log(3.0)};
  int second = 0;
  for (int i = 0; i < 40000; ++i) second += static_cast<int>(rng.categorical_log(logw));
  CHECK(second / 40000.0 == Approx(0.75).margin(0.01));
  const double ninf = -std::numeric_limits<double>::infinity();
  const std::vector<double> one_finite{ninf, 0.0, ninf};
  CHECK(rng.categorical_log(one_finite) == 1);
  const std::vector<double> none{ninf, ninf};
  CHECK_THROWS_AS(rng.categorical_log(none), NumericError);
}

TEST_CASE("log binomial coefficient") {
  CHECK(log_choose(5, 2) == Approx(std::log(10.0)));
  CHECK(log_choose(7, 0) == Approx(0.0).margin(1e-12));
  CHECK(lgamma_safe(5.0) == Approx(std::log(24.0)));
}
