// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

namespace hoopstat {

// Seeded random stream with the variate generators the model needs.
//
// All generators are implemented here on top of the raw 64-bit engine so
// that a given seed reproduces bit-identical draws regardless of the
// standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Independent stream derived deterministically from (seed, ids...). Used to
  // give every posterior draw its own stream so parallel schedules do not
  // change results.
  static Rng substream(std::uint64_t seed, std::initializer_list<std::uint64_t> ids);

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  // Uniform on (0, 1).
  double uniform_open() { return (static_cast<double>(engine_() >> 12) + 0.5) * 0x1.0p-52; }
  // Uniform integer in [0, n).
  std::size_t uniform_index(std::size_t n);

  double normal();
  // Log of a Gamma(shape, 1) variate; stays finite for very small shapes.
  double log_gamma_variate(double shape);
  double gamma(double shape);
  double beta(double a, double b);
  void dirichlet(std::span<const double> alpha, std::span<double> out);

  // Binomial by inverse transform: the returned count is a nondecreasing
  // function of p for a fixed underlying uniform.
  std::int64_t binomial(std::int64_t n, double p);
  void multinomial(std::int64_t n, std::span<const double> probs, std::span<std::int64_t> out);

  // Index sampled with probability proportional to exp(log_weights[i]).
  // Throws NumericError if no weight is positive and finite.
  std::size_t categorical_log(std::span<const double> log_weights);

 private:
  explicit Rng(std::seed_seq&& seq) : engine_(seq) {}

  std::mt19937_64 engine_;
};

// Inverse binomial CDF at u: smallest x with P(X <= x) >= u.
std::int64_t binomial_quantile(std::int64_t n, double p, double u);

double log_choose(std::int64_t n, std::int64_t k);
// Thread-safe log-gamma.
double lgamma_safe(double x);

}  // namespace hoopstat
