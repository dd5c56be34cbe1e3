// Apache License, Version 2.0, refer to LICENSE.txt

#include "hoopstat/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "hoopstat/errors.hpp"

namespace hoopstat {

namespace {

// Tail widths for the inverse-transform window: probability outside
// [mean - w, mean + w] is far below double resolution.
constexpr double kTailSd = 12.0;
constexpr double kTailPad = 40.0;

double marsaglia_tsang(Rng& rng, double shape) {
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  while (true) {
    double x = 0.0;
    double v = 0.0;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform_open();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

}  // namespace

double lgamma_safe(double x) {
  int sign = 0;
  return ::lgamma_r(x, &sign);
}

double log_choose(std::int64_t n, std::int64_t k) {
  return lgamma_safe(static_cast<double>(n) + 1.0) - lgamma_safe(static_cast<double>(k) + 1.0) -
         lgamma_safe(static_cast<double>(n - k) + 1.0);
}

Rng::Rng(std::uint64_t seed)
    : Rng(std::seed_seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}) {}

Rng Rng::substream(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) {
  std::vector<std::uint32_t> words{static_cast<std::uint32_t>(seed),
                                   static_cast<std::uint32_t>(seed >> 32)};
  for (auto id : ids) {
    words.push_back(static_cast<std::uint32_t>(id));
    words.push_back(static_cast<std::uint32_t>(id >> 32));
  }
  return Rng(std::seed_seq(words.begin(), words.end()));
}

std::size_t Rng::uniform_index(std::size_t n) {
  if (n <= 1) return 0;
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = 0;
  do {
    x = engine_();
  } while (x >= limit);
  return static_cast<std::size_t>(x % n);
}

double Rng::normal() {
  const double u1 = uniform_open();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::log_gamma_variate(double shape) {
  if (!(shape > 0.0) || !std::isfinite(shape)) {
    throw NumericError("gamma shape must be positive and finite, got " + std::to_string(shape));
  }
  if (shape >= 1.0) return std::log(marsaglia_tsang(*this, shape));
  // Boost small shapes: G(a) = G(a + 1) * U^(1/a).
  return std::log(marsaglia_tsang(*this, shape + 1.0)) + std::log(uniform_open()) / shape;
}

double Rng::gamma(double shape) { return std::exp(log_gamma_variate(shape)); }

double Rng::beta(double a, double b) {
  const double lx = log_gamma_variate(a);
  const double ly = log_gamma_variate(b);
  // x / (x + y) computed from the logs so tiny variates do not underflow.
  return 1.0 / (1.0 + std::exp(ly - lx));
}

void Rng::dirichlet(std::span<const double> alpha, std::span<double> out) {
  double max_log = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    out[k] = log_gamma_variate(alpha[k]);
    max_log = std::max(max_log, out[k]);
  }
  double total = 0.0;
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    out[k] = std::exp(out[k] - max_log);
    total += out[k];
  }
  for (std::size_t k = 0; k < alpha.size(); ++k) out[k] /= total;
}

std::int64_t binomial_quantile(std::int64_t n, double p, double u) {
  if (n <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  const double nd = static_cast<double>(n);
  const double mean = nd * p;
  const double sd = std::sqrt(mean * (1.0 - p));
  const double width = kTailSd * sd + kTailPad;
  const auto lo = static_cast<std::int64_t>(std::max(0.0, std::floor(mean - width)));
  const auto hi = static_cast<std::int64_t>(std::min(nd, std::ceil(mean + width)));

  const double log_p = std::log(p);
  const double log_q = std::log1p(-p);
  const double ratio = p / (1.0 - p);
  std::int64_t x = lo;
  double pmf = std::exp(log_choose(n, lo) + static_cast<double>(lo) * log_p +
                        static_cast<double>(n - lo) * log_q);
  double cdf = pmf;
  while (cdf < u && x < hi) {
    pmf *= static_cast<double>(n - x) / static_cast<double>(x + 1) * ratio;
    ++x;
    cdf += pmf;
  }
  return x;
}

std::int64_t Rng::binomial(std::int64_t n, double p) {
  if (n <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  return binomial_quantile(n, p, uniform_open());
}

void Rng::multinomial(std::int64_t n, std::span<const double> probs,
                      std::span<std::int64_t> out) {
  const std::size_t k_count = probs.size();
  std::fill(out.begin(), out.end(), 0);
  if (k_count == 0) return;
  // Suffix sums give the conditional success probability of each region
  // without accumulating 1 - prefix rounding error.
  std::vector<double> tail(k_count + 1, 0.0);
  for (std::size_t k = k_count; k-- > 0;) tail[k] = tail[k + 1] + probs[k];

  std::int64_t remaining = n;
  for (std::size_t k = 0; k + 1 < k_count && remaining > 0; ++k) {
    const double cond = tail[k] > 0.0 ? std::clamp(probs[k] / tail[k], 0.0, 1.0) : 0.0;
    out[k] = binomial(remaining, cond);
    remaining -= out[k];
  }
  out[k_count - 1] += remaining;
}

std::size_t Rng::categorical_log(std::span<const double> log_weights) {
  double max_log = -std::numeric_limits<double>::infinity();
  for (double lw : log_weights) {
    if (std::isnan(lw)) throw NumericError("categorical: NaN log-weight");
    max_log = std::max(max_log, lw);
  }
  if (!std::isfinite(max_log)) {
    throw NumericError("categorical: no category has positive finite weight");
  }
  double total = 0.0;
  for (double lw : log_weights) total += std::exp(lw - max_log);
  double target = uniform() * total;
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    target -= std::exp(log_weights[i] - max_log);
    if (target < 0.0) return i;
  }
  // Rounding left a sliver at the end: return the last positive category.
  for (std::size_t i = log_weights.size(); i-- > 0;) {
    if (std::isfinite(log_weights[i])) return i;
  }
  return 0;
}

}  // namespace hoopstat
