// Apache License, Version 2.0, refer to LICENSE.txt

#include "hoopstat/exact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hoopstat/errors.hpp"

namespace hoopstat {

namespace {

std::vector<std::size_t> decode(std::uint64_t code, std::size_t base, std::size_t n) {
  std::vector<std::size_t> digits(n);
  for (std::size_t i = 0; i < n; ++i) {
    digits[i] = static_cast<std::size_t>(code % base);
    code /= base;
  }
  return digits;
}

std::uint64_t checked_power(std::uint64_t base, std::size_t exp, std::uint64_t limit) {
  std::uint64_t out = 1;
  for (std::size_t i = 0; i < exp; ++i) {
    if (out > limit / base) return limit + 1;
    out *= base;
  }
  return out;
}

// Log marginal probability of a membership vector under a symmetric
// Dirichlet(conc) prior on the cluster weights.
double log_membership_prior(const std::vector<std::size_t>& labels, std::size_t clusters,
                            double conc) {
  std::vector<double> sizes(clusters, 0.0);
  for (auto c : labels) sizes[c] += 1.0;
  const double n = static_cast<double>(labels.size());
  double out = lgamma_safe(static_cast<double>(clusters) * conc) -
               lgamma_safe(static_cast<double>(clusters) * conc + n);
  for (double s : sizes) out += lgamma_safe(conc + s) - lgamma_safe(conc);
  return out;
}

// Dirichlet-multinomial marginal of the attempt counts given selection
// memberships, dropping the multinomial coefficients.
double log_selection_evidence(const Dataset& data, const std::vector<std::size_t>& labels,
                              std::size_t clusters, double alpha) {
  const auto K = data.num_regions();
  Matrix counts(clusters, K, 0.0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t k = 0; k < K; ++k) {
      counts(labels[i], k) += static_cast<double>(data.rows[i].attempts[k]);
    }
  }
  const double kd = static_cast<double>(K);
  double out = 0.0;
  for (std::size_t l = 0; l < clusters; ++l) {
    double total = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      out += lgamma_safe(alpha + counts(l, k)) - lgamma_safe(alpha);
      total += counts(l, k);
    }
    out += lgamma_safe(kd * alpha) - lgamma_safe(kd * alpha + total);
  }
  return out;
}

double log_beta_fn(double a, double b) { return lgamma_safe(a) + lgamma_safe(b) - lgamma_safe(a + b); }

// Beta-binomial marginal of the makes given accuracy memberships, dropping
// the binomial coefficients.
double log_accuracy_evidence(const Dataset& data, const std::vector<std::size_t>& labels,
                             std::size_t clusters, double a, double b) {
  const auto K = data.num_regions();
  Matrix made(clusters, K, 0.0);
  Matrix missed(clusters, K, 0.0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t k = 0; k < K; ++k) {
      made(labels[i], k) += static_cast<double>(data.rows[i].makes[k]);
      missed(labels[i], k) += static_cast<double>(data.rows[i].attempts[k] - data.rows[i].makes[k]);
    }
  }
  double out = 0.0;
  for (std::size_t j = 0; j < clusters; ++j) {
    for (std::size_t k = 0; k < K; ++k) {
      out += log_beta_fn(a + made(j, k), b + missed(j, k)) - log_beta_fn(a, b);
    }
  }
  return out;
}

}  // namespace

ExactPosterior exact_posterior_tiny(const Dataset& data, const Priors& priors) {
  validate(data);
  validate(priors);
  const auto I = data.size();
  const auto K = data.num_regions();
  const auto L = priors.selection_clusters;
  const auto J = priors.accuracy_clusters;
  if (K != priors.num_regions()) throw ConfigError("dataset and priors disagree on region count");

  const auto n_sel = checked_power(L, I, kExactEnumerationLimit);
  const auto n_acc = checked_power(J, I, kExactEnumerationLimit);
  if (n_sel > kExactEnumerationLimit || n_acc > kExactEnumerationLimit ||
      n_sel * n_acc > kExactEnumerationLimit) {
    throw ConfigError("exact enumeration refused: L^I * J^I must not exceed " +
                      std::to_string(kExactEnumerationLimit));
  }

  std::vector<double> log_sel(n_sel);
  for (std::uint64_t c = 0; c < n_sel; ++c) {
    const auto w = decode(c, L, I);
    log_sel[c] = log_membership_prior(w, L, priors.selection_weight_concentration) +
                 log_selection_evidence(data, w, L, priors.profile_concentration);
  }
  std::vector<double> log_acc(n_acc);
  for (std::uint64_t c = 0; c < n_acc; ++c) {
    const auto z = decode(c, J, I);
    log_acc[c] = log_membership_prior(z, J, priors.accuracy_weight_concentration) +
                 log_accuracy_evidence(data, z, J, priors.accuracy_prior_a, priors.accuracy_prior_b);
  }

  ExactPosterior out;
  out.support.reserve(n_sel * n_acc);
  double max_log = -std::numeric_limits<double>::infinity();
  for (std::uint64_t cw = 0; cw < n_sel; ++cw) {
    for (std::uint64_t cz = 0; cz < n_acc; ++cz) {
      const double lp = log_sel[cw] + log_acc[cz];
      max_log = std::max(max_log, lp);
      out.support.push_back({cw, cz, lp});
    }
  }
  double total = 0.0;
  for (auto& a : out.support) {
    a.probability = std::exp(a.probability - max_log);
    total += a.probability;
  }
  for (auto& a : out.support) a.probability /= total;

  out.selection_probs = Matrix(I, L);
  out.accuracy_probs = Matrix(I, J);
  out.selection_coclustering = Matrix(I, I);
  out.accuracy_coclustering = Matrix(I, I);
  out.selection_profile_mean = Matrix(L, K);
  out.accuracy_profile_mean = Matrix(J, K);

  const double alpha = priors.profile_concentration;
  const double a = priors.accuracy_prior_a;
  const double b = priors.accuracy_prior_b;
  for (const auto& asg : out.support) {
    const double pr = asg.probability;
    const auto w = decode(asg.selection_code, L, I);
    const auto z = decode(asg.accuracy_code, J, I);
    for (std::size_t i = 0; i < I; ++i) {
      out.selection_probs(i, w[i]) += pr;
      out.accuracy_probs(i, z[i]) += pr;
      for (std::size_t i2 = 0; i2 < I; ++i2) {
        if (w[i] == w[i2]) out.selection_coclustering(i, i2) += pr;
        if (z[i] == z[i2]) out.accuracy_coclustering(i, i2) += pr;
      }
    }
    Matrix sel_counts(L, K, 0.0);
    Matrix made(J, K, 0.0);
    Matrix tried(J, K, 0.0);
    for (std::size_t i = 0; i < I; ++i) {
      for (std::size_t k = 0; k < K; ++k) {
        sel_counts(w[i], k) += static_cast<double>(data.rows[i].attempts[k]);
        made(z[i], k) += static_cast<double>(data.rows[i].makes[k]);
        tried(z[i], k) += static_cast<double>(data.rows[i].attempts[k]);
      }
    }
    for (std::size_t l = 0; l < L; ++l) {
      double row_total = 0.0;
      for (std::size_t k = 0; k < K; ++k) row_total += sel_counts(l, k);
      for (std::size_t k = 0; k < K; ++k) {
        out.selection_profile_mean(l, k) +=
            pr * (alpha + sel_counts(l, k)) / (static_cast<double>(K) * alpha + row_total);
      }
    }
    for (std::size_t j = 0; j < J; ++j) {
      for (std::size_t k = 0; k < K; ++k) {
        out.accuracy_profile_mean(j, k) += pr * (a + made(j, k)) / (a + b + tried(j, k));
      }
    }
  }
  return out;
}

ModelState draw_exact_posterior(const ExactPosterior& exact, const Dataset& data,
                                const Priors& priors, Rng& rng) {
  const auto I = data.size();
  const auto K = data.num_regions();
  const auto L = priors.selection_clusters;
  const auto J = priors.accuracy_clusters;

  double u = rng.uniform();
  const ExactPosterior::Assignment* pick = &exact.support.back();
  for (const auto& asg : exact.support) {
    u -= asg.probability;
    if (u < 0.0) {
      pick = &asg;
      break;
    }
  }

  ModelState s;
  s.selection_of = decode(pick->selection_code, L, I);
  s.accuracy_of = decode(pick->accuracy_code, J, I);
  s.selection = Matrix(L, K);
  s.accuracy = Matrix(J, K);
  s.selection_weights.assign(L, 0.0);
  s.accuracy_weights.assign(J, 0.0);

  Matrix sel_counts(L, K, priors.profile_concentration);
  Matrix made(J, K, priors.accuracy_prior_a);
  Matrix missed(J, K, priors.accuracy_prior_b);
  std::vector<double> sel_sizes(L, priors.selection_weight_concentration);
  std::vector<double> acc_sizes(J, priors.accuracy_weight_concentration);
  for (std::size_t i = 0; i < I; ++i) {
    sel_sizes[s.selection_of[i]] += 1.0;
    acc_sizes[s.accuracy_of[i]] += 1.0;
    for (std::size_t k = 0; k < K; ++k) {
      const auto n = data.rows[i].attempts[k];
      const auto m = data.rows[i].makes[k];
      sel_counts(s.selection_of[i], k) += static_cast<double>(n);
      made(s.accuracy_of[i], k) += static_cast<double>(m);
      missed(s.accuracy_of[i], k) += static_cast<double>(n - m);
    }
  }
  for (std::size_t l = 0; l < L; ++l) rng.dirichlet(sel_counts.row(l), s.selection.row(l));
  for (std::size_t j = 0; j < J; ++j) {
    for (std::size_t k = 0; k < K; ++k) s.accuracy(j, k) = rng.beta(made(j, k), missed(j, k));
  }
  rng.dirichlet(sel_sizes, s.selection_weights);
  rng.dirichlet(acc_sizes, s.accuracy_weights);
  return s;
}

}  // namespace hoopstat
