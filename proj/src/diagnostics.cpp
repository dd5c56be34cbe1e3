// Apache License, Version 2.0, refer to LICENSE.txt

#include "hoopstat/diagnostics.hpp"

#include <cmath>
#include <functional>
#include <regex>

#include "hoopstat/errors.hpp"

namespace hoopstat {

EssResult effective_sample_size(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < 10) throw ConfigError("effective_sample_size needs at least 10 values");
  double mean = 0.0;
  for (double x : series) {
    if (!std::isfinite(x)) throw NumericError("effective_sample_size: non-finite value");
    mean += x;
  }
  mean /= static_cast<double>(n);

  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += (series[i] - mean) * (series[i + lag] - mean);
    return s / static_cast<double>(n);
  };

  EssResult out;
  const double var = autocov(0);
  if (var <= 0.0) {
    out.ess = static_cast<double>(n);
    out.degenerate = true;
    return out;
  }

  // Sum consecutive autocorrelation pairs while they stay positive.
  double pair_sum = 0.0;
  for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
    const double pair = (autocov(2 * m) + autocov(2 * m + 1)) / var;
    if (pair <= 0.0) break;
    pair_sum += pair;
  }
  const double tau = -1.0 + 2.0 * pair_sum;
  const double raw = tau > 0.0 ? static_cast<double>(n) / tau : static_cast<double>(n) + 1.0;
  if (raw > static_cast<double>(n)) {
    out.ess = static_cast<double>(n);
    out.clamped = true;
  } else {
    out.ess = raw;
  }
  return out;
}

namespace {

using Extractor = std::function<double(const ModelState&)>;

std::size_t parse_index(const std::string& s, std::size_t bound, std::string_view selector,
                        const PosteriorDraws& posterior) {
  const auto idx = std::stoull(s);
  if (idx < 1 || idx > bound) {
    throw ConfigError("selector '" + std::string(selector) + "' index out of range; " +
                      describe_selectors(posterior));
  }
  return static_cast<std::size_t>(idx - 1);
}

Extractor make_extractor(const PosteriorDraws& posterior, std::string_view selector) {
  const auto& pr = posterior.priors;
  const auto K = pr.num_regions();
  const auto I = posterior.entity_index.size();
  const std::string sel(selector);
  static const std::regex matrix_re(R"((p|q)\[(\d+)\]\[(\d+)\])");
  static const std::regex vector_re(R"((pi|theta|w|z)\[(\d+)\])");
  std::smatch m;

  if (sel == "logpost") {
    return [&posterior](const ModelState& s) {
      return log_joint(s, posterior.data, posterior.priors);
    };
  }
  if (std::regex_match(sel, m, matrix_re)) {
    const bool is_p = m[1] == "p";
    const auto row = parse_index(m[2], is_p ? pr.selection_clusters : pr.accuracy_clusters,
                                 selector, posterior);
    const auto col = parse_index(m[3], K, selector, posterior);
    if (is_p) return [row, col](const ModelState& s) { return s.selection(row, col); };
    return [row, col](const ModelState& s) { return s.accuracy(row, col); };
  }
  if (std::regex_match(sel, m, vector_re)) {
    const std::string name = m[1];
    if (name == "pi") {
      const auto l = parse_index(m[2], pr.selection_clusters, selector, posterior);
      return [l](const ModelState& s) { return s.selection_weights[l]; };
    }
    if (name == "theta") {
      const auto j = parse_index(m[2], pr.accuracy_clusters, selector, posterior);
      return [j](const ModelState& s) { return s.accuracy_weights[j]; };
    }
    const auto i = parse_index(m[2], I, selector, posterior);
    if (name == "w") {
      return [i](const ModelState& s) { return static_cast<double>(s.selection_of[i] + 1); };
    }
    return [i](const ModelState& s) { return static_cast<double>(s.accuracy_of[i] + 1); };
  }
  throw ConfigError("unknown selector '" + sel + "'; " + describe_selectors(posterior));
}

}  // namespace

std::string describe_selectors(const PosteriorDraws& posterior) {
  const auto& pr = posterior.priors;
  const auto L = std::to_string(pr.selection_clusters);
  const auto J = std::to_string(pr.accuracy_clusters);
  const auto K = std::to_string(pr.num_regions());
  const auto I = std::to_string(posterior.entity_index.size());
  return "valid selectors: logpost, p[1.." + L + "][1.." + K + "], q[1.." + J + "][1.." + K +
         "], pi[1.." + L + "], theta[1.." + J + "], w[1.." + I + "], z[1.." + I + "]";
}

std::vector<TraceRow> trace_export(const PosteriorDraws& posterior, std::string_view selector) {
  const auto extract = make_extractor(posterior, selector);
  const auto& cfg = posterior.config;
  const auto per_chain = std::max<std::size_t>(cfg.retained_per_chain(), 1);
  std::vector<TraceRow> rows;
  rows.reserve(posterior.draws.size());
  for (std::size_t d = 0; d < posterior.draws.size(); ++d) {
    const auto chain = d / per_chain;
    const auto within = d % per_chain;
    rows.push_back({chain, cfg.burn_in + (within + 1) * cfg.thin, extract(posterior.draws[d])});
  }
  return rows;
}

}  // namespace hoopstat
