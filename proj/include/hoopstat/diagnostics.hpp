// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hoopstat/model.hpp"

namespace hoopstat {

struct EssResult {
  double ess = 0.0;
  // The raw estimate exceeded the series length (anticorrelated series).
  bool clamped = false;
  // The series is constant; ess is reported as the length.
  bool degenerate = false;
};

// Effective sample size with Geyer's initial positive sequence estimator.
// Requires at least 10 finite values.
EssResult effective_sample_size(std::span<const double> series);

struct TraceRow {
  std::size_t chain = 0;
  std::size_t iteration = 0;  // 1-based sweep number within the chain
  double value = 0.0;
};

// Scalar trace of one quantity across retained draws. Selectors use 1-based
// indices: p[l][k], q[j][k], pi[l], theta[j], w[i], z[i], or logpost for the
// log joint density. Unknown selectors throw ConfigError listing valid forms.
std::vector<TraceRow> trace_export(const PosteriorDraws& posterior, std::string_view selector);

std::string describe_selectors(const PosteriorDraws& posterior);

}  // namespace hoopstat
