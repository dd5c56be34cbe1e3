// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <istream>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hoopstat/io.hpp"

namespace hoopstat {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  friend bool operator==(const Interval&, const Interval&) = default;
};

struct SummaryRow {
  std::string label;
  double mean = 0.0;
  double median = 0.0;
  Interval ci80;
  Interval ci95;
  double sd = 0.0;
  friend bool operator==(const SummaryRow&, const SummaryRow&) = default;
};

// Quantile of sorted data by linear interpolation between order statistics
// (h = (n - 1) * prob).
double quantile_sorted(std::span<const double> sorted, double prob);

// Central credible interval at `level` (e.g. 0.95) from sorted data.
Interval credible_interval(std::span<const double> sorted, double level);

// Mean, median, sample sd and the 80% / 95% central intervals.
SummaryRow summarize(std::string label, std::span<const double> values);

enum class RankKey { Mean, Median };
RankKey parse_rank_key(std::string_view s);

struct RankedRow {
  std::size_t rank = 0;
  SummaryRow summary;
};

// Descending by key. Equal keys share the smaller rank and are listed in
// label order.
std::vector<RankedRow> rank_entities(std::vector<SummaryRow> rows, RankKey by);

struct Correlation {
  double r = 0.0;
  std::size_t n = 0;  // size of the label intersection
};

// Pearson correlation over labels present in both maps.
Correlation correlate(const std::map<std::string, double>& x,
                      const std::map<std::string, double>& y);

// metric name -> ("<entity_id>_<season>" -> value)
using MetricTable = std::map<std::string, std::map<std::string, double>>;

// External metrics CSV: `entity_id,season,metric,value`.
MetricTable parse_metrics(std::istream& in);

std::string ranked_csv(const std::vector<RankedRow>& rows);
Json to_json(const SummaryRow& row);
SummaryRow summary_from_json(const Json& j);

}  // namespace hoopstat
