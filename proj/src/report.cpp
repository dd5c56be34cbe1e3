// Apache License, Version 2.0, refer to LICENSE.txt

#include "hoopstat/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "hoopstat/errors.hpp"

namespace hoopstat {

double quantile_sorted(std::span<const double> sorted, double prob) {
  if (sorted.empty()) throw DataError("quantile of empty data");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(prob, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

Interval credible_interval(std::span<const double> sorted, double level) {
  const double tail = (1.0 - level) / 2.0;
  return {quantile_sorted(sorted, tail), quantile_sorted(sorted, 1.0 - tail)};
}

SummaryRow summarize(std::string label, std::span<const double> values) {
  if (values.empty()) throw DataError("summarize: no draws for " + label);
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());

  SummaryRow row;
  row.label = std::move(label);
  double sum = 0.0;
  for (double v : sorted) sum += v;
  const double n = static_cast<double>(sorted.size());
  row.mean = sum / n;
  double ss = 0.0;
  for (double v : sorted) ss += (v - row.mean) * (v - row.mean);
  row.sd = sorted.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  row.median = quantile_sorted(sorted, 0.5);
  row.ci80 = credible_interval(sorted, 0.80);
  row.ci95 = credible_interval(sorted, 0.95);
  return row;
}

RankKey parse_rank_key(std::string_view s) {
  if (s == "mean") return RankKey::Mean;
  if (s == "median") return RankKey::Median;
  throw ConfigError("rank key must be 'mean' or 'median'");
}

std::vector<RankedRow> rank_entities(std::vector<SummaryRow> rows, RankKey by) {
  auto key = [by](const SummaryRow& r) { return by == RankKey::Mean ? r.mean : r.median; };
  std::sort(rows.begin(), rows.end(), [&](const SummaryRow& a, const SummaryRow& b) {
    if (key(a) != key(b)) return key(a) > key(b);
    return a.label < b.label;
  });
  std::vector<RankedRow> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t rank =
        (i > 0 && key(rows[i]) == key(rows[i - 1])) ? out.back().rank : i + 1;
    out.push_back({rank, std::move(rows[i])});
  }
  return out;
}

Correlation correlate(const std::map<std::string, double>& x,
                      const std::map<std::string, double>& y) {
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& [label, xv] : x) {
    if (auto it = y.find(label); it != y.end()) {
      xs.push_back(xv);
      ys.push_back(it->second);
    }
  }
  const auto n = xs.size();
  if (n < 3) {
    throw DataError("correlation needs at least 3 shared labels, found " + std::to_string(n));
  }
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw DataError("correlation undefined: constant values");
  const double r = sxy / std::sqrt(sxx * syy);
  return {std::clamp(r, -1.0, 1.0), n};
}

MetricTable parse_metrics(std::istream& in) {
  MetricTable out;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header) {
      if (line != "entity_id,season,metric,value") {
        throw DataError("metrics CSV: expected header 'entity_id,season,metric,value'");
      }
      header = true;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 4 || f[0].empty() || f[2].empty()) {
      throw DataError("metrics CSV line " + std::to_string(lineno) + ": malformed row");
    }
    double value = 0.0;
    std::size_t used = 0;
    try {
      value = std::stod(f[3], &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != f[3].size() || !std::isfinite(value)) {
      throw DataError("metrics CSV line " + std::to_string(lineno) + ": bad value '" + f[3] + "'");
    }
    out[f[2]][f[0] + "_" + f[1]] = value;
  }
  if (!header) throw DataError("metrics CSV is empty");
  return out;
}

namespace {

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

}  // namespace

std::string ranked_csv(const std::vector<RankedRow>& rows) {
  std::string out = "rank,label,mean,median,sd,ci80_lo,ci80_hi,ci95_lo,ci95_hi\n";
  for (const auto& r : rows) {
    const auto& s = r.summary;
    out += std::to_string(r.rank) + ',' + s.label + ',' + fmt(s.mean) + ',' + fmt(s.median) + ',' +
           fmt(s.sd) + ',' + fmt(s.ci80.lo) + ',' + fmt(s.ci80.hi) + ',' + fmt(s.ci95.lo) + ',' +
           fmt(s.ci95.hi) + '\n';
  }
  return out;
}

Json to_json(const SummaryRow& s) {
  return Json{{"label", s.label},
              {"mean", s.mean},
              {"median", s.median},
              {"sd", s.sd},
              {"ci80", {s.ci80.lo, s.ci80.hi}},
              {"ci95", {s.ci95.lo, s.ci95.hi}}};
}

SummaryRow summary_from_json(const Json& j) {
  SummaryRow s;
  s.label = j.at("label").get<std::string>();
  s.mean = j.at("mean").get<double>();
  s.median = j.at("median").get<double>();
  s.sd = j.at("sd").get<double>();
  s.ci80 = {j.at("ci80").at(0).get<double>(), j.at("ci80").at(1).get<double>()};
  s.ci95 = {j.at("ci95").at(0).get<double>(), j.at("ci95").at(1).get<double>()};
  return s;
}

}  // namespace hoopstat
