#include "jamaica/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "jamaica/errors.hpp"

namespace jamaica {

namespace {

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

void count_band(const std::vector<double>& values, const std::optional<Band>& band,
                std::size_t& below, std::size_t& above) {
  if (!band) return;
  for (double v : values) {
    if (v < band->low) below += 1;
    if (v > band->high) above += 1;
  }
}

}  // namespace

HistogramReport build_histogram(const std::vector<double>& values, std::size_t bins,
                                std::optional<Band> range, std::optional<Band> band) {
  if (values.empty()) raise(Errc::empty_source, "no values to build a histogram from");
  if (bins == 0) raise(Errc::bad_spec, "bins must be > 0");
  for (double v : values)
    if (!std::isfinite(v)) raise(Errc::bad_spec, "histogram values must be finite");

  double lo;
  double hi;
  if (range) {
    lo = range->low;
    hi = range->high;
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi))
      raise(Errc::bad_spec, "histogram range needs finite low < high");
  } else {
    const auto [min_it, max_it] = std::minmax_element(values.begin(), values.end());
    lo = *min_it;
    hi = *max_it;
    if (lo == hi) hi = lo + 1.0;  // keep edges strictly ascending
  }

  HistogramReport report;
  report.bin_edges.reserve(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i)
    report.bin_edges.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins));
  report.counts.assign(bins, 0);
  for (double v : values) {
    const double pos = (v - lo) / (hi - lo) * static_cast<double>(bins);
    const auto idx = static_cast<std::size_t>(
        std::clamp(std::floor(pos), 0.0, static_cast<double>(bins - 1)));
    report.counts[idx] += 1;
  }
  report.total = values.size();
  count_band(values, band, report.below_band, report.above_band);
  return report;
}

std::string histogram_to_csv(const HistogramReport& report) {
  std::string out = "bin_low,bin_high,count\n";
  for (std::size_t i = 0; i < report.counts.size(); ++i) {
    out += format_double(report.bin_edges[i]);
    out += ',';
    out += format_double(report.bin_edges[i + 1]);
    out += ',';
    out += std::to_string(report.counts[i]);
    out += '\n';
  }
  return out;
}

SummaryReport build_summary(const std::vector<double>& values, std::optional<Band> band) {
  if (values.empty()) raise(Errc::empty_source, "no values to summarize");
  SummaryReport report;
  report.count = values.size();
  const auto [min_it, max_it] = std::minmax_element(values.begin(), values.end());
  report.min = *min_it;
  report.max = *max_it;
  double sum = 0.0;
  for (double v : values) sum += v;
  report.mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - report.mean) * (v - report.mean);
  report.stddev = std::sqrt(sq / static_cast<double>(values.size()));
  count_band(values, band, report.below_band, report.above_band);
  return report;
}

}  // namespace jamaica
