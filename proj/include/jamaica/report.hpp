#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace jamaica {

struct Band {
  double low = 0.0;
  double high = 0.0;
};

struct HistogramReport {
  std::vector<double> bin_edges;  // bins + 1 ascending edges
  std::vector<std::size_t> counts;
  std::size_t total = 0;
  std::size_t below_band = 0;
  std::size_t above_band = 0;
};

// Equal-width bins over [min, max] of the data, or over `range` when given
// (values outside it land in the edge bins so counts always sum to total).
// Raises empty_source on no values and bad_spec on bins = 0.
HistogramReport build_histogram(const std::vector<double>& values, std::size_t bins,
                                std::optional<Band> range, std::optional<Band> band);

// CSV with header `bin_low,bin_high,count`.
std::string histogram_to_csv(const HistogramReport& report);

struct SummaryReport {
  std::size_t count = 0;
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double stddev = 0.0;  // population
  std::size_t below_band = 0;
  std::size_t above_band = 0;
};

SummaryReport build_summary(const std::vector<double>& values, std::optional<Band> band);

}  // namespace jamaica
