#pragma once

#include <optional>
#include <vector>

namespace ncam::stats {

double median(std::vector<double> values);
/// Median absolute deviation from the median (unscaled).
double mad(const std::vector<double>& values);

struct MannWhitney {
  double u = 0.0;        // U statistic of the first sample
  double z = 0.0;
  double p_less = 1.0;   // one-sided p for "first sample tends to be smaller"
};

/// Normal approximation with tie correction.
MannWhitney mann_whitney(const std::vector<double>& first, const std::vector<double>& second);

/// Fraction of true entries; nullopt when `total` is zero.
std::optional<double> rate(std::size_t hits, std::size_t total);

}  // namespace ncam::stats
