#include "noisecam/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ncam::stats {

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty sample");
  const auto mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<long>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<long>(mid));
  return 0.5 * (lower + upper);
}

double mad(const std::vector<double>& values) {
  const double m = median(values);
  std::vector<double> dev(values.size());
  std::transform(values.begin(), values.end(), dev.begin(), [m](double v) { return std::abs(v - m); });
  return median(std::move(dev));
}

MannWhitney mann_whitney(const std::vector<double>& first, const std::vector<double>& second) {
  const std::size_t n1 = first.size(), n2 = second.size();
  if (n1 == 0 || n2 == 0) throw std::invalid_argument("Mann-Whitney needs two non-empty samples");
  struct Item {
    double v;
    bool from_first;
  };
  std::vector<Item> all;
  all.reserve(n1 + n2);
  for (double v : first) all.push_back({v, true});
  for (double v : second) all.push_back({v, false});
  std::sort(all.begin(), all.end(), [](const Item& a, const Item& b) { return a.v < b.v; });

  double rank_sum = 0.0, tie_term = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].v == all[i].v) ++j;
    const double avg_rank = 0.5 * double(i + 1 + j);
    const double t = double(j - i);
    tie_term += t * t * t - t;
    for (std::size_t k = i; k < j; ++k)
      if (all[k].from_first) rank_sum += avg_rank;
    i = j;
  }
  MannWhitney r;
  const double dn1 = double(n1), dn2 = double(n2), n = dn1 + dn2;
  r.u = rank_sum - dn1 * (dn1 + 1) / 2.0;
  const double mean = dn1 * dn2 / 2.0;
  const double var = dn1 * dn2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1)));
  if (var <= 0.0) return r;
  // Continuity correction toward the mean.
  r.z = (r.u - mean + 0.5) / std::sqrt(var);
  r.p_less = 0.5 * std::erfc(-r.z / std::sqrt(2.0));
  return r;
}

std::optional<double> rate(std::size_t hits, std::size_t total) {
  if (total == 0) return std::nullopt;
  return double(hits) / double(total);
}

}  // namespace ncam::stats
