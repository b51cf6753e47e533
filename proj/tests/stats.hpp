// Goodness-of-fit helpers for sampling tests.
#pragma once

#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

namespace stats {

// Pearson chi-square p-value of observed counts against expected
// probabilities; cells with expected count below 5 are pooled.
inline double chi_square_pvalue(const std::vector<double>& observed, const std::vector<double>& prob) {
  double total = 0.0;
  for (double o : observed) total += o;
  double stat = 0.0, pooled_o = 0.0, pooled_e = 0.0;
  int cells = 0;
  for (std::size_t c = 0; c < observed.size(); ++c) {
    double e = prob[c] * total;
    if (e < 5.0) {
      pooled_o += observed[c];
      pooled_e += e;
      continue;
    }
    stat += (observed[c] - e) * (observed[c] - e) / e;
    ++cells;
  }
  if (pooled_e > 0.0) {
    stat += (pooled_o - pooled_e) * (pooled_o - pooled_e) / pooled_e;
    ++cells;
  }
  if (cells < 2) return 1.0;
  boost::math::chi_squared dist(cells - 1);
  return boost::math::cdf(boost::math::complement(dist, stat));
}

}  // namespace stats
