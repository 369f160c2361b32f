#pragma once

#include <boost/math/special_functions/gamma.hpp>
#include <vector>

// Pearson chi-square goodness of fit; returns the upper-tail p-value.
inline double chi_square_p(const std::vector<long>& counts, const std::vector<double>& expected) {
  double chi2 = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double d = counts[i] - expected[i];
    chi2 += d * d / expected[i];
  }
  const double dof = static_cast<double>(counts.size()) - 1.0;
  return boost::math::gamma_q(dof / 2.0, chi2 / 2.0);
}

inline double chi_square_uniform_p(const std::vector<long>& counts) {
  long total = 0;
  for (long c : counts) total += c;
  return chi_square_p(counts, std::vector<double>(counts.size(), double(total) / counts.size()));
}
