#pragma once

#include <span>
#include <vector>

namespace dspp::testkit {

/// Sup distance between the empirical CDF of `samples` and Exp(1).
double ks_statistic_exp1(std::vector<double> samples);

/// Asymptotic Kolmogorov p-value for statistic d on n samples (with the
/// Stephens small-sample correction).
double ks_p_value(double d, std::size_t n);

/// Pearson chi-square statistic and its p-value for observed counts against
/// equal expected counts.
struct ChiSquare {
  double statistic = 0.0;
  double p_value = 0.0;
};
ChiSquare chi_square_uniform(std::span<const long> counts);

}  // namespace dspp::testkit
