#pragma once

#include "cpme/types.hpp"

#include <utility>
#include <vector>

namespace cpme {

double normal_cdf(double z);
double normal_quantile(double p);

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

/// Wilson score interval for a binomial proportion (z = 1.96 for 95%).
Interval wilson_interval(Index successes, Index trials, double z = 1.959963984540054);

/// mean +/- z * sd / sqrt(n), sd with Bessel correction; collapses to the
/// mean for n < 2.
Interval mean_interval(const std::vector<double>& v, double z = 1.959963984540054);

double mean(const std::vector<double>& v);
double sample_sd(const std::vector<double>& v);

struct KsResult {
  double distance = 0.0;  ///< sup |F_n - Phi|
  double p_value = 1.0;   ///< asymptotic Kolmogorov law with Stephens' correction
};

/// One-sample Kolmogorov-Smirnov test against N(0, 1).
KsResult ks_test_normal(std::vector<double> sample);

/// Survival function of the Kolmogorov distribution, P(K > x).
double kolmogorov_sf(double x);

}  // namespace cpme
