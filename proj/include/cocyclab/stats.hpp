// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>

namespace cocyclab {

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
  double sd = 0.0;
};

/// Sample mean, standard deviation (n-1) and standard error of the mean.
MeanStderr mean_stderr(std::span<const double> values);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Wilson score interval for a binomial proportion at normal quantile z.
Interval wilson_interval(std::size_t hits, std::size_t trials, double z);

/// Standard normal upper quantile: returns z with P[Z > z] = p.
double normal_upper_quantile(double p);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Ordinary least squares y = intercept + slope * x. r2 is 0 when y has no
/// variance.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace cocyclab
