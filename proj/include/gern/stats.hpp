#pragma once

#include <cstdint>
#include <span>

namespace gern::stats {

/// Regularized upper incomplete gamma Q(a, x).
double gamma_q(double a, double x);

/// P[X >= x] for X ~ chi-square(dof).
double chi_square_sf(double x, double dof);

struct ChiSquareResult {
  double statistic = 0.0;
  double dof = 0.0;
  double pvalue = 1.0;
};

/// Goodness of fit of observed counts against expected probabilities.
ChiSquareResult chi_square_gof(std::span<const std::uint64_t> observed,
                               std::span<const double> expected_probability);

/// Kolmogorov limiting survival function Q_KS(lambda).
double kolmogorov_sf(double lambda);

struct KsResult {
  double statistic = 0.0;
  double pvalue = 1.0;
};

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

/// Mean and standard error of the mean (sample std / sqrt(n)).
struct MeanStderr {
  double mean = 0.0;
  double std_error = 0.0;
};

MeanStderr mean_stderr(std::span<const double> values);

}  // namespace gern::stats
