#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace anderson::stats {

struct MeanEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t count = 0;
};

MeanEstimate mean_estimate(std::span<const double> xs);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_standard_error = 0.0;
  double residual_sd = 0.0;
  std::size_t points = 0;
};

/// Weighted least squares y = intercept + slope x. Uniform weights when `w` is empty.
LinearFit least_squares(std::span<const double> x, std::span<const double> y, std::span<const double> w = {});

/// Per-realization outcomes: rows are realizations, columns are sweep points.
using OutcomeMatrix = std::vector<std::vector<double>>;

/// Estimates for every column given realization multiplicities (all ones for
/// the plain sample, a bootstrap draw otherwise).
using ColumnEstimator = std::function<std::vector<double>(std::span<const std::uint32_t> multiplicity)>;

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t points = 0;
  std::size_t resamples_used = 0;
  std::vector<std::size_t> columns_used;
};

/// Fits log(estimate) against log(x) over the columns with a positive
/// estimate, weighted by (estimate / stderr)^2 when every stderr is positive.
/// The 95% interval is the percentile interval of refits on realization
/// resamples drawn from a generator seeded with `seed`; resamples that zero
/// out a fitted column are skipped.
SlopeFit bootstrap_loglog_slope(std::span<const double> x, const ColumnEstimator& estimator,
                                std::span<const double> standard_errors, std::size_t realizations,
                                std::uint64_t seed, std::size_t resamples = 1000);

/// Column means of an outcome matrix under multiplicities.
std::vector<double> weighted_column_means(const OutcomeMatrix& outcomes, std::span<const std::size_t> columns,
                                          std::span<const std::uint32_t> multiplicity);

/// Mean and standard error per column.
std::vector<MeanEstimate> column_estimates(const OutcomeMatrix& outcomes, std::span<const std::size_t> columns);

/// Linear-interpolated sample quantile (type 7) of unsorted data.
double quantile(std::vector<double> xs, double q);

struct ChiSquareResult {
  double statistic = 0.0;
  double degrees_of_freedom = 0.0;
  double p_value = 1.0;
  std::size_t bins = 0;
};

/// Goodness of fit of nonnegative integer counts to Poisson(mean), pooling
/// adjacent classes until each expected frequency is at least 5. One degree
/// of freedom is removed for the estimated mean.
ChiSquareResult chi_square_poisson(std::span<const std::size_t> counts, double mean);

/// Upper tail of the chi-square distribution.
double chi_square_survival(double statistic, double dof);

/// sup |F_n - F| for a sample (sorted internally).
double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf);

/// CDF of the pooled consecutive gaps of a rate-rho Poisson process observed
/// in a window of length L.
double window_gap_cdf(double gap, double rho, double window);

double poisson_pmf(std::size_t k, double mean);

/// Total-variation distance between two pmfs on {0, 1, ...}.
double total_variation(std::span<const double> p, std::span<const double> q);

}  // namespace anderson::stats
