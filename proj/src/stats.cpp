#include "anderson/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

#include "anderson/rng.hpp"

namespace anderson::stats {

MeanEstimate mean_estimate(std::span<const double> xs) {
  MeanEstimate out;
  out.count = xs.size();
  if (xs.empty()) return out;
  const double n = static_cast<double>(xs.size());
  out.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.standard_error = std::sqrt(ss / (n - 1.0) / n);
  }
  return out;
}

LinearFit least_squares(std::span<const double> x, std::span<const double> y, std::span<const double> w) {
  if (x.size() != y.size() || (!w.empty() && w.size() != x.size()))
    throw std::invalid_argument("least_squares: length mismatch");
  if (x.size() < 2) throw std::invalid_argument("least_squares: need at least two points");
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    sw += wi;
    sx += wi * x[i];
    sy += wi * y[i];
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    sxx += wi * (x[i] - mx) * (x[i] - mx);
    sxy += wi * (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("least_squares: x values are all equal");
  LinearFit fit;
  fit.points = x.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0, wrss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    rss += r * r;
    wrss += wi * r * r;
  }
  if (x.size() > 2) {
    const double dof = static_cast<double>(x.size() - 2);
    fit.residual_sd = std::sqrt(rss / dof);
    fit.slope_standard_error = std::sqrt(wrss / dof / sxx);
  }
  return fit;
}

std::vector<double> weighted_column_means(const OutcomeMatrix& outcomes, std::span<const std::size_t> columns,
                                          std::span<const std::uint32_t> multiplicity) {
  std::vector<double> sums(columns.size(), 0.0);
  double total = 0.0;
  for (std::size_t r = 0; r < outcomes.size(); ++r) {
    const double m = multiplicity[r];
    if (m == 0) continue;
    total += m;
    for (std::size_t c = 0; c < columns.size(); ++c) sums[c] += m * outcomes[r][columns[c]];
  }
  for (double& s : sums) s = total > 0 ? s / total : 0.0;
  return sums;
}

std::vector<MeanEstimate> column_estimates(const OutcomeMatrix& outcomes, std::span<const std::size_t> columns) {
  std::vector<MeanEstimate> out;
  out.reserve(columns.size());
  std::vector<double> col(outcomes.size());
  for (std::size_t c : columns) {
    for (std::size_t r = 0; r < outcomes.size(); ++r) col[r] = outcomes[r][c];
    out.push_back(mean_estimate(col));
  }
  return out;
}

SlopeFit bootstrap_loglog_slope(std::span<const double> x, const ColumnEstimator& estimator,
                                std::span<const double> standard_errors, std::size_t realizations,
                                std::uint64_t seed, std::size_t resamples) {
  if (realizations == 0) throw std::invalid_argument("bootstrap_loglog_slope: no realizations");
  std::vector<std::uint32_t> ones(realizations, 1);
  const auto base = estimator(ones);
  if (base.size() != x.size()) throw std::invalid_argument("bootstrap_loglog_slope: estimator size mismatch");

  SlopeFit out;
  for (std::size_t i = 0; i < base.size(); ++i)
    if (base[i] > 0.0 && x[i] > 0.0) out.columns_used.push_back(i);
  out.points = out.columns_used.size();
  if (out.points < 2) {
    out.slope = out.intercept = out.ci_low = out.ci_high = std::numeric_limits<double>::quiet_NaN();
    return out;
  }

  std::vector<double> lx, ly, w;
  bool weighted = !standard_errors.empty();
  for (std::size_t i : out.columns_used) weighted = weighted && standard_errors[i] > 0.0;
  for (std::size_t i : out.columns_used) {
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(base[i]));
    if (weighted) {
      const double rel = standard_errors[i] / base[i];
      w.push_back(1.0 / (rel * rel));
    }
  }
  const auto fit = least_squares(lx, ly, w);
  out.slope = fit.slope;
  out.intercept = fit.intercept;

  std::vector<double> slopes;
  slopes.reserve(resamples);
  std::vector<std::uint32_t> mult(realizations);
  std::vector<double> by(out.points);
  for (std::size_t b = 0; b < resamples; ++b) {
    std::fill(mult.begin(), mult.end(), 0);
    for (std::size_t i = 0; i < realizations; ++i) ++mult[counter_hash(seed, b, i) % realizations];
    const auto est = estimator(mult);
    bool ok = true;
    for (std::size_t k = 0; k < out.points && ok; ++k) {
      const double v = est[out.columns_used[k]];
      ok = v > 0.0;
      if (ok) by[k] = std::log(v);
    }
    if (!ok) continue;
    slopes.push_back(least_squares(lx, by, w).slope);
  }
  out.resamples_used = slopes.size();
  if (slopes.size() >= 2) {
    out.ci_low = quantile(slopes, 0.025);
    out.ci_high = quantile(slopes, 0.975);
  } else {
    out.ci_low = out.ci_high = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) throw std::invalid_argument("quantile of empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile level must lie in [0, 1]");
  std::sort(xs.begin(), xs.end());
  const double h = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

double poisson_pmf(std::size_t k, double mean) {
  if (mean == 0.0) return k == 0 ? 1.0 : 0.0;
  const double kd = static_cast<double>(k);
  return std::exp(kd * std::log(mean) - mean - std::lgamma(kd + 1.0));
}

double chi_square_survival(double statistic, double dof) {
  if (!(dof > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  if (statistic <= 0.0) return 1.0;
  return boost::math::gamma_q(dof / 2.0, statistic / 2.0);
}

ChiSquareResult chi_square_poisson(std::span<const std::size_t> counts, double mean) {
  if (counts.empty()) throw std::invalid_argument("chi_square_poisson: empty sample");
  const double n = static_cast<double>(counts.size());
  const std::size_t kmax = *std::max_element(counts.begin(), counts.end());
  std::vector<double> observed(kmax + 1, 0.0);
  for (std::size_t c : counts) observed[c] += 1.0;

  // Classes {0}, {1}, ..., with the last one absorbing the upper tail.
  const std::size_t classes = std::max<std::size_t>(kmax + 1, static_cast<std::size_t>(mean + 10.0 * std::sqrt(mean + 1.0)) + 2);
  std::vector<double> exp_freq(classes), obs_freq(classes, 0.0);
  double cumulative = 0.0;
  for (std::size_t k = 0; k + 1 < classes; ++k) {
    exp_freq[k] = n * poisson_pmf(k, mean);
    cumulative += exp_freq[k];
  }
  exp_freq[classes - 1] = std::max(0.0, n - cumulative);
  for (std::size_t k = 0; k <= kmax; ++k) obs_freq[std::min(k, classes - 1)] += observed[k];

  // Pool left to right until each group expects at least 5, then fold a short
  // trailing group into its predecessor.
  std::vector<double> pe, po;
  double ae = 0.0, ao = 0.0;
  for (std::size_t k = 0; k < classes; ++k) {
    ae += exp_freq[k];
    ao += obs_freq[k];
    if (ae >= 5.0) {
      pe.push_back(ae);
      po.push_back(ao);
      ae = ao = 0.0;
    }
  }
  if (ae > 0.0 || ao > 0.0) {
    if (pe.empty()) {
      pe.push_back(ae);
      po.push_back(ao);
    } else {
      pe.back() += ae;
      po.back() += ao;
    }
  }

  ChiSquareResult out;
  out.bins = pe.size();
  for (std::size_t i = 0; i < pe.size(); ++i) {
    if (pe[i] > 0.0) {
      out.statistic += (po[i] - pe[i]) * (po[i] - pe[i]) / pe[i];
    } else if (po[i] > 0.0) {
      out.statistic = std::numeric_limits<double>::infinity();
    }
  }
  out.degrees_of_freedom = static_cast<double>(out.bins) - 2.0;
  if (out.degrees_of_freedom <= 0.0) {
    out.p_value = std::numeric_limits<double>::quiet_NaN();
  } else if (std::isinf(out.statistic)) {
    out.p_value = 0.0;
  } else {
    out.p_value = chi_square_survival(out.statistic, out.degrees_of_freedom);
  }
  return out;
}

double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw std::invalid_argument("ks_distance: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double window_gap_cdf(double gap, double rho, double window) {
  if (gap <= 0.0) return 0.0;
  if (gap >= window) return 1.0;
  // Pair density rho^2 e^{-rho g} (L - g) on consecutive gaps, normalized.
  const auto tail = [&](double s) {
    return std::exp(-rho * window) + rho * (window - s) * std::exp(-rho * s) - std::exp(-rho * s);
  };
  const double total = tail(0.0);
  if (!(total > 0.0)) return 1.0;
  return 1.0 - tail(gap) / total;
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  const std::size_t n = std::max(p.size(), q.size());
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = i < p.size() ? p[i] : 0.0;
    const double b = i < q.size() ? q[i] : 0.0;
    s += std::abs(a - b);
  }
  return 0.5 * s;
}

}  // namespace anderson::stats
