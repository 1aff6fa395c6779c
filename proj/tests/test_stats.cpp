#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "anderson/stats.hpp"

using namespace anderson;

TEST_SUITE("stats") {
  TEST_CASE("mean and standard error") {
    const std::vector<double> xs{1, 2, 3, 4};
    const auto m = stats::mean_estimate(xs);
    CHECK(m.mean == 2.5);
    CHECK(m.standard_error == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
    CHECK(m.count == 4);
  }

  TEST_CASE("least squares recovers an exact line") {
    const std::vector<double> x{0, 1, 2, 3, 4};
    std::vector<double> y;
    for (double v : x) y.push_back(1.5 - 0.75 * v);
    const auto fit = stats::least_squares(x, y);
    CHECK(fit.slope == doctest::Approx(-0.75).epsilon(1e-14));
    CHECK(fit.intercept == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(fit.residual_sd <= 1e-14);
    const std::vector<double> w{1, 10, 1, 10, 1};
    CHECK(stats::least_squares(x, y, w).slope == doctest::Approx(-0.75).epsilon(1e-14));
  }

  TEST_CASE("type 7 quantiles") {
    const std::vector<double> x{3, 1, 4, 1, 5, 9, 2, 6};
    CHECK(stats::quantile(x, 0.0) == 1.0);
    CHECK(stats::quantile(x, 0.1) == doctest::Approx(1.0));
    CHECK(stats::quantile(x, 0.5) == doctest::Approx(3.5));
    CHECK(stats::quantile(x, 0.9) == doctest::Approx(6.9));
    CHECK(stats::quantile(x, 0.99) == doctest::Approx(8.79));
    CHECK(stats::quantile(x, 1.0) == 9.0);
  }

  TEST_CASE("chi-square upper tail") {
    CHECK(stats::chi_square_survival(3.841458820694124, 1) == doctest::Approx(0.05).epsilon(1e-9));
    CHECK(stats::chi_square_survival(18.307038053275146, 10) == doctest::Approx(0.05).epsilon(1e-9));
    CHECK(stats::chi_square_survival(0.5, 7) == doctest::Approx(0.9994464813904249).epsilon(1e-9));
    CHECK(stats::chi_square_survival(200, 150) == doctest::Approx(0.003973185970821635).epsilon(1e-7));
    for (double x : {0.1, 1.0, 7.5}) CHECK(stats::chi_square_survival(x, 2) == doctest::Approx(std::exp(-x / 2)));
  }

  TEST_CASE("chi-square Poisson test pools sparse classes") {
    // 50 samples at mean 1: classes {0}, {1}, {2, 3, ...} after pooling.
    std::vector<std::size_t> counts;
    counts.insert(counts.end(), 20, 0);
    counts.insert(counts.end(), 15, 1);
    counts.insert(counts.end(), 10, 2);
    counts.insert(counts.end(), 5, 3);
    const auto r = stats::chi_square_poisson(counts, 1.0);
    CHECK(r.bins == 3);
    CHECK(r.degrees_of_freedom == 1.0);
    CHECK(r.statistic == doctest::Approx(1.0084235763340619).epsilon(1e-12));
    CHECK(r.p_value == doctest::Approx(0.31528079772856865).epsilon(1e-9));
  }

  TEST_CASE("chi-square Poisson test accepts Poisson data and rejects a point mass") {
    std::mt19937_64 gen(5);
    std::poisson_distribution<std::size_t> pois(4.0);
    std::vector<std::size_t> counts(5000);
    for (auto& c : counts) c = pois(gen);
    const double mean = std::accumulate(counts.begin(), counts.end(), 0.0) / 5000.0;
    CHECK(stats::chi_square_poisson(counts, mean).p_value > 0.01);
    const std::vector<std::size_t> fixed(2000, 4);
    CHECK(stats::chi_square_poisson(fixed, 4.0).p_value < 1e-10);
  }

  TEST_CASE("Kolmogorov-Smirnov distance") {
    const auto d = stats::ks_distance({0.1, 0.4, 0.45, 0.8}, [](double x) { return std::clamp(x, 0.0, 1.0); });
    CHECK(d == doctest::Approx(0.3));
  }

  TEST_CASE("window gap law matches simulated Poisson processes") {
    const double rho = 1.0, window = 20.0;
    std::mt19937_64 gen(11);
    std::exponential_distribution<double> expo(rho);
    std::vector<double> gaps;
    for (int r = 0; r < 20000; ++r) {
      double prev = -1.0, t = expo(gen);
      while (t < window) {
        if (prev >= 0.0) gaps.push_back(t - prev);
        prev = t;
        t += expo(gen);
      }
    }
    const auto law = [&](double g) { return stats::window_gap_cdf(g, rho, window); };
    CHECK(stats::ks_distance(gaps, law) <= 0.006);
    // The untruncated exponential is visibly off at this window length.
    CHECK(stats::ks_distance(gaps, [&](double g) { return 1.0 - std::exp(-rho * g); }) >= 0.01);
  }

  TEST_CASE("window gap law limits") {
    CHECK(stats::window_gap_cdf(0.0, 2.0, 10.0) == 0.0);
    CHECK(stats::window_gap_cdf(10.0, 2.0, 10.0) == 1.0);
    for (double g : {0.1, 1.0, 3.0})
      CHECK(std::abs(stats::window_gap_cdf(g, 1.0, 1e4) - (1.0 - std::exp(-g))) <= 1e-3);
    double prev = 0.0;
    for (int i = 1; i <= 100; ++i) {
      const double f = stats::window_gap_cdf(0.2 * i, 1.0, 20.0);
      CHECK(f >= prev);
      prev = f;
    }
  }

  TEST_CASE("Poisson pmf and total variation") {
    double total = 0.0;
    for (std::size_t k = 0; k < 60; ++k) total += stats::poisson_pmf(k, 7.5);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(stats::poisson_pmf(0, 2.0) == doctest::Approx(std::exp(-2.0)));
    CHECK(stats::poisson_pmf(3, 2.0) == doctest::Approx(std::exp(-2.0) * 8.0 / 6.0));
    CHECK(stats::total_variation(std::vector<double>{0.5, 0.5}, std::vector<double>{0.5, 0.25, 0.25}) ==
          doctest::Approx(0.25));
  }

  TEST_CASE("bootstrap slope of an exact power law") {
    const std::vector<double> x{0.5, 0.25, 0.125, 0.0625};
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(0.5, 1.5);
    stats::OutcomeMatrix rows(200);
    for (auto& row : rows) {
      const double scale = u(gen);
      for (double v : x) row.push_back(scale * v * v);
    }
    const std::vector<std::size_t> cols{0, 1, 2, 3};
    const auto est = stats::column_estimates(rows, cols);
    std::vector<double> se;
    for (const auto& e : est) se.push_back(e.standard_error);
    const auto fit = stats::bootstrap_loglog_slope(
        x, [&](std::span<const std::uint32_t> m) { return stats::weighted_column_means(rows, cols, m); }, se, 200, 9,
        300);
    CHECK(fit.slope == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(fit.ci_low == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(fit.ci_high == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(fit.points == 4);
  }

  TEST_CASE("bootstrap interval covers a noisy slope and is reproducible") {
    const std::vector<double> x{1, 2, 4, 8, 16};
    std::mt19937_64 gen(4);
    std::bernoulli_distribution coin(0.05);
    stats::OutcomeMatrix rows(2000);
    for (auto& row : rows)
      for (double v : x) row.push_back(coin(gen) ? v : 0.0);
    const std::vector<std::size_t> cols{0, 1, 2, 3, 4};
    const auto est = stats::column_estimates(rows, cols);
    std::vector<double> se;
    for (const auto& e : est) se.push_back(e.standard_error);
    auto estimator = [&](std::span<const std::uint32_t> m) { return stats::weighted_column_means(rows, cols, m); };
    const auto a = stats::bootstrap_loglog_slope(x, estimator, se, 2000, 17);
    const auto b = stats::bootstrap_loglog_slope(x, estimator, se, 2000, 17);
    CHECK(a.ci_low == b.ci_low);
    CHECK(a.ci_high == b.ci_high);
    CHECK(a.ci_low < 1.0);
    CHECK(a.ci_high > 1.0);
    CHECK(a.ci_low < a.ci_high);
  }
}
