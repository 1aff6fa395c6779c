#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "anderson/model.hpp"
#include "anderson/stats.hpp"
#include "anderson/tridiag.hpp"
#include "oracle.hpp"

using namespace anderson;

TEST_SUITE("model") {
  TEST_CASE("degenerate Bernoulli law gives a constant potential") {
    const auto s = sample_potential(SiteDistribution::bernoulli(1.0), 5, 3, 0);
    CHECK(s.values == std::vector<double>(5, 1.0));
  }

  TEST_CASE("Cantor samples avoid every open middle third to depth 25") {
    const auto dist = SiteDistribution::cantor(40);
    for (std::uint64_t seed : {1ULL, 77ULL, 123456789ULL}) {
      const auto s = sample_potential(dist, 500, seed, 2);
      for (double x : s.values) {
        REQUIRE(x >= 0.0);
        REQUIRE(x <= 1.0);
        // x lies in an open middle third at level k iff x 3^k mod 3 is in (1, 2).
        // The slack covers the rounding of x to double, magnified by 3^k.
        long double scale = 1.0L;
        for (int k = 1; k <= 25; ++k) {
          scale *= 3.0L;
          const long double slack = 4.0L * std::numeric_limits<double>::epsilon() * scale;
          const long double t = std::fmod(static_cast<long double>(x) * scale, 3.0L);
          REQUIRE_FALSE((t > 1.0L + slack && t < 2.0L - slack));
        }
      }
    }
  }

  TEST_CASE("sampling is a pure function of seed, realization and site") {
    const auto dist = SiteDistribution::uniform(0.0, 1.0);
    const auto a = sample_potential(dist, 10, 42, 0);
    const auto b = sample_potential(dist, 10, 42, 0);
    CHECK(a.values == b.values);
    std::vector<double> reversed(10);
    for (std::size_t i = 10; i-- > 0;) reversed[i] = draw_site(dist, 42, 0, i);
    CHECK(reversed == a.values);
    CHECK(sample_potential(dist, 10, 42, 1).values != a.values);
    CHECK(sample_potential(dist, 10, 43, 0).values != a.values);
    // A longer sample extends a shorter one.
    const auto longer = sample_potential(dist, 20, 42, 0);
    CHECK(std::equal(a.values.begin(), a.values.end(), longer.values.begin()));
  }

  TEST_CASE("samples stay inside the support") {
    for (const auto& dist : {SiteDistribution::uniform(-1.5, 2.0), SiteDistribution::cantor(12),
                             SiteDistribution::bernoulli(0.3)}) {
      const auto [lo, hi] = dist.support();
      for (double x : sample_potential(dist, 2000, 9, 4).values) {
        CHECK(x >= lo);
        CHECK(x <= hi);
      }
    }
  }

  TEST_CASE("cdf values") {
    CHECK(cdf(SiteDistribution::cantor(40), 1.0 / 3.0) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(cdf(SiteDistribution::cantor(40), 2.0 / 3.0) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(cdf(SiteDistribution::cantor(40), 0.5) == 0.5);
    CHECK(cdf(SiteDistribution::uniform(0, 1), 0.5) == 0.5);
    CHECK(cdf(SiteDistribution::bernoulli(0.3), 0.5) == doctest::Approx(0.7));
    CHECK(cdf(SiteDistribution::bernoulli(0.3), 1.0) == 1.0);
    CHECK(cdf(SiteDistribution::bernoulli(0.3), -1e-300) == 0.0);
    CHECK(cdf(SiteDistribution::uniform(2, 3), 1.0) == 0.0);
    CHECK(cdf(SiteDistribution::uniform(2, 3), 5.0) == 1.0);
  }

  TEST_CASE("cdf is nondecreasing") {
    for (const auto& dist : {SiteDistribution::uniform(0, 1), SiteDistribution::cantor(30),
                             SiteDistribution::bernoulli(0.4)}) {
      double prev = 0.0;
      for (int i = -50; i <= 1050; ++i) {
        const double f = cdf(dist, i / 1000.0);
        CHECK(f >= prev);
        CHECK(f <= 1.0);
        prev = f;
      }
    }
  }

  TEST_CASE("empirical cdf of 1e5 samples is within 0.01 of cdf") {
    for (const auto& dist : {SiteDistribution::uniform(0, 1), SiteDistribution::cantor(40)}) {
      const auto s = sample_potential(dist, 100000, 5, 0);
      const double d = stats::ks_distance(s.values, [&](double x) { return cdf(dist, x); });
      CHECK(d <= 0.01);
    }
    const auto b = SiteDistribution::bernoulli(0.3);
    const auto s = sample_potential(b, 100000, 5, 0);
    const double ones = static_cast<double>(std::count(s.values.begin(), s.values.end(), 1.0)) / 1e5;
    CHECK(std::abs((1.0 - ones) - cdf(b, 0.5)) <= 0.01);
  }

  TEST_CASE("Hölder certificates") {
    const auto u = holder_certificate(SiteDistribution::uniform(0, 1), 4096);
    CHECK(u.beta_hat == doctest::Approx(1.0).epsilon(1e-12));
    const auto c = holder_certificate(SiteDistribution::cantor(40), 59049);
    const double beta = std::numbers::ln2 / std::log(3.0);
    CHECK(std::abs(c.beta_hat - beta) <= 0.02);
    CHECK(c.worst_constant <= 2.0);
    CHECK(c.levels == 10);
    CHECK_THROWS_AS(holder_certificate(SiteDistribution::bernoulli(0.5), 100), std::domain_error);
    CHECK(SiteDistribution::cantor().holder_exponent().value() == doctest::Approx(beta));
    CHECK_FALSE(SiteDistribution::bernoulli(0.5).holder_exponent().has_value());
  }

  TEST_CASE("invalid parameters are rejected, never clamped") {
    CHECK_THROWS_AS(SiteDistribution::uniform(1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(SiteDistribution::bernoulli(-0.1), std::invalid_argument);
    CHECK_THROWS_AS(SiteDistribution::bernoulli(1.5), std::invalid_argument);
    CHECK_THROWS_AS(SiteDistribution::cantor(0), std::invalid_argument);
    CHECK_THROWS_AS(SiteDistribution::uniform(0.0, 1.0, std::nan("")), std::invalid_argument);
    CHECK_THROWS_AS(sample_potential(SiteDistribution::uniform(0, 1), 0, 1, 0), std::invalid_argument);
  }

  TEST_CASE("distribution grammar") {
    CHECK(parse_distribution("uniform:0,1") == SiteDistribution::uniform(0, 1));
    CHECK(parse_distribution("cantor:12@lambda=2.5") == SiteDistribution::cantor(12, 2.5));
    CHECK(parse_distribution("bernoulli:0.5@lambda=+4") == SiteDistribution::bernoulli(0.5, 4));
    CHECK(parse_distribution("uniform:-0.5,0.5").to_string() == "uniform:-0.5,0.5");
    CHECK(parse_distribution("bernoulli:0.25@lambda=3").to_string() == "bernoulli:0.25@lambda=3");
    for (const char* text : {"uniform:0.1,0.30000000000000004", "cantor:40", "bernoulli:1e-3@lambda=0.7"})
      CHECK(parse_distribution(parse_distribution(text).to_string()) == parse_distribution(text));

    auto position_of = [](const char* text) -> std::size_t {
      try {
        parse_distribution(text);
      } catch (const DistributionParseError& e) {
        return e.position();
      }
      return 999;
    };
    CHECK(position_of("uniform:0,x") == 10);
    CHECK(position_of("uniform:0") == 9);
    CHECK(position_of("gauss:1") == 0);
    CHECK(position_of("bernoulli") == 9);
    CHECK(position_of("bernoulli:0.5@mu=2") == 14);
    CHECK(position_of("cantor:1.5") == 7);
    CHECK_THROWS_WITH_AS(parse_distribution("bernoulli:1.5"), doctest::Contains("probability out of range"),
                         DistributionParseError);
  }

  TEST_CASE("operator assembly") {
    const auto one = assemble_operator(std::vector<double>{3.0}, 1.0);
    const auto single = full_spectrum(one);
    REQUIRE(single.size() == 1);
    CHECK(single[0] == doctest::Approx(3.0).epsilon(1e-13));

    const auto free3 = assemble_operator(std::vector<double>(3, 0.0), 1.0);
    const auto ev = full_spectrum(free3);
    REQUIRE(ev.size() == 3);
    CHECK(ev[0] == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-12));
    CHECK(std::abs(ev[1]) <= 1e-12);
    CHECK(ev[2] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

    const auto b = assemble_operator(std::vector<double>{1, 0, 1}, 2.0);
    CHECK(std::vector<double>(b.diagonal().begin(), b.diagonal().end()) == std::vector<double>{2, 0, 2});

    CHECK_THROWS_AS(TridiagonalOperator(std::vector<double>{}), std::invalid_argument);
    CHECK_THROWS_AS(b.restrict_to(2, 3), std::out_of_range);
    CHECK(b.restrict_to(1, 2).size() == 2);
  }

  TEST_CASE("spectrum lies inside the Gershgorin interval") {
    for (std::uint64_t r = 0; r < 20; ++r) {
      const auto dist = r % 2 ? SiteDistribution::bernoulli(0.5, 3.0) : SiteDistribution::uniform(-2, 1, 1.5);
      const auto op = assemble_operator(sample_potential(dist, 60, 11, r), dist.coupling());
      const auto [lo, hi] = op.spectral_bounds();
      for (double e : oracle::dense_eigenvalues(op.diagonal())) {
        CHECK(e >= lo - 1e-12);
        CHECK(e <= hi + 1e-12);
      }
    }
  }
}
