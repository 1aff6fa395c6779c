#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "anderson/ensemble.hpp"
#include "anderson/spectral.hpp"
#include "oracle.hpp"

using namespace anderson;

namespace {

ExperimentConfig small_config(const std::string& dist, std::size_t n, std::size_t r, std::vector<double> deltas) {
  ExperimentConfig cfg;
  cfg.dist = parse_distribution(dist);
  cfg.n_list = {n};
  cfg.realizations = r;
  cfg.delta_list = std::move(deltas);
  cfg.master_seed = 3;
  cfg.bootstrap_resamples = 200;
  return cfg;
}

std::vector<double> dyadic(int from, int to) {
  std::vector<double> out;
  for (int k = from; k <= to; ++k) out.push_back(std::ldexp(1.0, -k));
  return out;
}

std::vector<double> values_of(const EnsembleSummary& s, const std::string& quantity) {
  std::vector<double> out;
  for (const auto& e : s.estimates)
    if (e.quantity == quantity) out.push_back(e.value);
  return out;
}

}  // namespace

TEST_SUITE("ensemble") {
  TEST_CASE("windows outside the spectrum are never hit") {
    auto cfg = small_config("uniform:0,1", 60, 100, dyadic(3, 8));
    cfg.n_list = {30, 60};
    cfg.e0 = 10.0;
    for (double v : values_of(wegner_probability(cfg).summary, "P[window nonempty]")) CHECK(v == 0.0);
    for (double v : values_of(minami_moment(cfg).summary, "E[T(T-1)]")) CHECK(v == 0.0);
    for (double v : values_of(expected_count(cfg).summary, "E[T]")) CHECK(v == 0.0);
  }

  TEST_CASE("Wegner probabilities are bounded and nested") {
    auto cfg = small_config("uniform:0,1", 50, 300, dyadic(2, 9));
    const auto s = wegner_probability(cfg).summary;
    for (double v : values_of(s, "P[window nonempty]")) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    REQUIRE(s.find_check("nested_window_violations") != nullptr);
    CHECK(s.find_check("nested_window_violations")->value == 0.0);
    const auto* slope = s.find_slope("wegner", 50);
    REQUIRE(slope != nullptr);
    CHECK(slope->ci_low <= slope->slope);
    CHECK(slope->ci_high >= slope->slope);
    CHECK(slope->ci_low < slope->ci_high);
  }

  TEST_CASE("experiments reject laws they do not apply to") {
    const auto bern = small_config("bernoulli:0.5", 50, 100, dyadic(2, 9));
    CHECK_THROWS_AS(wegner_probability(bern), std::invalid_argument);
    CHECK_THROWS_AS(minami_moment(bern), std::invalid_argument);
    const auto uni = small_config("uniform:0,1", 50, 100, dyadic(2, 9));
    CHECK_THROWS_AS(bernoulli_min_spacing(uni), std::invalid_argument);
    CHECK_THROWS_AS(repulsion_scatter(uni), std::invalid_argument);
  }

  TEST_CASE("a single site never holds two eigenvalues") {
    auto cfg = small_config("uniform:0,1", 1, 200, dyadic(1, 6));
    const auto s = two_eigenvalue_probability(cfg).summary;
    for (double v : values_of(s, "P[T>=2]")) CHECK(v == 0.0);
  }

  TEST_CASE("two-eigenvalue probability never exceeds the factorial moment") {
    auto cfg = small_config("cantor:40", 80, 300, dyadic(1, 8));
    const auto s = two_eigenvalue_probability(cfg).summary;
    const auto p = values_of(s, "P[T>=2]");
    const auto m = values_of(s, "E[T(T-1)]");
    REQUIRE(p.size() == m.size());
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(p[i] <= m[i]);
    CHECK(s.find_check("markov_violations")->value == 0.0);
  }

  TEST_CASE("summaries do not depend on the worker count") {
    auto cfg = small_config("uniform:0,1", 64, 150, dyadic(2, 8));
    cfg.n_list = {32, 64};
    ExecutionContext three;
    three.workers = 3;
    for (const char* sub : {"wegner", "minami", "two-ev"}) {
      const auto a = run_experiment(sub, cfg);
      const auto b = run_experiment(sub, cfg, three);
      CHECK(summary_to_json(a.summary) == summary_to_json(b.summary));
      CHECK(io::to_csv(a.tables.front().second) == io::to_csv(b.tables.front().second));
    }
  }

  TEST_CASE("summary JSON round-trips byte for byte") {
    auto cfg = small_config("uniform:0,1", 40, 100, dyadic(2, 8));
    auto s = minami_moment(cfg).summary;
    s.constants.emplace_back("undefined", std::nan(""));
    const auto text = summary_to_json(s);
    CHECK(canonical_json(text) == text);
    CHECK(text.find("\"undefined\": null") != std::string::npos);
    CHECK(text.back() == '\n');
  }

  TEST_CASE("zero disorder fails the Poisson test") {
    ExperimentConfig cfg;
    cfg.dist = parse_distribution("uniform:0,0");
    cfg.n_list = {1000};
    cfg.window = 20;
    cfg.realizations = 1000;
    cfg.e0 = 0.0;
    const auto run = poisson_local_statistics(cfg);
    CHECK(run.diagnostics.chi_square.p_value < 0.01);
    CHECK_FALSE(run.result.summary.find_check("chi2_p")->passed);
  }

  TEST_CASE("Poisson diagnostics need enough nonempty realizations") {
    std::vector<PointProcessSample> samples(100);
    for (std::size_t i = 0; i < 40; ++i) samples[i].points = {0.5, 1.5};
    CHECK_THROWS_AS(poisson_diagnostics(samples, 2.0), std::runtime_error);
    for (std::size_t i = 40; i < 60; ++i) samples[i].points = {1.0};
    const auto d = poisson_diagnostics(samples, 2.0);
    CHECK(d.nonempty == 60);
    CHECK(d.rho_hat == doctest::Approx((80.0 + 20.0) / 100.0 / 2.0));
    CHECK(d.gaps.size() == 40);
  }

  TEST_CASE("block partition preconditions") {
    ExperimentConfig cfg;
    cfg.n_list = {1000};
    cfg.k = 4;
    cfg.k1 = 1;
    CHECK_THROWS_WITH_AS(independent_block_process(cfg), doctest::Contains("K >= 8*K1"), std::invalid_argument);
    cfg.k = 400;
    cfg.k1 = 1;
    CHECK_THROWS_WITH_AS(independent_block_process(cfg), doctest::Contains("partition does not fit"),
                         std::invalid_argument);
  }

  TEST_CASE("zero coupling gives the free-chain minimum spacing") {
    auto cfg = small_config("bernoulli:0.5@lambda=0", 0, 5, {});
    cfg.n_list = {50, 100};
    cfg.bootstrap_resamples = 10;
    const auto s = bernoulli_min_spacing(cfg).summary;
    for (std::size_t n : {50U, 100U}) {
      const auto free = oracle::free_spectrum(n);
      double gap = 1e9;
      for (std::size_t i = 1; i < n; ++i) gap = std::min(gap, free[i] - free[i - 1]);
      const auto* c = s.find_slope("C_hat(q=0.5)", n, 0.5);
      REQUIRE(c != nullptr);
      CHECK(c->slope == doctest::Approx(-std::log(gap) / std::log(static_cast<double>(n))).epsilon(1e-9));
    }
    // The edge gap is about 3 pi^2 / N^2, so C_hat = 2 - log(3 pi^2) / log N climbs toward 2.
    CHECK(s.find_slope("C_hat(q=0.5)", 100, 0.5)->slope > s.find_slope("C_hat(q=0.5)", 50, 0.5)->slope);
    CHECK(s.find_slope("C_hat(q=0.5)", 100, 0.5)->slope < 2.0);
  }

  TEST_CASE("Bernoulli spacings are positive") {
    auto cfg = small_config("bernoulli:0.5", 0, 50, {});
    cfg.n_list = {40, 80};
    cfg.bootstrap_resamples = 50;
    const auto s = bernoulli_min_spacing(cfg).summary;
    CHECK(s.find_check("nonpositive_spacings")->passed);
    REQUIRE(s.find_check("C_hat_trend(q=0.99)") != nullptr);
  }

  TEST_CASE("close-pair filter") {
    std::vector<EigenPair> pairs(3);
    pairs[0].energy = 0.0;
    pairs[0].center = 4;
    pairs[1].energy = 1e-9;
    pairs[1].center = 30;
    pairs[2].energy = 1e-6;
    pairs[2].center = 7;
    const auto close = collect_close_pairs(pairs, 1e-8, 12);
    REQUIRE(close.size() == 1);
    CHECK(close[0].distance == 26);
    CHECK(close[0].gap == doctest::Approx(1e-9));
    CHECK(close[0].realization_index == 12);
    CHECK(collect_close_pairs(pairs, 1e-10).empty());
  }

  TEST_CASE("copies of one block give a degenerate pair at the block offset") {
    const auto block = assemble_operator(sample_potential(SiteDistribution::bernoulli(0.5, 3.0), 30, 8, 0), 3.0);
    const auto ev = full_spectrum(block);
    const auto local = eigenpairs(block, std::vector<double>{ev[12]}).front();
    const std::size_t offset = 31;
    std::vector<EigenPair> pairs(2, local);
    for (std::size_t copy = 0; copy < 2; ++copy) {
      pairs[copy].vector.assign(61, 0.0);
      std::copy(local.vector.begin(), local.vector.end(), pairs[copy].vector.begin() + copy * offset);
      pairs[copy].center = localization_center(pairs[copy].vector);
    }
    const auto close = collect_close_pairs(pairs, 1e-12);
    REQUIRE(close.size() == 1);
    CHECK(close[0].gap == 0.0);
    CHECK(close[0].distance == offset);
  }

  TEST_CASE("repulsion fit on a synthetic scatter") {
    std::vector<ClosePair> pairs;
    for (int i = 0; i < 60; ++i) {
      const double gap = std::exp(-5.0 - 0.25 * i);
      pairs.push_back({0, 0.0, gap, 0, 0, static_cast<std::size_t>(std::lround(2.0 * std::log(1.0 / gap) + (i % 3)))});
    }
    pairs.push_back({0, 0.0, 0.0, 0, 0, 5});
    const auto fit = fit_repulsion(pairs, 1);
    CHECK(fit.pairs == 60);
    CHECK(fit.unresolved == 1);
    CHECK(fit.a == doctest::Approx(2.0).epsilon(0.02));
    CHECK(fit.a_ci_low > 0.0);
    CHECK(fit.fraction_satisfying >= 0.95);
    const auto empty = fit_repulsion(std::vector<ClosePair>{}, 1);
    CHECK(empty.pairs == 0);
    CHECK(std::isnan(empty.a));
  }

  TEST_CASE("interlacing property run") {
    auto cfg = small_config("uniform:0,1", 10, 2000, {});
    const auto run = interlacing_property_run(cfg);
    CHECK(run.trials == 2000);
    CHECK(run.failures == 0);
    CHECK(run.result.summary.all_checks_passed());
  }

  TEST_CASE("DOS run integrates to the IDS increment") {
    auto cfg = small_config("uniform:0,1", 200, 100, {});
    cfg.grid = {-3, 4, 141};
    cfg.dos_bandwidth = 0.1;
    const auto s = dos_run(cfg).summary;
    CHECK(s.find_check("ids_monotone")->passed);
    CHECK(s.find_check("dos_integral_relative_error")->passed);
  }
}
