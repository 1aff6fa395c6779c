#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "anderson/ensemble.hpp"
#include "anderson/rng.hpp"

namespace anderson {

namespace {

std::string sci(double x) { return format_double(x); }

}  // namespace

ExperimentResult bernoulli_min_spacing(const ExperimentConfig& cfg, const ExecutionContext& ctx) {
  if (!cfg.dist.is_bernoulli()) throw std::invalid_argument("bernoulli_min_spacing requires a Bernoulli law");
  ExperimentResult out;
  auto& s = out.summary = detail::make_summary("separation", cfg);
  io::CsvTable t{{"n", "realization", "min_spacing", "neg_log_spacing"}, {}};
  std::vector<std::vector<double>> chat_by_n;  // [n][quantile]
  double nonpositive = 0;

  for (std::size_t n : cfg.n_list) {
    if (n < 2) throw std::invalid_argument("bernoulli_min_spacing requires N >= 2");
    const auto spacings = parallel_map(cfg.realizations, ctx, [&](std::size_t r) {
      const auto op = assemble_operator(sample_potential(cfg.dist, n, cfg.master_seed, r), cfg.dist.coupling());
      try {
        return min_spacing(op);
      } catch (const std::runtime_error& e) {
        throw std::runtime_error("N=" + std::to_string(n) + ", realization " + std::to_string(r) + ": " + e.what() +
                                 " (refine tol)");
      }
    });
    std::vector<double> neglog(spacings.size());
    for (std::size_t r = 0; r < spacings.size(); ++r) {
      if (!(spacings[r] > 0.0)) ++nonpositive;
      neglog[r] = -std::log(spacings[r]);
      t.add_numeric_row({static_cast<double>(n), static_cast<double>(r), spacings[r], neglog[r]});
    }
    const double logn = std::log(static_cast<double>(n));
    std::vector<double> row;
    for (double q : cfg.quantiles) {
      const double c_hat = stats::quantile(neglog, q) / logn;
      row.push_back(c_hat);
      // Percentile bootstrap over realizations.
      std::vector<double> boots;
      std::vector<double> resample(neglog.size());
      const auto seed = derive_seed(cfg.master_seed, "separation.bootstrap." + std::to_string(n));
      for (std::size_t b = 0; b < cfg.bootstrap_resamples; ++b) {
        for (std::size_t i = 0; i < neglog.size(); ++i) resample[i] = neglog[counter_hash(seed, b, i) % neglog.size()];
        boots.push_back(stats::quantile(resample, q) / logn);
      }
      SlopeEstimate c{"C_hat(q=" + format_double(q) + ")", "quantile", n, q, c_hat, 0.0,
                      boots.empty() ? c_hat : stats::quantile(boots, 0.025),
                      boots.empty() ? c_hat : stats::quantile(boots, 0.975), neglog.size(), boots.size()};
      s.slopes.push_back(c);
      s.estimates.push_back({"quantile(-log min spacing)", n, q, stats::quantile(neglog, q), 0.0, cfg.realizations});
    }
    chat_by_n.push_back(std::move(row));
  }
  detail::add_check(s, "nonpositive_spacings", nonpositive, 0.0, 0.0);
  if (cfg.n_list.size() >= 2) {
    const auto lo = std::min_element(cfg.n_list.begin(), cfg.n_list.end()) - cfg.n_list.begin();
    const auto hi = std::max_element(cfg.n_list.begin(), cfg.n_list.end()) - cfg.n_list.begin();
    const auto q = std::find(cfg.quantiles.begin(), cfg.quantiles.end(), 0.99);
    const std::size_t qi = q == cfg.quantiles.end() ? cfg.quantiles.size() - 1 : q - cfg.quantiles.begin();
    const double base = chat_by_n[lo][qi];
    detail::add_check(s, "C_hat_trend(q=" + format_double(cfg.quantiles[qi]) + ")", chat_by_n[hi][qi], 0.0,
                      1.25 * base);
  }
  s.notes.push_back("C_hat(N) = quantile_q(-log min spacing) / log N; boundedness across N is the acceptance signal");
  out.tables.emplace_back("data.csv", std::move(t));
  return out;
}

std::vector<ClosePair> collect_close_pairs(std::span<const EigenPair> pairs, double threshold,
                                           std::uint64_t realization_index) {
  std::vector<ClosePair> out;
  for (std::size_t i = 0; i < pairs.size(); ++i)
    for (std::size_t j = i + 1; j < pairs.size(); ++j) {
      const double gap = pairs[j].energy - pairs[i].energy;
      if (!(gap < threshold)) break;
      const std::size_t a = pairs[i].center, b = pairs[j].center;
      out.push_back({realization_index, pairs[i].energy, gap, a, b, a > b ? a - b : b - a});
    }
  return out;
}

RepulsionFit fit_repulsion(std::span<const ClosePair> pairs, std::uint64_t seed, std::size_t resamples) {
  RepulsionFit fit;
  std::vector<double> x, y;
  for (const auto& p : pairs) {
    if (!(p.gap > 0.0)) {
      ++fit.unresolved;
      continue;
    }
    x.push_back(std::log(1.0 / p.gap));
    y.push_back(static_cast<double>(p.distance));
  }
  fit.pairs = x.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const bool spread = x.size() >= 3 && *std::max_element(x.begin(), x.end()) > *std::min_element(x.begin(), x.end());
  if (!spread) {
    fit.a = fit.b = fit.a_ci_low = fit.a_ci_high = fit.residual_sd = fit.fraction_satisfying = nan;
    return fit;
  }
  const auto ols = stats::least_squares(x, y);
  fit.a = ols.slope;
  fit.residual_sd = ols.residual_sd;
  fit.b = -ols.intercept + 2.0 * ols.residual_sd;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (y[i] >= fit.a * x[i] - fit.b) ++ok;
  fit.fraction_satisfying = static_cast<double>(ok) / static_cast<double>(x.size());

  std::vector<double> slopes, bx(x.size()), by(x.size());
  for (std::size_t b = 0; b < resamples; ++b) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      const std::size_t k = counter_hash(seed, b, i) % x.size();
      bx[i] = x[k];
      by[i] = y[k];
    }
    if (*std::max_element(bx.begin(), bx.end()) == *std::min_element(bx.begin(), bx.end())) continue;
    slopes.push_back(stats::least_squares(bx, by).slope);
  }
  fit.a_ci_low = slopes.size() >= 2 ? stats::quantile(slopes, 0.025) : nan;
  fit.a_ci_high = slopes.size() >= 2 ? stats::quantile(slopes, 0.975) : nan;
  return fit;
}

RepulsionRun repulsion_scatter(const ExperimentConfig& cfg, const ExecutionContext& ctx) {
  if (!cfg.dist.is_bernoulli()) throw std::invalid_argument("repulsion_scatter requires a Bernoulli law");
  const std::size_t n = cfg.n_list.front();
  const double threshold = cfg.delta_threshold ? *cfg.delta_threshold : std::pow(static_cast<double>(n), -3.0);
  RepulsionRun run;
  const auto per_realization = parallel_map(cfg.realizations, ctx, [&](std::size_t r) {
    const auto op = assemble_operator(sample_potential(cfg.dist, n, cfg.master_seed, r), cfg.dist.coupling());
    const auto spectrum = full_spectrum(op);
    std::vector<double> energies;
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
      const bool left = i > 0 && spectrum[i] - spectrum[i - 1] < threshold;
      const bool right = i + 1 < spectrum.size() && spectrum[i + 1] - spectrum[i] < threshold;
      if (left || right) energies.push_back(spectrum[i]);
    }
    if (energies.empty()) return std::vector<ClosePair>{};
    const auto pairs = eigenpairs(op, energies);
    return collect_close_pairs(pairs, threshold, r);
  });
  for (const auto& v : per_realization) run.pairs.insert(run.pairs.end(), v.begin(), v.end());
  run.fit = fit_repulsion(run.pairs, derive_seed(cfg.master_seed, "repulsion.bootstrap"), cfg.bootstrap_resamples);

  auto& s = run.result.summary = detail::make_summary("repulsion", cfg);
  s.constants.emplace_back("threshold", threshold);
  s.constants.emplace_back("close_pairs", static_cast<double>(run.fit.pairs));
  s.constants.emplace_back("unresolved_pairs", static_cast<double>(run.fit.unresolved));
  s.constants.emplace_back("a", run.fit.a);
  s.constants.emplace_back("b", run.fit.b);
  s.constants.emplace_back("residual_sd", run.fit.residual_sd);
  s.constants.emplace_back("fraction_satisfying", run.fit.fraction_satisfying);
  s.slopes.push_back({"center_distance_vs_log_inverse_gap", "log(1/gap)", n, threshold, run.fit.a, -run.fit.b,
                      run.fit.a_ci_low, run.fit.a_ci_high, run.fit.pairs, 0});
  if (run.fit.pairs < 3) {
    s.notes.push_back("fewer than three close pairs below threshold " + sci(threshold) +
                      "; increase R or the threshold");
  } else {
    detail::add_check(s, "a_ci_low", run.fit.a_ci_low, std::numeric_limits<double>::min(),
                      std::numeric_limits<double>::infinity());
    detail::add_check(s, "fraction_satisfying", run.fit.fraction_satisfying, 0.95, 1.0);
  }
  if (run.fit.pairs < 20) s.notes.push_back("fewer than 20 close pairs; enlarge R before reading the fit");
  s.notes.push_back("boundary: center_distance >= a log(1/gap) - b, with b the OLS intercept lowered by two residual "
                    "standard deviations; the CI for a resamples pairs");

  io::CsvTable t{{"realization", "energy", "gap", "center", "other_center", "center_distance"}, {}};
  for (const auto& p : run.pairs)
    t.add_numeric_row({static_cast<double>(p.realization_index), p.energy, p.gap, static_cast<double>(p.center),
                       static_cast<double>(p.other_center), static_cast<double>(p.distance)});
  run.result.tables.emplace_back("data.csv", std::move(t));
  return run;
}

InterlacingRun interlacing_property_run(const ExperimentConfig& cfg, const ExecutionContext& ctx) {
  const auto seed = derive_seed(cfg.master_seed, "interlace");
  const SiteDistribution laws[] = {SiteDistribution::uniform(0.0, 1.0), SiteDistribution::cantor(40),
                                   SiteDistribution::bernoulli(0.5), cfg.dist};
  struct Trial {
    bool passed = true;
    InterlacingCounterexample instance;
  };
  const auto trials = parallel_map(cfg.realizations, ctx, [&](std::size_t t) {
    auto u = [&](std::uint64_t k) { return to_unit_interval(counter_hash(seed, t, k)); };
    const auto& base = laws[counter_hash(seed, t, 100) % 4];
    const double coupling = 0.1 + 4.0 * u(1);
    const auto dist = base.with_coupling(coupling);
    const std::size_t n = 1 + counter_hash(seed, t, 2) % 60;
    const auto op = assemble_operator(sample_potential(dist, n, seed, t), coupling);
    const std::size_t site = counter_hash(seed, t, 3) % n;
    const double dj = op[site];
    const double tau = u(4) < 0.125 ? dj : dj + 5.0 * u(5) * u(6);
    const auto [lo, hi] = op.spectral_bounds();
    double lower = lo - 1.0, upper = std::max(hi, tau + 2.0) + 1.0;
    if (u(7) >= 0.125) {
      const double a = lo - 0.5 + (hi - lo + 1.0) * u(8);
      const double b = lo - 0.5 + (hi - lo + 1.0) * u(9);
      lower = std::min(a, b);
      upper = std::max(a, b);
    }
    Trial out;
    out.passed = interlacing_check(op, site, tau, lower, upper);
    if (!out.passed) {
      out.instance = {t, dist.to_string(), {op.diagonal().begin(), op.diagonal().end()}, site, tau, lower, upper};
    }
    return out;
  });

  InterlacingRun run;
  run.trials = trials.size();
  io::CsvTable t{{"trial", "passed"}, {}};
  for (std::size_t i = 0; i < trials.size(); ++i) {
    t.add_numeric_row({static_cast<double>(i), trials[i].passed ? 1.0 : 0.0});
    if (!trials[i].passed) {
      ++run.failures;
      run.counterexamples.push_back(trials[i].instance);
    }
  }
  auto& s = run.result.summary = detail::make_summary("interlace", cfg);
  s.constants.emplace_back("trials", static_cast<double>(run.trials));
  s.constants.emplace_back("failures", static_cast<double>(run.failures));
  detail::add_check(s, "failures", static_cast<double>(run.failures), 0.0, 0.0);
  for (const auto& c : run.counterexamples) {
    std::string diag;
    for (std::size_t i = 0; i < c.diagonal.size(); ++i) diag += (i ? " " : "") + format_double(c.diagonal[i]);
    s.notes.push_back("counterexample trial=" + std::to_string(c.trial) + " dist=" + c.dist + " site=" +
                      std::to_string(c.site) + " tau=" + format_double(c.tau) + " I=[" + format_double(c.lower) +
                      "," + format_double(c.upper) + ") diagonal=" + diag);
  }
  run.result.tables.emplace_back("data.csv", std::move(t));
  return run;
}

}  // namespace anderson
