#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "anderson/config.hpp"
#include "anderson/io.hpp"
#include "anderson/parallel.hpp"
#include "anderson/stats.hpp"
#include "anderson/tridiag.hpp"

namespace anderson {

/// One Monte Carlo estimate at a sweep point.
struct Estimate {
  std::string quantity;
  std::size_t n = 0;
  double delta = 0.0;
  double value = 0.0;
  double standard_error = 0.0;
  std::size_t realizations = 0;
};

/// Log-log slope with its bootstrap interval. `variable` is "delta" (N fixed)
/// or "N" (delta fixed).
struct SlopeEstimate {
  std::string name;
  std::string variable;
  std::size_t n = 0;
  double delta = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t points = 0;
  std::size_t resamples_used = 0;
};

/// Acceptance threshold evaluated on a run: passed iff lower <= value <= upper.
struct Check {
  std::string name;
  double value = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool passed = false;
};

struct EnsembleSummary {
  std::string experiment;
  std::uint64_t master_seed = 0;
  std::string config_digest;
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<Estimate> estimates;
  std::vector<SlopeEstimate> slopes;
  std::vector<std::pair<std::string, double>> constants;
  std::vector<Check> checks;
  std::vector<std::string> notes;

  bool all_checks_passed() const;
  const SlopeEstimate* find_slope(std::string_view name, std::size_t n = 0, double delta = 0.0) const;
  const Check* find_check(std::string_view name) const;
  double constant(std::string_view name) const;
};

/// Summary plus named CSV tables; the first table is written as data.csv.
struct ExperimentResult {
  EnsembleSummary summary;
  std::vector<std::pair<std::string, io::CsvTable>> tables;
};

/// JSON text of a summary (two-space indent, trailing newline).
std::string summary_to_json(const EnsembleSummary& summary);

/// Re-serializes JSON text through the same writer.
std::string canonical_json(std::string_view json_text);

// Scaling experiments. Each realization index r draws the same potential
// prefix for every N in the sweep and is reused across the delta sweep.
ExperimentResult wegner_probability(const ExperimentConfig& cfg, const ExecutionContext& ctx = {});
ExperimentResult minami_moment(const ExperimentConfig& cfg, const ExecutionContext& ctx = {});
ExperimentResult expected_count(const ExperimentConfig& cfg, const ExecutionContext& ctx = {});
ExperimentResult two_eigenvalue_probability(const ExperimentConfig& cfg, const ExecutionContext& ctx = {});

/// Rescaled points N (E - E0) of Spec H_N in [E0, E0 + L/N), sorted.
struct PointProcessSample {
  std::uint64_t realization_index = 0;
  std::vector<double> points;
};

struct PoissonDiagnostics {
  double window = 0.0;
  double rho_hat = 0.0;
  std::vector<std::size_t> counts;
  /// Empirical pmf of the counts, index = count.
  std::vector<double> counting_pmf;
  /// Poisson(rho_hat L) on the same support.
  std::vector<double> poisson_pmf;
  stats::ChiSquareResult chi_square;
  /// Pooled consecutive gaps from realizations with at least two points, sorted.
  std::vector<double> gaps;
  /// KS distance to the gap law of a rate-rho_hat Poisson process seen through the window.
  double ks_distance = 0.0;
  /// KS distance to the untruncated Exponential(rho_hat) law.
  double ks_exponential = 0.0;
  std::size_t nonempty = 0;
};

/// Throws std::runtime_error when fewer than 50 realizations have a point.
PoissonDiagnostics poisson_diagnostics(std::span<const PointProcessSample> samples, double window);

struct PoissonRun {
  std::vector<PointProcessSample> samples;
  PoissonDiagnostics diagnostics;
  /// DOS at E0 from an independent run, and its standard error.
  double k_hat = 0.0;
  double k_hat_standard_error = 0.0;
  ExperimentResult result;
};

PoissonRun poisson_local_statistics(const ExperimentConfig& cfg, const ExecutionContext& ctx = {});

struct BlockRun {
  PoissonRun blocks;
  PoissonDiagnostics full;
  /// Nominal block length round(K log N); blocks absorb the remainder of [0, N).
  std::size_t block_size = 0;
  std::size_t largest_block_size = 0;
  std::size_t buffer_size = 0;
  std::size_t block_count = 0;
  /// Fraction of window eigenvalues of H_N whose localization center sits in a buffer.
  double buffer_hit_rate = 0.0;
  /// Fraction of realizations with at least one such eigenvalue.
  double buffer_hit_realization_rate = 0.0;
  /// Fraction of realizations in which some extended block had two or more eigenvalues in the window.
  double discard_rate = 0.0;
  /// Fraction of (realization, block) pairs discarded.
  double block_discard_fraction = 0.0;
  double total_variation = 0.0;
  ExperimentResult result;
};

BlockRun independent_block_process(const ExperimentConfig& cfg, const ExecutionContext& ctx = {});

ExperimentResult bernoulli_min_spacing(const ExperimentConfig& cfg, const ExecutionContext& ctx = {});

struct ClosePair {
  std::uint64_t realization_index = 0;
  double energy = 0.0;
  double gap = 0.0;
  std::size_t center = 0;
  std::size_t other_center = 0;
  std::size_t distance = 0;
};

/// All pairs i < j of energy-sorted eigenpairs with E_j - E_i < threshold.
std::vector<ClosePair> collect_close_pairs(std::span<const EigenPair> pairs, double threshold,
                                           std::uint64_t realization_index = 0);

struct RepulsionFit {
  /// distance ~ a log(1/gap) - b.
  double a = 0.0;
  double b = 0.0;
  double a_ci_low = 0.0;
  double a_ci_high = 0.0;
  double residual_sd = 0.0;
  double fraction_satisfying = 0.0;
  std::size_t pairs = 0;
  /// Pairs with a gap of exactly zero at working precision, left out of the fit.
  std::size_t unresolved = 0;
};

/// OLS of distance on log(1/gap); the boundary intercept is lowered by two
/// residual standard deviations. The interval for `a` resamples pairs.
RepulsionFit fit_repulsion(std::span<const ClosePair> pairs, std::uint64_t seed, std::size_t resamples = 1000);

struct RepulsionRun {
  std::vector<ClosePair> pairs;
  RepulsionFit fit;
  ExperimentResult result;
};

RepulsionRun repulsion_scatter(const ExperimentConfig& cfg, const ExecutionContext& ctx = {});

struct InterlacingCounterexample {
  std::uint64_t trial = 0;
  std::string dist;
  std::vector<double> diagonal;
  std::size_t site = 0;
  double tau = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

struct InterlacingRun {
  std::size_t trials = 0;
  std::size_t failures = 0;
  std::vector<InterlacingCounterexample> counterexamples;
  ExperimentResult result;
};

/// R random instances drawn from a mix of laws, sizes, sites, tau >= d_j and windows.
InterlacingRun interlacing_property_run(const ExperimentConfig& cfg, const ExecutionContext& ctx = {});

ExperimentResult dos_run(const ExperimentConfig& cfg, const ExecutionContext& ctx = {});
ExperimentResult lyapunov_run(const ExperimentConfig& cfg, const ExecutionContext& ctx = {});
ExperimentResult holder_run(const ExperimentConfig& cfg, const ExecutionContext& ctx = {});

/// Dispatches a CLI subcommand name to its experiment.
ExperimentResult run_experiment(std::string_view subcommand, const ExperimentConfig& cfg,
                                const ExecutionContext& ctx = {});

namespace detail {

EnsembleSummary make_summary(std::string experiment, const ExperimentConfig& cfg);
void add_check(EnsembleSummary& s, std::string name, double value, double lower, double upper);
SlopeEstimate to_slope(std::string name, std::string variable, std::size_t n, double delta,
                       const stats::SlopeFit& fit);

}  // namespace detail

}  // namespace anderson
