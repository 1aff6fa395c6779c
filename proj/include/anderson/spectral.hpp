#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "anderson/model.hpp"
#include "anderson/parallel.hpp"
#include "anderson/stats.hpp"
#include "anderson/tridiag.hpp"

namespace anderson {

struct IDSEstimate {
  std::vector<double> energy_grid;
  std::vector<double> values;
  /// sqrt(p (1 - p) / R) for the pooled count fraction p.
  std::vector<double> standard_errors;
  std::size_t n = 0;
  std::size_t realizations = 0;
  std::uint64_t master_seed = 0;
};

/// Mean normalized Sturm count (eigenvalues strictly below E) over R
/// realizations of H_N. The grid must be sorted.
IDSEstimate estimate_ids(const SiteDistribution& dist, std::size_t n, std::span<const double> grid,
                         std::size_t realizations, std::uint64_t master_seed, const ExecutionContext& ctx = {});

struct DOSEstimate {
  std::vector<double> energy_grid;
  std::vector<double> k_values;
  std::vector<double> standard_errors;
  double bandwidth = 0.0;
  /// Total |negative part| removed by clipping, in IDS units.
  double clipped_mass = 0.0;
};

/// Triangular-kernel smoothed derivative of the IDS. Requires a uniform grid
/// and h >= 2 grid spacings. Points closer than h to a grid end use the
/// truncated kernel, renormalized.
DOSEstimate estimate_dos(const IDSEstimate& ids, double bandwidth);

/// Trapezoid integral of k over the grid.
double integrate_dos(const DOSEstimate& dos);

/// Linear interpolation of k at E (E must lie inside the grid).
double dos_at(const DOSEstimate& dos, double energy);

struct HolderFit {
  double gamma_hat = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::vector<double> deltas;
  /// sup over the window grid of the mean normalized count in [E - delta, E + delta).
  std::vector<double> sup_mass;
  std::vector<double> standard_errors;
  std::size_t window_points = 200;
};

/// Log-log slope of sup_E N([E - delta, E + delta]) against delta, the sup
/// taken over 200 evenly spaced points of [window_lower, window_upper].
HolderFit holder_exponent_of_ids(const SiteDistribution& dist, std::size_t n, double window_lower,
                                 double window_upper, std::span<const double> deltas, std::size_t realizations,
                                 std::uint64_t master_seed, const ExecutionContext& ctx = {});

struct LocalizationProfile {
  EigenPair pair;
  /// +infinity when the vector vanishes outside the onset radius.
  double decay_rate = 0.0;
  std::size_t onset_radius = 0;
  double tail_max = 0.0;
  bool delocalized = false;
};

/// Least-squares fit of log |xi_n| against |n - center| over the sites with
/// |n - center| > onset_factor * ln N. Requires N >= 50.
LocalizationProfile localization_profile(const EigenPair& pair, double onset_factor = 3.0);

struct BoxResidual {
  double residual = 0.0;
  double boundary_mass = 0.0;
};

/// Residual of the normalized restriction of `pair` to the sites [first, last]
/// against H restricted to the same box.
BoxResidual box_restriction_residual(const EigenPair& pair, std::size_t first, std::size_t last,
                                     const TridiagonalOperator& op);

/// Distance from `energy` to the nearest eigenvalue of `op`.
double distance_to_spectrum(const TridiagonalOperator& op, double energy);

struct SpectralAverageEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t outer = 0;
  std::size_t inner = 0;
};

/// E <delta_j, X_[lower,upper)(H_N) delta_j> with v_j resampled `inner` times
/// per outer realization while the other sites stay frozen.
SpectralAverageEstimate spectral_average(const SiteDistribution& dist, std::size_t n, std::size_t site,
                                         double lower, double upper, std::size_t realizations,
                                         std::uint64_t master_seed, std::size_t inner = 16,
                                         const ExecutionContext& ctx = {});

struct SpectralAverageSweep {
  std::vector<double> deltas;
  std::vector<SpectralAverageEstimate> estimates;
  stats::SlopeFit slope;
};

/// spectral_average over [E0 - delta, E0 + delta) for each delta on shared
/// samples, with the bootstrap log-log slope in delta.
SpectralAverageSweep spectral_average_sweep(const SiteDistribution& dist, std::size_t n, std::size_t site,
                                            double e0, std::span<const double> deltas, std::size_t realizations,
                                            std::uint64_t master_seed, std::size_t inner = 16,
                                            const ExecutionContext& ctx = {});

struct WronskianDiagnostic {
  double energy = 0.0;
  double other_energy = 0.0;
  /// W_n for n = 0..N with the Dirichlet padding xi_{-1} = xi_N = 0; entry k is W_{k-1}.
  std::vector<double> wronskian;
  /// D_n = xi'_nu xi_n - xi_nu xi'_n with nu the center of the first pair.
  std::vector<double> d;
  double total_variation = 0.0;
  /// max_n |(W_n - W_{n-1}) - (E - E') xi_n xi'_n|.
  double max_identity_violation = 0.0;
};

WronskianDiagnostic wronskian_check(const EigenPair& pair, const EigenPair& other);

struct Lemma6Estimate {
  std::vector<double> deltas;
  std::vector<double> probabilities;
  std::vector<double> standard_errors;
  stats::SlopeFit slope;
  std::string event = "eigenpair surrogate (lower bound)";
};

/// Fraction of realizations of H_M with an eigenpair such that |E_j - E| < delta,
/// |xi(0)| < delta and |xi(M-1)| < delta, for each delta on shared samples.
Lemma6Estimate lemma6_event_probability(const SiteDistribution& dist, std::size_t m, double energy,
                                        std::span<const double> deltas, std::size_t realizations,
                                        std::uint64_t master_seed, const ExecutionContext& ctx = {});

}  // namespace anderson
