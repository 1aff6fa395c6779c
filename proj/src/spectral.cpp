#include "anderson/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "anderson/rng.hpp"

namespace anderson {

namespace {

// Below this magnitude a unit eigenvector entry is inverse-iteration noise.
constexpr double kTailFloor = 1e-13;

std::vector<std::uint32_t> counts_below(const TridiagonalOperator& op, std::span<const double> shifts) {
  std::vector<std::size_t> counts(shifts.size());
  sturm_counts(op, shifts, counts);
  return {counts.begin(), counts.end()};
}

}  // namespace

IDSEstimate estimate_ids(const SiteDistribution& dist, std::size_t n, std::span<const double> grid,
                         std::size_t realizations, std::uint64_t master_seed, const ExecutionContext& ctx) {
  if (n == 0) throw std::invalid_argument("estimate_ids requires N >= 1");
  if (realizations == 0) throw std::invalid_argument("estimate_ids requires R >= 1");
  if (!std::is_sorted(grid.begin(), grid.end())) throw std::invalid_argument("estimate_ids: grid must be sorted");
  const auto per_realization = parallel_map(realizations, ctx, [&](std::size_t r) {
    const auto op = assemble_operator(sample_potential(dist, n, master_seed, r), dist.coupling());
    return counts_below(op, grid);
  });
  IDSEstimate out;
  out.energy_grid.assign(grid.begin(), grid.end());
  out.n = n;
  out.realizations = realizations;
  out.master_seed = master_seed;
  std::vector<std::uint64_t> totals(grid.size(), 0);
  for (const auto& counts : per_realization)
    for (std::size_t i = 0; i < grid.size(); ++i) totals[i] += counts[i];
  const double denom = static_cast<double>(n) * static_cast<double>(realizations);
  out.values.resize(grid.size());
  out.standard_errors.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double p = static_cast<double>(totals[i]) / denom;
    out.values[i] = p;
    out.standard_errors[i] = std::sqrt(p * (1.0 - p) / static_cast<double>(realizations));
  }
  return out;
}

DOSEstimate estimate_dos(const IDSEstimate& ids, double bandwidth) {
  const auto& g = ids.energy_grid;
  if (g.size() < 3) throw std::invalid_argument("estimate_dos needs at least three grid points");
  const double dx = (g.back() - g.front()) / static_cast<double>(g.size() - 1);
  for (std::size_t i = 1; i < g.size(); ++i)
    if (std::abs(g[i] - g[i - 1] - dx) > 1e-9 * std::max(1.0, std::abs(dx)))
      throw std::invalid_argument("estimate_dos requires a uniform grid");
  if (!(bandwidth >= 2.0 * dx * (1.0 - 1e-12)))
    throw std::invalid_argument("estimate_dos: bandwidth below twice the grid spacing");

  DOSEstimate out;
  out.energy_grid = g;
  out.bandwidth = bandwidth;
  out.k_values.resize(g.size());
  out.standard_errors.resize(g.size());
  const double nr = static_cast<double>(ids.n) * static_cast<double>(ids.realizations);
  const std::size_t cells = g.size() - 1;
  const auto reach = static_cast<std::size_t>(std::ceil(bandwidth / dx)) + 1;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const std::size_t lo = i > reach ? i - reach : 0;
    const std::size_t hi = std::min(cells, i + reach);
    double value = 0.0, weight = 0.0, variance = 0.0;
    for (std::size_t j = lo; j < hi; ++j) {
      const double mid = 0.5 * (g[j] + g[j + 1]);
      const double u = std::abs(g[i] - mid) / bandwidth;
      if (u >= 1.0) continue;
      const double kern = (1.0 - u) / bandwidth;
      const double inc = ids.values[j + 1] - ids.values[j];
      value += kern * inc;
      weight += kern * dx;
      variance += kern * kern * std::max(inc, 0.0) / nr;
    }
    double k = weight > 0.0 ? value / weight : 0.0;
    if (k < 0.0) {
      out.clipped_mass += -k * dx;
      k = 0.0;
    }
    out.k_values[i] = k;
    out.standard_errors[i] = weight > 0.0 ? std::sqrt(variance) / weight : 0.0;
  }
  return out;
}

double integrate_dos(const DOSEstimate& dos) {
  double s = 0.0;
  for (std::size_t i = 1; i < dos.energy_grid.size(); ++i)
    s += 0.5 * (dos.k_values[i] + dos.k_values[i - 1]) * (dos.energy_grid[i] - dos.energy_grid[i - 1]);
  return s;
}

double dos_at(const DOSEstimate& dos, double energy) {
  const auto& g = dos.energy_grid;
  if (g.empty() || energy < g.front() || energy > g.back())
    throw std::out_of_range("dos_at: energy outside the grid");
  const auto it = std::upper_bound(g.begin(), g.end(), energy);
  if (it == g.end()) return dos.k_values.back();
  const std::size_t j = static_cast<std::size_t>(it - g.begin());
  if (j == 0) return dos.k_values.front();
  const double t = (energy - g[j - 1]) / (g[j] - g[j - 1]);
  return (1.0 - t) * dos.k_values[j - 1] + t * dos.k_values[j];
}

HolderFit holder_exponent_of_ids(const SiteDistribution& dist, std::size_t n, double window_lower,
                                 double window_upper, std::span<const double> deltas, std::size_t realizations,
                                 std::uint64_t master_seed, const ExecutionContext& ctx) {
  if (deltas.size() < 2) throw std::invalid_argument("holder_exponent_of_ids needs at least two deltas");
  const auto [dmin, dmax] = std::minmax_element(deltas.begin(), deltas.end());
  if (!(*dmin > 0.0)) throw std::invalid_argument("holder_exponent_of_ids: deltas must be positive");
  if (*dmax / *dmin < std::pow(10.0, 1.5) * (1.0 - 1e-12))
    throw std::invalid_argument("holder_exponent_of_ids: deltas must span at least 1.5 decades");
  if (!(window_upper >= window_lower)) throw std::invalid_argument("holder_exponent_of_ids: empty window");
  if (realizations < 2) throw std::invalid_argument("holder_exponent_of_ids requires R >= 2");

  HolderFit out;
  out.deltas.assign(deltas.begin(), deltas.end());
  const std::size_t points = out.window_points;
  const std::size_t nd = deltas.size();
  std::vector<double> shifts;
  shifts.reserve(2 * points * nd);
  for (std::size_t j = 0; j < nd; ++j)
    for (std::size_t i = 0; i < points; ++i) {
      const double e = window_lower + (window_upper - window_lower) * static_cast<double>(i) /
                                          static_cast<double>(points - 1);
      shifts.push_back(e - deltas[j]);
      shifts.push_back(e + deltas[j]);
    }

  // diffs[r][j * points + i]: eigenvalues of realization r in [E_i - d_j, E_i + d_j).
  const auto diffs = parallel_map(realizations, ctx, [&](std::size_t r) {
    const auto op = assemble_operator(sample_potential(dist, n, master_seed, r), dist.coupling());
    const auto c = counts_below(op, shifts);
    std::vector<std::uint32_t> d(points * nd);
    for (std::size_t k = 0; k < d.size(); ++k) d[k] = c[2 * k + 1] - c[2 * k];
    return d;
  });

  const double nd_n = static_cast<double>(n);
  std::vector<std::size_t> argmax(nd, 0);
  auto sup_masses = [&](std::span<const std::uint32_t> mult, bool record) {
    std::vector<double> sums(points * nd, 0.0);
    double total = 0.0;
    for (std::size_t r = 0; r < realizations; ++r) {
      if (mult[r] == 0) continue;
      total += mult[r];
      const auto& d = diffs[r];
      for (std::size_t k = 0; k < sums.size(); ++k) sums[k] += static_cast<double>(mult[r]) * d[k];
    }
    std::vector<double> sup(nd, 0.0);
    for (std::size_t j = 0; j < nd; ++j)
      for (std::size_t i = 0; i < points; ++i) {
        const double m = sums[j * points + i] / (total * nd_n);
        if (m > sup[j]) {
          sup[j] = m;
          if (record) argmax[j] = i;
        }
      }
    return sup;
  };
  std::vector<std::uint32_t> ones(realizations, 1);
  out.sup_mass = sup_masses(ones, true);

  out.standard_errors.resize(nd);
  for (std::size_t j = 0; j < nd; ++j) {
    std::vector<double> col(realizations);
    for (std::size_t r = 0; r < realizations; ++r) col[r] = diffs[r][j * points + argmax[j]] / nd_n;
    out.standard_errors[j] = stats::mean_estimate(col).standard_error;
  }

  const bool degenerate = std::any_of(out.sup_mass.begin(), out.sup_mass.end(), [](double m) { return !(m > 0.0); });
  if (degenerate) {
    std::ostringstream msg;
    msg << "holder_exponent_of_ids: degenerate fit, zero window mass at some delta (R=" << realizations
        << ", N=" << n << "); sup masses:";
    for (std::size_t j = 0; j < nd; ++j) msg << " [" << deltas[j] << ": " << out.sup_mass[j] << "]";
    throw std::runtime_error(msg.str());
  }
  const auto fit = stats::bootstrap_loglog_slope(
      out.deltas, [&](std::span<const std::uint32_t> mult) { return sup_masses(mult, false); }, out.standard_errors,
      realizations, derive_seed(master_seed, "holder.bootstrap"));
  out.gamma_hat = fit.slope;
  out.ci_low = fit.ci_low;
  out.ci_high = fit.ci_high;
  return out;
}

LocalizationProfile localization_profile(const EigenPair& pair, double onset_factor) {
  const std::size_t n = pair.vector.size();
  if (n < 50) throw std::invalid_argument("localization_profile requires N >= 50");
  LocalizationProfile out;
  out.pair = pair;
  out.onset_radius = static_cast<std::size_t>(std::ceil(onset_factor * std::log(static_cast<double>(n))));
  const std::size_t nu = pair.center;
  std::vector<double> dist, logs;
  std::size_t max_d = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t d = i > nu ? i - nu : nu - i;
    if (d <= out.onset_radius) continue;
    max_d = std::max(max_d, d);
    const double a = std::abs(pair.vector[i]);
    out.tail_max = std::max(out.tail_max, a);
    if (a > kTailFloor) {
      dist.push_back(static_cast<double>(d));
      logs.push_back(std::log(a));
    }
  }
  if (out.tail_max <= kTailFloor || dist.size() < 2 ||
      std::all_of(dist.begin(), dist.end(), [&](double d) { return d == dist.front(); })) {
    out.decay_rate = max_d > 0 && out.tail_max > kTailFloor ? 0.0 : std::numeric_limits<double>::infinity();
    out.delocalized = out.decay_rate == 0.0;
    return out;
  }
  const auto fit = stats::least_squares(dist, logs);
  out.decay_rate = std::max(0.0, -fit.slope);
  const double span = static_cast<double>(max_d - out.onset_radius);
  out.delocalized = out.decay_rate * span < 1.0;
  return out;
}

BoxResidual box_restriction_residual(const EigenPair& pair, std::size_t first, std::size_t last,
                                     const TridiagonalOperator& op) {
  const std::size_t n = pair.vector.size();
  if (n != op.size()) throw std::invalid_argument("box_restriction_residual: size mismatch");
  if (first > last || last >= n) throw std::invalid_argument("box_restriction_residual: box outside [0, N)");
  double inside = 0.0, outside = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x2 = pair.vector[i] * pair.vector[i];
    (i >= first && i <= last ? inside : outside) += x2;
  }
  const double m = std::sqrt(inside);
  if (m < 1e-6) throw std::domain_error("box_restriction_residual: box misses the eigenvector mass");
  std::vector<double> x(pair.vector.begin() + static_cast<std::ptrdiff_t>(first),
                        pair.vector.begin() + static_cast<std::ptrdiff_t>(last) + 1);
  for (double& v : x) v /= m;
  const auto box = op.restrict_to(first, last);
  BoxResidual out;
  out.residual = residual_norm(box, pair.energy, x);
  out.boundary_mass = std::sqrt(outside);
  return out;
}

double distance_to_spectrum(const TridiagonalOperator& op, double energy) {
  const auto spec = full_spectrum(op);
  double best = std::numeric_limits<double>::infinity();
  for (double e : spec) best = std::min(best, std::abs(e - energy));
  return best;
}

namespace {

// Per outer realization, the inner mean of xi(site)^2 summed over eigenpairs
// in [e0 - d, e0 + d) for every d.
std::vector<double> spectral_weights(const SiteDistribution& dist, std::size_t n, std::size_t site, double lower,
                                     double upper, std::span<const double> deltas, double e0, bool windowed,
                                     std::uint64_t master_seed, std::uint64_t inner_seed, std::size_t r,
                                     std::size_t inner) {
  const double lambda = dist.coupling();
  const auto base = assemble_operator(sample_potential(dist, n, master_seed, r), lambda);
  std::vector<double> sums(windowed ? deltas.size() : 1, 0.0);
  for (std::size_t s = 0; s < inner; ++s) {
    const auto op = base.with_diagonal_entry(site, lambda * draw_site(dist, inner_seed, r, s));
    if (count_in_interval(op, lower, upper) == 0) continue;
    const auto slice = eigenvalues_in_interval(op, lower, upper, default_tolerance(op));
    const auto pairs = eigenpairs(op, slice.eigenvalues);
    for (const auto& p : pairs) {
      const double w = p.vector[site] * p.vector[site];
      if (!windowed) {
        sums[0] += w;
        continue;
      }
      for (std::size_t k = 0; k < deltas.size(); ++k)
        if (p.energy >= e0 - deltas[k] && p.energy < e0 + deltas[k]) sums[k] += w;
    }
  }
  for (double& v : sums) v /= static_cast<double>(inner);
  return sums;
}

}  // namespace

SpectralAverageEstimate spectral_average(const SiteDistribution& dist, std::size_t n, std::size_t site,
                                         double lower, double upper, std::size_t realizations,
                                         std::uint64_t master_seed, std::size_t inner, const ExecutionContext& ctx) {
  if (site >= n) throw std::invalid_argument("spectral_average: site outside [0, N)");
  if (realizations == 0 || inner == 0) throw std::invalid_argument("spectral_average: empty sample");
  const auto inner_seed = derive_seed(master_seed, "spectral_average.inner");
  const auto outer = parallel_map(realizations, ctx, [&](std::size_t r) {
    return spectral_weights(dist, n, site, lower, upper, {}, 0.0, false, master_seed, inner_seed, r, inner)[0];
  });
  const auto m = stats::mean_estimate(outer);
  return {m.mean, m.standard_error, realizations, inner};
}

SpectralAverageSweep spectral_average_sweep(const SiteDistribution& dist, std::size_t n, std::size_t site,
                                            double e0, std::span<const double> deltas, std::size_t realizations,
                                            std::uint64_t master_seed, std::size_t inner,
                                            const ExecutionContext& ctx) {
  if (site >= n) throw std::invalid_argument("spectral_average_sweep: site outside [0, N)");
  if (deltas.empty() || realizations == 0 || inner == 0)
    throw std::invalid_argument("spectral_average_sweep: empty sample");
  const double dmax = *std::max_element(deltas.begin(), deltas.end());
  const auto inner_seed = derive_seed(master_seed, "spectral_average.inner");
  const stats::OutcomeMatrix outcomes = parallel_map(realizations, ctx, [&](std::size_t r) {
    return spectral_weights(dist, n, site, e0 - dmax, e0 + dmax, deltas, e0, true, master_seed, inner_seed, r,
                            inner);
  });
  SpectralAverageSweep out;
  out.deltas.assign(deltas.begin(), deltas.end());
  std::vector<std::size_t> columns(deltas.size());
  std::iota(columns.begin(), columns.end(), 0);
  std::vector<double> se;
  for (const auto& e : stats::column_estimates(outcomes, columns)) {
    out.estimates.push_back({e.mean, e.standard_error, realizations, inner});
    se.push_back(e.standard_error);
  }
  out.slope = stats::bootstrap_loglog_slope(
      out.deltas,
      [&](std::span<const std::uint32_t> mult) { return stats::weighted_column_means(outcomes, columns, mult); }, se,
      realizations, derive_seed(master_seed, "spectral_average.bootstrap"));
  return out;
}

WronskianDiagnostic wronskian_check(const EigenPair& pair, const EigenPair& other) {
  const auto& x = pair.vector;
  const auto& y = other.vector;
  if (x.size() != y.size() || x.empty()) throw std::invalid_argument("wronskian_check: size mismatch");
  const std::size_t n = x.size();
  auto at = [n](const std::vector<double>& v, std::ptrdiff_t i) {
    return i < 0 || i >= static_cast<std::ptrdiff_t>(n) ? 0.0 : v[static_cast<std::size_t>(i)];
  };
  WronskianDiagnostic out;
  out.energy = pair.energy;
  out.other_energy = other.energy;
  out.wronskian.resize(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    const auto i = static_cast<std::ptrdiff_t>(k) - 1;
    out.wronskian[k] = at(y, i) * at(x, i + 1) - at(x, i) * at(y, i + 1);
  }
  const double de = pair.energy - other.energy;
  for (std::size_t i = 0; i < n; ++i) {
    const double step = out.wronskian[i + 1] - out.wronskian[i];
    out.total_variation += std::abs(step);
    out.max_identity_violation = std::max(out.max_identity_violation, std::abs(step - de * x[i] * y[i]));
  }
  const std::size_t nu = pair.center;
  out.d.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.d[i] = y[nu] * x[i] - x[nu] * y[i];
  return out;
}

Lemma6Estimate lemma6_event_probability(const SiteDistribution& dist, std::size_t m, double energy,
                                        std::span<const double> deltas, std::size_t realizations,
                                        std::uint64_t master_seed, const ExecutionContext& ctx) {
  if (!dist.is_bernoulli()) throw std::invalid_argument("lemma6_event_probability requires a Bernoulli law");
  if (m == 0) throw std::invalid_argument("lemma6_event_probability requires M >= 1");
  if (deltas.empty() || realizations == 0) throw std::invalid_argument("lemma6_event_probability: empty sample");
  for (double d : deltas)
    if (!(d > 0.0)) throw std::invalid_argument("lemma6_event_probability: delta must be positive");
  const double dmax = *std::max_element(deltas.begin(), deltas.end());

  const stats::OutcomeMatrix outcomes = parallel_map(realizations, ctx, [&](std::size_t r) {
    const auto op = assemble_operator(sample_potential(dist, m, master_seed, r), dist.coupling());
    std::vector<double> hit(deltas.size(), 0.0);
    const auto slice = eigenvalues_in_interval(op, energy - dmax, energy + dmax, default_tolerance(op));
    if (slice.eigenvalues.empty()) return hit;
    const auto pairs = eigenpairs(op, slice.eigenvalues);
    for (const auto& p : pairs) {
      const double gap = std::abs(p.energy - energy);
      const double edge = std::max(std::abs(p.vector.front()), std::abs(p.vector.back()));
      for (std::size_t k = 0; k < deltas.size(); ++k)
        if (gap < deltas[k] && edge < deltas[k]) hit[k] = 1.0;
    }
    return hit;
  });

  Lemma6Estimate out;
  out.deltas.assign(deltas.begin(), deltas.end());
  std::vector<std::size_t> columns(deltas.size());
  std::iota(columns.begin(), columns.end(), 0);
  for (const auto& e : stats::column_estimates(outcomes, columns)) {
    out.probabilities.push_back(e.mean);
    out.standard_errors.push_back(e.standard_error);
  }
  out.slope = stats::bootstrap_loglog_slope(
      out.deltas,
      [&](std::span<const std::uint32_t> mult) { return stats::weighted_column_means(outcomes, columns, mult); },
      out.standard_errors, realizations, derive_seed(master_seed, "lemma6.bootstrap"));
  return out;
}

}  // namespace anderson
