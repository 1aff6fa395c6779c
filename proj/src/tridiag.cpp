#include "anderson/tridiag.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <string>

#include "anderson/rng.hpp"

namespace anderson {

namespace {

constexpr std::size_t kLanes = 8;
constexpr double kPivotEpsilon = 0x1.0p-50;
// Gaps below this multiple of the norm bound are treated as degenerate.
constexpr double kDegenerateGap = 1e-10;

}  // namespace

void sturm_counts(const TridiagonalOperator& op, std::span<const double> shifts,
                  std::span<std::size_t> counts) {
  if (counts.size() < shifts.size()) throw std::invalid_argument("counts buffer too small");
  const auto diag = op.diagonal();
  const std::size_t n = diag.size();
  const double pivmin = kPivotEpsilon * op.norm_bound();

  for (std::size_t base = 0; base < shifts.size(); base += kLanes) {
    const std::size_t lanes = std::min(kLanes, shifts.size() - base);
    std::array<double, kLanes> shift{};
    std::array<double, kLanes> q{};
    std::array<std::size_t, kLanes> negative{};
    for (std::size_t j = 0; j < kLanes; ++j) {
      shift[j] = j < lanes ? shifts[base + j] : shifts[base];
      // 1/q_0 = 0 starts the recursion at q_1 = d_1 - shift.
      q[j] = std::numeric_limits<double>::infinity();
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double d = diag[i];
      for (std::size_t j = 0; j < kLanes; ++j) {
        double t = (d - shift[j]) - 1.0 / q[j];
        t = t == 0.0 ? pivmin : t;
        q[j] = t;
        negative[j] += t < 0.0 ? 1U : 0U;
      }
    }
    for (std::size_t j = 0; j < lanes; ++j) counts[base + j] = negative[j];
  }
}

std::size_t sturm_count(const TridiagonalOperator& op, double shift) {
  const auto diag = op.diagonal();
  const double pivmin = kPivotEpsilon * op.norm_bound();
  std::size_t negative = 0;
  double q = std::numeric_limits<double>::infinity();
  for (double d : diag) {
    q = (d - shift) - 1.0 / q;
    if (q == 0.0) q = pivmin;
    negative += q < 0.0 ? 1U : 0U;
  }
  return negative;
}

std::size_t count_in_interval(const TridiagonalOperator& op, double lower, double upper) {
  if (lower > upper) throw std::invalid_argument("interval bounds out of order");
  const std::array<double, 2> shifts{lower, upper};
  std::array<std::size_t, 2> counts{};
  sturm_counts(op, shifts, counts);
  return counts[1] >= counts[0] ? counts[1] - counts[0] : 0;
}

double default_tolerance(const TridiagonalOperator& op) { return 1e-13 * op.norm_bound(); }

SpectrumSlice eigenvalues_in_interval(const TridiagonalOperator& op, double lower, double upper,
                                      double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("bisection tolerance must be positive");
  if (lower > upper) throw std::invalid_argument("interval bounds out of order");

  SpectrumSlice slice;
  slice.lower = lower;
  slice.upper = upper;

  struct Bracket {
    double lo, hi;
    std::size_t count_lo, count_hi;
  };
  std::array<double, 2> ends{lower, upper};
  std::array<std::size_t, 2> end_counts{};
  sturm_counts(op, ends, end_counts);
  if (end_counts[1] <= end_counts[0]) return slice;

  const std::size_t first = end_counts[0];
  slice.eigenvalues.assign(end_counts[1] - first, 0.0);

  std::vector<Bracket> active{{lower, upper, end_counts[0], end_counts[1]}};
  std::vector<Bracket> next;
  std::vector<double> mids;
  std::vector<std::size_t> mid_counts;
  std::vector<Bracket> splitting;

  while (!active.empty()) {
    mids.clear();
    splitting.clear();
    for (const auto& b : active) {
      const std::size_t k = b.count_hi - b.count_lo;
      const double mid = b.lo + 0.5 * (b.hi - b.lo);
      const bool resolved = k == 1 && b.hi - b.lo <= tol;
      const bool exhausted = !(mid > b.lo && mid < b.hi);
      if (resolved || exhausted) {
        for (std::size_t idx = b.count_lo; idx < b.count_hi; ++idx) slice.eigenvalues[idx - first] = mid;
        continue;
      }
      mids.push_back(mid);
      splitting.push_back(b);
    }
    mid_counts.resize(mids.size());
    sturm_counts(op, mids, mid_counts);
    next.clear();
    for (std::size_t i = 0; i < splitting.size(); ++i) {
      const auto& b = splitting[i];
      const std::size_t c = std::clamp(mid_counts[i], b.count_lo, b.count_hi);
      if (c > b.count_lo) next.push_back({b.lo, mids[i], b.count_lo, c});
      if (b.count_hi > c) next.push_back({mids[i], b.hi, c, b.count_hi});
    }
    active.swap(next);
  }
  return slice;
}

std::vector<double> full_spectrum(const TridiagonalOperator& op, double tol) {
  const auto [lo, hi] = op.spectral_bounds();
  auto slice = eigenvalues_in_interval(op, lo - 1.0, hi + 1.0, tol);
  if (slice.count() != op.size())
    throw std::logic_error("full spectrum count mismatch: found " + std::to_string(slice.count()) +
                           " eigenvalues for N = " + std::to_string(op.size()));
  return std::move(slice.eigenvalues);
}

std::vector<double> full_spectrum(const TridiagonalOperator& op) {
  return full_spectrum(op, default_tolerance(op));
}

double residual_norm(const TridiagonalOperator& op, double energy, std::span<const double> x) {
  const auto d = op.diagonal();
  const std::size_t n = d.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = (d[i] - energy) * x[i];
    if (i > 0) r += x[i - 1];
    if (i + 1 < n) r += x[i + 1];
    sum += r * r;
  }
  return std::sqrt(sum);
}

std::size_t localization_center(std::span<const double> x) {
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  const double threshold = peak * (1.0 - 1e-12);
  for (std::size_t i = 0; i < x.size(); ++i)
    if (std::abs(x[i]) >= threshold) return i;
  return 0;
}

namespace {

/// LU factorization with partial pivoting of H - E (dgttrf layout).
struct ShiftedFactor {
  std::vector<double> lower, diag, upper, upper2;
  std::vector<unsigned char> swapped;

  ShiftedFactor(const TridiagonalOperator& op, double energy) {
    const auto d = op.diagonal();
    const std::size_t n = d.size();
    const double pivmin = kPivotEpsilon * op.norm_bound() * 1e-3;
    lower.assign(n > 0 ? n - 1 : 0, 1.0);
    upper.assign(n > 0 ? n - 1 : 0, 1.0);
    upper2.assign(n > 1 ? n - 2 : 0, 0.0);
    swapped.assign(n > 0 ? n - 1 : 0, 0);
    diag.resize(n);
    for (std::size_t i = 0; i < n; ++i) diag[i] = d[i] - energy;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (std::abs(diag[i]) >= std::abs(lower[i])) {
        const double fact = lower[i] / diag[i];
        lower[i] = fact;
        diag[i + 1] -= fact * upper[i];
      } else {
        const double fact = diag[i] / lower[i];
        diag[i] = lower[i];
        lower[i] = fact;
        const double temp = upper[i];
        upper[i] = diag[i + 1];
        diag[i + 1] = temp - fact * diag[i + 1];
        if (i + 2 < n) {
          upper2[i] = upper[i + 1];
          upper[i + 1] = -fact * upper[i + 1];
        }
        swapped[i] = 1;
      }
    }
    for (auto& p : diag)
      if (std::abs(p) < pivmin) p = std::copysign(pivmin, p == 0.0 ? 1.0 : p);
  }

  void solve(std::span<double> b) const {
    const std::size_t n = diag.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (!swapped[i]) {
        b[i + 1] -= lower[i] * b[i];
      } else {
        const double temp = b[i];
        b[i] = b[i + 1];
        b[i + 1] = temp - lower[i] * b[i];
      }
    }
    b[n - 1] /= diag[n - 1];
    if (n > 1) b[n - 2] = (b[n - 2] - upper[n - 2] * b[n - 1]) / diag[n - 2];
    for (std::size_t k = n; k-- > 2;) {
      const std::size_t i = k - 2;
      b[i] = (b[i] - upper[i] * b[i + 1] - upper2[i] * b[i + 2]) / diag[i];
    }
  }
};

double degenerate_gap(const TridiagonalOperator& op) { return kDegenerateGap * std::max(1.0, op.norm_bound()); }

double normalize(std::span<double> x) {
  double norm = 0.0;
  for (double v : x) norm += v * v;
  norm = std::sqrt(norm);
  if (norm > 0.0)
    for (auto& v : x) v /= norm;
  return norm;
}

}  // namespace

EigenPair eigenvector(const TridiagonalOperator& op, double energy, std::span<const EigenPair> neighbors) {
  const std::size_t n = op.size();
  const ShiftedFactor factor(op, energy);
  const double contract = 1e-8 * op.norm_bound();
  const double target = 1e-12 * op.norm_bound();

  std::uint64_t energy_bits = 0;
  std::memcpy(&energy_bits, &energy, sizeof(energy));
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = to_unit_interval(counter_hash(energy_bits, n, i)) - 0.5;
  normalize(x);

  std::vector<const EigenPair*> cluster;
  for (const auto& nb : neighbors)
    if (std::abs(nb.energy - energy) < degenerate_gap(op) && nb.vector.size() == n) cluster.push_back(&nb);

  std::vector<double> best;
  double best_residual = std::numeric_limits<double>::infinity();
  constexpr int kMaxIterations = 8;
  for (int it = 0; it < kMaxIterations; ++it) {
    factor.solve(x);
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto* nb : cluster) {
        const double overlap = std::inner_product(x.begin(), x.end(), nb->vector.begin(), 0.0);
        for (std::size_t i = 0; i < n; ++i) x[i] -= overlap * nb->vector[i];
      }
    }
    if (!(normalize(x) > 0.0) || !std::isfinite(x[0])) break;
    const double res = residual_norm(op, energy, x);
    if (res < best_residual) {
      best_residual = res;
      best = x;
    }
    if (it >= 1 && best_residual <= target) break;
    if (it >= 3 && best_residual <= contract) break;
  }
  if (!(best_residual <= contract))
    throw ConvergenceError("inverse iteration did not converge at E = " + std::to_string(energy) +
                               " (best residual " + std::to_string(best_residual) + ")",
                           best_residual);

  EigenPair pair;
  pair.energy = energy;
  pair.vector = std::move(best);
  pair.residual = best_residual;
  pair.center = localization_center(pair.vector);
  if (pair.vector[pair.center] < 0.0)
    for (auto& v : pair.vector) v = -v;
  return pair;
}

std::vector<EigenPair> eigenpairs(const TridiagonalOperator& op, std::span<const double> energies) {
  std::vector<EigenPair> pairs;
  pairs.reserve(energies.size());
  const double gap = degenerate_gap(op);
  std::size_t cluster_start = 0;
  for (std::size_t i = 0; i < energies.size(); ++i) {
    if (i > 0 && energies[i] - energies[i - 1] >= gap) cluster_start = i;
    pairs.push_back(eigenvector(op, energies[i],
                                std::span<const EigenPair>(pairs.data() + cluster_start, i - cluster_start)));
  }
  return pairs;
}

double min_spacing(const TridiagonalOperator& op, double tol) {
  if (op.size() < 2) throw std::invalid_argument("min_spacing needs N >= 2");
  const auto spectrum = full_spectrum(op, tol);
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < spectrum.size(); ++i) gap = std::min(gap, spectrum[i] - spectrum[i - 1]);
  if (gap <= 4.0 * tol)
    throw std::runtime_error("minimum spacing " + std::to_string(gap) +
                             " not resolved by tolerance " + std::to_string(tol) + "; refine tol");
  return gap;
}

double min_spacing(const TridiagonalOperator& op) { return min_spacing(op, default_tolerance(op)); }

bool interlacing_check(const TridiagonalOperator& op, std::size_t site, double tau, double lower,
                       double upper) {
  if (site >= op.size()) throw std::out_of_range("site index outside operator");
  if (tau < op[site]) throw std::invalid_argument("interlacing check requires tau >= current diagonal");
  const auto perturbed = op.with_diagonal_entry(site, tau);
  return count_in_interval(op, lower, upper) <= count_in_interval(perturbed, lower, upper) + 1;
}

}  // namespace anderson
