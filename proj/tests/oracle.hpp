#pragma once

// Test-only reference computations. Nothing here calls into the library's
// solvers, so they can serve as independent checks of it.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_bin_float.hpp>

namespace oracle {

using big = boost::multiprecision::cpp_bin_float_50;

/// Eigenvalues of the dense symmetric matrix with the given diagonal and unit off-diagonals.
inline std::vector<double> dense_eigenvalues(std::span<const double> diagonal) {
  const auto n = static_cast<Eigen::Index>(diagonal.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    m(i, i) = diagonal[static_cast<std::size_t>(i)];
    if (i + 1 < n) m(i, i + 1) = m(i + 1, i) = 1.0;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
  const auto& ev = solver.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

/// Plain long-double count of eigenvalues strictly below the shift.
inline std::size_t naive_count_below(std::span<const double> diagonal, long double shift) {
  std::size_t negative = 0;
  long double q = 1.0L;
  bool first = true;
  for (double d : diagonal) {
    q = first ? static_cast<long double>(d) - shift : static_cast<long double>(d) - shift - 1.0L / q;
    first = false;
    if (q == 0.0L) q = 1e-300L;
    if (q < 0.0L) ++negative;
  }
  return negative;
}

/// k-th smallest eigenvalue (0-based) by bisection from scratch in long double.
inline double bisect_eigenvalue(std::span<const double> diagonal, std::size_t k, long double tol) {
  auto [mn, mx] = std::minmax_element(diagonal.begin(), diagonal.end());
  long double lo = static_cast<long double>(*mn) - 2.5L;
  long double hi = static_cast<long double>(*mx) + 2.5L;
  while (hi - lo > tol) {
    const long double mid = 0.5L * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (naive_count_below(diagonal, mid) > k)
      hi = mid;
    else
      lo = mid;
  }
  return static_cast<double>(0.5L * (lo + hi));
}

inline std::vector<double> bisect_spectrum(std::span<const double> diagonal, long double tol) {
  std::vector<double> out;
  for (std::size_t k = 0; k < diagonal.size(); ++k) out.push_back(bisect_eigenvalue(diagonal, k, tol));
  return out;
}

/// 50-digit product A_N ... A_1 of ((E - v, -1), (1, 0)); returns the entries a, b, c, d.
inline std::array<big, 4> big_product(std::span<const double> diagonal, double energy) {
  big a = 1, b = 0, c = 0, d = 1;
  for (double v : diagonal) {
    const big t = big(energy) - big(v);
    const big na = t * a - c, nb = t * b - d;
    c = a;
    d = b;
    a = na;
    b = nb;
  }
  return {a, b, c, d};
}

/// log ||M_N e_1|| in 50-digit arithmetic.
inline double big_log_norm(std::span<const double> diagonal, double energy) {
  const auto m = big_product(diagonal, energy);
  const big norm = boost::multiprecision::sqrt(m[0] * m[0] + m[2] * m[2]);
  return static_cast<double>(boost::multiprecision::log(norm));
}

inline double free_eigenvalue(std::size_t k, std::size_t n) {
  return 2.0 * std::cos(static_cast<double>(k) * std::numbers::pi / static_cast<double>(n + 1));
}

/// Free Laplacian spectrum in ascending order.
inline std::vector<double> free_spectrum(std::size_t n) {
  std::vector<double> out;
  for (std::size_t k = n; k >= 1; --k) out.push_back(free_eigenvalue(k, n));
  return out;
}

/// Integrated density of states of the free Laplacian.
inline double free_ids(double e) {
  if (e <= -2.0) return 0.0;
  if (e >= 2.0) return 1.0;
  return std::acos(-e / 2.0) / std::numbers::pi;
}

inline double free_dos(double e) { return 1.0 / (std::numbers::pi * std::sqrt(4.0 - e * e)); }

}  // namespace oracle
