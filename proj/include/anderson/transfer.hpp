#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "anderson/model.hpp"
#include "anderson/parallel.hpp"

namespace anderson {

/// 2x2 real matrix ((a, b), (c, d)).
struct Transfer2x2 {
  double a = 1.0, b = 0.0, c = 0.0, d = 1.0;

  double det() const noexcept { return a * d - b * c; }
  std::array<double, 2> apply(std::array<double, 2> x) const noexcept {
    return {a * x[0] + b * x[1], c * x[0] + d * x[1]};
  }
  /// Largest singular value, in the cancellation-free form.
  double operator_norm() const noexcept;
  double max_abs() const noexcept;

  friend Transfer2x2 operator*(const Transfer2x2& l, const Transfer2x2& r) noexcept {
    return {l.a * r.a + l.b * r.c, l.a * r.b + l.b * r.d, l.c * r.a + l.d * r.c, l.c * r.b + l.d * r.d};
  }
};

/// ((E - v, -1), (1, 0)); maps (x_n, x_{n-1}) to (x_{n+1}, x_n) for H x = E x.
constexpr Transfer2x2 one_step(double energy, double v) noexcept { return {energy - v, -1.0, 1.0, 0.0}; }

/// Running product M_n = A_n ... A_1 stored as 2^scale_exponent * current.
/// Renormalization multiplies `current` by a power of two chosen from its
/// max-abs entry, so it is exact and the log ledger carries no rounding.
struct CocycleState {
  Transfer2x2 current;
  std::int64_t scale_exponent = 0;
  std::size_t step = 0;

  double log_scale() const noexcept;
  /// log ||M_n e_1||.
  double log_norm_e1() const noexcept;
  /// log ||M_n||.
  double log_operator_norm() const noexcept;
  /// zeta_{n+1} = M_n e_1 / ||M_n e_1||; depends on v_1..v_n only.
  std::array<double, 2> direction() const noexcept;
};

/// Left-multiplies by one_step(E, v). Renormalizes when `renormalize` is set.
CocycleState propagate(const CocycleState& state, double energy, double v, bool renormalize = true);

/// Product over a whole (coupled) potential, renormalizing every `interval` steps.
CocycleState cocycle_product(std::span<const double> potential, double coupling, double energy,
                             std::size_t interval = 1);

struct CharPolyValue {
  int sign = 0;  // +1, -1, or 0 for an exact zero
  double log_magnitude = 0.0;
};

/// Signed log-magnitude of <M_N(E) e_1, e_1> = det(E - H_N).
CharPolyValue char_poly_value(std::span<const double> potential, double coupling, double energy);

/// log ||M_N(E) e_1||. Zero for an empty potential.
double log_norm(std::span<const double> potential, double coupling, double energy,
                std::size_t renormalize_interval = 1);

struct LogNormDerivative {
  double value = 0.0;
  /// sum_j sum_n |<S_n e_1, e_j>| |<P_{n-1} e_1, e_1>| / ||M_N e_1||, the
  /// bound on |value| from the product-rule expansion.
  double integrand_bound = 0.0;
};

/// d/dE log ||M_N(E) e_1|| as the product-rule sum over sites of
/// suffix(M_{N-n}) e_1 times the first component of prefix(M_{n-1}) e_1.
LogNormDerivative log_norm_derivative(std::span<const double> potential, double coupling, double energy);

struct LyapunovEstimate {
  double gamma = 0.0;
  double standard_error = 0.0;
};

/// Mean of log ||M_steps e_1|| / steps over replicas; replica r uses
/// realization index r of `master_seed`.
LyapunovEstimate lyapunov_exponent(const SiteDistribution& dist, double energy, std::size_t steps,
                                   std::size_t replicas, std::uint64_t master_seed,
                                   const ExecutionContext& ctx = {});

/// Log-norms of R independent length-N products at E0 with the Lyapunov
/// estimate they are compared against.
struct LargeDeviationSample {
  double gamma_hat = 0.0;
  std::size_t length = 0;
  std::vector<double> log_norms;
  double fraction_above(double threshold_fraction) const;
};

LargeDeviationSample large_deviation_sample(const SiteDistribution& dist, double energy, std::size_t n,
                                            std::size_t replicas, std::uint64_t master_seed,
                                            const ExecutionContext& ctx = {});

/// Fraction of R realizations with log ||M_N(E0) e_1|| > theta * gamma_hat * N.
double large_deviation_fraction(const SiteDistribution& dist, double energy, std::size_t n,
                                double threshold_fraction, std::size_t replicas, std::uint64_t master_seed,
                                const ExecutionContext& ctx = {});

/// R samples of ||M_l|| / ||M_l zeta|| (always >= 1).
std::vector<double> direction_ratio_samples(const SiteDistribution& dist, double energy, std::size_t length,
                                            std::size_t replicas, std::uint64_t master_seed,
                                            std::array<double, 2> zeta, const ExecutionContext& ctx = {});

}  // namespace anderson
