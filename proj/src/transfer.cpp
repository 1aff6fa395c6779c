#include "anderson/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "anderson/rng.hpp"

namespace anderson {

namespace {

/// Exponent e with x = m * 2^e, 0.5 <= |m| < 1; 0 for x == 0.
inline int binary_exponent(double x) noexcept {
  int e = 0;
  std::frexp(x, &e);
  return e;
}

/// Scales a 2-vector pair by a common power of two. Returns the exponent removed.
inline int rescale(double& x0, double& x1) noexcept {
  const double m = std::max(std::abs(x0), std::abs(x1));
  if (m == 0.0 || !std::isfinite(m)) return 0;
  const int e = binary_exponent(m);
  x0 = std::ldexp(x0, -e);
  x1 = std::ldexp(x1, -e);
  return e;
}

inline double hypot2(double x, double y) noexcept { return std::hypot(x, y); }

}  // namespace

double Transfer2x2::operator_norm() const noexcept {
  // sigma_max = (|(a+d, b-c)| + |(a-d, b+c)|) / 2
  return 0.5 * (hypot2(a + d, b - c) + hypot2(a - d, b + c));
}

double Transfer2x2::max_abs() const noexcept {
  return std::max({std::abs(a), std::abs(b), std::abs(c), std::abs(d)});
}

double CocycleState::log_scale() const noexcept {
  return static_cast<double>(scale_exponent) * std::numbers::ln2;
}

double CocycleState::log_norm_e1() const noexcept {
  return log_scale() + std::log(hypot2(current.a, current.c));
}

double CocycleState::log_operator_norm() const noexcept {
  return log_scale() + std::log(current.operator_norm());
}

std::array<double, 2> CocycleState::direction() const noexcept {
  const double r = hypot2(current.a, current.c);
  return {current.a / r, current.c / r};
}

namespace {

inline void renormalize(CocycleState& s) noexcept {
  const double m = s.current.max_abs();
  if (m == 0.0 || !std::isfinite(m)) return;
  const int e = binary_exponent(m);
  s.current.a = std::ldexp(s.current.a, -e);
  s.current.b = std::ldexp(s.current.b, -e);
  s.current.c = std::ldexp(s.current.c, -e);
  s.current.d = std::ldexp(s.current.d, -e);
  s.scale_exponent += e;
}

inline void step_in_place(CocycleState& s, double energy, double v) noexcept {
  const double t = energy - v;
  const Transfer2x2 m = s.current;
  // ((t, -1), (1, 0)) * m
  s.current = {t * m.a - m.c, t * m.b - m.d, m.a, m.b};
  ++s.step;
}

}  // namespace

CocycleState propagate(const CocycleState& state, double energy, double v, bool renorm) {
  CocycleState next = state;
  step_in_place(next, energy, v);
  if (renorm) renormalize(next);
  return next;
}

CocycleState cocycle_product(std::span<const double> potential, double coupling, double energy,
                             std::size_t interval) {
  if (interval == 0) throw std::invalid_argument("renormalization interval must be positive");
  CocycleState s;
  for (std::size_t n = 0; n < potential.size(); ++n) {
    step_in_place(s, energy, coupling * potential[n]);
    if ((n + 1) % interval == 0) renormalize(s);
  }
  renormalize(s);
  return s;
}

CharPolyValue char_poly_value(std::span<const double> potential, double coupling, double energy) {
  // (x_{n+1}, x_n) with (x_1, x_0) = (1, 0).
  double cur = 1.0, prev = 0.0;
  std::int64_t exponent = 0;
  for (double v : potential) {
    const double next = (energy - coupling * v) * cur - prev;
    prev = cur;
    cur = next;
    exponent += rescale(cur, prev);
  }
  CharPolyValue out;
  if (cur == 0.0) {
    out.sign = 0;
    out.log_magnitude = -std::numeric_limits<double>::infinity();
    return out;
  }
  out.sign = cur > 0.0 ? 1 : -1;
  out.log_magnitude = std::log(std::abs(cur)) + static_cast<double>(exponent) * std::numbers::ln2;
  return out;
}

double log_norm(std::span<const double> potential, double coupling, double energy,
                std::size_t renormalize_interval) {
  if (renormalize_interval == 0) throw std::invalid_argument("renormalization interval must be positive");
  double cur = 1.0, prev = 0.0;
  std::int64_t exponent = 0;
  for (std::size_t n = 0; n < potential.size(); ++n) {
    const double next = (energy - coupling * potential[n]) * cur - prev;
    prev = cur;
    cur = next;
    if ((n + 1) % renormalize_interval == 0) exponent += rescale(cur, prev);
  }
  return std::log(hypot2(cur, prev)) + static_cast<double>(exponent) * std::numbers::ln2;
}

LogNormDerivative log_norm_derivative(std::span<const double> potential, double coupling, double energy) {
  const std::size_t n = potential.size();
  LogNormDerivative out;
  if (n == 0) return out;

  // Prefix pass: first component of P_{k} e_1 for k = 0..N-1, and u = P_N e_1.
  std::vector<double> prefix_first(n);
  std::vector<std::int64_t> prefix_exp(n);
  double cur = 1.0, prev = 0.0;
  std::int64_t exponent = 0;
  for (std::size_t k = 0; k < n; ++k) {
    prefix_first[k] = cur;
    prefix_exp[k] = exponent;
    const double next = (energy - coupling * potential[k]) * cur - prev;
    prev = cur;
    cur = next;
    exponent += rescale(cur, prev);
  }
  const double u0 = cur, u1 = prev;
  const std::int64_t u_exp = exponent;
  const double u_norm2 = u0 * u0 + u1 * u1;
  if (!(u_norm2 > 0.0)) throw std::domain_error("log_norm_derivative: ||M_N e_1|| vanished");
  const double u_norm = std::sqrt(u_norm2);

  // Suffix pass: S_k = A_N ... A_{k+1}, only S_k e_1 is needed. Row-vector
  // recursion: S_{k-1} e_1 = S_k A_k e_1 = S_k (t_k, 1)^T, carried as the
  // first two columns of S_k.
  Transfer2x2 suffix;  // identity
  std::int64_t suffix_exp = 0;
  double value = 0.0;
  double bound = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const double s0 = suffix.a, s1 = suffix.c;  // S_{k+1} e_1 in 1-based terms
    const std::int64_t e = suffix_exp + prefix_exp[k] - u_exp;
    const double weight = std::ldexp(prefix_first[k], static_cast<int>(std::clamp<std::int64_t>(e, -4000, 4000)));
    value += (u0 * s0 + u1 * s1) * weight;
    bound += (std::abs(s0) + std::abs(s1)) * std::abs(weight);
    // suffix <- suffix * A_{k+1}
    const double t = energy - coupling * potential[k];
    const Transfer2x2 a{t, -1.0, 1.0, 0.0};
    suffix = suffix * a;
    const double m = suffix.max_abs();
    if (m > 0.0) {
      const int se = binary_exponent(m);
      suffix.a = std::ldexp(suffix.a, -se);
      suffix.b = std::ldexp(suffix.b, -se);
      suffix.c = std::ldexp(suffix.c, -se);
      suffix.d = std::ldexp(suffix.d, -se);
      suffix_exp += se;
    }
  }
  out.value = value / u_norm2;
  out.integrand_bound = bound / u_norm;
  return out;
}

LyapunovEstimate lyapunov_exponent(const SiteDistribution& dist, double energy, std::size_t steps,
                                   std::size_t replicas, std::uint64_t master_seed,
                                   const ExecutionContext& ctx) {
  if (steps < 1000) throw std::invalid_argument("lyapunov_exponent requires steps >= 1000");
  if (replicas == 0) throw std::invalid_argument("lyapunov_exponent requires replicas >= 1");
  const double coupling = dist.coupling();
  const auto rates = parallel_map(replicas, ctx, [&](std::size_t r) {
    double cur = 1.0, prev = 0.0;
    std::int64_t exponent = 0;
    for (std::size_t n = 0; n < steps; ++n) {
      const double v = draw_site(dist, master_seed, r, n);
      const double next = (energy - coupling * v) * cur - prev;
      prev = cur;
      cur = next;
      exponent += rescale(cur, prev);
    }
    const double ln = std::log(hypot2(cur, prev)) + static_cast<double>(exponent) * std::numbers::ln2;
    return ln / static_cast<double>(steps);
  });
  LyapunovEstimate est;
  double sum = 0.0;
  for (double r : rates) sum += r;
  est.gamma = sum / static_cast<double>(replicas);
  if (replicas > 1) {
    double ss = 0.0;
    for (double r : rates) ss += (r - est.gamma) * (r - est.gamma);
    est.standard_error = std::sqrt(ss / static_cast<double>(replicas - 1) / static_cast<double>(replicas));
  }
  return est;
}

double LargeDeviationSample::fraction_above(double threshold_fraction) const {
  if (!(threshold_fraction > 0.0 && threshold_fraction < 1.0))
    throw std::invalid_argument("threshold fraction must lie in (0, 1)");
  if (log_norms.empty()) return 0.0;
  const double threshold = threshold_fraction * gamma_hat * static_cast<double>(length);
  const auto above = std::count_if(log_norms.begin(), log_norms.end(), [&](double x) { return x > threshold; });
  return static_cast<double>(above) / static_cast<double>(log_norms.size());
}

LargeDeviationSample large_deviation_sample(const SiteDistribution& dist, double energy, std::size_t n,
                                            std::size_t replicas, std::uint64_t master_seed,
                                            const ExecutionContext& ctx) {
  LargeDeviationSample out;
  out.length = n;
  out.gamma_hat = lyapunov_exponent(dist, energy, std::max<std::size_t>(10000, n), 16,
                                    derive_seed(master_seed, "lyapunov"), ctx)
                      .gamma;
  const double coupling = dist.coupling();
  out.log_norms = parallel_map(replicas, ctx, [&](std::size_t r) {
    const auto sample = sample_potential(dist, n, master_seed, r);
    return log_norm(sample.values, coupling, energy);
  });
  return out;
}

double large_deviation_fraction(const SiteDistribution& dist, double energy, std::size_t n,
                                double threshold_fraction, std::size_t replicas, std::uint64_t master_seed,
                                const ExecutionContext& ctx) {
  return large_deviation_sample(dist, energy, n, replicas, master_seed, ctx).fraction_above(threshold_fraction);
}

std::vector<double> direction_ratio_samples(const SiteDistribution& dist, double energy, std::size_t length,
                                            std::size_t replicas, std::uint64_t master_seed,
                                            std::array<double, 2> zeta, const ExecutionContext& ctx) {
  if (length == 0) throw std::invalid_argument("direction_ratio_samples requires length >= 1");
  const double zn = hypot2(zeta[0], zeta[1]);
  if (!(zn > 0.0)) throw std::invalid_argument("zeta must be nonzero");
  zeta = {zeta[0] / zn, zeta[1] / zn};
  const double coupling = dist.coupling();
  return parallel_map(replicas, ctx, [&](std::size_t r) {
    CocycleState s;
    for (std::size_t k = 0; k < length; ++k)
      s = propagate(s, energy, coupling * draw_site(dist, master_seed, r, k));
    const auto image = s.current.apply(zeta);
    const double ratio = s.current.operator_norm() / hypot2(image[0], image[1]);
    return std::max(ratio, 1.0);
  });
}

}  // namespace anderson
