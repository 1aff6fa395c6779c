#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace anderson {

struct Uniform {
  double a = 0.0;
  double b = 1.0;
  friend bool operator==(const Uniform&, const Uniform&) = default;
};

/// Middle-thirds Cantor law on [0,1], realized with `depth` fair ternary digits in {0,2}.
struct Cantor {
  int depth = 40;
  friend bool operator==(const Cantor&, const Cantor&) = default;
};

/// Law on {0,1} with P[v=1] = p.
struct Bernoulli {
  double p = 0.5;
  friend bool operator==(const Bernoulli&, const Bernoulli&) = default;
};

/// Single-site law of the potential together with the coupling constant.
///
/// Immutable after construction. Parameters are validated on construction and
/// never clamped. A degenerate uniform law (a == b) is accepted: it is the
/// zero-disorder model shifted by a constant.
class SiteDistribution {
 public:
  using Law = std::variant<Uniform, Cantor, Bernoulli>;

  static SiteDistribution uniform(double a, double b, double coupling = 1.0);
  static SiteDistribution cantor(int depth = 40, double coupling = 1.0);
  static SiteDistribution bernoulli(double p, double coupling = 1.0);

  const Law& law() const noexcept { return law_; }
  double coupling() const noexcept { return coupling_; }
  SiteDistribution with_coupling(double coupling) const;

  bool is_uniform() const noexcept { return std::holds_alternative<Uniform>(law_); }
  bool is_cantor() const noexcept { return std::holds_alternative<Cantor>(law_); }
  bool is_bernoulli() const noexcept { return std::holds_alternative<Bernoulli>(law_); }

  /// Declared Hölder exponent: 1 for a non-degenerate uniform law, ln2/ln3 for
  /// Cantor, none for Bernoulli and for point masses.
  std::optional<double> holder_exponent() const;

  /// Closed interval containing every sample (before coupling).
  std::pair<double, double> support() const;

  /// Canonical text form in the `kind:params[@lambda=x]` grammar.
  std::string to_string() const;

  friend bool operator==(const SiteDistribution&, const SiteDistribution&) = default;

 private:
  SiteDistribution(Law law, double coupling);
  Law law_;
  double coupling_ = 1.0;
};

/// Error raised by `parse_distribution`; `position` is the 0-based character offset.
class DistributionParseError : public std::invalid_argument {
 public:
  DistributionParseError(std::size_t position, const std::string& message);
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// Parses `uniform:a,b`, `cantor:depth` or `bernoulli:p`, optionally suffixed by
/// `@lambda=x`. Numbers are converted with round-trip exact `from_chars`.
SiteDistribution parse_distribution(std::string_view text);

/// Value of site `site` in realization `realization_index` (pre-coupling).
double draw_site(const SiteDistribution& dist, std::uint64_t master_seed,
                 std::uint64_t realization_index, std::uint64_t site);

struct PotentialSample {
  std::vector<double> values;
  std::uint64_t master_seed = 0;
  std::uint64_t realization_index = 0;
};

PotentialSample sample_potential(const SiteDistribution& dist, std::size_t n,
                                 std::uint64_t master_seed, std::uint64_t realization_index);

/// Right-continuous distribution function of the single-site law.
double cdf(const SiteDistribution& dist, double x);

struct HolderCertificate {
  double beta_hat = 0.0;
  double worst_constant = 0.0;
  int levels = 0;
};

/// Scans the aligned dyadic (uniform) or triadic (Cantor) cells of the support,
/// with lengths measured relative to the support width, and reports
/// min log mu(I) / log |I| over cells of positive mass together with the
/// constant max mu(I) / |I|^beta_hat. Levels are added while a level has at
/// most `interval_count` cells.
HolderCertificate holder_certificate(const SiteDistribution& dist, std::size_t interval_count);

/// Dirichlet restriction of lambda*V + Laplacian to [0, N): diagonal entries are
/// stored, off-diagonal entries are implicitly 1.
class TridiagonalOperator {
 public:
  explicit TridiagonalOperator(std::vector<double> diagonal);

  std::size_t size() const noexcept { return diagonal_.size(); }
  std::span<const double> diagonal() const noexcept { return diagonal_; }
  double operator[](std::size_t i) const noexcept { return diagonal_[i]; }

  double min_diagonal() const noexcept { return min_; }
  double max_diagonal() const noexcept { return max_; }
  /// max |d_i| + 2, an upper bound for the spectral radius.
  double norm_bound() const noexcept;

  /// Gershgorin interval [min d - 2, max d + 2].
  std::pair<double, double> spectral_bounds() const noexcept { return {min_ - 2.0, max_ + 2.0}; }

  TridiagonalOperator with_diagonal_entry(std::size_t site, double value) const;
  /// Dirichlet restriction to the sites [first, last] (inclusive).
  TridiagonalOperator restrict_to(std::size_t first, std::size_t last) const;

  /// y = H x.
  void apply(std::span<const double> x, std::span<double> y) const;

 private:
  std::vector<double> diagonal_;
  double min_ = 0.0;
  double max_ = 0.0;
};

TridiagonalOperator assemble_operator(const PotentialSample& potential, double coupling = 1.0);
TridiagonalOperator assemble_operator(std::span<const double> potential, double coupling = 1.0);

}  // namespace anderson
