#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "anderson/model.hpp"

namespace anderson {

/// Eigenvalue with unit-norm eigenvector. `center` is the 0-based localization
/// center: the first index whose magnitude is within a relative 1e-12 of the
/// maximum. The vector is signed so that vector[center] > 0.
struct EigenPair {
  double energy = 0.0;
  std::vector<double> vector;
  double residual = 0.0;
  std::size_t center = 0;
};

/// Eigenvalues of an operator inside [lower, upper), sorted.
struct SpectrumSlice {
  double lower = 0.0;
  double upper = 0.0;
  std::vector<double> eigenvalues;
  std::size_t count() const noexcept { return eigenvalues.size(); }
};

/// Raised when inverse iteration fails to reach the residual contract.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& message, double best_residual)
      : std::runtime_error(message), best_residual_(best_residual) {}
  double best_residual() const noexcept { return best_residual_; }

 private:
  double best_residual_;
};

/// Number of eigenvalues strictly below `shift` (negative Sturm pivots).
std::size_t sturm_count(const TridiagonalOperator& op, double shift);

/// Sturm counts for many shifts in one pass over the diagonal. Shifts are
/// processed in interleaved groups so the divide chains overlap.
void sturm_counts(const TridiagonalOperator& op, std::span<const double> shifts,
                  std::span<std::size_t> counts);

/// Number of eigenvalues in [lower, upper).
std::size_t count_in_interval(const TridiagonalOperator& op, double lower, double upper);

/// Default absolute bisection tolerance: 1e-13 times the norm bound.
double default_tolerance(const TridiagonalOperator& op);

/// All eigenvalues in [lower, upper), each bracketed to width <= tol.
/// Brackets that still hold several eigenvalues keep splitting down to
/// floating-point resolution; eigenvalues closer than that are returned with
/// repeats.
SpectrumSlice eigenvalues_in_interval(const TridiagonalOperator& op, double lower, double upper,
                                      double tol);

/// The full spectrum (exactly N values, ascending).
std::vector<double> full_spectrum(const TridiagonalOperator& op, double tol);
std::vector<double> full_spectrum(const TridiagonalOperator& op);

/// Inverse iteration at `energy`. Vectors in `neighbors` whose energy lies
/// within 1e-10 max(1, norm bound) of `energy` are projected out after every solve.
EigenPair eigenvector(const TridiagonalOperator& op, double energy,
                      std::span<const EigenPair> neighbors = {});

/// Eigenpairs for ascending energies, orthogonalizing within near-degenerate clusters.
std::vector<EigenPair> eigenpairs(const TridiagonalOperator& op, std::span<const double> energies);

/// ||(H - E) x||_2.
double residual_norm(const TridiagonalOperator& op, double energy, std::span<const double> x);

/// First index within a relative 1e-12 of max |x_n|.
std::size_t localization_center(std::span<const double> x);

/// Smallest gap between consecutive eigenvalues. Throws std::runtime_error when
/// the gap is not resolved by `tol` (gap <= 4 tol).
double min_spacing(const TridiagonalOperator& op, double tol);
double min_spacing(const TridiagonalOperator& op);

/// Rank-one interlacing: count(H, I) <= count(H with d_site = tau, I) + 1.
/// Requires tau >= d_site.
bool interlacing_check(const TridiagonalOperator& op, std::size_t site, double tau, double lower,
                       double upper);

}  // namespace anderson
