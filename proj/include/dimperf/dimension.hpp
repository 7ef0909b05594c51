#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace dimperf {

/// Team/task parameter vector theta = [n_r, n_t, r, rho_r, rho_t].
///
/// Counts are unitless items, r is in meters and the densities are items per
/// square meter. All five values must be strictly positive and finite.
struct TeamTaskParams {
  double n_r = 0.0;
  double n_t = 0.0;
  double r = 0.0;
  double rho_r = 0.0;
  double rho_t = 0.0;

  /// Builds theta from counts and the areas robots and targets occupy.
  static TeamTaskParams from_areas(double n_r, double n_t, double r,
                                   double robot_area, double target_area);

  [[nodiscard]] std::array<double, 5> as_array() const { return {n_r, n_t, r, rho_r, rho_t}; }

  /// Throws InvalidArgument unless every field is finite and > 0.
  void validate() const;

  bool operator==(const TeamTaskParams&) const = default;
};

inline constexpr int kNumUnits = 2;      // item, meter
inline constexpr int kNumVariables = 5;  // n_r, n_t, r, rho_r, rho_t
inline constexpr int kNumGroups = kNumVariables - kNumUnits;

/// Unit exponents: rows {item, meter}, columns {n_r, n_t, r, rho_r, rho_t}.
struct DimensionalMatrix {
  std::array<std::array<int, kNumVariables>, kNumUnits> entries{};
  bool operator==(const DimensionalMatrix&) const = default;
};

/// Integer null-space basis, stored column-major: columns[j] is w_{j+1}.
struct NullBasis {
  std::array<std::array<int, kNumVariables>, kNumGroups> columns{};
  bool operator==(const NullBasis&) const = default;
};

struct GammaVector {
  std::array<double, kNumGroups> gamma{};
  bool operator==(const GammaVector&) const = default;
};

struct WVector {
  std::array<double, kNumVariables> w{};
  bool operator==(const WVector&) const = default;
};

DimensionalMatrix build_dimensional_matrix();

/// Exact null space of an arbitrary integer matrix.
///
/// Uses rational Gauss-Jordan elimination. Each returned vector is scaled to
/// coprime integers and oriented so that its first nonzero entry is negative.
/// One vector per free column in ascending column order; the vector for free
/// column j is zero on every other free column.
std::vector<std::vector<std::int64_t>> integer_null_space(
    const std::vector<std::vector<std::int64_t>>& matrix);

/// Rank of an integer matrix, computed exactly.
int integer_rank(const std::vector<std::vector<std::int64_t>>& matrix);

/// Null basis of the fixed 2x5 system. Throws if rank(D) != 2.
NullBasis compute_null_basis(const DimensionalMatrix& d);

/// The basis used throughout: the canonical null basis of build_dimensional_matrix().
const NullBasis& canonical_basis();

/// w = sum_i gamma_i * W[:, i]
WVector gamma_to_w(const GammaVector& gamma, const NullBasis& basis = canonical_basis());

/// D * w, for checking that w is dimensionless.
std::array<double, kNumUnits> apply_dimensional_matrix(const DimensionalMatrix& d, const WVector& w);

/// The three logarithmic bases of the gamma form:
/// log(n_t/n_r), log(r^2 rho_r / n_r), log(r^2 rho_t / n_r).
std::array<double, kNumGroups> log_group_bases(const TeamTaskParams& theta);

/// log Pi in gamma form (sum of gamma_i * log base_i).
double log_pi(const TeamTaskParams& theta, const GammaVector& gamma);

/// Pi(theta, gamma) = (n_t/n_r)^g1 (r^2 rho_r/n_r)^g2 (r^2 rho_t/n_r)^g3.
double evaluate_pi(const TeamTaskParams& theta, const GammaVector& gamma);

/// Pi(theta, w) = prod_j theta_j^{w_j}, evaluated in log space.
double evaluate_pi_w(const TeamTaskParams& theta, const WVector& w);

/// Same scenario expressed in length units scaled by `scale` (e.g. 100 for m -> cm).
TeamTaskParams rescale_length_units(const TeamTaskParams& theta, double scale);

}  // namespace dimperf
