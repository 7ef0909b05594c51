#include "dimperf/dimension.hpp"

#include <cmath>
#include <cstdlib>
#include <numeric>
#include <string>

#include "dimperf/error.hpp"

namespace dimperf {
namespace {

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Rational() = default;
  Rational(std::int64_t n, std::int64_t d = 1) : num(n), den(d) { normalize(); }

  void normalize() {
    if (den == 0) throw InvalidArgument("rational with zero denominator");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const std::int64_t g = std::gcd(num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }

  [[nodiscard]] bool is_zero() const { return num == 0; }

  friend Rational operator-(const Rational& a, const Rational& b) {
    return {a.num * b.den - b.num * a.den, a.den * b.den};
  }
  friend Rational operator*(const Rational& a, const Rational& b) {
    return {a.num * b.num, a.den * b.den};
  }
  friend Rational operator/(const Rational& a, const Rational& b) {
    if (b.num == 0) throw InvalidArgument("rational division by zero");
    return {a.num * b.den, a.den * b.num};
  }
};

using RationalMatrix = std::vector<std::vector<Rational>>;

// Reduced row echelon form in place; returns pivot columns.
std::vector<std::size_t> rref(RationalMatrix& m) {
  std::vector<std::size_t> pivots;
  if (m.empty()) return pivots;
  const std::size_t rows = m.size();
  const std::size_t cols = m.front().size();
  std::size_t row = 0;
  for (std::size_t col = 0; col < cols && row < rows; ++col) {
    std::size_t sel = row;
    while (sel < rows && m[sel][col].is_zero()) ++sel;
    if (sel == rows) continue;
    std::swap(m[row], m[sel]);
    const Rational lead = m[row][col];
    for (auto& x : m[row]) x = x / lead;
    for (std::size_t r = 0; r < rows; ++r) {
      if (r == row || m[r][col].is_zero()) continue;
      const Rational f = m[r][col];
      for (std::size_t c = 0; c < cols; ++c) m[r][c] = m[r][c] - f * m[row][c];
    }
    pivots.push_back(col);
    ++row;
  }
  return pivots;
}

RationalMatrix to_rational(const std::vector<std::vector<std::int64_t>>& matrix) {
  RationalMatrix m;
  m.reserve(matrix.size());
  for (const auto& row : matrix) {
    if (!matrix.empty() && row.size() != matrix.front().size())
      throw InvalidArgument("ragged integer matrix");
    std::vector<Rational> r;
    r.reserve(row.size());
    for (auto v : row) r.emplace_back(v);
    m.push_back(std::move(r));
  }
  return m;
}

std::vector<std::vector<std::int64_t>> to_int_rows(const DimensionalMatrix& d) {
  std::vector<std::vector<std::int64_t>> rows;
  for (const auto& row : d.entries) rows.emplace_back(row.begin(), row.end());
  return rows;
}

}  // namespace

TeamTaskParams TeamTaskParams::from_areas(double n_r, double n_t, double r, double robot_area,
                                          double target_area) {
  if (!(robot_area > 0.0) || !(target_area > 0.0))
    throw InvalidArgument("areas must be positive");
  TeamTaskParams theta{n_r, n_t, r, n_r / robot_area, n_t / target_area};
  theta.validate();
  return theta;
}

void TeamTaskParams::validate() const {
  static constexpr const char* kNames[] = {"n_r", "n_t", "r", "rho_r", "rho_t"};
  const auto values = as_array();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]) || values[i] <= 0.0)
      throw InvalidArgument(std::string("team/task parameter ") + kNames[i] +
                            " must be finite and positive");
  }
}

DimensionalMatrix build_dimensional_matrix() {
  return DimensionalMatrix{{{{1, 1, 0, 1, 1}, {0, 0, 1, -2, -2}}}};
}

int integer_rank(const std::vector<std::vector<std::int64_t>>& matrix) {
  auto m = to_rational(matrix);
  return static_cast<int>(rref(m).size());
}

std::vector<std::vector<std::int64_t>> integer_null_space(
    const std::vector<std::vector<std::int64_t>>& matrix) {
  if (matrix.empty()) return {};
  auto m = to_rational(matrix);
  const std::size_t cols = m.front().size();
  const auto pivots = rref(m);

  std::vector<bool> is_pivot(cols, false);
  for (auto p : pivots) is_pivot[p] = true;

  std::vector<std::vector<std::int64_t>> basis;
  for (std::size_t free = 0; free < cols; ++free) {
    if (is_pivot[free]) continue;
    std::vector<Rational> v(cols, Rational(0));
    v[free] = Rational(1);
    for (std::size_t i = 0; i < pivots.size(); ++i) v[pivots[i]] = Rational(0) - m[i][free];

    std::int64_t lcm = 1;
    for (const auto& x : v) lcm = std::lcm(lcm, x.den);
    std::vector<std::int64_t> iv(cols);
    std::int64_t g = 0;
    for (std::size_t j = 0; j < cols; ++j) {
      iv[j] = v[j].num * (lcm / v[j].den);
      g = std::gcd(g, iv[j]);
    }
    for (auto& x : iv) x /= g;
    for (auto x : iv) {
      if (x == 0) continue;
      if (x > 0)
        for (auto& y : iv) y = -y;
      break;
    }
    basis.push_back(std::move(iv));
  }
  return basis;
}

NullBasis compute_null_basis(const DimensionalMatrix& d) {
  const auto rows = to_int_rows(d);
  if (integer_rank(rows) != kNumUnits)
    throw InvalidArgument("dimensional matrix must have rank 2");
  const auto vectors = integer_null_space(rows);
  NullBasis basis;
  for (std::size_t j = 0; j < vectors.size(); ++j)
    for (std::size_t i = 0; i < kNumVariables; ++i)
      basis.columns[j][i] = static_cast<int>(vectors[j][i]);
  return basis;
}

const NullBasis& canonical_basis() {
  static const NullBasis basis = compute_null_basis(build_dimensional_matrix());
  return basis;
}

WVector gamma_to_w(const GammaVector& gamma, const NullBasis& basis) {
  WVector out;
  for (int j = 0; j < kNumGroups; ++j)
    for (int i = 0; i < kNumVariables; ++i) out.w[i] += gamma.gamma[j] * basis.columns[j][i];
  return out;
}

std::array<double, kNumUnits> apply_dimensional_matrix(const DimensionalMatrix& d,
                                                       const WVector& w) {
  std::array<double, kNumUnits> out{};
  for (int u = 0; u < kNumUnits; ++u)
    for (int i = 0; i < kNumVariables; ++i) out[u] += d.entries[u][i] * w.w[i];
  return out;
}

std::array<double, kNumGroups> log_group_bases(const TeamTaskParams& theta) {
  theta.validate();
  const double log_nr = std::log(theta.n_r);
  const double log_r2 = 2.0 * std::log(theta.r);
  return {std::log(theta.n_t) - log_nr, log_r2 + std::log(theta.rho_r) - log_nr,
          log_r2 + std::log(theta.rho_t) - log_nr};
}

double log_pi(const TeamTaskParams& theta, const GammaVector& gamma) {
  const auto bases = log_group_bases(theta);
  double acc = 0.0;
  for (int j = 0; j < kNumGroups; ++j) {
    if (!std::isfinite(gamma.gamma[j])) throw InvalidArgument("gamma must be finite");
    acc += gamma.gamma[j] * bases[j];
  }
  return acc;
}

double evaluate_pi(const TeamTaskParams& theta, const GammaVector& gamma) {
  return std::exp(log_pi(theta, gamma));
}

double evaluate_pi_w(const TeamTaskParams& theta, const WVector& w) {
  theta.validate();
  const auto values = theta.as_array();
  double acc = 0.0;
  for (int i = 0; i < kNumVariables; ++i) acc += w.w[i] * std::log(values[i]);
  return std::exp(acc);
}

TeamTaskParams rescale_length_units(const TeamTaskParams& theta, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw InvalidArgument("length scale must be finite and positive");
  TeamTaskParams out = theta;
  out.r = theta.r * scale;
  out.rho_r = theta.rho_r / (scale * scale);
  out.rho_t = theta.rho_t / (scale * scale);
  return out;
}

}  // namespace dimperf
