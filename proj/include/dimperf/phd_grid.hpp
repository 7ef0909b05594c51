#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "dimperf/metrics.hpp"
#include "dimperf/vec2.hpp"

namespace dimperf {

/// Intensity (expected targets per cell) over a regular grid covering the arena.
/// Cell (row, col) covers [col*cell, (col+1)*cell) x [row*cell, (row+1)*cell).
class PhdGrid {
 public:
  PhdGrid() = default;
  PhdGrid(std::size_t rows, std::size_t cols, double cell_size, double initial = 0.0);

  /// Uniform grid over a width x height arena holding `total_mass` expected targets.
  static PhdGrid uniform(double width, double height, double cell_size, double total_mass);

  [[nodiscard]] std::size_t rows() const { return rows_; }
  [[nodiscard]] std::size_t cols() const { return cols_; }
  [[nodiscard]] double cell_size() const { return cell_; }
  [[nodiscard]] std::size_t index(std::size_t row, std::size_t col) const { return row * cols_ + col; }

  [[nodiscard]] double& at(std::size_t row, std::size_t col) { return data_[index(row, col)]; }
  [[nodiscard]] double at(std::size_t row, std::size_t col) const { return data_[index(row, col)]; }
  [[nodiscard]] std::span<double> data() { return data_; }
  [[nodiscard]] std::span<const double> data() const { return data_; }

  [[nodiscard]] Vec2 cell_center(std::size_t row, std::size_t col) const {
    return {(static_cast<double>(col) + 0.5) * cell_, (static_cast<double>(row) + 0.5) * cell_};
  }
  [[nodiscard]] double total_mass() const;

  /// Calls fn(row, col) for every cell whose center lies within `radius` of `center`.
  template <typename Fn>
  void for_each_cell_in_disk(Vec2 center, double radius, Fn&& fn) const;

  bool operator==(const PhdGrid&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  double cell_ = 1.0;
  std::vector<double> data_;
};

/// One robot's sensing outcome for a single step.
struct SensorReport {
  Vec2 position;
  double fov_radius = 0.0;
  std::vector<Vec2> detections;
};

struct PhdSensorModel {
  double p_fn = 0.2;
  /// Row-major 2x2 measurement covariance.
  std::array<double, 4> meas_cov{0.25, 0.0, 0.0, 0.25};
  /// Added to every cell's intensity inside the detection likelihood so that a
  /// detection over a fully cleared patch still registers.
  double birth_floor = 1e-12;
};

/// Sequential per-robot PHD corrector without clutter or birth.
///
/// Inside a footprint each cell keeps p_fn of its mass (missed detection) and
/// every detection adds exactly one expected target spread over the footprint
/// cells in proportion to likelihood * prior. Cells outside all footprints
/// are untouched.
PhdGrid phd_step(PhdGrid phd, std::span<const SensorReport> reports, const PhdSensorModel& model);

/// round(total mass) highest local maxima (8-neighborhood, non-strict).
/// Ties are broken by lowest (row, col).
TargetSet estimate_targets(const PhdGrid& phd);

/// Intensity summed over the cells whose centers lie within `radius` of `center`.
double fov_mass(const PhdGrid& phd, Vec2 center, double radius);

template <typename Fn>
void PhdGrid::for_each_cell_in_disk(Vec2 center, double radius, Fn&& fn) const {
  if (rows_ == 0 || cols_ == 0 || radius < 0.0) return;
  const auto lo = [&](double v) {
    const double c = std::floor((v - radius) / cell_ - 0.5);
    return c < 0.0 ? std::size_t{0} : static_cast<std::size_t>(c);
  };
  const auto hi = [&](double v, std::size_t n) {
    const double c = std::ceil((v + radius) / cell_ - 0.5);
    if (c < 0.0) return std::size_t{0};
    return std::min(n - 1, static_cast<std::size_t>(c));
  };
  const double r2 = radius * radius;
  const std::size_t r0 = lo(center.y), r1 = hi(center.y, rows_);
  const std::size_t c0 = lo(center.x), c1 = hi(center.x, cols_);
  if (center.y + radius < 0.0 || center.x + radius < 0.0) return;
  for (std::size_t row = r0; row <= r1; ++row) {
    const double dy = (static_cast<double>(row) + 0.5) * cell_ - center.y;
    for (std::size_t col = c0; col <= c1; ++col) {
      const double dx = (static_cast<double>(col) + 0.5) * cell_ - center.x;
      if (dx * dx + dy * dy <= r2) fn(row, col);
    }
  }
}

}  // namespace dimperf
