#include "dimperf/phd_grid.hpp"

#include <numeric>
#include <tuple>
#include <utility>

#include "dimperf/error.hpp"

namespace dimperf {
namespace {

constexpr double kKernelMahalanobis2 = 16.0;  // 4-sigma support

struct Kernel {
  double inv00, inv01, inv11;
  double support;
};

Kernel make_kernel(const PhdSensorModel& model, double cell) {
  // Grid quantization adds cell^2/12 per axis; keeps the kernel proper when
  // the measurement covariance is degenerate.
  const double q = cell * cell / 12.0;
  const double a = model.meas_cov[0] + q;
  const double b = 0.5 * (model.meas_cov[1] + model.meas_cov[2]);
  const double d = model.meas_cov[3] + q;
  const double det = a * d - b * b;
  if (!(det > 0.0)) throw InvalidArgument("measurement covariance is not positive definite");
  const double tr = a + d;
  const double max_eig = 0.5 * tr + std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
  return {d / det, -b / det, a / det, std::sqrt(kKernelMahalanobis2 * max_eig)};
}

}  // namespace

PhdGrid::PhdGrid(std::size_t rows, std::size_t cols, double cell_size, double initial)
    : rows_(rows), cols_(cols), cell_(cell_size), data_(rows * cols, initial) {
  if (!(cell_size > 0.0)) throw InvalidArgument("grid cell size must be positive");
}

PhdGrid PhdGrid::uniform(double width, double height, double cell_size, double total_mass) {
  if (!(width > 0.0) || !(height > 0.0)) throw InvalidArgument("arena must have positive extent");
  const auto cols = static_cast<std::size_t>(std::ceil(width / cell_size - 1e-9));
  const auto rows = static_cast<std::size_t>(std::ceil(height / cell_size - 1e-9));
  return PhdGrid(rows, cols, cell_size, total_mass / static_cast<double>(rows * cols));
}

double PhdGrid::total_mass() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }

PhdGrid phd_step(PhdGrid phd, std::span<const SensorReport> reports, const PhdSensorModel& model) {
  if (reports.empty()) return phd;
  if (!(model.p_fn >= 0.0 && model.p_fn < 1.0)) throw InvalidArgument("p_fn must lie in [0, 1)");
  const Kernel kernel = make_kernel(model, phd.cell_size());
  const double p_detect = 1.0 - model.p_fn;

  std::vector<std::size_t> footprint;
  std::vector<std::pair<std::size_t, double>> contrib;
  std::vector<double> added;

  for (const auto& report : reports) {
    footprint.clear();
    phd.for_each_cell_in_disk(report.position, report.fov_radius, [&](std::size_t r, std::size_t c) {
      footprint.push_back(phd.index(r, c));
    });
    if (footprint.empty()) continue;

    const double fov2 = report.fov_radius * report.fov_radius;
    added.clear();
    contrib.clear();
    for (const auto& z : report.detections) {
      const std::size_t first = contrib.size();
      double norm = 0.0;
      phd.for_each_cell_in_disk(z, kernel.support, [&](std::size_t r, std::size_t c) {
        const Vec2 center = phd.cell_center(r, c);
        if ((center - report.position).squared_norm() > fov2) return;
        const Vec2 e = center - z;
        const double m2 = e.x * e.x * kernel.inv00 + 2.0 * e.x * e.y * kernel.inv01 +
                          e.y * e.y * kernel.inv11;
        if (m2 > kKernelMahalanobis2) return;
        const std::size_t idx = phd.index(r, c);
        const double w = p_detect * std::exp(-0.5 * m2) * (phd.data()[idx] + model.birth_floor);
        contrib.emplace_back(idx, w);
        norm += w;
      });
      if (norm > 0.0) {
        for (std::size_t k = first; k < contrib.size(); ++k) contrib[k].second /= norm;
      } else {
        contrib.resize(first);
      }
    }

    auto data = phd.data();
    for (auto idx : footprint) data[idx] *= model.p_fn;
    for (const auto& [idx, w] : contrib) data[idx] += w;
  }
  return phd;
}

TargetSet estimate_targets(const PhdGrid& phd) {
  const double mass = phd.total_mass();
  const auto k = static_cast<std::size_t>(std::llround(std::max(0.0, mass)));
  if (k == 0) return {};

  struct Peak {
    double value;
    std::size_t row, col;
  };
  std::vector<Peak> peaks;
  const std::size_t rows = phd.rows(), cols = phd.cols();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = phd.at(r, c);
      if (!(v > 0.0)) continue;
      bool is_max = true;
      for (int dr = -1; dr <= 1 && is_max; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          const auto rr = static_cast<std::ptrdiff_t>(r) + dr;
          const auto cc = static_cast<std::ptrdiff_t>(c) + dc;
          if (rr < 0 || cc < 0 || rr >= static_cast<std::ptrdiff_t>(rows) ||
              cc >= static_cast<std::ptrdiff_t>(cols))
            continue;
          if (phd.at(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc)) > v) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) peaks.push_back({v, r, c});
    }
  }
  const auto better = [](const Peak& a, const Peak& b) {
    if (a.value != b.value) return a.value > b.value;
    return std::tie(a.row, a.col) < std::tie(b.row, b.col);
  };
  const std::size_t take = std::min(k, peaks.size());
  std::partial_sort(peaks.begin(), peaks.begin() + static_cast<std::ptrdiff_t>(take), peaks.end(),
                    better);
  TargetSet out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back(phd.cell_center(peaks[i].row, peaks[i].col));
  return out;
}

double fov_mass(const PhdGrid& phd, Vec2 center, double radius) {
  double acc = 0.0;
  const auto data = phd.data();
  phd.for_each_cell_in_disk(center, radius,
                            [&](std::size_t r, std::size_t c) { acc += data[phd.index(r, c)]; });
  return acc;
}

}  // namespace dimperf
