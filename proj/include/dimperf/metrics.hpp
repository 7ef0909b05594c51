#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "dimperf/vec2.hpp"

namespace dimperf {

using TargetSet = std::vector<Vec2>;

enum class MetricKind { Ospa, Ei };

std::string_view to_string(MetricKind kind);
MetricKind parse_metric_kind(std::string_view name);

inline constexpr double kDefaultOspaCutoff = 10.0;
inline constexpr double kDefaultOspaOrder = 1.0;
inline constexpr double kSteadyStateWindow = 50.0;

/// A timestamped series of one metric for one configuration.
struct PerfTrace {
  MetricKind kind = MetricKind::Ospa;
  std::vector<double> times;
  std::vector<double> values;

  [[nodiscard]] std::size_t size() const { return times.size(); }
  [[nodiscard]] bool empty() const { return times.empty(); }

  /// Throws unless times are strictly increasing and sizes match.
  void validate() const;

  bool operator==(const PerfTrace&) const = default;
};

/// OSPA distance between finite point sets with cutoff c and order p.
/// ospa(empty, empty) is 0.
double ospa(std::span<const Vec2> x, std::span<const Vec2> y, double cutoff = kDefaultOspaCutoff,
            double order = kDefaultOspaOrder);

/// Percentage of the area not yet explored.
double exploration_inefficiency(double explored_area, double total_area);

/// Median of the values whose timestamp lies in [t_end - window, t_end].
double steady_state(const PerfTrace& trace, double window = kSteadyStateWindow);

/// Pointwise median across traces sharing one time grid.
PerfTrace median_across_trials(std::span<const PerfTrace> traces);

/// Non-overlapping batches reduced to (median time, median value).
PerfTrace downsample_median(const PerfTrace& trace, std::size_t batch = 10);

/// Median of a sample; the mean of the two middle values for even sizes.
double median(std::vector<double> values);

}  // namespace dimperf
