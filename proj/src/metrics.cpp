#include "dimperf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dimperf/assignment.hpp"
#include "dimperf/error.hpp"

namespace dimperf {

std::string_view to_string(MetricKind kind) {
  return kind == MetricKind::Ospa ? "ospa" : "ei";
}

MetricKind parse_metric_kind(std::string_view name) {
  if (name == "ospa" || name == "OSPA") return MetricKind::Ospa;
  if (name == "ei" || name == "EI") return MetricKind::Ei;
  throw InvalidArgument("unknown metric '" + std::string(name) + "' (expected ospa|ei)");
}

void PerfTrace::validate() const {
  if (times.size() != values.size()) throw InvalidArgument("trace times/values size mismatch");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw InvalidArgument("trace times must strictly increase");
}

double median(std::vector<double> values) {
  if (values.empty()) throw InvalidArgument("median of empty sample");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double hi = values[mid];
  if (values.size() % 2 == 1) return hi;
  const double lo = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lo + hi);
}

double ospa(std::span<const Vec2> x, std::span<const Vec2> y, double cutoff, double order) {
  if (!(cutoff > 0.0)) throw InvalidArgument("OSPA cutoff must be positive");
  if (!(order >= 1.0)) throw InvalidArgument("OSPA order must be >= 1");
  for (auto set : {x, y})
    for (const auto& p : set)
      if (!std::isfinite(p.x) || !std::isfinite(p.y))
        throw InvalidArgument("OSPA input has non-finite coordinates");

  if (x.size() > y.size()) std::swap(x, y);
  const std::size_t m = x.size();
  const std::size_t n = y.size();
  if (n == 0) return 0.0;

  std::vector<double> cost(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      cost[i * n + j] = std::pow(std::min(cutoff, distance(x[i], y[j])), order);

  const double matched = solve_assignment(cost, m, n).cost;
  const double total = matched + std::pow(cutoff, order) * static_cast<double>(n - m);
  const double d = std::pow(total / static_cast<double>(n), 1.0 / order);
  return std::clamp(d, 0.0, cutoff);
}

double exploration_inefficiency(double explored_area, double total_area) {
  if (!(total_area > 0.0)) throw InvalidArgument("total area must be positive");
  if (explored_area < 0.0) throw InvalidArgument("explored area must be nonnegative");
  if (explored_area > total_area) throw InvalidArgument("explored area exceeds total area");
  return (1.0 - explored_area / total_area) * 100.0;
}

double steady_state(const PerfTrace& trace, double window) {
  if (trace.empty()) throw InvalidArgument("steady state of an empty trace");
  const double t_end = trace.times.back();
  if (!(t_end - trace.times.front() > window))
    throw InvalidArgument("trace is shorter than the steady-state window");
  std::vector<double> tail;
  for (std::size_t i = 0; i < trace.size(); ++i)
    if (trace.times[i] >= t_end - window) tail.push_back(trace.values[i]);
  return median(std::move(tail));
}

PerfTrace median_across_trials(std::span<const PerfTrace> traces) {
  if (traces.empty()) throw InvalidArgument("no traces to aggregate");
  const auto& ref = traces.front();
  for (const auto& tr : traces) {
    if (tr.times != ref.times) throw InvalidArgument("traces do not share one time grid");
    if (tr.values.size() != ref.times.size()) throw InvalidArgument("trace size mismatch");
  }
  PerfTrace out{ref.kind, ref.times, std::vector<double>(ref.size())};
  std::vector<double> column(traces.size());
  for (std::size_t t = 0; t < ref.size(); ++t) {
    for (std::size_t k = 0; k < traces.size(); ++k) column[k] = traces[k].values[t];
    out.values[t] = median(column);
  }
  return out;
}

PerfTrace downsample_median(const PerfTrace& trace, std::size_t batch) {
  if (batch == 0) throw InvalidArgument("batch must be >= 1");
  if (trace.empty()) throw InvalidArgument("cannot downsample an empty trace");
  PerfTrace out{trace.kind, {}, {}};
  for (std::size_t start = 0; start < trace.size(); start += batch) {
    const std::size_t stop = std::min(trace.size(), start + batch);
    out.times.push_back(median({trace.times.begin() + start, trace.times.begin() + stop}));
    out.values.push_back(median({trace.values.begin() + start, trace.values.begin() + stop}));
  }
  return out;
}

}  // namespace dimperf
