#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dimperf/perf_models.hpp"
#include "dimperf/pi_learner.hpp"
#include "dimperf/sim.hpp"

namespace dimperf {

inline constexpr int kTrialSchemaVersion = 1;
inline constexpr int kDatasetSchemaVersion = 1;
inline constexpr int kModelSchemaVersion = 1;

// ---- trial files: one JSON object per line ----

std::string trial_to_json_line(const TrialRecord& record);
/// `line_number` is only used in error messages.
TrialRecord trial_from_json_line(std::string_view line, std::size_t line_number = 1);

void write_trials(std::ostream& out, std::span<const TrialRecord> records);
void write_trials(const std::filesystem::path& path, std::span<const TrialRecord> records);
/// Blank lines are skipped. Errors name the offending line.
std::vector<TrialRecord> read_trials(std::istream& in);
std::vector<TrialRecord> read_trials(const std::filesystem::path& path);

// ---- aggregated dataset ----

/// One team/task configuration: trial medians on a downsampled time grid
/// plus per-sample fits. EI is stored as a fraction in [0, 1].
struct AggregatedConfig {
  Algorithm algorithm = Algorithm::Lloyds;
  TeamTaskParams theta;
  int trial_count = 0;
  std::vector<double> times;
  std::vector<double> ospa;
  std::vector<double> ei;
  /// fits[metric][kind]
  std::array<std::array<FitResult, 2>, 2> fits{};

  [[nodiscard]] const std::vector<double>& values(MetricKind metric) const {
    return metric == MetricKind::Ospa ? ospa : ei;
  }
  [[nodiscard]] PerfTrace trace(MetricKind metric) const { return {metric, times, values(metric)}; }
  [[nodiscard]] const FitResult& fit(MetricKind metric, ModelKind kind) const {
    return fits[static_cast<std::size_t>(metric)][static_cast<std::size_t>(kind)];
  }
};

struct AggregatedDataset {
  std::size_t downsample_batch = 10;
  std::vector<AggregatedConfig> configs;

  /// Indices of the configs run with `algorithm`, in dataset order.
  [[nodiscard]] std::vector<std::size_t> indices_for(Algorithm algorithm) const;
};

/// Groups trials by algorithm and theta, takes the per-time median, reduces
/// it with downsample_median(batch) and fits both model kinds to both metrics.
/// Groups come out sorted by (algorithm, theta), so trial order is irrelevant.
AggregatedDataset aggregate(std::span<const TrialRecord> trials, std::size_t batch = 10);

LearningSet to_learning_set(const AggregatedDataset& dataset, std::span<const std::size_t> indices,
                            MetricKind metric);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Seeded uniform shuffle of 0..n-1, then the first round(n * fraction)
/// entries go to train.
SplitIndices split(std::size_t n, double train_fraction = 0.7, std::uint64_t seed = 0);

/// split() applied to an explicit index list.
SplitIndices split(std::span<const std::size_t> indices, double train_fraction, std::uint64_t seed);

std::string dataset_to_json(const AggregatedDataset& dataset);
AggregatedDataset dataset_from_json(std::string_view text);
void write_dataset(const std::filesystem::path& path, const AggregatedDataset& dataset);
AggregatedDataset read_dataset(const std::filesystem::path& path);

// ---- learned models ----

std::string model_to_json(const LearnedModel& model);
LearnedModel model_from_json(std::string_view text);
void write_model(const std::filesystem::path& path, const LearnedModel& model);
LearnedModel read_model(const std::filesystem::path& path);

// ---- experiment grid config ----

/// {"n_r": [...], "n_t": [...], "r": [...], "algorithms": [...], "trials": 3,
///  "seed_base": 1, "sim": {overrides of SimConfig fields}}
ExperimentGrid grid_from_json(std::string_view text);
ExperimentGrid read_grid(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace dimperf
