#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dimperf/dimension.hpp"
#include "dimperf/metrics.hpp"
#include "dimperf/perf_models.hpp"

namespace dimperf {

inline constexpr int kPolyDegree = 4;
using PolyCoeffs = std::array<double, kPolyDegree + 1>;

/// One polynomial in the normalized log Pi per model parameter, in the order
/// of ModelParams::values. Rate coefficients are in units of 1/time_scale.
struct PolyLink {
  std::array<PolyCoeffs, 3> beta{};
  bool operator==(const PolyLink&) const = default;
};

double poly_eval(const PolyCoeffs& coeffs, double z);
double poly_derivative(const PolyCoeffs& coeffs, double z);

/// z = (log Pi - mean) / std, optionally clamped to the training range.
struct PiNormalization {
  double mean = 0.0;
  double std = 1.0;
  double z_min = -std::numeric_limits<double>::infinity();
  double z_max = std::numeric_limits<double>::infinity();

  [[nodiscard]] double z(double pi, bool clamp = false) const;
};

/// Evaluates the link polynomials at an already normalized argument.
ModelParams phi_of_z(double z, const PolyLink& link, ModelKind kind);

/// phi_of_z at the normalized log of `pi`.
ModelParams phi_of_pi(double pi, const PolyLink& link, const PiNormalization& norm, ModelKind kind,
                      bool clamp = false);

struct LearningSample {
  TeamTaskParams theta;
  std::vector<double> values;
  /// Per-sample fits indexed by ModelKind, used to seed the links.
  std::array<std::optional<ModelParams>, 2> fitted;
};

/// Trial-median traces on one shared time grid.
struct LearningSet {
  std::vector<double> times;
  std::vector<LearningSample> samples;

  void validate() const;
  [[nodiscard]] std::size_t size() const { return samples.size(); }
};

/// The mean squared error and its gradient. Pi is normalized with the mean
/// and std of log Pi over `set`, so both depend on gamma.
struct ObjectiveGradient {
  double mse = 0.0;
  std::array<double, kNumGroups> d_gamma{};
  PolyLink d_beta;
};

/// time_scale <= 0 selects the last time of the set.
double objective(const LearningSet& set, const GammaVector& gamma, const PolyLink& link, ModelKind kind,
                 double time_scale = 0.0);

ObjectiveGradient objective_gradient(const LearningSet& set, const GammaVector& gamma,
                                     const PolyLink& link, ModelKind kind, double time_scale = 0.0);

/// Largest relative difference between objective_gradient() and central
/// differences with step 1e-5 * max(1, |x|) over every gamma and beta entry.
double gradient_check(const LearningSet& set, const GammaVector& gamma, const PolyLink& link,
                      ModelKind kind, double time_scale = 0.0);

struct LearnerConfig {
  double gamma_rate = 1e-3;
  double beta_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int max_iterations = 50000;
  double threshold = 1e-4;
  int pretrain_restarts = 16;
  std::uint64_t seed = 0;
  /// Clamp the normalized argument to the training range when predicting.
  bool clamp_to_training_range = true;

  void validate() const;
};

struct LearnedModel {
  std::string algorithm;  // label only
  MetricKind metric = MetricKind::Ospa;
  ModelKind kind = ModelKind::Exponential;
  /// Canonical exponents: restricted to the directions the training data can
  /// resolve, unit length, oriented so the settled value grows with Pi.
  GammaVector gamma;
  /// Exponents as left by the optimizer.
  GammaVector gamma_raw;
  PolyLink links;
  PiNormalization norm;
  double time_scale = 1.0;
  bool clamp = true;
  double train_mse = std::numeric_limits<double>::quiet_NaN();
  double test_mse = std::numeric_limits<double>::quiet_NaN();
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  int iterations = 0;
  bool converged = false;
  std::uint64_t seed = 0;

  [[nodiscard]] double z(const TeamTaskParams& theta) const;
  /// Model parameters in seconds for this theta.
  [[nodiscard]] ModelParams phi(const TeamTaskParams& theta) const;
};

/// Called after every iteration with the iteration number, the objective
/// at the latest evaluated point and the best objective so far.
using LearnProgress = std::function<void(int iteration, double current, double best)>;

LearnedModel learn(const LearningSet& set, ModelKind kind, const LearnerConfig& config,
                   const LearnProgress& progress = {});

/// Mean squared error of a learned model over a set, with the model's own
/// (stored) normalization.
double evaluate_model(const LearnedModel& model, const LearningSet& set);

PerfTrace predict_trace(const TeamTaskParams& theta, const LearnedModel& model,
                        const std::vector<double>& times);

struct WStructure {
  WVector w;
  GammaVector gamma;
  WVector w_raw;
  GammaVector gamma_raw;
};

WStructure extract_w_structure(const LearnedModel& model);

}  // namespace dimperf
