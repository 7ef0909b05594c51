#pragma once

#include <array>
#include <string_view>

#include "dimperf/metrics.hpp"

namespace dimperf {

enum class ModelKind { Exponential, Sigmoid };

std::string_view to_string(ModelKind kind);
/// Accepts exp|exponential|sig|sigmoid.
ModelKind parse_model_kind(std::string_view name);

/// Exponential: {a, b, c} in a*exp(-b t) + c.
/// Sigmoid: {L, k, d} in L / (1 + exp(-k t)) + d.
struct ModelParams {
  ModelKind kind = ModelKind::Exponential;
  std::array<double, 3> values{};

  static ModelParams exponential(double a, double b, double c) {
    return {ModelKind::Exponential, {a, b, c}};
  }
  static ModelParams sigmoid(double L, double k, double d) { return {ModelKind::Sigmoid, {L, k, d}}; }

  /// Scale (a or L), rate (b or k) and offset (c or d).
  [[nodiscard]] double scale() const { return values[0]; }
  [[nodiscard]] double rate() const { return values[1]; }
  [[nodiscard]] double offset() const { return values[2]; }

  bool operator==(const ModelParams&) const = default;
};

/// Names of the three parameters, e.g. {"a", "b", "c"}.
std::array<std::string_view, 3> parameter_names(ModelKind kind);

double predict(const ModelParams& phi, double t);

/// Gradient of predict() in the three parameters.
std::array<double, 3> predict_gradient(const ModelParams& phi, double t);

/// Value as t -> infinity (c for the exponential; d or L + d for the sigmoid).
double asymptote(const ModelParams& phi);

/// L/(1+e^{-kt}) + d == -L/(1+e^{kt}) + (d + L): rewrites any sigmoid so that
/// k <= 0, which makes d the steady state and L/2 + d the initial value.
ModelParams canonicalize_sigmoid(const ModelParams& phi);

/// Heuristic starting point: offset from the steady state, scale from the
/// first sample, rate from the time to close half of the gap.
ModelParams initial_guess(const PerfTrace& trace, ModelKind kind);

double model_mse(const ModelParams& phi, const PerfTrace& trace);

struct FitResult {
  ModelParams params;
  double mse = 0.0;
  double initial_mse = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Least-squares fit of one model to one trace (Levenberg-Marquardt with
/// analytic Jacobian, at most 500 iterations, stop on relative objective
/// change below 1e-10). Sigmoid results are returned in canonical form.
FitResult fit_single(const PerfTrace& trace, ModelKind kind);

}  // namespace dimperf
