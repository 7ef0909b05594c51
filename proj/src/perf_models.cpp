#include "dimperf/perf_models.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "dimperf/error.hpp"

namespace dimperf {
namespace {

// 1/(1+e^{-x}) without overflow for large |x|.
double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

constexpr int kMaxIterations = 500;
constexpr double kRelTol = 1e-10;

bool admissible(const ModelParams& phi) {
  for (double v : phi.values)
    if (!std::isfinite(v)) return false;
  return phi.kind == ModelKind::Sigmoid || phi.rate() > 0.0;
}

double sum_squares(const ModelParams& phi, const PerfTrace& trace) {
  double s = 0.0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const double r = predict(phi, trace.times[i]) - trace.values[i];
    s += r * r;
  }
  return s;
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  return kind == ModelKind::Exponential ? "exp" : "sig";
}

ModelKind parse_model_kind(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (s == "exp" || s == "exponential") return ModelKind::Exponential;
  if (s == "sig" || s == "sigmoid") return ModelKind::Sigmoid;
  throw InvalidArgument("unknown model kind '" + std::string(name) + "' (expected exp or sig)");
}

std::array<std::string_view, 3> parameter_names(ModelKind kind) {
  if (kind == ModelKind::Exponential) return {"a", "b", "c"};
  return {"L", "k", "d"};
}

double predict(const ModelParams& phi, double t) {
  const auto& v = phi.values;
  if (phi.kind == ModelKind::Exponential) return v[0] * std::exp(-v[1] * t) + v[2];
  return v[0] * logistic(v[1] * t) + v[2];
}

std::array<double, 3> predict_gradient(const ModelParams& phi, double t) {
  const auto& v = phi.values;
  if (phi.kind == ModelKind::Exponential) {
    const double e = std::exp(-v[1] * t);
    return {e, -v[0] * t * e, 1.0};
  }
  const double s = logistic(v[1] * t);
  return {s, v[0] * t * s * (1.0 - s), 1.0};
}

double asymptote(const ModelParams& phi) {
  if (phi.kind == ModelKind::Exponential) return phi.offset();
  if (phi.rate() > 0.0) return phi.scale() + phi.offset();
  if (phi.rate() < 0.0) return phi.offset();
  return 0.5 * phi.scale() + phi.offset();
}

ModelParams canonicalize_sigmoid(const ModelParams& phi) {
  if (phi.kind != ModelKind::Sigmoid || phi.rate() <= 0.0) return phi;
  return ModelParams::sigmoid(-phi.scale(), -phi.rate(), phi.offset() + phi.scale());
}

ModelParams initial_guess(const PerfTrace& trace, ModelKind kind) {
  trace.validate();
  if (trace.empty()) throw InvalidArgument("cannot fit an empty trace");
  const double t0 = trace.times.front();
  const double span = trace.times.back() - t0;
  const double first = trace.values.front();
  const double ss = span > kSteadyStateWindow ? steady_state(trace) : trace.values.back();

  const double gap = std::abs(first - ss);
  double t_half = -1.0;
  for (std::size_t i = 1; i < trace.size() && gap > 0.0; ++i) {
    if (std::abs(trace.values[i] - ss) <= 0.5 * gap) {
      t_half = trace.times[i] - t0;
      break;
    }
  }
  if (!(t_half > 0.0)) t_half = span > 0.0 ? 0.25 * span : 1.0;

  if (kind == ModelKind::Exponential) {
    return ModelParams::exponential(first - ss, std::numbers::ln2 / t_half, ss);
  }
  // With k < 0 the curve starts at L/2 + d and settles at d; the gap halves
  // when e^{-k t} = 3.
  return ModelParams::sigmoid(2.0 * (first - ss), -std::log(3.0) / t_half, ss);
}

double model_mse(const ModelParams& phi, const PerfTrace& trace) {
  if (trace.empty()) return 0.0;
  return sum_squares(phi, trace) / static_cast<double>(trace.size());
}

FitResult fit_single(const PerfTrace& trace, ModelKind kind) {
  trace.validate();
  if (trace.size() < 10) throw InvalidArgument("fit_single needs at least 10 samples");
  for (double v : trace.values)
    if (!std::isfinite(v)) throw InvalidArgument("trace contains non-finite values");

  ModelParams phi = initial_guess(trace, kind);
  const std::size_t n = trace.size();
  double s = sum_squares(phi, trace);
  FitResult result;
  result.initial_mse = s / static_cast<double>(n);

  double lambda = 1e-3;
  int iter = 0;
  bool converged = false;
  Eigen::Matrix3d jtj;
  Eigen::Vector3d jtr;
  while (iter < kMaxIterations && !converged) {
    ++iter;
    if (s <= 1e-28 * static_cast<double>(n)) {
      converged = true;
      break;
    }
    jtj.setZero();
    jtr.setZero();
    for (std::size_t i = 0; i < n; ++i) {
      const auto g = predict_gradient(phi, trace.times[i]);
      const Eigen::Vector3d j(g[0], g[1], g[2]);
      const double r = predict(phi, trace.times[i]) - trace.values[i];
      jtj.noalias() += j * j.transpose();
      jtr.noalias() += r * j;
    }
    // Inner loop: raise the damping until a step lowers the objective.
    bool improved = false;
    while (lambda < 1e16) {
      Eigen::Matrix3d a = jtj;
      for (int k = 0; k < 3; ++k) a(k, k) += lambda * std::max(jtj(k, k), 1e-12);
      const Eigen::Vector3d delta = a.ldlt().solve(-jtr);
      ModelParams trial = phi;
      for (int k = 0; k < 3; ++k) trial.values[static_cast<std::size_t>(k)] += delta(k);
      const double s_trial = admissible(trial) ? sum_squares(trial, trace) : INFINITY;
      if (std::isfinite(s_trial) && s_trial < s) {
        const double rel = (s - s_trial) / std::max(s, 1e-300);
        phi = trial;
        s = s_trial;
        lambda = std::max(lambda * 0.1, 1e-12);
        improved = true;
        if (rel < kRelTol) converged = true;
        break;
      }
      lambda *= 10.0;
    }
    // No descent direction left at any damping: a (local) minimum.
    if (!improved) converged = true;
  }

  if (kind == ModelKind::Sigmoid) phi = canonicalize_sigmoid(phi);
  result.params = phi;
  result.mse = s / static_cast<double>(n);
  result.iterations = iter;
  result.converged = converged;
  return result;
}

}  // namespace dimperf
