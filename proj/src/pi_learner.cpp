#include "dimperf/pi_learner.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "dimperf/error.hpp"

namespace dimperf {
namespace {

constexpr double kVarianceFloor = 1e-12;

using Features = std::array<double, kNumGroups>;

struct Prepared {
  const LearningSet* set = nullptr;
  std::vector<Features> f;
  std::vector<double> tau;
  double time_scale = 1.0;
};

double resolve_time_scale(const LearningSet& set, double time_scale) {
  if (time_scale > 0.0) return time_scale;
  const double last = set.times.empty() ? 0.0 : set.times.back();
  return last > 0.0 ? last : 1.0;
}

Prepared prepare(const LearningSet& set, double time_scale) {
  set.validate();
  Prepared p;
  p.set = &set;
  p.time_scale = resolve_time_scale(set, time_scale);
  p.f.reserve(set.size());
  for (const auto& s : set.samples) p.f.push_back(log_group_bases(s.theta));
  p.tau.reserve(set.times.size());
  for (double t : set.times) p.tau.push_back(t / p.time_scale);
  return p;
}

struct Normalized {
  std::vector<double> z;
  std::vector<double> centered;  // s_n - mean
  Features fbar{};
  double mean = 0.0;
  double sigma = 1.0;
};

Normalized normalize(const Prepared& p, const GammaVector& g) {
  const std::size_t n = p.f.size();
  Normalized out;
  out.z.resize(n);
  out.centered.resize(n);
  for (const auto& f : p.f)
    for (int i = 0; i < kNumGroups; ++i) out.fbar[i] += f[i] / static_cast<double>(n);
  double var = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double d = 0.0;
    for (int i = 0; i < kNumGroups; ++i) d += g.gamma[i] * (p.f[k][i] - out.fbar[i]);
    out.centered[k] = d;
    var += d * d;
  }
  var /= static_cast<double>(n);
  out.sigma = std::sqrt(var + kVarianceFloor);
  for (int i = 0; i < kNumGroups; ++i) out.mean += g.gamma[i] * out.fbar[i];
  for (std::size_t k = 0; k < n; ++k) out.z[k] = out.centered[k] / out.sigma;
  return out;
}

ObjectiveGradient evaluate(const Prepared& p, const GammaVector& g, const PolyLink& link, ModelKind kind,
                           bool with_gradient) {
  const auto& set = *p.set;
  const std::size_t n = set.size();
  const std::size_t nt = set.times.size();
  const Normalized nz = normalize(p, g);
  const double scale = 1.0 / static_cast<double>(n * nt);

  ObjectiveGradient out;
  std::vector<double> dz(n, 0.0);
  double sse = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double z = nz.z[k];
    const ModelParams phi = phi_of_z(z, link, kind);
    const auto& y = set.samples[k].values;
    std::array<double, 3> dphi{};
    for (std::size_t t = 0; t < nt; ++t) {
      const double r = predict(phi, p.tau[t]) - y[t];
      sse += r * r;
      if (with_gradient) {
        const auto grad = predict_gradient(phi, p.tau[t]);
        for (int j = 0; j < 3; ++j) dphi[j] += r * grad[j];
      }
    }
    if (!with_gradient) continue;
    double zk = 1.0;
    for (int j = 0; j < 3; ++j) dphi[j] *= 2.0 * scale;
    for (int d = 0; d <= kPolyDegree; ++d) {
      for (int j = 0; j < 3; ++j) out.d_beta.beta[j][d] += dphi[j] * zk;
      zk *= z;
    }
    for (int j = 0; j < 3; ++j) dz[k] += dphi[j] * poly_derivative(link.beta[j], z);
  }
  out.mse = sse * scale;
  if (!with_gradient) return out;

  // z_n = c_n / sigma with c_n = gamma . (f_n - fbar); sigma depends on gamma too.
  Features cov{};
  for (std::size_t k = 0; k < n; ++k)
    for (int i = 0; i < kNumGroups; ++i) cov[i] += nz.centered[k] * (p.f[k][i] - nz.fbar[i]);
  for (int i = 0; i < kNumGroups; ++i) cov[i] /= static_cast<double>(n) * nz.sigma;
  for (std::size_t k = 0; k < n; ++k)
    for (int i = 0; i < kNumGroups; ++i)
      out.d_gamma[i] += dz[k] * ((p.f[k][i] - nz.fbar[i]) - nz.z[k] * cov[i]) / nz.sigma;
  return out;
}

struct Adam {
  std::vector<double> m, v;
  int t = 0;

  explicit Adam(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

  void step(std::vector<double>& x, const std::vector<double>& g, double rate, const LearnerConfig& c) {
    ++t;
    const double b1t = 1.0 - std::pow(c.beta1, t);
    const double b2t = 1.0 - std::pow(c.beta2, t);
    for (std::size_t i = 0; i < x.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      x[i] -= rate * (m[i] / b1t) / (std::sqrt(v[i] / b2t) + c.epsilon);
    }
  }
};

std::vector<double> flatten(const PolyLink& link) {
  std::vector<double> x;
  for (const auto& row : link.beta) x.insert(x.end(), row.begin(), row.end());
  return x;
}

PolyLink unflatten(const std::vector<double>& x) {
  PolyLink link;
  std::size_t k = 0;
  for (auto& row : link.beta)
    for (auto& b : row) b = x[k++];
  return link;
}

// Least-squares polynomial through the per-sample fits, in internal time units.
std::optional<PolyLink> link_from_fits(const Prepared& p, const Normalized& nz, ModelKind kind) {
  const auto& set = *p.set;
  const auto n = static_cast<Eigen::Index>(set.size());
  Eigen::MatrixXd v(n, kPolyDegree + 1);
  Eigen::MatrixXd y(n, 3);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& fit = set.samples[static_cast<std::size_t>(k)].fitted[static_cast<std::size_t>(kind)];
    if (!fit || fit->kind != kind) return std::nullopt;
    double zk = 1.0;
    for (int d = 0; d <= kPolyDegree; ++d) {
      v(k, d) = zk;
      zk *= nz.z[static_cast<std::size_t>(k)];
    }
    y(k, 0) = fit->values[0];
    y(k, 1) = fit->values[1] * p.time_scale;
    y(k, 2) = fit->values[2];
  }
  const Eigen::MatrixXd sol = v.completeOrthogonalDecomposition().solve(y);
  PolyLink link;
  for (int j = 0; j < 3; ++j)
    for (int d = 0; d <= kPolyDegree; ++d) link.beta[j][d] = sol(d, j);
  for (const auto& row : link.beta)
    for (double b : row)
      if (!std::isfinite(b)) return std::nullopt;
  return link;
}

// Rescales z by kappa without changing any prediction.
void rescale_link(PolyLink& link, double kappa) {
  for (auto& row : link.beta) {
    double f = 1.0;
    for (auto& b : row) {
      b /= f;
      f *= kappa;
    }
  }
}

// Picks the representative of gamma described on LearnedModel::gamma and
// adjusts the links so that every training-set prediction is unchanged.
void canonicalize(LearnedModel& model, const Prepared& p) {
  const std::size_t n = p.f.size();
  const Normalized before = normalize(p, model.gamma_raw);

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& f : p.f) {
    Eigen::Vector3d c;
    for (int i = 0; i < kNumGroups; ++i) c(i) = f[i] - before.fbar[i];
    cov += c * c.transpose() / static_cast<double>(n);
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  const double top = eig.eigenvalues().maxCoeff();
  Eigen::Matrix3d proj = Eigen::Matrix3d::Zero();
  for (int i = 0; i < 3; ++i) {
    if (top > 0.0 && eig.eigenvalues()(i) > 1e-9 * top)
      proj += eig.eigenvectors().col(i) * eig.eigenvectors().col(i).transpose();
  }
  const Eigen::Vector3d raw(model.gamma_raw.gamma[0], model.gamma_raw.gamma[1], model.gamma_raw.gamma[2]);
  Eigen::Vector3d g = proj * raw;
  GammaVector out = model.gamma_raw;
  PolyLink link = model.links;
  if (g.norm() > 0.0) {
    g /= g.norm();
    for (int i = 0; i < 3; ++i) out.gamma[i] = g(i);
    const Normalized after = normalize(p, out);
    // The centered values agree up to a factor, so z changes by one scale.
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      num += after.z[k] * before.z[k];
      den += before.z[k] * before.z[k];
    }
    if (den > 0.0 && num != 0.0) rescale_link(link, num / den);
  }

  // Orientation: the value at the last training time should grow with z.
  const Normalized nz = normalize(p, out);
  double zm = 0.0, vm = 0.0;
  std::vector<double> settled(n);
  for (std::size_t k = 0; k < n; ++k) {
    settled[k] = predict(phi_of_z(nz.z[k], link, model.kind), p.tau.empty() ? 0.0 : p.tau.back());
    zm += nz.z[k] / static_cast<double>(n);
    vm += settled[k] / static_cast<double>(n);
  }
  double corr = 0.0;
  for (std::size_t k = 0; k < n; ++k) corr += (nz.z[k] - zm) * (settled[k] - vm);
  if (corr < 0.0) {
    for (auto& v : out.gamma) v = -v;
    rescale_link(link, -1.0);
  }

  const Normalized fin = normalize(p, out);
  model.gamma = out;
  model.links = link;
  model.norm.mean = fin.mean;
  model.norm.std = fin.sigma;
  model.norm.z_min = fin.z.empty() ? 0.0 : *std::min_element(fin.z.begin(), fin.z.end());
  model.norm.z_max = fin.z.empty() ? 0.0 : *std::max_element(fin.z.begin(), fin.z.end());
}

}  // namespace

double poly_eval(const PolyCoeffs& coeffs, double z) {
  double v = 0.0;
  for (int d = kPolyDegree; d >= 0; --d) v = v * z + coeffs[static_cast<std::size_t>(d)];
  return v;
}

double poly_derivative(const PolyCoeffs& coeffs, double z) {
  double v = 0.0;
  for (int d = kPolyDegree; d >= 1; --d) v = v * z + d * coeffs[static_cast<std::size_t>(d)];
  return v;
}

double PiNormalization::z(double pi, bool clamp) const {
  if (!(pi > 0.0) || !std::isfinite(pi)) throw InvalidArgument("Pi must be positive and finite");
  const double v = (std::log(pi) - mean) / std;
  return clamp ? std::clamp(v, z_min, z_max) : v;
}

ModelParams phi_of_z(double z, const PolyLink& link, ModelKind kind) {
  return {kind, {poly_eval(link.beta[0], z), poly_eval(link.beta[1], z), poly_eval(link.beta[2], z)}};
}

ModelParams phi_of_pi(double pi, const PolyLink& link, const PiNormalization& norm, ModelKind kind,
                      bool clamp) {
  return phi_of_z(norm.z(pi, clamp), link, kind);
}

void LearningSet::validate() const {
  if (samples.empty()) throw InvalidArgument("learning set is empty");
  if (times.empty()) throw InvalidArgument("learning set has no time grid");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw InvalidArgument("learning set times must increase");
  for (const auto& s : samples) {
    s.theta.validate();
    if (s.values.size() != times.size())
      throw InvalidArgument("learning sample does not match the shared time grid");
    for (double v : s.values)
      if (!std::isfinite(v)) throw InvalidArgument("learning sample contains non-finite values");
  }
}

double objective(const LearningSet& set, const GammaVector& gamma, const PolyLink& link, ModelKind kind,
                 double time_scale) {
  return evaluate(prepare(set, time_scale), gamma, link, kind, false).mse;
}

ObjectiveGradient objective_gradient(const LearningSet& set, const GammaVector& gamma,
                                     const PolyLink& link, ModelKind kind, double time_scale) {
  return evaluate(prepare(set, time_scale), gamma, link, kind, true);
}

double gradient_check(const LearningSet& set, const GammaVector& gamma, const PolyLink& link,
                      ModelKind kind, double time_scale) {
  const Prepared p = prepare(set, time_scale);
  const ObjectiveGradient analytic = evaluate(p, gamma, link, kind, true);
  double worst = 0.0;
  auto compare = [&](double a, auto&& eval_at, double x) {
    const double h = 1e-5 * std::max(1.0, std::abs(x));
    const double fd = (eval_at(x + h) - eval_at(x - h)) / (2.0 * h);
    const double denom = std::max({std::abs(a), std::abs(fd), 1e-6});
    worst = std::max(worst, std::abs(a - fd) / denom);
  };
  for (int i = 0; i < kNumGroups; ++i) {
    auto at = [&](double v) {
      GammaVector g = gamma;
      g.gamma[i] = v;
      return evaluate(p, g, link, kind, false).mse;
    };
    compare(analytic.d_gamma[i], at, gamma.gamma[i]);
  }
  for (int j = 0; j < 3; ++j) {
    for (int d = 0; d <= kPolyDegree; ++d) {
      auto at = [&](double v) {
        PolyLink l = link;
        l.beta[j][d] = v;
        return evaluate(p, gamma, l, kind, false).mse;
      };
      compare(analytic.d_beta.beta[j][d], at, link.beta[j][d]);
    }
  }
  return worst;
}

void LearnerConfig::validate() const {
  if (!(gamma_rate > 0.0) || !(beta_rate > 0.0)) throw InvalidArgument("learning rates must be positive");
  if (!(threshold > 0.0)) throw InvalidArgument("threshold must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw InvalidArgument("moment decay rates must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  if (max_iterations < 0 || pretrain_restarts < 1)
    throw InvalidArgument("iteration counts must be nonnegative and restarts >= 1");
}

double LearnedModel::z(const TeamTaskParams& theta) const {
  return norm.z(evaluate_pi(theta, gamma), clamp);
}

ModelParams LearnedModel::phi(const TeamTaskParams& theta) const {
  ModelParams out = phi_of_z(z(theta), links, kind);
  out.values[1] /= time_scale;
  return out;
}

LearnedModel learn(const LearningSet& set, ModelKind kind, const LearnerConfig& config,
                   const LearnProgress& progress) {
  config.validate();
  const Prepared p = prepare(set, 0.0);
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> ug(-2.0, 2.0);
  std::normal_distribution<double> nb(0.0, 0.1);

  GammaVector best_gamma;
  PolyLink best_link;
  double best = std::numeric_limits<double>::infinity();
  auto consider = [&](const GammaVector& g, const PolyLink& l, double value) {
    if (std::isfinite(value) && value < best) {
      best = value;
      best_gamma = g;
      best_link = l;
    }
  };

  for (int r = 0; r < config.pretrain_restarts; ++r) {
    GammaVector g;
    for (auto& v : g.gamma) v = ug(rng);
    PolyLink random_link;
    for (auto& row : random_link.beta)
      for (auto& b : row) b = nb(rng);
    consider(g, random_link, evaluate(p, g, random_link, kind, false).mse);
    if (auto fitted = link_from_fits(p, normalize(p, g), kind))
      consider(g, *fitted, evaluate(p, g, *fitted, kind, false).mse);
  }
  if (!std::isfinite(best)) throw RuntimeError("no finite starting point found");

  std::vector<double> gamma(best_gamma.gamma.begin(), best_gamma.gamma.end());
  std::vector<double> beta = flatten(best_link);
  Adam adam_gamma(gamma.size()), adam_beta(beta.size());
  auto as_gamma = [](const std::vector<double>& x) {
    GammaVector g;
    std::copy(x.begin(), x.end(), g.gamma.begin());
    return g;
  };

  bool converged = best < config.threshold;
  int iter = 0;
  while (!converged && iter < config.max_iterations) {
    ++iter;
    const ObjectiveGradient a = evaluate(p, as_gamma(gamma), unflatten(beta), kind, true);
    consider(as_gamma(gamma), unflatten(beta), a.mse);
    if (a.mse < config.threshold) {
      converged = true;
      break;
    }
    adam_gamma.step(gamma, std::vector<double>(a.d_gamma.begin(), a.d_gamma.end()), config.gamma_rate,
                    config);

    const ObjectiveGradient b = evaluate(p, as_gamma(gamma), unflatten(beta), kind, true);
    consider(as_gamma(gamma), unflatten(beta), b.mse);
    if (b.mse < config.threshold) {
      converged = true;
      break;
    }
    adam_beta.step(beta, flatten(b.d_beta), config.beta_rate, config);
    if (progress) progress(iter, b.mse, best);
  }
  if (!converged) {
    const double last = evaluate(p, as_gamma(gamma), unflatten(beta), kind, false).mse;
    consider(as_gamma(gamma), unflatten(beta), last);
  }

  LearnedModel model;
  model.kind = kind;
  model.gamma_raw = best_gamma;
  model.links = best_link;
  model.time_scale = p.time_scale;
  model.clamp = config.clamp_to_training_range;
  model.iterations = iter;
  model.converged = converged;
  model.seed = config.seed;
  model.n_train = set.size();
  canonicalize(model, p);
  model.train_mse = evaluate_model(model, set);
  return model;
}

double evaluate_model(const LearnedModel& model, const LearningSet& set) {
  set.validate();
  double sse = 0.0;
  for (const auto& s : set.samples) {
    const ModelParams phi = model.phi(s.theta);
    for (std::size_t t = 0; t < set.times.size(); ++t) {
      const double r = predict(phi, set.times[t]) - s.values[t];
      sse += r * r;
    }
  }
  return sse / static_cast<double>(set.size() * set.times.size());
}

PerfTrace predict_trace(const TeamTaskParams& theta, const LearnedModel& model,
                        const std::vector<double>& times) {
  theta.validate();
  const ModelParams phi = model.phi(theta);
  PerfTrace out{model.metric, times, {}};
  out.values.reserve(times.size());
  for (double t : times) out.values.push_back(predict(phi, t));
  return out;
}

WStructure extract_w_structure(const LearnedModel& model) {
  return {gamma_to_w(model.gamma), model.gamma, gamma_to_w(model.gamma_raw), model.gamma_raw};
}

}  // namespace dimperf
