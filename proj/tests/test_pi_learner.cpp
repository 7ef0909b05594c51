#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "dimperf/error.hpp"
#include "dimperf/pi_learner.hpp"
#include "support/oracles.hpp"

using namespace dimperf;

namespace {

constexpr auto kExp = ModelKind::Exponential;
constexpr auto kSig = ModelKind::Sigmoid;

LearningSet with_fits(LearningSet set, ModelKind kind) {
  for (auto& s : set.samples)
    s.fitted[static_cast<std::size_t>(kind)] =
        fit_single(PerfTrace{MetricKind::Ospa, set.times, s.values}, kind).params;
  return set;
}

double mean_square(const LearningSet& set) {
  double s = 0.0;
  for (const auto& smp : set.samples)
    for (double v : smp.values) s += v * v;
  return s / static_cast<double>(set.size() * set.times.size());
}

// Coefficients shrink with degree; otherwise z^4 terms push the exponential
// rate far negative and the objective overflows any finite-difference check.
PolyLink random_link(std::mt19937_64& rng, double sd) {
  std::normal_distribution<double> nd(0.0, 1.0);
  PolyLink l;
  for (auto& row : l.beta) {
    double s = sd;
    for (auto& b : row) {
      b = s * nd(rng);
      s /= 3.0;
    }
  }
  return l;
}

GammaVector random_gamma(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  return {{u(rng), u(rng), u(rng)}};
}

}  // namespace

TEST_CASE("polynomial evaluation") {
  const PolyCoeffs c{1, -2, 0.5, 0, 3};
  CHECK(poly_eval(c, 0.0) == 1.0);
  CHECK(poly_eval(c, 2.0) == doctest::Approx(1 - 4 + 2 + 48));
  CHECK(poly_derivative(c, 2.0) == doctest::Approx(-2 + 2 + 96));
}

TEST_CASE("phi_of_pi examples") {
  const PiNormalization unit{};
  PolyLink zero;
  for (double v : phi_of_pi(3.7, zero, unit, kExp).values) CHECK(v == 0.0);
  PolyLink a_one;
  a_one.beta[0] = {1, 0, 0, 0, 0};
  for (double pi : {1e-6, 1.0, 1e6}) CHECK(phi_of_pi(pi, a_one, unit, kExp).scale() == 1.0);
  PolyLink c_lin;
  c_lin.beta[2] = {0, 1, 0, 0, 0};
  CHECK(phi_of_z(2.0, c_lin, kExp).offset() == 2.0);
  CHECK(phi_of_pi(std::exp(2.0), c_lin, unit, kExp).offset() == doctest::Approx(2.0));
  CHECK(phi_of_pi(std::exp(2.0), c_lin, unit, kSig).kind == kSig);
  CHECK_THROWS_AS(phi_of_pi(0.0, c_lin, unit, kExp), InvalidArgument);
}

TEST_CASE("normalization clamps to the training range") {
  const PiNormalization n{1.0, 2.0, -1.0, 1.5};
  CHECK(n.z(std::exp(5.0)) == doctest::Approx(2.0));
  CHECK(n.z(std::exp(5.0), true) == 1.5);
  CHECK(n.z(std::exp(-9.0), true) == -1.0);
  CHECK(n.z(std::exp(2.0), true) == doctest::Approx(0.5));
}

TEST_CASE("objective at the planted optimum, at zero links, and under permutation") {
  for (auto kind : {kExp, kSig}) {
    const auto p = oracle::planted_dataset(kind, 0.0, 1);
    CHECK(objective(p.clean, p.gamma, p.link, kind) < 1e-20);
    CHECK(objective(p.clean, p.gamma, PolyLink{}, kind) ==
          doctest::Approx(mean_square(p.clean)).epsilon(1e-12));

    const auto noisy = oracle::planted_dataset(kind, 0.05, 2);
    auto shuffled = noisy.noisy;
    std::mt19937_64 rng(3);
    std::shuffle(shuffled.samples.begin(), shuffled.samples.end(), rng);
    const GammaVector g{{0.3, 1.1, -0.7}};
    CHECK(objective(shuffled, g, noisy.link, kind) ==
          doctest::Approx(objective(noisy.noisy, g, noisy.link, kind)).epsilon(1e-12));
  }
}

TEST_CASE("analytic gradient agrees with central differences") {
  std::mt19937_64 rng(44);
  for (auto kind : {kExp, kSig}) {
    const auto p = oracle::planted_dataset(kind, 0.05, 6);
    for (int i = 0; i < 10; ++i) {
      const auto g = random_gamma(rng);
      auto link = p.link;
      for (auto& row : link.beta)
        for (auto& b : row) b += std::normal_distribution<double>(0.0, 0.3)(rng);
      CHECK(gradient_check(p.noisy, g, link, kind) < 1e-5);
      CHECK(gradient_check(p.noisy, g, random_link(rng, 1.0), kind) < 1e-5);
    }
  }
}

TEST_CASE("gradient vanishes at an interpolating optimum") {
  for (auto kind : {kExp, kSig}) {
    const auto p = oracle::planted_dataset(kind, 0.0, 1);
    const auto grad = objective_gradient(p.clean, p.gamma, p.link, kind);
    CHECK(grad.mse < 1e-20);
    for (double d : grad.d_gamma) CHECK(std::abs(d) < 1e-7);
    for (const auto& row : grad.d_beta.beta)
      for (double d : row) CHECK(std::abs(d) < 1e-7);
  }
}

TEST_CASE("offset gradient is linear in the offset coefficients on zero data") {
  auto set = oracle::planted_dataset(kExp, 0.0, 1).clean;
  for (auto& s : set.samples) std::fill(s.values.begin(), s.values.end(), 0.0);
  const GammaVector g{{0.5, 0.2, -0.4}};
  PolyLink link;
  link.beta[2] = {0.7, -0.3, 0.2, 0.05, -0.01};
  PolyLink twice = link;
  for (auto& b : twice.beta[2]) b *= 2.0;
  const auto g1 = objective_gradient(set, g, link, kExp);
  const auto g2 = objective_gradient(set, g, twice, kExp);
  for (int k = 0; k <= kPolyDegree; ++k)
    CHECK(g2.d_beta.beta[2][k] == doctest::Approx(2.0 * g1.d_beta.beta[2][k]).epsilon(1e-12));
  CHECK(g2.mse == doctest::Approx(4.0 * g1.mse).epsilon(1e-12));
}

TEST_CASE("noiseless planted data is learned to interpolation") {
  for (auto kind : {kExp, kSig}) {
    const auto p = oracle::planted_dataset(kind, 0.0, 1);
    LearnerConfig cfg;
    cfg.threshold = 1e-7;
    cfg.seed = 3;
    const auto m = learn(with_fits(p.clean, kind), kind, cfg);
    CHECK(m.converged);
    CHECK(m.train_mse < 1e-6);
  }
}

TEST_CASE("learning is deterministic and tracks the best point") {
  const auto p = oracle::planted_dataset(kExp, 0.05, 9);
  LearnerConfig cfg;
  cfg.max_iterations = 600;
  cfg.threshold = 1e-12;
  cfg.seed = 17;
  double last_best = std::numeric_limits<double>::infinity();
  int calls = 0;
  const auto a = learn(p.noisy, kExp, cfg, [&](int iter, double current, double best) {
    CHECK(iter == calls + 1);
    CHECK(best <= last_best);
    CHECK(best <= current);
    last_best = best;
    ++calls;
  });
  CHECK(calls == 600);
  CHECK_FALSE(a.converged);
  const auto b = learn(p.noisy, kExp, cfg);
  CHECK(a.gamma == b.gamma);
  CHECK(a.gamma_raw == b.gamma_raw);
  CHECK(a.links == b.links);
  CHECK(a.train_mse == b.train_mse);
  CHECK(a.train_mse <= last_best * (1.0 + 1e-9));
  cfg.seed = 18;
  CHECK_FALSE(learn(p.noisy, kExp, cfg).links == a.links);
}

TEST_CASE("predictions do not depend on the length unit") {
  const auto p = oracle::planted_dataset(kSig, 0.05, 4);
  auto cm = p.noisy;
  for (auto& s : cm.samples) s.theta = rescale_length_units(s.theta, 100.0);
  LearnerConfig cfg;
  cfg.max_iterations = 1500;
  cfg.seed = 2;
  const auto m = learn(p.noisy, kSig, cfg);
  const auto c = learn(cm, kSig, cfg);
  double diff = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < p.noisy.size(); ++i) {
    const auto a = predict_trace(p.noisy.samples[i].theta, m, p.noisy.times);
    const auto b = predict_trace(cm.samples[i].theta, c, cm.times);
    for (std::size_t t = 0; t < a.size(); ++t, ++n) diff += std::pow(a.values[t] - b.values[t], 2);
  }
  CHECK(diff / static_cast<double>(n) < 1e-6);
  CHECK(std::abs(m.train_mse - c.train_mse) < 1e-6);
}

TEST_CASE("noisy planted data: predictions and exponent direction") {
  for (auto kind : {kExp, kSig}) {
    const auto p = oracle::planted_dataset(kind, 0.05, 11);
    LearnerConfig cfg;
    cfg.seed = 1;
    const auto m = learn(p.noisy, kind, cfg);
    CHECK(evaluate_model(m, p.clean) < 1e-3);
    CHECK(std::abs(oracle::cosine(m.gamma, p.gamma)) >= 0.9);
    CHECK(m.train_mse < 2.0 * 0.0025);
    double norm = 0.0;
    for (double g : m.gamma.gamma) norm += g * g;
    CHECK(norm == doctest::Approx(1.0));
  }
}

TEST_CASE("predicted traces vary continuously with the team") {
  const auto p = oracle::planted_dataset(kExp, 0.05, 11);
  LearnerConfig cfg;
  cfg.max_iterations = 2000;
  cfg.seed = 1;
  const auto m = learn(p.noisy, kExp, cfg);
  const auto& base = p.noisy.samples[12].theta;
  double prev_value = NAN;
  for (double n_t = 20.0; n_t <= 40.0; n_t += 0.05) {
    auto theta = base;
    theta.rho_t = theta.rho_t / theta.n_t * n_t;
    theta.n_t = n_t;
    const double v = predict_trace(theta, m, {150.0}).values[0];
    if (!std::isnan(prev_value)) CHECK(std::abs(v - prev_value) < 0.05);
    prev_value = v;
  }
  // training configurations reproduce their fitted band
  for (const auto& s : p.noisy.samples) {
    const auto tr = predict_trace(s.theta, m, p.noisy.times);
    double mse = 0.0;
    for (std::size_t t = 0; t < tr.size(); ++t) mse += std::pow(tr.values[t] - s.values[t], 2);
    CHECK(mse / static_cast<double>(tr.size()) < 20.0 * m.train_mse);
  }
}

TEST_CASE("learned phi reports rates in seconds") {
  const auto p = oracle::planted_dataset(kExp, 0.0, 1);
  LearnedModel m;
  m.kind = kExp;
  m.gamma = p.gamma;
  m.links = p.link;
  m.time_scale = 300.0;
  m.clamp = false;
  const auto phi = m.phi(p.clean.samples[0].theta);
  const double z = m.z(p.clean.samples[0].theta);
  CHECK(phi.rate() == doctest::Approx(poly_eval(p.link.beta[1], z) / 300.0));
}

TEST_CASE("exponent structure report") {
  LearnedModel m;
  m.gamma = {{1, 0, 0}};
  m.gamma_raw = {{2, 0, 0}};
  const auto w = extract_w_structure(m);
  CHECK(w.w.w == std::array<double, 5>{-1, 1, 0, 0, 0});
  CHECK(w.w_raw.w == std::array<double, 5>{-2, 2, 0, 0, 0});
  CHECK(w.gamma == m.gamma);
}

TEST_CASE("learner input validation") {
  LearnerConfig c;
  CHECK_NOTHROW(c.validate());
  c.gamma_rate = 0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = {};
  c.threshold = -1;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = {};
  c.pretrain_restarts = 0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = {};
  c.beta1 = 1.0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);

  CHECK_THROWS_AS(learn(LearningSet{}, kExp, LearnerConfig{}), InvalidArgument);
  auto p = oracle::planted_dataset(kExp, 0.0, 1).clean;
  p.samples[3].values.pop_back();
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
}
