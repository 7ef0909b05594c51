#include <doctest.h>

#include <cmath>
#include <random>

#include "dimperf/dimension.hpp"
#include "dimperf/error.hpp"

using namespace dimperf;

namespace {

TeamTaskParams random_theta(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> count(1.0, 200.0), radius(0.5, 20.0), area(100.0, 1e6);
  return TeamTaskParams::from_areas(std::round(count(rng)), std::round(count(rng)), radius(rng), area(rng),
                                    area(rng));
}

GammaVector random_gamma(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  return {{u(rng), u(rng), u(rng)}};
}

}  // namespace

TEST_CASE("dimensional matrix matches the unit table") {
  const auto d = build_dimensional_matrix();
  const std::array<std::array<int, 5>, 2> expected{{{1, 1, 0, 1, 1}, {0, 0, 1, -2, -2}}};
  CHECK(d.entries == expected);
  // rho_r is items per square meter
  CHECK(d.entries[0][3] == 1);
  CHECK(d.entries[1][3] == -2);
  // counts carry no length
  CHECK(d.entries[1][0] == 0);
  CHECK(d.entries[1][1] == 0);
}

TEST_CASE("null basis is the canonical W") {
  const auto w = compute_null_basis(build_dimensional_matrix());
  const std::array<std::array<int, 5>, 3> expected{{{-1, 1, 0, 0, 0}, {-1, 0, 2, 1, 0}, {-1, 0, 2, 0, 1}}};
  CHECK(w.columns == expected);
  CHECK(canonical_basis() == w);

  const auto d = build_dimensional_matrix();
  for (const auto& col : w.columns) {
    for (const auto& row : d.entries) {
      long dot = 0;
      for (int j = 0; j < 5; ++j) dot += static_cast<long>(row[j]) * col[j];
      CHECK(dot == 0);
    }
  }
  std::vector<std::vector<std::int64_t>> cols;
  for (const auto& col : w.columns) cols.emplace_back(col.begin(), col.end());
  CHECK(integer_rank(cols) == 3);
  CHECK(5 - integer_rank({{1, 1, 0, 1, 1}, {0, 0, 1, -2, -2}}) == 3);
}

TEST_CASE("null basis rejects a rank-deficient matrix") {
  DimensionalMatrix d;
  d.entries = {{{1, 1, 0, 1, 1}, {2, 2, 0, 2, 2}}};
  CHECK_THROWS_AS(compute_null_basis(d), InvalidArgument);
}

TEST_CASE("generic integer null space") {
  const std::vector<std::vector<std::int64_t>> m{{2, 4, -6}, {1, 3, 1}};
  const auto ns = integer_null_space(m);
  REQUIRE(ns.size() == 1);
  for (const auto& row : m) {
    std::int64_t dot = 0;
    for (std::size_t j = 0; j < 3; ++j) dot += row[j] * ns[0][j];
    CHECK(dot == 0);
  }
  CHECK(ns[0][0] < 0);
}

TEST_CASE("gamma_to_w examples") {
  auto w = gamma_to_w({{1, 0, 0}});
  CHECK(w.w == std::array<double, 5>{-1, 1, 0, 0, 0});
  w = gamma_to_w({{0, 0, 0}});
  CHECK(w.w == std::array<double, 5>{0, 0, 0, 0, 0});
  w = gamma_to_w({{1, 1, 1}});
  CHECK(w.w == std::array<double, 5>{-3, 1, 4, 1, 1});
}

TEST_CASE("w stays in the null space") {
  std::mt19937_64 rng(11);
  const auto d = build_dimensional_matrix();
  for (int i = 0; i < 1000; ++i) {
    const auto dw = apply_dimensional_matrix(d, gamma_to_w(random_gamma(rng)));
    CHECK(std::abs(dw[0]) < 1e-12);
    CHECK(std::abs(dw[1]) < 1e-12);
  }
}

TEST_CASE("evaluate_pi examples") {
  TeamTaskParams t{50, 100, 5, 0.01, 0.01};
  CHECK(evaluate_pi(t, {{1, 0, 0}}) == doctest::Approx(2.0).epsilon(1e-14));
  t = {100, 10, 5, 0.01, 0.001};
  CHECK(evaluate_pi(t, {{0, 1, 0}}) == doctest::Approx(0.0025).epsilon(1e-14));
  CHECK(evaluate_pi(t, {{0, 0, 0}}) == 1.0);
}

TEST_CASE("w-form and gamma-form agree") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 1000; ++i) {
    const auto theta = random_theta(rng);
    const auto g = random_gamma(rng);
    const double a = evaluate_pi(theta, g);
    const double b = evaluate_pi_w(theta, gamma_to_w(g));
    CHECK(std::abs(a - b) <= 1e-12 * std::abs(a));
  }
}

TEST_CASE("Pi is invariant to the length unit") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 1000; ++i) {
    const auto theta = random_theta(rng);
    const auto g = random_gamma(rng);
    const double base = log_pi(theta, g);
    for (double s : {0.01, 1.0, 100.0}) CHECK(std::abs(log_pi(rescale_length_units(theta, s), g) - base) < 1e-9);
  }
}

TEST_CASE("rescale_length_units") {
  const TeamTaskParams t{10, 20, 5, 0.01, 0.02};
  CHECK(rescale_length_units(t, 1.0) == t);
  const auto cm = rescale_length_units(t, 100.0);
  CHECK(cm.r == doctest::Approx(500.0));
  CHECK(cm.rho_r == doctest::Approx(1e-6));
  CHECK(cm.rho_t == doctest::Approx(2e-6));
  CHECK(cm.n_r == 10);
  CHECK(cm.n_t == 20);
  CHECK_THROWS_AS(rescale_length_units(t, 0.0), InvalidArgument);
}

TEST_CASE("theta validation") {
  CHECK_THROWS_AS(TeamTaskParams({0, 1, 1, 1, 1}).validate(), InvalidArgument);
  CHECK_THROWS_AS(TeamTaskParams({1, 1, -1, 1, 1}).validate(), InvalidArgument);
  CHECK_THROWS_AS(TeamTaskParams({1, 1, 1, 1, NAN}).validate(), InvalidArgument);
  CHECK_THROWS_AS(evaluate_pi(TeamTaskParams{1, 1, 0, 1, 1}, {{1, 1, 1}}), InvalidArgument);
  const auto t = TeamTaskParams::from_areas(10, 30, 5, 10000, 5000);
  CHECK(t.rho_r == 10.0 / 10000.0);
  CHECK(t.rho_t == 30.0 / 5000.0);
}
