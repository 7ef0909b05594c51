#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "dimperf/error.hpp"
#include "dimperf/search.hpp"
#include "dimperf/sim.hpp"

using namespace dimperf;

namespace {

WorldState bare_world(const SimConfig& cfg, std::vector<Vec2> robots, PhdGrid phd) {
  WorldState w;
  w.robots = std::move(robots);
  w.phd = std::move(phd);
  w.explored.assign(w.phd.data().size(), 0);
  init_search_state(w, cfg);
  return w;
}

PhdGrid blob(const SimConfig& cfg, Vec2 at, double mass) {
  auto g = PhdGrid::uniform(cfg.arena_width, cfg.arena_height, cfg.grid_cell, 0.0);
  g.for_each_cell_in_disk(at, 1.5, [&](std::size_t r, std::size_t c) { g.at(r, c) = mass; });
  return g;
}

}  // namespace

TEST_CASE("Lloyd goals on a uniform PHD are brute-force Voronoi centroids") {
  const auto g = PhdGrid::uniform(20, 20, 1.0, 10.0);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 20.0);
  for (int it = 0; it < 20; ++it) {
    std::vector<Vec2> robots(4);
    for (auto& r : robots) r = {u(rng), u(rng)};
    const auto goals = lloyd_goals(g, robots);
    // reference: plain average of cell centers per nearest robot
    std::vector<double> sx(4, 0), sy(4, 0), cnt(4, 0);
    for (std::size_t row = 0; row < 20; ++row)
      for (std::size_t col = 0; col < 20; ++col) {
        const Vec2 c = g.cell_center(row, col);
        std::size_t best = 0;
        for (std::size_t i = 1; i < 4; ++i)
          if ((robots[i] - c).squared_norm() < (robots[best] - c).squared_norm()) best = i;
        sx[best] += c.x;
        sy[best] += c.y;
        cnt[best] += 1;
      }
    for (std::size_t i = 0; i < 4; ++i) {
      if (cnt[i] == 0) {
        CHECK(goals[i] == robots[i]);
        continue;
      }
      CHECK(goals[i].x == doctest::Approx(sx[i] / cnt[i]));
      CHECK(goals[i].y == doctest::Approx(sy[i] / cnt[i]));
    }
  }
}

TEST_CASE("Lloyd keeps robots whose cell carries no weight") {
  PhdGrid g(10, 10, 1.0, 0.0);
  g.at(1, 1) = 1.0;
  const std::vector<Vec2> robots{{1.0, 1.0}, {9.0, 9.0}};
  const auto goals = lloyd_goals(g, robots);
  CHECK(goals[0] == g.cell_center(1, 1));
  CHECK(goals[1] == robots[1]);
}

TEST_CASE("PSO goal settles on an isolated peak") {
  SimConfig cfg;
  cfg.algorithm = Algorithm::PSO;
  const Vec2 peak{70.0, 70.0};
  auto world = bare_world(cfg, {{60.0, 65.0}}, blob(cfg, peak, 1.0));
  Rng rng(5);
  for (int k = 0; k < 50; ++k) step_search(Algorithm::PSO, world, cfg, rng);
  CHECK(distance(world.search.personal_best[0], peak) < cfg.fov_radius);
  CHECK(distance(world.search.goals[0], peak) < cfg.fov_radius);
}

TEST_CASE("PSO exclusion separates personal bests") {
  SimConfig cfg;
  cfg.algorithm = Algorithm::PSO;
  auto world = bare_world(cfg, {{50, 50}, {50.5, 50}, {51, 50}}, blob(cfg, {50, 50}, 1.0));
  Rng rng(2);
  step_search(Algorithm::PSO, world, cfg, rng);
  const auto& pb = world.search.personal_best;
  int close_pairs = 0;
  for (std::size_t i = 0; i < pb.size(); ++i)
    for (std::size_t j = i + 1; j < pb.size(); ++j)
      if (distance(pb[i], pb[j]) < cfg.search.pso_exclusion_radius) ++close_pairs;
  CHECK(close_pairs < 3);
}

TEST_CASE("SA at zero temperature never accepts a worse goal") {
  SimConfig cfg;
  cfg.search.sa_initial_temperature = 0.0;
  auto phd = PhdGrid::uniform(100, 100, 1.0, 0.0);
  for (std::size_t r = 0; r < 100; ++r)
    for (std::size_t c = 0; c < 100; ++c) phd.at(r, c) = 1e-3 * static_cast<double>(r + c);
  auto world = bare_world(cfg, {{20, 20}, {80, 30}, {40, 90}}, phd);
  Rng rng(1);
  std::vector<double> value;
  for (const auto& g : world.search.goals) value.push_back(fov_mass(world.phd, g, cfg.fov_radius));
  for (int k = 0; k < 200; ++k) {
    step_search(Algorithm::SA, world, cfg, rng);
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double now = fov_mass(world.phd, world.search.goals[i], cfg.fov_radius);
      CHECK(now >= value[i]);
      value[i] = now;
    }
  }
}

TEST_CASE("Metropolis rule") {
  CHECK(metropolis_accept(0.1, 0.0, 0.99));
  CHECK_FALSE(metropolis_accept(0.0, 0.0, 0.0));
  CHECK_FALSE(metropolis_accept(-1e-9, 0.0, 0.0));
  // exp(-1) = 0.3679
  CHECK(metropolis_accept(-1.0, 1.0, 0.36));
  CHECK_FALSE(metropolis_accept(-1.0, 1.0, 0.37));
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int accepted = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) accepted += metropolis_accept(-0.5, 0.25, u(rng));
  CHECK(static_cast<double>(accepted) / n == doctest::Approx(std::exp(-2.0)).epsilon(0.03));
}

TEST_CASE("every strategy returns in-arena goals, one per robot") {
  for (auto alg : all_algorithms()) {
    SimConfig cfg;
    cfg.algorithm = alg;
    cfg.n_r = 7;
    cfg.seed = 3;
    auto world = spawn_world(cfg);
    init_search_state(world, cfg);
    Rng rng(9);
    for (int k = 0; k < 30; ++k) {
      const auto goals = step_search(alg, world, cfg, rng);
      REQUIRE(goals.size() == 7);
      for (const auto& g : goals) {
        CHECK(g.x >= 0.0);
        CHECK(g.x <= cfg.arena_width);
        CHECK(g.y >= 0.0);
        CHECK(g.y <= cfg.arena_height);
      }
      move_robots(world, goals, cfg);
    }
  }
}

TEST_CASE("algorithm names") {
  for (auto alg : all_algorithms()) CHECK(parse_algorithm(to_string(alg)) == alg);
  CHECK(parse_algorithm("lloyds") == Algorithm::Lloyds);
  CHECK(parse_algorithm("pso") == Algorithm::PSO);
  CHECK_THROWS_AS(parse_algorithm("foo"), InvalidArgument);
}

TEST_CASE("clamp_to_arena") {
  SimConfig cfg;
  CHECK(clamp_to_arena({-1, 50}, cfg) == Vec2{0, 50});
  CHECK(clamp_to_arena({120, 101}, cfg) == Vec2{100, 100});
  CHECK(clamp_to_arena({3, 4}, cfg) == Vec2{3, 4});
}
