#include <doctest.h>

#include <cmath>
#include <random>

#include "dimperf/error.hpp"
#include "dimperf/phd_grid.hpp"
#include "dimperf/sim.hpp"

using namespace dimperf;

TEST_CASE("uniform grid layout and mass") {
  const auto g = PhdGrid::uniform(100, 100, 1.0, 50.0);
  CHECK(g.rows() == 100);
  CHECK(g.cols() == 100);
  CHECK(g.total_mass() == doctest::Approx(50.0));
  CHECK(g.at(3, 7) == doctest::Approx(0.005));
  CHECK(g.cell_center(0, 2) == Vec2{2.5, 0.5});
  CHECK_THROWS_AS(PhdGrid(4, 4, 0.0), InvalidArgument);
  CHECK_THROWS_AS(PhdGrid::uniform(0, 10, 1.0, 1.0), InvalidArgument);
}

TEST_CASE("disk iteration matches a direct scan") {
  const PhdGrid g(40, 30, 1.0);
  for (const Vec2 c : {Vec2{10.2, 7.9}, Vec2{0.0, 0.0}, Vec2{29.9, 39.5}, Vec2{-3.0, 5.0}}) {
    for (double radius : {0.0, 0.7, 5.0, 12.0}) {
      std::size_t expected = 0;
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t col = 0; col < g.cols(); ++col)
          if ((g.cell_center(r, col) - c).squared_norm() <= radius * radius) ++expected;
      std::size_t seen = 0;
      g.for_each_cell_in_disk(c, radius, [&](std::size_t, std::size_t) { ++seen; });
      CHECK(seen == expected);
    }
  }
}

TEST_CASE("no reports leave the grid unchanged") {
  const auto g = PhdGrid::uniform(50, 50, 1.0, 20.0);
  CHECK(phd_step(g, {}, PhdSensorModel{}) == g);
}

TEST_CASE("empty looks decay only inside the footprint") {
  auto g = PhdGrid::uniform(50, 50, 1.0, 20.0);
  const double before_far = g.at(45, 45);
  const SensorReport rep{{10.0, 10.0}, 5.0, {}};
  double prev = fov_mass(g, rep.position, rep.fov_radius);
  for (int k = 0; k < 10; ++k) {
    g = phd_step(g, std::vector<SensorReport>{rep}, PhdSensorModel{});
    const double now = fov_mass(g, rep.position, rep.fov_radius);
    CHECK(now == doctest::Approx(0.2 * prev));
    CHECK(now < prev);
    prev = now;
  }
  CHECK(g.at(45, 45) == before_far);
  for (double v : g.data()) CHECK(v >= 0.0);
}

TEST_CASE("each detection adds one unit of mass inside the field of view") {
  auto g = PhdGrid::uniform(50, 50, 1.0, 20.0);
  const SensorReport rep{{25.0, 25.0}, 5.0, {{24.0, 26.0}, {27.5, 23.0}}};
  const double local = fov_mass(g, rep.position, rep.fov_radius);
  const double total = g.total_mass();
  g = phd_step(g, std::vector<SensorReport>{rep}, PhdSensorModel{});
  CHECK(fov_mass(g, rep.position, rep.fov_radius) == doctest::Approx(0.2 * local + 2.0));
  CHECK(g.total_mass() == doctest::Approx(total - 0.8 * local + 2.0));
}

TEST_CASE("a watched single target keeps about one unit of local mass") {
  SimConfig cfg;
  cfg.arena_width = cfg.arena_height = 40.0;
  Rng rng(123);
  auto g = PhdGrid::uniform(40, 40, 1.0, 5.0);
  const Vec2 robot{20.0, 20.0};
  const std::vector<Vec2> target{{21.0, 19.5}};
  const auto model = cfg.sensor_model();
  double sum = 0.0;
  int counted = 0;
  double prev = fov_mass(g, robot, cfg.fov_radius);
  for (int k = 0; k < 100; ++k) {
    const auto det = sense(robot, target, cfg, rng);
    const SensorReport rep{robot, cfg.fov_radius, det};
    g = phd_step(g, std::vector<SensorReport>{rep}, model);
    const double now = fov_mass(g, robot, cfg.fov_radius);
    // bookkeeping: misses scale the old mass, each detection adds exactly one
    CHECK(now == doctest::Approx(model.p_fn * prev + static_cast<double>(det.size())));
    prev = now;
    if (k >= 20) {
      sum += now;
      ++counted;
    }
  }
  const double avg = sum / counted;
  CHECK(avg > 0.5);
  CHECK(avg < 1.5);
}

TEST_CASE("non positive-definite covariance is rejected") {
  PhdSensorModel m;
  m.meas_cov = {-5.0, 0.0, 0.0, 1.0};
  const auto g = PhdGrid::uniform(10, 10, 1.0, 1.0);
  const SensorReport rep{{5, 5}, 3.0, {{5, 5}}};
  CHECK_THROWS_AS(phd_step(g, std::vector<SensorReport>{rep}, m), InvalidArgument);
  m.meas_cov = {0.25, 0.0, 0.0, 0.25};
  m.p_fn = 1.0;
  CHECK_THROWS_AS(phd_step(g, std::vector<SensorReport>{rep}, m), InvalidArgument);
}

TEST_CASE("estimate_targets picks round(mass) peaks") {
  PhdGrid g(10, 10, 1.0, 0.0);
  CHECK(estimate_targets(g).empty());
  g.at(2, 3) = 0.9;
  g.at(7, 7) = 0.7;
  g.at(7, 8) = 0.1;
  g.at(0, 0) = 0.2;
  // mass 1.9 -> two estimates, the highest local maxima
  const auto est = estimate_targets(g);
  REQUIRE(est.size() == 2);
  CHECK(est[0] == g.cell_center(2, 3));
  CHECK(est[1] == g.cell_center(7, 7));

  PhdGrid tie(5, 5, 2.0, 0.0);
  tie.at(1, 1) = 0.5;
  tie.at(3, 3) = 0.5;
  const auto one = estimate_targets(tie);
  REQUIRE(one.size() == 1);
  CHECK(one[0] == tie.cell_center(1, 1));

  PhdGrid flat(4, 4, 1.0, 0.25);
  CHECK(estimate_targets(flat).size() == 4);
}

TEST_CASE("fov_mass sums the cells in the disk") {
  const auto g = PhdGrid::uniform(20, 20, 1.0, 400.0);
  std::size_t cells = 0;
  g.for_each_cell_in_disk({10, 10}, 3.0, [&](std::size_t, std::size_t) { ++cells; });
  CHECK(fov_mass(g, {10, 10}, 3.0) == doctest::Approx(static_cast<double>(cells)));
  CHECK(fov_mass(g, {-50, -50}, 3.0) == 0.0);
}
