#include "dimperf/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "dimperf/error.hpp"

namespace dimperf {
namespace {

Vec2 uniform_in_disk(Vec2 center, double radius, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double rho = radius * std::sqrt(u(rng));
  const double phi = 2.0 * std::numbers::pi * u(rng);
  return {center.x + rho * std::cos(phi), center.y + rho * std::sin(phi)};
}

Vec2 cap_length(Vec2 v, double max_len) {
  const double n = v.norm();
  return n > max_len && n > 0.0 ? (max_len / n) * v : v;
}

std::vector<Vec2> step_sa(WorldState& world, const SimConfig& config, Rng& rng) {
  const auto& p = config.search;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto& goals = world.search.goals;
  for (auto& goal : goals) {
    const Vec2 candidate = clamp_to_arena(uniform_in_disk(goal, p.sa_step, rng), config);
    const double delta = fov_mass(world.phd, candidate, config.fov_radius) -
                         fov_mass(world.phd, goal, config.fov_radius);
    if (metropolis_accept(delta, world.search.temperature, u(rng))) goal = candidate;
  }
  world.search.temperature *= p.sa_cooling;
  return goals;
}

std::vector<Vec2> step_pso(WorldState& world, const SimConfig& config, Rng& rng) {
  const auto& p = config.search;
  auto& s = world.search;
  const std::size_t n = world.robots.size();
  std::uniform_real_distribution<double> u(0.0, 1.0);

  std::vector<double> best_value(n);
  for (std::size_t i = 0; i < n; ++i) {
    best_value[i] = fov_mass(world.phd, s.personal_best[i], config.fov_radius);
    const double here = fov_mass(world.phd, s.goals[i], config.fov_radius);
    if (here > best_value[i]) {
      s.personal_best[i] = s.goals[i];
      best_value[i] = here;
    }
    const Vec2 probe = clamp_to_arena(uniform_in_disk(s.goals[i], p.pso_probe_radius, rng), config);
    const double probe_value = fov_mass(world.phd, probe, config.fov_radius);
    if (probe_value > best_value[i]) {
      s.personal_best[i] = probe;
      best_value[i] = probe_value;
    }
  }

  // Exclusion: of two personal bests closer than the exclusion radius, the
  // weaker one is re-seeded so particles spread over separate peaks.
  const double excl2 = p.pso_exclusion_radius * p.pso_exclusion_radius;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if ((s.personal_best[i] - s.personal_best[j]).squared_norm() >= excl2) continue;
      const std::size_t loser = best_value[i] >= best_value[j] ? j : i;
      s.personal_best[loser] =
          clamp_to_arena(uniform_in_disk(s.goals[loser], 2.0 * p.pso_probe_radius, rng), config);
      best_value[loser] = fov_mass(world.phd, s.personal_best[loser], config.fov_radius);
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    // Ring topology; a zero neighborhood size means global best.
    std::size_t best = i;
    if (p.pso_ring_neighbors <= 0) {
      for (std::size_t j = 0; j < n; ++j)
        if (best_value[j] > best_value[best]) best = j;
    } else {
      for (int k = 1; k <= p.pso_ring_neighbors; ++k) {
        for (std::size_t j : {(i + static_cast<std::size_t>(k)) % n,
                              (i + n - static_cast<std::size_t>(k) % n) % n})
          if (best_value[j] > best_value[best]) best = j;
      }
    }
    const Vec2 cognitive = s.personal_best[i] - s.goals[i];
    const Vec2 social = s.personal_best[best] - s.goals[i];
    Vec2 v = p.pso_inertia * s.velocity[i];
    v += (p.pso_cognitive * u(rng)) * cognitive;
    v += (p.pso_social * u(rng)) * social;
    s.velocity[i] = cap_length(v, p.pso_max_speed);
    s.goals[i] = clamp_to_arena(s.goals[i] + s.velocity[i], config);
  }
  return s.goals;
}

std::vector<Vec2> step_aco(WorldState& world, const SimConfig& config, Rng& rng) {
  const auto& p = config.search;
  auto& s = world.search;
  const auto phd = world.phd.data();
  auto trail = s.pheromone.data();
  for (std::size_t k = 0; k < trail.size(); ++k)
    trail[k] = (1.0 - p.aco_evaporation) * trail[k] + p.aco_deposit * phd[k];

  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vec2> candidates(static_cast<std::size_t>(std::max(1, p.aco_candidates)));
  std::vector<double> weights(candidates.size());
  for (std::size_t i = 0; i < world.robots.size(); ++i) {
    const bool reached = distance(world.robots[i], s.goals[i]) < config.grid_cell;
    if (!reached && ++s.goal_age[i] < p.aco_patience) continue;
    double total = 0.0;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      candidates[c] = clamp_to_arena(uniform_in_disk(world.robots[i], p.aco_radius, rng), config);
      weights[c] = fov_mass(s.pheromone, candidates[c], config.fov_radius) + 1e-12;
      total += weights[c];
    }
    double pick = u(rng) * total;
    std::size_t chosen = candidates.size() - 1;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      pick -= weights[c];
      if (pick <= 0.0) {
        chosen = c;
        break;
      }
    }
    s.goals[i] = candidates[chosen];
    s.goal_age[i] = 0;
  }
  return s.goals;
}

std::vector<Vec2> step_ais(WorldState& world, const SimConfig& config, Rng& rng) {
  const auto& p = config.search;
  auto& goals = world.search.goals;
  constexpr double kCleared = 1e-3;
  for (auto& waypoint : goals) {
    const double affinity = fov_mass(world.phd, waypoint, config.fov_radius);
    const double radius =
        std::max(config.grid_cell, p.ais_mutation_radius * std::exp(-affinity / p.ais_affinity_scale));
    Vec2 best_clone = waypoint;
    double best_affinity = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < std::max(1, p.ais_clones); ++c) {
      const Vec2 clone = clamp_to_arena(uniform_in_disk(waypoint, radius, rng), config);
      const double a = fov_mass(world.phd, clone, config.fov_radius);
      if (a > best_affinity) {
        best_affinity = a;
        best_clone = clone;
      }
    }
    // Receptor editing: a waypoint over cleared ground is always replaced.
    if (best_affinity > affinity || affinity < kCleared) waypoint = best_clone;
  }
  return goals;
}

}  // namespace

Vec2 clamp_to_arena(Vec2 p, const SimConfig& config) {
  return {std::clamp(p.x, 0.0, config.arena_width), std::clamp(p.y, 0.0, config.arena_height)};
}

bool metropolis_accept(double delta, double temperature, double u01) {
  if (delta > 0.0) return true;
  if (!(temperature > 0.0)) return false;
  return u01 < std::exp(delta / temperature);
}

std::vector<Vec2> lloyd_goals(const PhdGrid& phd, std::span<const Vec2> robots, double min_weight) {
  const std::size_t n = robots.size();
  std::vector<double> mass(n, 0.0), mx(n, 0.0), my(n, 0.0);
  for (std::size_t r = 0; r < phd.rows(); ++r) {
    for (std::size_t c = 0; c < phd.cols(); ++c) {
      const double w = phd.at(r, c);
      if (w < min_weight) continue;
      const Vec2 center = phd.cell_center(r, c);
      std::size_t nearest = 0;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n; ++i) {
        const double d2 = (robots[i] - center).squared_norm();
        if (d2 < best) {
          best = d2;
          nearest = i;
        }
      }
      mass[nearest] += w;
      mx[nearest] += w * center.x;
      my[nearest] += w * center.y;
    }
  }
  std::vector<Vec2> goals(robots.begin(), robots.end());
  for (std::size_t i = 0; i < n; ++i)
    if (mass[i] > 0.0) goals[i] = {mx[i] / mass[i], my[i] / mass[i]};
  return goals;
}

void init_search_state(WorldState& world, const SimConfig& config) {
  auto& s = world.search;
  const std::size_t n = world.robots.size();
  s.goals = world.robots;
  s.velocity.assign(n, Vec2{});
  s.personal_best = world.robots;
  s.goal_age.assign(n, std::numeric_limits<int>::max() / 2);
  s.pheromone = PhdGrid(world.phd.rows(), world.phd.cols(), world.phd.cell_size(), 0.0);
  s.temperature = config.search.sa_initial_temperature;
}

std::vector<Vec2> step_search(Algorithm algorithm, WorldState& world, const SimConfig& config, Rng& rng) {
  if (world.search.goals.size() != world.robots.size()) init_search_state(world, config);
  switch (algorithm) {
    case Algorithm::Lloyds:
      return world.search.goals = lloyd_goals(world.phd, world.robots);
    case Algorithm::SA:
      return step_sa(world, config, rng);
    case Algorithm::PSO:
      return step_pso(world, config, rng);
    case Algorithm::ACO:
      return step_aco(world, config, rng);
    case Algorithm::AIS:
      return step_ais(world, config, rng);
  }
  throw InvalidArgument("unknown search algorithm");
}

}  // namespace dimperf
