#pragma once

#include <span>
#include <vector>

#include "dimperf/sim.hpp"

namespace dimperf {

/// Prepares per-algorithm state for a freshly spawned world.
void init_search_state(WorldState& world, const SimConfig& config);

/// One decision step of the configured search strategy; returns a goal per robot.
///
/// All strategies treat the PHD intensity as the landscape:
///  - Lloyds: PHD-weighted centroid of each robot's Voronoi cell.
///  - SA: Metropolis acceptance of a random goal displacement, geometric cooling.
///  - PSO: goal velocity blending inertia, personal best and neighborhood best.
///  - ACO: goal drawn from sampled candidates weighted by pheromone; the
///    pheromone evaporates and is re-deposited in proportion to the PHD.
///  - AIS: waypoint cloned with affinity-dependent hypermutation.
std::vector<Vec2> step_search(Algorithm algorithm, WorldState& world, const SimConfig& config, Rng& rng);

/// PHD-weighted Voronoi centroids over the grid cells. Cells with
/// intensity below `min_weight` are ignored; robots whose cell carries no
/// weight keep their position.
std::vector<Vec2> lloyd_goals(const PhdGrid& phd, std::span<const Vec2> robots, double min_weight = 1e-10);

/// Metropolis rule for maximization: accept improvements, accept a decrease
/// with probability exp(delta / T). At T == 0 only strict improvements pass.
bool metropolis_accept(double delta, double temperature, double u01);

Vec2 clamp_to_arena(Vec2 p, const SimConfig& config);

}  // namespace dimperf
