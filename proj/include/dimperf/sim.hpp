#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dimperf/dimension.hpp"
#include "dimperf/metrics.hpp"
#include "dimperf/phd_grid.hpp"
#include "dimperf/vec2.hpp"

namespace dimperf {

using Rng = std::mt19937_64;

enum class Algorithm { Lloyds, SA, PSO, ACO, AIS };

std::string_view to_string(Algorithm algorithm);
/// Accepts the canonical names (Lloyds, SA, PSO, ACO, AIS), case-insensitive.
Algorithm parse_algorithm(std::string_view name);
const std::array<Algorithm, 5>& all_algorithms();

/// Constants of the simplified search strategies. All distances in meters,
/// masses in expected targets.
struct SearchParams {
  // Simulated annealing over each robot's goal.
  double sa_initial_temperature = 0.2;
  double sa_cooling = 0.995;
  double sa_step = 8.0;

  // Particle swarm over goals; ring neighborhood, 0 neighbors means global best.
  double pso_inertia = 0.5;
  double pso_cognitive = 1.0;
  double pso_social = 1.0;
  int pso_ring_neighbors = 1;
  double pso_exclusion_radius = 5.0;
  double pso_probe_radius = 15.0;
  double pso_max_speed = 10.0;

  // Ant colony: pheromone grid fed by the PHD.
  double aco_evaporation = 0.05;
  double aco_deposit = 1.0;
  int aco_candidates = 16;
  double aco_radius = 20.0;
  int aco_patience = 10;

  // Artificial immune system: cloned and hypermutated waypoints.
  int ais_clones = 6;
  double ais_mutation_radius = 15.0;
  double ais_affinity_scale = 0.5;
};

struct SimConfig {
  double arena_width = 100.0;
  double arena_height = 100.0;
  /// Areas used for the densities in theta; 0 means the arena area. Targets are
  /// drawn from a centered rectangle of `target_area`.
  double robot_area = 0.0;
  double target_area = 0.0;
  double duration = 300.0;
  double sense_rate = 2.0;
  double v_max = 2.0;
  double fov_radius = 5.0;
  double p_fn = 0.2;
  std::array<double, 4> meas_noise_cov{0.25, 0.0, 0.0, 0.25};
  int n_r = 10;
  int n_t = 10;
  Algorithm algorithm = Algorithm::Lloyds;
  std::uint64_t seed = 0;
  double grid_cell = 1.0;
  /// Expected target count spread uniformly over the initial PHD.
  double prior_mass = 50.0;
  /// Start box as fractions of the arena: [x0, x1] x [y0, y1].
  std::array<double, 4> start_box{0.4, 0.6, 0.0, 0.1};
  SearchParams search;

  void validate() const;
  [[nodiscard]] double dt() const { return 1.0 / sense_rate; }
  [[nodiscard]] std::size_t num_steps() const;
  [[nodiscard]] double arena_area() const { return arena_width * arena_height; }
  [[nodiscard]] double effective_robot_area() const { return robot_area > 0 ? robot_area : arena_area(); }
  [[nodiscard]] double effective_target_area() const { return target_area > 0 ? target_area : arena_area(); }
  [[nodiscard]] TeamTaskParams theta() const;
  [[nodiscard]] PhdSensorModel sensor_model() const;
};

/// Per-robot state kept by the search strategies between steps.
struct SearchState {
  std::vector<Vec2> goals;
  std::vector<Vec2> velocity;       // PSO goal velocity
  std::vector<Vec2> personal_best;  // PSO
  std::vector<int> goal_age;        // ACO
  PhdGrid pheromone;                // ACO, same layout as the PHD grid
  double temperature = 0.0;         // SA
};

struct WorldState {
  std::vector<Vec2> robots;
  TargetSet targets;
  PhdGrid phd;
  std::vector<std::uint8_t> explored;  // one flag per PHD cell
  std::size_t explored_cells = 0;
  double clock = 0.0;
  SearchState search;
};

struct TrialDiagnostics {
  double max_step_displacement = 0.0;
  double min_phd = 0.0;
  bool finite = true;
};

struct TrialRecord {
  Algorithm algorithm = Algorithm::Lloyds;
  TeamTaskParams theta;
  std::uint64_t seed = 0;
  int trial_id = 0;
  PerfTrace ospa{MetricKind::Ospa, {}, {}};
  PerfTrace ei{MetricKind::Ei, {}, {}};
  /// Fields read from a file that this version does not interpret, keyed by
  /// name with their raw JSON text.
  std::map<std::string, std::string> extra_fields;
  TrialDiagnostics diagnostics;  // not persisted

  bool same_data(const TrialRecord& o) const;
};

WorldState spawn_world(const SimConfig& config);

/// Noisy detections of the targets within the field of view of `robot`.
std::vector<Vec2> sense(Vec2 robot, std::span<const Vec2> targets, const SimConfig& config, Rng& rng);

/// Marks cells whose center is within the field of view of any robot.
void mark_explored(WorldState& world, double fov_radius);

/// Moves each robot toward its goal by at most v_max * dt, clamped to the arena.
/// Returns the largest displacement.
double move_robots(WorldState& world, std::span<const Vec2> goals, const SimConfig& config);

TrialRecord run_trial(const SimConfig& config, int trial_id = 0);

/// Cartesian experiment grid over counts, radius, algorithm and trial.
struct ExperimentGrid {
  std::vector<int> n_r;
  std::vector<int> n_t;
  std::vector<double> r;
  std::vector<Algorithm> algorithms;
  int trials = 1;
  std::uint64_t seed_base = 1;
  SimConfig base;

  [[nodiscard]] std::size_t size() const;
  /// Configs in deterministic order: algorithm, r, n_r, n_t, trial.
  [[nodiscard]] std::vector<std::pair<SimConfig, int>> expand() const;
};

std::uint64_t derive_seed(std::uint64_t base, Algorithm algorithm, int n_r, int n_t, double r,
                          int trial);

struct GridFailure {
  std::string key;
  std::string message;
};

struct GridResult {
  std::vector<TrialRecord> records;
  std::vector<GridFailure> failures;
};

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

/// Runs every trial of the grid on `jobs` worker threads. Records keep grid
/// order regardless of scheduling; failed trials are reported, not thrown.
GridResult run_grid(const ExperimentGrid& grid, int jobs = 1, const ProgressFn& progress = {});

}  // namespace dimperf
