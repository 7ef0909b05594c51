#include "dimperf/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "dimperf/error.hpp"
#include "dimperf/search.hpp"

namespace dimperf {
namespace {

constexpr std::array<Algorithm, 5> kAlgorithms = {Algorithm::Lloyds, Algorithm::SA, Algorithm::PSO,
                                                  Algorithm::ACO, Algorithm::AIS};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::string_view to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::Lloyds: return "Lloyds";
    case Algorithm::SA: return "SA";
    case Algorithm::PSO: return "PSO";
    case Algorithm::ACO: return "ACO";
    case Algorithm::AIS: return "AIS";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "lloyds" || lower == "lloyd") return Algorithm::Lloyds;
  if (lower == "sa") return Algorithm::SA;
  if (lower == "pso") return Algorithm::PSO;
  if (lower == "aco") return Algorithm::ACO;
  if (lower == "ais") return Algorithm::AIS;
  throw InvalidArgument("unknown algorithm '" + std::string(name) +
                        "' (expected Lloyds, SA, PSO, ACO or AIS)");
}

const std::array<Algorithm, 5>& all_algorithms() { return kAlgorithms; }

void SimConfig::validate() const {
  const auto require = [](bool ok, const char* what) {
    if (!ok) throw InvalidArgument(std::string("invalid simulation config: ") + what);
  };
  require(arena_width > 0 && arena_height > 0, "arena must have positive extent");
  require(duration > 0, "duration must be positive");
  require(sense_rate > 0, "sense_rate must be positive");
  require(v_max > 0, "v_max must be positive");
  require(fov_radius > 0, "fov_radius must be positive");
  require(grid_cell > 0, "grid_cell must be positive");
  require(p_fn >= 0 && p_fn < 1, "p_fn must lie in [0, 1)");
  require(n_r > 0, "n_r must be positive");
  require(n_t > 0, "n_t must be positive");
  require(prior_mass >= 0, "prior_mass must be nonnegative");
  require(robot_area >= 0 && target_area >= 0, "areas must be nonnegative");
  require(target_area <= arena_area(), "target_area cannot exceed the arena");
  const auto& c = meas_noise_cov;
  require(c[1] == c[2], "measurement covariance must be symmetric");
  require(c[0] >= 0 && c[3] >= 0 && c[0] * c[3] - c[1] * c[2] >= 0,
          "measurement covariance must be positive semidefinite");
  require(start_box[0] >= 0 && start_box[0] <= start_box[1] && start_box[1] <= 1 &&
              start_box[2] >= 0 && start_box[2] <= start_box[3] && start_box[3] <= 1,
          "start box must be a sub-rectangle of the unit square");
}

std::size_t SimConfig::num_steps() const {
  return static_cast<std::size_t>(std::floor(duration * sense_rate + 1e-9)) + 1;
}

TeamTaskParams SimConfig::theta() const {
  return TeamTaskParams::from_areas(n_r, n_t, fov_radius, effective_robot_area(),
                                    effective_target_area());
}

PhdSensorModel SimConfig::sensor_model() const {
  PhdSensorModel m;
  m.p_fn = p_fn;
  m.meas_cov = meas_noise_cov;
  return m;
}

bool TrialRecord::same_data(const TrialRecord& o) const {
  return algorithm == o.algorithm && theta == o.theta && seed == o.seed && trial_id == o.trial_id &&
         ospa == o.ospa && ei == o.ei && extra_fields == o.extra_fields;
}

WorldState spawn_world(const SimConfig& config) {
  config.validate();
  Rng rng(config.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  WorldState world;
  const double w = config.arena_width, h = config.arena_height;
  const auto& box = config.start_box;
  world.robots.reserve(static_cast<std::size_t>(config.n_r));
  for (int i = 0; i < config.n_r; ++i) {
    const double x = w * (box[0] + (box[1] - box[0]) * u(rng));
    const double y = h * (box[2] + (box[3] - box[2]) * u(rng));
    world.robots.push_back({x, y});
  }
  const double shrink = std::sqrt(config.effective_target_area() / config.arena_area());
  const double tx0 = 0.5 * w * (1.0 - shrink), ty0 = 0.5 * h * (1.0 - shrink);
  world.targets.reserve(static_cast<std::size_t>(config.n_t));
  for (int i = 0; i < config.n_t; ++i)
    world.targets.push_back({tx0 + shrink * w * u(rng), ty0 + shrink * h * u(rng)});
  world.phd = PhdGrid::uniform(w, h, config.grid_cell, config.prior_mass);
  world.explored.assign(world.phd.data().size(), 0);
  return world;
}

std::vector<Vec2> sense(Vec2 robot, std::span<const Vec2> targets, const SimConfig& config, Rng& rng) {
  const auto& c = config.meas_noise_cov;
  const double l00 = std::sqrt(std::max(0.0, c[0]));
  const double l10 = l00 > 0.0 ? c[2] / l00 : 0.0;
  const double l11 = std::sqrt(std::max(0.0, c[3] - l10 * l10));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n01(0.0, 1.0);
  const double r2 = config.fov_radius * config.fov_radius;
  std::vector<Vec2> out;
  for (const auto& t : targets) {
    if ((t - robot).squared_norm() > r2) continue;
    if (u(rng) < config.p_fn) continue;
    const double e0 = n01(rng), e1 = n01(rng);
    out.push_back({t.x + l00 * e0, t.y + l10 * e0 + l11 * e1});
  }
  return out;
}

void mark_explored(WorldState& world, double fov_radius) {
  for (const auto& robot : world.robots) {
    world.phd.for_each_cell_in_disk(robot, fov_radius, [&](std::size_t r, std::size_t c) {
      auto& flag = world.explored[world.phd.index(r, c)];
      if (!flag) {
        flag = 1;
        ++world.explored_cells;
      }
    });
  }
}

double move_robots(WorldState& world, std::span<const Vec2> goals, const SimConfig& config) {
  if (goals.size() != world.robots.size()) throw InvalidArgument("one goal per robot required");
  const double reach = config.v_max * config.dt();
  double max_step = 0.0;
  for (std::size_t i = 0; i < goals.size(); ++i) {
    const Vec2 before = world.robots[i];
    const Vec2 goal = clamp_to_arena(goals[i], config);
    const Vec2 delta = goal - before;
    const double len = delta.norm();
    const Vec2 next = len > reach ? before + (reach / len) * delta : goal;
    world.robots[i] = clamp_to_arena(next, config);
    max_step = std::max(max_step, distance(before, world.robots[i]));
  }
  return max_step;
}

TrialRecord run_trial(const SimConfig& config, int trial_id) {
  WorldState world = spawn_world(config);
  init_search_state(world, config);
  // Spawn consumes its own stream; stepping uses an independent one.
  Rng rng(splitmix64(config.seed ^ 0x5eed5eed5eed5eedULL));
  const PhdSensorModel model = config.sensor_model();
  const std::size_t steps = config.num_steps();
  const double total_cells = static_cast<double>(world.explored.size());

  TrialRecord record;
  record.algorithm = config.algorithm;
  record.theta = config.theta();
  record.seed = config.seed;
  record.trial_id = trial_id;
  record.ospa.times.reserve(steps);
  record.ospa.values.reserve(steps);
  record.ei.values.reserve(steps);
  record.diagnostics.min_phd = std::numeric_limits<double>::infinity();

  std::vector<SensorReport> reports(world.robots.size());
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * config.dt();
    world.clock = t;
    for (std::size_t i = 0; i < world.robots.size(); ++i) {
      reports[i].position = world.robots[i];
      reports[i].fov_radius = config.fov_radius;
      reports[i].detections = sense(world.robots[i], world.targets, config, rng);
    }
    mark_explored(world, config.fov_radius);
    world.phd = phd_step(std::move(world.phd), reports, model);

    const TargetSet estimate = estimate_targets(world.phd);
    record.ospa.times.push_back(t);
    record.ospa.values.push_back(ospa(world.targets, estimate));
    record.ei.values.push_back(exploration_inefficiency(
        static_cast<double>(world.explored_cells), total_cells));

    for (double v : world.phd.data()) {
      record.diagnostics.min_phd = std::min(record.diagnostics.min_phd, v);
      if (!std::isfinite(v)) record.diagnostics.finite = false;
    }

    if (k + 1 == steps) break;
    const auto goals = step_search(config.algorithm, world, config, rng);
    record.diagnostics.max_step_displacement =
        std::max(record.diagnostics.max_step_displacement, move_robots(world, goals, config));
  }
  record.ei.times = record.ospa.times;
  return record;
}

std::size_t ExperimentGrid::size() const {
  return n_r.size() * n_t.size() * r.size() * algorithms.size() *
         static_cast<std::size_t>(std::max(0, trials));
}

std::vector<std::pair<SimConfig, int>> ExperimentGrid::expand() const {
  std::vector<std::pair<SimConfig, int>> out;
  out.reserve(size());
  for (auto algorithm : algorithms)
    for (double radius : r)
      for (int robots : n_r)
        for (int targets : n_t)
          for (int trial = 0; trial < trials; ++trial) {
            SimConfig c = base;
            c.algorithm = algorithm;
            c.fov_radius = radius;
            c.n_r = robots;
            c.n_t = targets;
            c.seed = derive_seed(seed_base, algorithm, robots, targets, radius, trial);
            out.emplace_back(c, trial);
          }
  return out;
}

std::uint64_t derive_seed(std::uint64_t base, Algorithm algorithm, int n_r, int n_t, double r,
                          int trial) {
  std::uint64_t h = splitmix64(base);
  for (std::uint64_t v : {static_cast<std::uint64_t>(algorithm), static_cast<std::uint64_t>(n_r),
                          static_cast<std::uint64_t>(n_t),
                          static_cast<std::uint64_t>(std::llround(r * 1000.0)),
                          static_cast<std::uint64_t>(trial)})
    h = splitmix64(h ^ v);
  return h;
}

GridResult run_grid(const ExperimentGrid& grid, int jobs, const ProgressFn& progress) {
  const auto configs = grid.expand();
  std::vector<std::optional<TrialRecord>> slots(configs.size());
  std::vector<std::string> errors(configs.size());
  std::atomic<std::size_t> next{0}, done{0};
  std::mutex progress_mutex;

  const auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      try {
        slots[i] = run_trial(configs[i].first, configs[i].second);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
      const std::size_t finished = ++done;
      if (progress) {
        std::lock_guard lock(progress_mutex);
        progress(finished, configs.size());
      }
    }
  };

  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(configs.size())));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  GridResult result;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    if (slots[i]) {
      result.records.push_back(std::move(*slots[i]));
      continue;
    }
    const auto& c = configs[i].first;
    std::ostringstream key;
    key << to_string(c.algorithm) << " n_r=" << c.n_r << " n_t=" << c.n_t << " r=" << c.fov_radius
        << " trial=" << configs[i].second;
    result.failures.push_back({key.str(), errors[i]});
  }
  return result;
}

}  // namespace dimperf
