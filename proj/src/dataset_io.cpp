#include "dimperf/dataset_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "dimperf/error.hpp"

namespace dimperf {
namespace {

using json = nlohmann::ordered_json;

const char* const kTrialKeys[] = {"schema_version", "algorithm", "n_r", "n_t", "r", "rho_r",
                                  "rho_t", "seed", "trial_id", "samples"};

bool is_known_trial_key(const std::string& key) {
  return std::find(std::begin(kTrialKeys), std::end(kTrialKeys), key) != std::end(kTrialKeys);
}

template <class T>
T get_field(const json& j, const char* key) {
  if (!j.contains(key)) throw RuntimeError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw RuntimeError(std::string("field '") + key + "' has the wrong type");
  }
}

void check_version(const json& j, int expected, const char* what) {
  if (!j.contains("schema_version")) throw RuntimeError(std::string(what) + ": missing schema_version");
  const auto& v = j.at("schema_version");
  if (!v.is_number_integer() || v.get<int>() != expected) {
    throw RuntimeError(std::string(what) + ": unsupported schema_version " + v.dump() + " (expected " +
                       std::to_string(expected) + ")");
  }
}

json fit_to_json(const FitResult& f) {
  return {{"params", f.params.values},
          {"mse", f.mse},
          {"initial_mse", f.initial_mse},
          {"iterations", f.iterations},
          {"converged", f.converged}};
}

FitResult fit_from_json(const json& j, ModelKind kind) {
  FitResult f;
  f.params.kind = kind;
  f.params.values = get_field<std::array<double, 3>>(j, "params");
  f.mse = get_field<double>(j, "mse");
  f.initial_mse = j.value("initial_mse", f.mse);
  f.iterations = j.value("iterations", 0);
  f.converged = j.value("converged", true);
  return f;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeError("cannot open '" + path.string() + "' for writing");
  return out;
}

json parse_document(std::string_view text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw RuntimeError(std::string(what) + ": malformed JSON: " + e.what());
  }
}

}  // namespace

// ---- trials ----

std::string trial_to_json_line(const TrialRecord& record) {
  if (record.ospa.times != record.ei.times)
    throw InvalidArgument("OSPA and EI traces of a trial must share one time grid");
  json j;
  j["schema_version"] = kTrialSchemaVersion;
  j["algorithm"] = std::string(to_string(record.algorithm));
  j["n_r"] = record.theta.n_r;
  j["n_t"] = record.theta.n_t;
  j["r"] = record.theta.r;
  j["rho_r"] = record.theta.rho_r;
  j["rho_t"] = record.theta.rho_t;
  j["seed"] = record.seed;
  j["trial_id"] = record.trial_id;
  json samples = json::array();
  for (std::size_t i = 0; i < record.ospa.size(); ++i)
    samples.push_back(json::array({record.ospa.times[i], record.ospa.values[i], record.ei.values[i]}));
  j["samples"] = std::move(samples);
  for (const auto& [key, raw] : record.extra_fields) {
    if (is_known_trial_key(key)) continue;
    j[key] = json::parse(raw);
  }
  return j.dump();
}

TrialRecord trial_from_json_line(std::string_view line, std::size_t line_number) {
  const std::string where = "line " + std::to_string(line_number);
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw RuntimeError(where + ": malformed record (" + e.what() + ")");
  }
  try {
    if (!j.is_object()) throw RuntimeError("record is not an object");
    check_version(j, kTrialSchemaVersion, "trial record");
    TrialRecord r;
    r.algorithm = parse_algorithm(get_field<std::string>(j, "algorithm"));
    r.theta.n_r = get_field<double>(j, "n_r");
    r.theta.n_t = get_field<double>(j, "n_t");
    r.theta.r = get_field<double>(j, "r");
    r.theta.rho_r = get_field<double>(j, "rho_r");
    r.theta.rho_t = get_field<double>(j, "rho_t");
    r.seed = get_field<std::uint64_t>(j, "seed");
    r.trial_id = get_field<int>(j, "trial_id");
    const auto samples = get_field<std::vector<std::array<double, 3>>>(j, "samples");
    for (const auto& s : samples) {
      r.ospa.times.push_back(s[0]);
      r.ospa.values.push_back(s[1]);
      r.ei.values.push_back(s[2]);
    }
    r.ei.times = r.ospa.times;
    r.ospa.validate();
    for (auto it = j.begin(); it != j.end(); ++it)
      if (!is_known_trial_key(it.key())) r.extra_fields[it.key()] = it.value().dump();
    return r;
  } catch (const std::exception& e) {
    throw RuntimeError(where + ": " + e.what());
  }
}

void write_trials(std::ostream& out, std::span<const TrialRecord> records) {
  for (const auto& r : records) out << trial_to_json_line(r) << '\n';
  if (!out) throw RuntimeError("write failed");
}

void write_trials(const std::filesystem::path& path, std::span<const TrialRecord> records) {
  auto out = open_out(path);
  write_trials(out, records);
  out.flush();
  if (!out) throw RuntimeError("write to '" + path.string() + "' failed");
}

std::vector<TrialRecord> read_trials(std::istream& in) {
  std::vector<TrialRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(trial_from_json_line(line, n));
  }
  return out;
}

std::vector<TrialRecord> read_trials(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return read_trials(in);
  } catch (const RuntimeError& e) {
    throw RuntimeError(path.string() + ": " + e.what());
  }
}

// ---- aggregation ----

std::vector<std::size_t> AggregatedDataset::indices_for(Algorithm algorithm) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < configs.size(); ++i)
    if (configs[i].algorithm == algorithm) out.push_back(i);
  return out;
}

AggregatedDataset aggregate(std::span<const TrialRecord> trials, std::size_t batch) {
  if (batch < 1) throw InvalidArgument("batch must be at least 1");
  using Key = std::tuple<int, double, double, double, double, double>;
  std::map<Key, std::vector<const TrialRecord*>> groups;
  for (const auto& t : trials) {
    const auto& th = t.theta;
    groups[{static_cast<int>(t.algorithm), th.n_r, th.n_t, th.r, th.rho_r, th.rho_t}].push_back(&t);
  }

  AggregatedDataset out;
  out.downsample_batch = batch;
  for (const auto& [key, members] : groups) {
    AggregatedConfig c;
    c.algorithm = members.front()->algorithm;
    c.theta = members.front()->theta;
    c.trial_count = static_cast<int>(members.size());
    std::vector<PerfTrace> ospa, ei;
    for (const auto* m : members) {
      ospa.push_back(m->ospa);
      ei.push_back(m->ei);
    }
    PerfTrace med_ospa, med_ei;
    try {
      med_ospa = downsample_median(median_across_trials(ospa), batch);
      med_ei = downsample_median(median_across_trials(ei), batch);
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << to_string(c.algorithm) << " n_r=" << c.theta.n_r << " n_t=" << c.theta.n_t
          << " r=" << c.theta.r << ": " << e.what();
      throw InvalidArgument(msg.str());
    }
    for (auto& v : med_ei.values) v /= 100.0;
    c.times = med_ospa.times;
    c.ospa = med_ospa.values;
    c.ei = med_ei.values;
    for (auto metric : {MetricKind::Ospa, MetricKind::Ei}) {
      const PerfTrace tr = c.trace(metric);
      for (auto kind : {ModelKind::Exponential, ModelKind::Sigmoid})
        c.fits[static_cast<std::size_t>(metric)][static_cast<std::size_t>(kind)] = fit_single(tr, kind);
    }
    out.configs.push_back(std::move(c));
  }
  return out;
}

LearningSet to_learning_set(const AggregatedDataset& dataset, std::span<const std::size_t> indices,
                            MetricKind metric) {
  LearningSet set;
  for (std::size_t idx : indices) {
    const auto& c = dataset.configs.at(idx);
    if (set.samples.empty()) {
      set.times = c.times;
    } else if (c.times != set.times) {
      throw InvalidArgument("configs do not share one time grid");
    }
    LearningSample s;
    s.theta = c.theta;
    s.values = c.values(metric);
    for (auto kind : {ModelKind::Exponential, ModelKind::Sigmoid})
      s.fitted[static_cast<std::size_t>(kind)] = c.fit(metric, kind).params;
    set.samples.push_back(std::move(s));
  }
  return set;
}

SplitIndices split(std::size_t n, double train_fraction, std::uint64_t seed) {
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  return split(all, train_fraction, seed);
}

SplitIndices split(std::span<const std::size_t> indices, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction >= 0.0 && train_fraction <= 1.0))
    throw InvalidArgument("train fraction must lie in [0, 1]");
  std::vector<std::size_t> order(indices.begin(), indices.end());
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(order.size())));
  SplitIndices s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  return s;
}

std::string dataset_to_json(const AggregatedDataset& dataset) {
  json j;
  j["schema_version"] = kDatasetSchemaVersion;
  j["ei_units"] = "fraction";
  j["downsample_batch"] = dataset.downsample_batch;
  json configs = json::array();
  for (const auto& c : dataset.configs) {
    json cj;
    cj["algorithm"] = std::string(to_string(c.algorithm));
    cj["n_r"] = c.theta.n_r;
    cj["n_t"] = c.theta.n_t;
    cj["r"] = c.theta.r;
    cj["rho_r"] = c.theta.rho_r;
    cj["rho_t"] = c.theta.rho_t;
    cj["trial_count"] = c.trial_count;
    cj["times"] = c.times;
    cj["ospa"] = c.ospa;
    cj["ei"] = c.ei;
    json fits;
    for (auto metric : {MetricKind::Ospa, MetricKind::Ei})
      for (auto kind : {ModelKind::Exponential, ModelKind::Sigmoid})
        fits[std::string(to_string(metric))][std::string(to_string(kind))] = fit_to_json(c.fit(metric, kind));
    cj["fits"] = std::move(fits);
    configs.push_back(std::move(cj));
  }
  j["configs"] = std::move(configs);
  return j.dump(1);
}

AggregatedDataset dataset_from_json(std::string_view text) {
  const json j = parse_document(text, "dataset");
  check_version(j, kDatasetSchemaVersion, "dataset");
  if (j.value("ei_units", std::string("fraction")) != "fraction")
    throw RuntimeError("dataset: unsupported ei_units");
  AggregatedDataset d;
  d.downsample_batch = j.value("downsample_batch", std::size_t{10});
  std::size_t n = 0;
  for (const auto& cj : get_field<json>(j, "configs")) {
    try {
      AggregatedConfig c;
      c.algorithm = parse_algorithm(get_field<std::string>(cj, "algorithm"));
      c.theta = {get_field<double>(cj, "n_r"), get_field<double>(cj, "n_t"), get_field<double>(cj, "r"),
                 get_field<double>(cj, "rho_r"), get_field<double>(cj, "rho_t")};
      c.trial_count = get_field<int>(cj, "trial_count");
      c.times = get_field<std::vector<double>>(cj, "times");
      c.ospa = get_field<std::vector<double>>(cj, "ospa");
      c.ei = get_field<std::vector<double>>(cj, "ei");
      if (c.ospa.size() != c.times.size() || c.ei.size() != c.times.size())
        throw RuntimeError("trace lengths differ from the time grid");
      const auto& fits = get_field<json>(cj, "fits");
      for (auto metric : {MetricKind::Ospa, MetricKind::Ei})
        for (auto kind : {ModelKind::Exponential, ModelKind::Sigmoid})
          c.fits[static_cast<std::size_t>(metric)][static_cast<std::size_t>(kind)] = fit_from_json(
              fits.at(std::string(to_string(metric))).at(std::string(to_string(kind))), kind);
      d.configs.push_back(std::move(c));
    } catch (const std::exception& e) {
      throw RuntimeError("dataset config " + std::to_string(n) + ": " + e.what());
    }
    ++n;
  }
  return d;
}

void write_dataset(const std::filesystem::path& path, const AggregatedDataset& dataset) {
  write_text_file(path, dataset_to_json(dataset) + "\n");
}

AggregatedDataset read_dataset(const std::filesystem::path& path) {
  try {
    return dataset_from_json(read_text_file(path));
  } catch (const RuntimeError& e) {
    throw RuntimeError(path.string() + ": " + e.what());
  }
}

// ---- models ----

std::string model_to_json(const LearnedModel& m) {
  const WStructure ws = extract_w_structure(m);
  json j;
  j["schema_version"] = kModelSchemaVersion;
  j["algorithm"] = m.algorithm;
  j["metric"] = std::string(to_string(m.metric));
  j["kind"] = std::string(to_string(m.kind));
  j["gamma"] = m.gamma.gamma;
  j["gamma_raw"] = m.gamma_raw.gamma;
  j["w"] = ws.w.w;
  j["w_raw"] = ws.w_raw.w;
  json links;
  const auto names = parameter_names(m.kind);
  for (std::size_t k = 0; k < 3; ++k) links[std::string(names[k])] = m.links.beta[k];
  j["links"] = std::move(links);
  j["normalization"] = {{"mean", m.norm.mean}, {"std", m.norm.std}, {"z_min", m.norm.z_min},
                        {"z_max", m.norm.z_max}};
  j["time_scale"] = m.time_scale;
  j["clamp"] = m.clamp;
  j["train_mse"] = m.train_mse;
  j["test_mse"] = std::isfinite(m.test_mse) ? json(m.test_mse) : json(nullptr);
  j["n_train"] = m.n_train;
  j["n_test"] = m.n_test;
  j["iterations"] = m.iterations;
  j["converged"] = m.converged;
  j["seed"] = m.seed;
  return j.dump(1);
}

LearnedModel model_from_json(std::string_view text) {
  const json j = parse_document(text, "model");
  check_version(j, kModelSchemaVersion, "model");
  try {
    LearnedModel m;
    m.algorithm = j.value("algorithm", std::string{});
    m.metric = parse_metric_kind(get_field<std::string>(j, "metric"));
    m.kind = parse_model_kind(get_field<std::string>(j, "kind"));
    m.gamma.gamma = get_field<std::array<double, 3>>(j, "gamma");
    m.gamma_raw.gamma = j.contains("gamma_raw") ? get_field<std::array<double, 3>>(j, "gamma_raw")
                                                : m.gamma.gamma;
    const auto& links = get_field<json>(j, "links");
    const auto names = parameter_names(m.kind);
    for (std::size_t k = 0; k < 3; ++k)
      m.links.beta[k] = get_field<PolyCoeffs>(links, std::string(names[k]).c_str());
    const auto& norm = get_field<json>(j, "normalization");
    m.norm.mean = get_field<double>(norm, "mean");
    m.norm.std = get_field<double>(norm, "std");
    m.norm.z_min = get_field<double>(norm, "z_min");
    m.norm.z_max = get_field<double>(norm, "z_max");
    if (!(m.norm.std > 0.0)) throw RuntimeError("normalization std must be positive");
    m.time_scale = get_field<double>(j, "time_scale");
    m.clamp = j.value("clamp", true);
    m.train_mse = get_field<double>(j, "train_mse");
    m.test_mse = j.contains("test_mse") && j["test_mse"].is_number() ? j["test_mse"].get<double>()
                                                                       : std::numeric_limits<double>::quiet_NaN();
    m.n_train = j.value("n_train", std::size_t{0});
    m.n_test = j.value("n_test", std::size_t{0});
    m.iterations = j.value("iterations", 0);
    m.converged = j.value("converged", false);
    m.seed = j.value("seed", std::uint64_t{0});
    return m;
  } catch (const std::exception& e) {
    throw RuntimeError(std::string("model: ") + e.what());
  }
}

void write_model(const std::filesystem::path& path, const LearnedModel& model) {
  write_text_file(path, model_to_json(model) + "\n");
}

LearnedModel read_model(const std::filesystem::path& path) {
  try {
    return model_from_json(read_text_file(path));
  } catch (const RuntimeError& e) {
    throw RuntimeError(path.string() + ": " + e.what());
  }
}

// ---- grid config ----

ExperimentGrid grid_from_json(std::string_view text) {
  json j;
  try {
    j = parse_document(text, "grid config");
  } catch (const RuntimeError& e) {
    throw InvalidArgument(e.what());
  }
  try {
    if (!j.is_object()) throw InvalidArgument("expected a JSON object");
    for (const auto& [key, v] : j.items()) {
      static constexpr std::string_view kKeys[] = {"n_r", "n_t", "r", "algorithms", "trials", "seed_base", "sim"};
      if (std::find(std::begin(kKeys), std::end(kKeys), key) == std::end(kKeys))
        throw InvalidArgument("unknown field '" + key + "'");
    }
    ExperimentGrid g;
    g.n_r = get_field<std::vector<int>>(j, "n_r");
    g.n_t = get_field<std::vector<int>>(j, "n_t");
    g.r = get_field<std::vector<double>>(j, "r");
    for (const auto& name : get_field<std::vector<std::string>>(j, "algorithms"))
      g.algorithms.push_back(parse_algorithm(name));
    g.trials = j.value("trials", 1);
    g.seed_base = j.value("seed_base", std::uint64_t{1});
    if (g.n_r.empty() || g.n_t.empty() || g.r.empty() || g.algorithms.empty())
      throw InvalidArgument("n_r, n_t, r and algorithms must be nonempty");
    if (g.trials < 1) throw InvalidArgument("trials must be at least 1");

    if (j.contains("sim")) {
      auto& s = g.base;
      for (const auto& [key, v] : j.at("sim").items()) {
        if (key == "arena_width") s.arena_width = v.get<double>();
        else if (key == "arena_height") s.arena_height = v.get<double>();
        else if (key == "robot_area") s.robot_area = v.get<double>();
        else if (key == "target_area") s.target_area = v.get<double>();
        else if (key == "duration") s.duration = v.get<double>();
        else if (key == "sense_rate") s.sense_rate = v.get<double>();
        else if (key == "v_max") s.v_max = v.get<double>();
        else if (key == "p_fn") s.p_fn = v.get<double>();
        else if (key == "meas_noise_cov") s.meas_noise_cov = v.get<std::array<double, 4>>();
        else if (key == "grid_cell") s.grid_cell = v.get<double>();
        else if (key == "prior_mass") s.prior_mass = v.get<double>();
        else if (key == "start_box") s.start_box = v.get<std::array<double, 4>>();
        else if (key == "search") {
          auto& p = s.search;
          for (const auto& [sk, sv] : v.items()) {
            if (sk == "sa_initial_temperature") p.sa_initial_temperature = sv.get<double>();
            else if (sk == "sa_cooling") p.sa_cooling = sv.get<double>();
            else if (sk == "sa_step") p.sa_step = sv.get<double>();
            else if (sk == "pso_inertia") p.pso_inertia = sv.get<double>();
            else if (sk == "pso_cognitive") p.pso_cognitive = sv.get<double>();
            else if (sk == "pso_social") p.pso_social = sv.get<double>();
            else if (sk == "pso_ring_neighbors") p.pso_ring_neighbors = sv.get<int>();
            else if (sk == "pso_exclusion_radius") p.pso_exclusion_radius = sv.get<double>();
            else if (sk == "pso_probe_radius") p.pso_probe_radius = sv.get<double>();
            else if (sk == "pso_max_speed") p.pso_max_speed = sv.get<double>();
            else if (sk == "aco_evaporation") p.aco_evaporation = sv.get<double>();
            else if (sk == "aco_deposit") p.aco_deposit = sv.get<double>();
            else if (sk == "aco_candidates") p.aco_candidates = sv.get<int>();
            else if (sk == "aco_radius") p.aco_radius = sv.get<double>();
            else if (sk == "aco_patience") p.aco_patience = sv.get<int>();
            else if (sk == "ais_clones") p.ais_clones = sv.get<int>();
            else if (sk == "ais_mutation_radius") p.ais_mutation_radius = sv.get<double>();
            else if (sk == "ais_affinity_scale") p.ais_affinity_scale = sv.get<double>();
            else throw InvalidArgument("unknown search parameter '" + sk + "'");
          }
        } else {
          throw InvalidArgument("unknown sim field '" + key + "'");
        }
      }
    }
    return g;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("grid config: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(std::string("grid config: ") + e.what());
  } catch (const RuntimeError& e) {
    throw InvalidArgument(std::string("grid config: ") + e.what());
  }
}

ExperimentGrid read_grid(const std::filesystem::path& path) { return grid_from_json(read_text_file(path)); }

std::string read_text_file(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  auto out = open_out(path);
  out << text;
  out.flush();
  if (!out) throw RuntimeError("write to '" + path.string() + "' failed");
}

}  // namespace dimperf
