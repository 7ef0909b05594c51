#include "dimperf/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "dimperf/dataset_io.hpp"
#include "dimperf/error.hpp"

namespace dimperf {
namespace {

namespace fs = std::filesystem;

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex;
  s.width(16);
  s.fill('0');
  s << v;
  return s.str();
}

std::string join(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += cells[i];
  }
  return line;
}

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void write(const fs::path& path, std::uint64_t seed, std::uint64_t digest) const {
    std::string text = csv_metadata_line(seed, digest) + "\n" + join(header) + "\n";
    for (const auto& r : rows) text += join(r) + "\n";
    write_text_file(path, text);
  }
};

int default_jobs() {
  if (const char* env = std::getenv("DIMPERF_JOBS")) {
    try {
      const int v = std::stoi(env);
      if (v > 0) return v;
    } catch (const std::exception&) {
    }
  }
  return 1;
}

std::string model_file_name(Algorithm algorithm, MetricKind metric, ModelKind kind) {
  return "model_" + std::string(to_string(algorithm)) + "_" + std::string(to_string(metric)) + "_" +
         std::string(to_string(kind)) + ".json";
}

// ---- simulate ----

struct SimulateOptions {
  std::string grid;
  std::string out;
  int jobs = 1;
};

int cmd_simulate(const SimulateOptions& o, std::ostream& out, std::ostream& err) {
  const ExperimentGrid grid = read_grid(o.grid);
  std::size_t last_pct = 101;
  const GridResult result = run_grid(grid, o.jobs, [&](std::size_t done, std::size_t total) {
    const std::size_t pct = total ? done * 100 / total : 100;
    if (pct != last_pct || done == total) {
      err << "\rsimulate: " << done << "/" << total << " trials" << std::flush;
      last_pct = pct;
    }
  });
  if (grid.size() > 0) err << "\n";
  write_trials(fs::path(o.out), result.records);
  out << "wrote " << result.records.size() << " trials to " << o.out << "\n";
  for (const auto& f : result.failures) err << "trial failed: " << f.key << ": " << f.message << "\n";
  return result.failures.empty() ? kExitOk : kExitRuntime;
}

// ---- fit ----

struct FitOptions {
  std::string in;
  std::string out;
  std::string summary;
  std::size_t batch = 10;
};

int cmd_fit(const FitOptions& o, std::ostream& out, std::ostream&) {
  const auto trials = read_trials(fs::path(o.in));
  const AggregatedDataset dataset = aggregate(trials, o.batch);
  write_dataset(o.out, dataset);

  Csv csv;
  csv.header = {"algorithm", "metric", "kind", "mean_mse", "median_mse", "max_mse", "configs", "unconverged"};
  std::vector<Algorithm> seen;
  for (const auto& c : dataset.configs)
    if (std::find(seen.begin(), seen.end(), c.algorithm) == seen.end()) seen.push_back(c.algorithm);
  for (auto algorithm : seen) {
    for (auto metric : {MetricKind::Ospa, MetricKind::Ei}) {
      for (auto kind : {ModelKind::Exponential, ModelKind::Sigmoid}) {
        std::vector<double> mses;
        int unconverged = 0;
        for (const auto& c : dataset.configs) {
          if (c.algorithm != algorithm) continue;
          mses.push_back(c.fit(metric, kind).mse);
          if (!c.fit(metric, kind).converged) ++unconverged;
        }
        double mean = 0.0;
        for (double m : mses) mean += m / static_cast<double>(mses.size());
        csv.rows.push_back({std::string(to_string(algorithm)), std::string(to_string(metric)),
                            std::string(to_string(kind)), num(mean), num(median(mses)),
                            num(*std::max_element(mses.begin(), mses.end())), std::to_string(mses.size()),
                            std::to_string(unconverged)});
      }
    }
  }
  fs::path summary = o.summary.empty() ? fs::path(o.out).replace_extension(".summary.csv") : fs::path(o.summary);
  csv.write(summary, 0, fnv1a(read_text_file(o.in)));
  out << "aggregated " << trials.size() << " trials into " << dataset.configs.size() << " configs\n";
  out << join(csv.header) << "\n";
  for (const auto& r : csv.rows) out << join(r) << "\n";
  return kExitOk;
}

// ---- learn ----

struct LearnOptions {
  std::string in;
  std::string out;
  std::string metric = "ospa";
  std::string kind = "exp";
  std::string algo = "all";
  std::string report;
  std::uint64_t seed = 1;
  std::uint64_t split_seed = 0;
  bool split_seed_set = false;
  double train_fraction = 0.7;
  bool sweep = false;
  LearnerConfig learner;
  bool no_clamp = false;
};

int cmd_learn(const LearnOptions& o, std::ostream& out, std::ostream& err) {
  const std::string text = read_text_file(o.in);
  const AggregatedDataset dataset = dataset_from_json(text);

  std::vector<Algorithm> algorithms;
  std::vector<MetricKind> metrics;
  std::vector<ModelKind> kinds;
  if (o.sweep) {
    for (auto a : all_algorithms())
      if (!dataset.indices_for(a).empty()) algorithms.push_back(a);
    metrics = {MetricKind::Ospa, MetricKind::Ei};
    kinds = {ModelKind::Exponential, ModelKind::Sigmoid};
  } else {
    if (o.algo == "all") {
      for (auto a : all_algorithms())
        if (!dataset.indices_for(a).empty()) algorithms.push_back(a);
    } else {
      algorithms.push_back(parse_algorithm(o.algo));
    }
    metrics = {parse_metric_kind(o.metric)};
    kinds = {parse_model_kind(o.kind)};
  }
  const bool single = algorithms.size() * metrics.size() * kinds.size() == 1;
  const fs::path out_path(o.out);
  if (!single) fs::create_directories(out_path);

  LearnerConfig cfg = o.learner;
  cfg.seed = o.seed;
  cfg.clamp_to_training_range = !o.no_clamp;
  const std::uint64_t split_seed = o.split_seed_set ? o.split_seed : o.seed;

  Csv csv;
  csv.header = {"algorithm", "metric", "kind", "train_mse", "test_mse", "n_train", "n_test", "iterations",
                "converged", "gamma1", "gamma2", "gamma3", "w_n_r", "w_n_t", "w_r", "w_rho_r", "w_rho_t",
                "model"};
  for (auto algorithm : algorithms) {
    const auto indices = dataset.indices_for(algorithm);
    if (indices.empty())
      throw InvalidArgument("dataset has no configs for algorithm " + std::string(to_string(algorithm)));
    const SplitIndices parts = split(indices, o.train_fraction, split_seed);
    if (parts.train.empty()) throw InvalidArgument("training split is empty");
    for (auto metric : metrics) {
      const LearningSet train = to_learning_set(dataset, parts.train, metric);
      for (auto kind : kinds) {
        LearnedModel model = learn(train, kind, cfg);
        model.algorithm = std::string(to_string(algorithm));
        model.metric = metric;
        model.n_test = parts.test.size();
        if (!parts.test.empty()) model.test_mse = evaluate_model(model, to_learning_set(dataset, parts.test, metric));
        const fs::path path = single ? out_path : out_path / model_file_name(algorithm, metric, kind);
        write_model(path, model);
        const WStructure ws = extract_w_structure(model);
        csv.rows.push_back({model.algorithm, std::string(to_string(metric)), std::string(to_string(kind)),
                            num(model.train_mse), num(model.test_mse), std::to_string(model.n_train),
                            std::to_string(model.n_test), std::to_string(model.iterations),
                            model.converged ? "1" : "0", num(ws.gamma.gamma[0]), num(ws.gamma.gamma[1]),
                            num(ws.gamma.gamma[2]), num(ws.w.w[0]), num(ws.w.w[1]), num(ws.w.w[2]),
                            num(ws.w.w[3]), num(ws.w.w[4]), path.string()});
        err << "learn " << model.algorithm << " " << to_string(metric) << " " << to_string(kind)
            << ": train " << num(model.train_mse) << " test " << num(model.test_mse)
            << (model.converged ? "" : " (unconverged)") << "\n";
      }
    }
  }
  fs::path report = !o.report.empty() ? fs::path(o.report)
                    : single          ? fs::path(out_path).replace_extension(".report.csv")
                                      : out_path / "learn_report.csv";
  csv.write(report, o.seed, fnv1a(text));
  out << join(csv.header) << "\n";
  for (const auto& r : csv.rows) out << join(r) << "\n";
  return kExitOk;
}

// ---- predict ----

struct PredictOptions {
  std::string model;
  std::string nr = "50";
  std::string nt = "10:100:10";
  std::string r = "5";
  std::string times = "0:300:5";
  double robot_area = 10000.0;
  double target_area = 10000.0;
  std::string out;
};

int cmd_predict(const PredictOptions& o, std::ostream& out, std::ostream&) {
  const std::string text = read_text_file(o.model);
  const LearnedModel model = model_from_json(text);
  const auto nrs = parse_number_list(o.nr);
  const auto nts = parse_number_list(o.nt);
  const auto rs = parse_number_list(o.r);
  const auto times = parse_number_list(o.times);
  for (double t : times)
    if (t < 0.0) throw InvalidArgument("times must be nonnegative");

  Csv csv;
  csv.header = {"t", "n_t", "value", "n_r", "r"};
  std::size_t curves = 0;
  for (double n_r : nrs) {
    for (double r : rs) {
      for (double n_t : nts) {
        const TeamTaskParams theta = TeamTaskParams::from_areas(n_r, n_t, r, o.robot_area, o.target_area);
        theta.validate();
        const PerfTrace trace = predict_trace(theta, model, times);
        for (std::size_t i = 0; i < times.size(); ++i)
          csv.rows.push_back({num(times[i]), num(n_t), num(trace.values[i]), num(n_r), num(r)});
        ++curves;
      }
    }
  }
  csv.write(o.out, model.seed, fnv1a(o.nr + "|" + o.nt + "|" + o.r + "|" + o.times, fnv1a(text)));
  out << "wrote " << curves << " predicted curves to " << o.out << "\n";
  return kExitOk;
}

// ---- report ----

struct ReportOptions {
  std::vector<std::string> models;
  std::string out_dir;
  std::string dataset;
  double nt = 50.0;
  double r = 5.0;
};

int cmd_report(const ReportOptions& o, std::ostream& out, std::ostream&) {
  std::vector<std::string> paths;
  for (const auto& pattern : o.models)
    for (auto& p : expand_glob(pattern)) paths.push_back(std::move(p));
  std::sort(paths.begin(), paths.end());
  paths.erase(std::unique(paths.begin(), paths.end()), paths.end());
  if (paths.empty()) throw InvalidArgument("no model files match");

  std::uint64_t digest = fnv1a("report");
  std::vector<LearnedModel> models;
  for (const auto& p : paths) {
    const std::string text = read_text_file(p);
    digest = fnv1a(text, digest);
    models.push_back(model_from_json(text));
  }

  Csv w, g, ss;
  w.header = {"model", "algorithm", "metric", "kind", "w_n_r", "w_n_t", "w_r", "w_rho_r", "w_rho_t"};
  g.header = {"model", "algorithm", "metric", "kind", "gamma1", "gamma2", "gamma3"};
  ss.header = {"model", "algorithm", "metric", "kind", "n_r", "n_t", "r", "predicted_final"};
  for (std::size_t i = 0; i < models.size(); ++i) {
    const auto& m = models[i];
    const WStructure ws = extract_w_structure(m);
    const std::string name = fs::path(paths[i]).stem().string();
    const std::vector<std::string> id = {name, m.algorithm, std::string(to_string(m.metric)),
                                         std::string(to_string(m.kind))};
    auto row = id;
    for (double v : ws.w.w) row.push_back(num(v));
    w.rows.push_back(row);
    row = id;
    for (double v : ws.gamma.gamma) row.push_back(num(v));
    g.rows.push_back(row);
    for (int n_r = 10; n_r <= 100; n_r += 10) {
      const auto theta = TeamTaskParams::from_areas(n_r, o.nt, o.r, 10000.0, 10000.0);
      const PerfTrace tr = predict_trace(theta, m, {m.time_scale});
      row = id;
      for (const auto& c : {num(n_r), num(o.nt), num(o.r), num(tr.values[0])}) row.push_back(c);
      ss.rows.push_back(row);
    }
  }
  const fs::path dir(o.out_dir);
  fs::create_directories(dir);
  w.write(dir / "w_exponents.csv", 0, digest);
  g.write(dir / "gamma_exponents.csv", 0, digest);
  ss.write(dir / "predicted_steady_state_vs_nr.csv", 0, digest);

  if (!o.dataset.empty()) {
    const std::string text = read_text_file(o.dataset);
    const AggregatedDataset d = dataset_from_json(text);
    Csv obs;
    obs.header = {"algorithm", "n_t", "r", "n_r", "steady_state_ospa", "steady_state_ei", "trials"};
    std::vector<const AggregatedConfig*> order;
    for (const auto& c : d.configs) order.push_back(&c);
    std::stable_sort(order.begin(), order.end(), [](const auto* a, const auto* b) {
      return std::tie(a->algorithm, a->theta.n_t, a->theta.r, a->theta.n_r) <
             std::tie(b->algorithm, b->theta.n_t, b->theta.r, b->theta.n_r);
    });
    for (const auto* c : order) {
      auto settle = [&](MetricKind metric) {
        const PerfTrace tr = c->trace(metric);
        return tr.times.back() - tr.times.front() > kSteadyStateWindow ? steady_state(tr) : tr.values.back();
      };
      obs.rows.push_back({std::string(to_string(c->algorithm)), num(c->theta.n_t), num(c->theta.r),
                          num(c->theta.n_r), num(settle(MetricKind::Ospa)), num(settle(MetricKind::Ei)),
                          std::to_string(c->trial_count)});
    }
    obs.write(dir / "steady_state_vs_nr.csv", 0, fnv1a(text));
  }
  out << "report for " << models.size() << " models written to " << o.out_dir << "\n";
  return kExitOk;
}

bool wildcard_match(std::string_view pattern, std::string_view name) {
  std::size_t p = 0, n = 0, star = std::string_view::npos, mark = 0;
  while (n < name.size()) {
    if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == name[n])) {
      ++p;
      ++n;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = n;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      n = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

}  // namespace

std::uint64_t fnv1a(std::string_view data, std::uint64_t h) {
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string csv_metadata_line(std::uint64_t seed, std::uint64_t digest) {
  return "# dimperf " + std::string(kVersion) + " seed=" + std::to_string(seed) + " digest=" + hex64(digest);
}

std::vector<double> parse_number_list(std::string_view text) {
  auto parse_one = [&](std::string_view s) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
      throw InvalidArgument("cannot parse number '" + std::string(s) + "'");
    return v;
  };
  std::vector<double> out;
  if (text.find(':') != std::string_view::npos) {
    std::vector<double> parts;
    std::size_t start = 0;
    while (true) {
      const auto colon = text.find(':', start);
      parts.push_back(parse_one(text.substr(start, colon - start)));
      if (colon == std::string_view::npos) break;
      start = colon + 1;
    }
    if (parts.size() != 3) throw InvalidArgument("range must read start:stop:step");
    const double a = parts[0], b = parts[1], step = parts[2];
    if (!(step > 0.0) || b < a) throw InvalidArgument("range needs step > 0 and stop >= start");
    const auto n = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9));
    for (std::size_t i = 0; i <= n; ++i) out.push_back(a + static_cast<double>(i) * step);
    return out;
  }
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    out.push_back(parse_one(text.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<std::string> expand_glob(const std::string& pattern) {
  const fs::path p(pattern);
  const std::string leaf = p.filename().string();
  if (leaf.find_first_of("*?") == std::string::npos) return {pattern};
  const fs::path dir = p.has_parent_path() ? p.parent_path() : fs::path(".");
  std::vector<std::string> out;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (entry.is_regular_file() && wildcard_match(leaf, entry.path().filename().string()))
      out.push_back(entry.path().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dimensionless-variable performance prediction for multi-robot target tracking", "dimperf"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  SimulateOptions sim;
  sim.jobs = default_jobs();
  auto* s = app.add_subcommand("simulate", "Run an experiment grid and write a trial file");
  s->add_option("--grid", sim.grid, "Grid config (JSON)")->required();
  s->add_option("--out", sim.out, "Trial file to write (JSON lines)")->required();
  s->add_option("--jobs", sim.jobs, "Worker threads (default: $DIMPERF_JOBS or 1)")->check(CLI::PositiveNumber);

  FitOptions fit;
  auto* f = app.add_subcommand("fit", "Aggregate trials and fit both models per configuration");
  f->add_option("--in", fit.in, "Trial file")->required();
  f->add_option("--out", fit.out, "Aggregated dataset to write")->required();
  f->add_option("--summary", fit.summary, "Fit MSE summary CSV (default: <out>.summary.csv)");
  f->add_option("--batch", fit.batch, "Downsampling batch size")->check(CLI::PositiveNumber);

  LearnOptions learn_opts;
  auto* l = app.add_subcommand("learn", "Learn Pi and its polynomial links");
  l->add_option("--in", learn_opts.in, "Aggregated dataset")->required();
  l->add_option("--out", learn_opts.out, "Model file, or directory when several models are learned")->required();
  l->add_option("--metric", learn_opts.metric, "ospa or ei");
  l->add_option("--kind", learn_opts.kind, "exp or sig");
  l->add_option("--algo", learn_opts.algo, "Algorithm name or 'all'");
  l->add_option("--seed", learn_opts.seed, "Learner seed");
  l->add_option("--split-seed", learn_opts.split_seed, "Train/test split seed (default: --seed)")
      ->each([&](const std::string&) { learn_opts.split_seed_set = true; });
  l->add_option("--train-fraction", learn_opts.train_fraction)->check(CLI::Range(0.0, 1.0));
  l->add_flag("--sweep", learn_opts.sweep, "Learn every (algorithm, metric, kind) combination");
  l->add_option("--report", learn_opts.report, "Report CSV path");
  l->add_option("--max-iter", learn_opts.learner.max_iterations)->check(CLI::NonNegativeNumber);
  l->add_option("--threshold", learn_opts.learner.threshold)->check(CLI::PositiveNumber);
  l->add_option("--restarts", learn_opts.learner.pretrain_restarts)->check(CLI::PositiveNumber);
  l->add_option("--gamma-rate", learn_opts.learner.gamma_rate)->check(CLI::PositiveNumber);
  l->add_option("--beta-rate", learn_opts.learner.beta_rate)->check(CLI::PositiveNumber);
  l->add_flag("--no-clamp", learn_opts.no_clamp, "Do not clamp the normalized Pi to the training range");

  PredictOptions pred;
  auto* p = app.add_subcommand("predict", "Predict traces over a theta sweep");
  p->add_option("--model", pred.model, "Learned model")->required();
  p->add_option("--nr", pred.nr, "Robot counts: list or start:stop:step");
  p->add_option("--nt", pred.nt, "Target counts: list or start:stop:step");
  p->add_option("--r", pred.r, "Sensing radii [m]: list or start:stop:step");
  p->add_option("--times", pred.times, "Times [s]: list or start:stop:step");
  p->add_option("--robot-area", pred.robot_area, "Area for rho_r [m^2]");
  p->add_option("--target-area", pred.target_area, "Area for rho_t [m^2]");
  p->add_option("--out", pred.out, "CSV to write")->required();

  ReportOptions rep;
  auto* r = app.add_subcommand("report", "Exponent structure and steady-state tables");
  r->add_option("--models", rep.models, "Model files or glob patterns")->required();
  r->add_option("--out-dir", rep.out_dir, "Output directory")->required();
  r->add_option("--dataset", rep.dataset, "Aggregated dataset for the observed steady-state table");
  r->add_option("--nt", rep.nt, "n_t of the predicted steady-state sweep");
  r->add_option("--r", rep.r, "r of the predicted steady-state sweep");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*s) return cmd_simulate(sim, out, err);
    if (*f) return cmd_fit(fit, out, err);
    if (*l) return cmd_learn(learn_opts, out, err);
    if (*p) return cmd_predict(pred, out, err);
    if (*r) return cmd_report(rep, out, err);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace dimperf
