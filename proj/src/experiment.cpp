#include "hlr/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <mutex>
#include <set>
#include <thread>

#include "hlr/baselines.hpp"
#include "hlr/data.hpp"
#include "hlr/errors.hpp"
#include "hlr/loss.hpp"
#include "hlr/model_io.hpp"

namespace hlr {

namespace {

using nlohmann::json;

// Stream offsets on (seed + rep); see the header comment.
constexpr std::uint64_t kCorruptOffset = 0x100000000ull;
constexpr std::uint64_t kTestOffset = 0x200000000ull;
constexpr std::uint64_t kMaskOffset = 0x300000000ull;

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw ConfigError(where + ": unknown key '" + it.key() + "'");
    }
  }
}

double get_num(const json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + ": expected a number");
  return j.get<double>();
}

int get_int(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ConfigError(where + ": expected an integer");
  return j.get<int>();
}

std::string get_str(const json& j, const std::string& where) {
  if (!j.is_string()) throw ConfigError(where + ": expected a string");
  return j.get<std::string>();
}

struct TaskDefaults {
  double lambda;
  double gamma;
  double delta_xi;
  int refinements;
};

// Per-task trainer defaults. The noisy-label tasks sweep the threshold far
// enough to shed corrupted labels; the binary sweep is kept shallow because
// margin points and flips share the same residual range there, and a deep
// sweep starts consuming clean margins.
TaskDefaults defaults_for(const std::string& task) {
  if (task == "synth-linear") return {1e-2, 1e-3, 0.1, 1};
  if (task == "noisy-curve") return {1e-3, 0.0, 0.05, 40};
  if (task == "noisy-binary") return {1e-2, 0.0, 0.1, 5};
  if (task == "folds-bench") return {1e-3, 1e-4, 0.01, 3};
  return {1e-3, 0.0, 0.1, 0};  // fit, predict
}

void apply_preset(const std::string& name, HlrConfig& hlr) {
  if (name == "bench-synth") {
    hlr.lambda = 1e-2;
    hlr.gamma = 1e-3;
    hlr.delta_xi = 0.1;
    hlr.refinements = 1;
  } else if (name == "bench-uci") {
    hlr.lambda = 1e-3;
    hlr.gamma = 1e-4;
    hlr.delta_xi = 0.01;
    hlr.refinements = 3;
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  check_keys(j,
             {"task", "preset", "hlr", "kernels", "manifold", "data",
              "generator", "noise", "folds", "seed", "reps", "threads", "out",
              "model", "predictions"},
             "config");
  ExperimentConfig cfg;
  if (!j.contains("task")) throw ConfigError("config: 'task' is required");
  cfg.task = get_str(j["task"], "config.task");
  static const std::set<std::string> kTasks = {
      "fit",         "predict",      "synth-linear",
      "noisy-curve", "noisy-binary", "folds-bench"};
  if (!kTasks.count(cfg.task)) {
    throw ConfigError("config.task: unknown task '" + cfg.task + "'");
  }

  const TaskDefaults td = defaults_for(cfg.task);
  cfg.hlr.lambda = td.lambda;
  cfg.hlr.gamma = td.gamma;
  cfg.hlr.delta_xi = td.delta_xi;
  cfg.hlr.refinements = td.refinements;
  if (j.contains("preset")) {
    apply_preset(get_str(j["preset"], "config.preset"), cfg.hlr);
  }
  if (j.contains("hlr")) {
    const json& h = j["hlr"];
    check_keys(h, {"lambda", "gamma", "delta_xi", "refinements", "view_weights"},
               "config.hlr");
    if (h.contains("lambda")) cfg.hlr.lambda = get_num(h["lambda"], "config.hlr.lambda");
    if (h.contains("gamma")) cfg.hlr.gamma = get_num(h["gamma"], "config.hlr.gamma");
    if (h.contains("delta_xi")) {
      cfg.hlr.delta_xi = get_num(h["delta_xi"], "config.hlr.delta_xi");
    }
    if (h.contains("refinements")) {
      cfg.hlr.refinements = get_int(h["refinements"], "config.hlr.refinements");
    }
    if (h.contains("view_weights")) {
      const json& vw = h["view_weights"];
      if (!vw.is_array() || vw.empty()) {
        throw ConfigError("config.hlr.view_weights: expected a nonempty array");
      }
      cfg.hlr.view_weights.resize(static_cast<Eigen::Index>(vw.size()));
      for (std::size_t a = 0; a < vw.size(); ++a) {
        cfg.hlr.view_weights[static_cast<Eigen::Index>(a)] =
            get_num(vw[a], "config.hlr.view_weights");
      }
    }
  }
  try {
    cfg.hlr.validate(cfg.hlr.view_weights.size() != 0
                         ? static_cast<int>(cfg.hlr.view_weights.size())
                         : 1);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config.hlr: ") + e.what());
  }

  if (j.contains("kernels")) {
    const json& ks = j["kernels"];
    if (!ks.is_array() || ks.empty()) {
      throw ConfigError("config.kernels: expected a nonempty array");
    }
    for (const auto& k : ks) {
      try {
        cfg.kernels.push_back(kernel_from_json(k));
      } catch (const std::exception& e) {
        throw ConfigError(std::string("config.kernels: ") + e.what());
      }
    }
  }

  if (j.contains("manifold")) {
    try {
      cfg.manifold = manifold_spec_from_json(j["manifold"]);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("config.manifold: ") + e.what());
    }
  } else if (cfg.hlr.gamma > 0.0) {
    cfg.manifold = ManifoldSpec::knn(6, 0.0, true);
  }
  if (cfg.hlr.gamma > 0.0 && cfg.manifold.kind == ManifoldSpec::Kind::None) {
    throw ConfigError("config: gamma > 0 requires a manifold");
  }

  if (j.contains("data")) {
    const json& d = j["data"];
    check_keys(d, {"path", "test_path", "view_dims", "with_labels"},
               "config.data");
    if (!d.contains("path")) {
      throw ConfigError("config.data: 'path' is required");
    }
    cfg.data_path = get_str(d["path"], "config.data.path");
    if (d.contains("test_path")) {
      cfg.test_path = get_str(d["test_path"], "config.data.test_path");
    }
    if (!d.contains("view_dims") || !d["view_dims"].is_array() ||
        d["view_dims"].empty()) {
      throw ConfigError("config.data: nonempty 'view_dims' array is required");
    }
    for (const auto& v : d["view_dims"]) {
      const int dim = get_int(v, "config.data.view_dims");
      if (dim <= 0) throw ConfigError("config.data.view_dims: dims must be > 0");
      cfg.view_dims.push_back(dim);
    }
    if (d.contains("with_labels")) {
      if (!d["with_labels"].is_boolean()) {
        throw ConfigError("config.data.with_labels: expected a boolean");
      }
      cfg.with_labels = d["with_labels"].get<bool>();
    }
  }

  if (j.contains("generator")) {
    const json& g = j["generator"];
    check_keys(g,
               {"n", "dim", "beta", "noise_std", "label_fraction", "test_size"},
               "config.generator");
    if (g.contains("n")) {
      cfg.n_values.clear();
      if (g["n"].is_array()) {
        for (const auto& v : g["n"]) {
          cfg.n_values.push_back(get_int(v, "config.generator.n"));
        }
      } else {
        cfg.n_values.push_back(get_int(g["n"], "config.generator.n"));
      }
      if (cfg.n_values.empty()) {
        throw ConfigError("config.generator.n: expected at least one size");
      }
      for (int n : cfg.n_values) {
        if (n < 2) throw ConfigError("config.generator.n: sizes must be >= 2");
      }
    }
    if (g.contains("dim")) {
      cfg.dim = get_int(g["dim"], "config.generator.dim");
      if (cfg.dim < 1) throw ConfigError("config.generator.dim: must be >= 1");
    }
    if (g.contains("beta")) {
      const json& b = g["beta"];
      if (!b.is_array() || static_cast<int>(b.size()) != cfg.dim) {
        throw ConfigError("config.generator.beta: expected an array of length dim");
      }
      cfg.beta.resize(cfg.dim);
      for (int i = 0; i < cfg.dim; ++i) {
        cfg.beta[i] = get_num(b[static_cast<std::size_t>(i)],
                              "config.generator.beta");
      }
    }
    if (g.contains("noise_std")) {
      cfg.noise_std = get_num(g["noise_std"], "config.generator.noise_std");
      if (cfg.noise_std < 0.0) {
        throw ConfigError("config.generator.noise_std: must be >= 0");
      }
    }
    if (g.contains("label_fraction")) {
      cfg.label_fraction =
          get_num(g["label_fraction"], "config.generator.label_fraction");
      if (!(cfg.label_fraction > 0.0 && cfg.label_fraction <= 1.0)) {
        throw ConfigError("config.generator.label_fraction: must be in (0,1]");
      }
    }
    if (g.contains("test_size")) {
      cfg.test_size = get_int(g["test_size"], "config.generator.test_size");
      if (cfg.test_size < 0) {
        throw ConfigError("config.generator.test_size: must be >= 0");
      }
    }
  }

  if (j.contains("noise")) {
    const json& nz = j["noise"];
    check_keys(nz, {"rate", "rates", "rho_plus", "rho_minus"}, "config.noise");
    if (nz.contains("rate") && nz.contains("rates")) {
      throw ConfigError("config.noise: give either 'rate' or 'rates'");
    }
    if (nz.contains("rate")) {
      cfg.rates = {get_num(nz["rate"], "config.noise.rate")};
    } else if (nz.contains("rates")) {
      if (!nz["rates"].is_array() || nz["rates"].empty()) {
        throw ConfigError("config.noise.rates: expected a nonempty array");
      }
      cfg.rates.clear();
      for (const auto& r : nz["rates"]) {
        cfg.rates.push_back(get_num(r, "config.noise.rates"));
      }
    }
    for (double r : cfg.rates) {
      if (!(r >= 0.0 && r <= 1.0)) {
        throw ConfigError("config.noise: rates must be in [0,1]");
      }
    }
    if (nz.contains("rho_plus")) {
      cfg.rho_plus = get_num(nz["rho_plus"], "config.noise.rho_plus");
    }
    if (nz.contains("rho_minus")) {
      cfg.rho_minus = get_num(nz["rho_minus"], "config.noise.rho_minus");
    }
    for (double r : {cfg.rho_plus, cfg.rho_minus}) {
      if (!(r >= 0.0 && r <= 1.0)) {
        throw ConfigError("config.noise: flip rates must be in [0,1]");
      }
    }
  }

  if (j.contains("folds")) {
    cfg.folds = get_int(j["folds"], "config.folds");
    if (cfg.folds < 2) throw ConfigError("config.folds: must be >= 2");
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer() ||
        (j["seed"].is_number_integer() && j["seed"].get<long long>() < 0)) {
      throw ConfigError("config.seed: expected a nonnegative integer");
    }
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("reps")) {
    cfg.reps = get_int(j["reps"], "config.reps");
    if (cfg.reps < 1) throw ConfigError("config.reps: must be >= 1");
  }
  if (j.contains("threads")) {
    cfg.threads = get_int(j["threads"], "config.threads");
    if (cfg.threads < 1) throw ConfigError("config.threads: must be >= 1");
  }
  if (j.contains("out")) cfg.out_path = get_str(j["out"], "config.out");
  if (j.contains("model")) cfg.model_path = get_str(j["model"], "config.model");
  if (j.contains("predictions")) {
    cfg.predictions_path = get_str(j["predictions"], "config.predictions");
  }

  // A path field promises file I/O. A task that would never touch the file
  // rejects the key instead of ignoring it.
  if (!cfg.predictions_path.empty() && cfg.task != "predict") {
    throw ConfigError("config.predictions: only the predict task writes a "
                      "predictions CSV; fit saves a model, then predict "
                      "evaluates it");
  }
  if (!cfg.test_path.empty() && cfg.task != "noisy-binary") {
    throw ConfigError("config.data.test_path: only the noisy-binary task "
                      "reads a held-out CSV; use the predict task for "
                      "held-out evaluation");
  }
  if (!cfg.model_path.empty() && cfg.task != "fit" && cfg.task != "predict") {
    throw ConfigError("config.model: only fit and predict use a model file");
  }
  if (!cfg.data_path.empty() &&
      (cfg.task == "synth-linear" || cfg.task == "noisy-curve")) {
    throw ConfigError("config.data: the " + cfg.task +
                      " task generates its own data");
  }
  return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["task"] = cfg.task;
  j["hlr"] = {{"lambda", cfg.hlr.lambda},
              {"gamma", cfg.hlr.gamma},
              {"delta_xi", cfg.hlr.delta_xi},
              {"refinements", cfg.hlr.refinements}};
  if (cfg.hlr.view_weights.size() != 0) {
    j["hlr"]["view_weights"] = std::vector<double>(
        cfg.hlr.view_weights.data(),
        cfg.hlr.view_weights.data() + cfg.hlr.view_weights.size());
  }
  json ks = json::array();
  for (const auto& k : cfg.kernels) ks.push_back(kernel_to_json(k));
  j["kernels"] = ks;
  j["manifold"] = manifold_spec_to_json(cfg.manifold);
  if (!cfg.data_path.empty()) {
    j["data"] = {{"path", cfg.data_path}, {"view_dims", cfg.view_dims},
                 {"with_labels", cfg.with_labels}};
    if (!cfg.test_path.empty()) j["data"]["test_path"] = cfg.test_path;
  }
  j["generator"] = {{"n", cfg.n_values},
                    {"dim", cfg.dim},
                    {"noise_std", cfg.noise_std},
                    {"label_fraction", cfg.label_fraction},
                    {"test_size", cfg.test_size}};
  if (cfg.beta.size() != 0) {
    j["generator"]["beta"] =
        std::vector<double>(cfg.beta.data(), cfg.beta.data() + cfg.beta.size());
  }
  j["noise"] = {{"rates", cfg.rates},
                {"rho_plus", cfg.rho_plus},
                {"rho_minus", cfg.rho_minus}};
  j["folds"] = cfg.folds;
  j["seed"] = cfg.seed;
  j["reps"] = cfg.reps;
  j["threads"] = cfg.threads;
  return j;
}

namespace {

Eigen::VectorXd resolved_beta(const ExperimentConfig& cfg) {
  if (cfg.beta.size() != 0) return cfg.beta;
  return Eigen::VectorXd::Constant(cfg.dim, 1.0 / static_cast<double>(cfg.dim));
}

std::vector<KernelSpec> resolved_kernels(const ExperimentConfig& cfg, int m) {
  if (cfg.kernels.empty()) {
    return std::vector<KernelSpec>(static_cast<std::size_t>(m),
                                   KernelSpec::linear());
  }
  if (static_cast<int>(cfg.kernels.size()) != m) {
    throw ConfigError("config.kernels: " + std::to_string(cfg.kernels.size()) +
                      " kernels for " + std::to_string(m) + " views");
  }
  return cfg.kernels;
}

struct FitBundle {
  HlrModel model;
  double seconds = 0.0;
};

FitBundle fit_dataset(const Dataset& ds, const ExperimentConfig& cfg,
                      int refinements_override = -1) {
  HlrConfig hc = cfg.hlr;
  if (refinements_override >= 0) hc.refinements = refinements_override;
  const auto kernels = resolved_kernels(cfg, ds.view_count());
  ManifoldOperator op;
  if (hc.gamma > 0.0) {
    op = assemble_manifold(ds.samples, cfg.manifold);
  }
  const auto start = std::chrono::steady_clock::now();
  FitBundle out;
  out.model = fit(ds, kernels, hc.gamma > 0.0 ? &op : nullptr, hc);
  out.seconds = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - start)
                    .count();
  return out;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

json removed_by_refinement(const HlrModel& model) {
  json out = json::object();
  for (const auto& r : model.removed) {
    out[std::to_string(r.refinement)] =
        out.value(std::to_string(r.refinement), 0) + 1;
  }
  return out;
}

std::vector<int> removed_indices(const HlrModel& model) {
  std::vector<int> out;
  for (const auto& r : model.removed) out.push_back(r.index);
  std::sort(out.begin(), out.end());
  return out;
}

// Runs fn(0..count-1) on a small worker pool; results must go into
// preallocated index slots so aggregation order stays deterministic.
void parallel_runs(int count, int threads,
                   const std::function<void(int)>& fn) {
  const int workers = std::min(threads, count);
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&]() {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

json wrap_report(const ExperimentConfig& cfg, json body, double total_seconds,
                 std::vector<double> run_seconds = {}) {
  json report;
  report["artifact"] = {{"name", "hlr"}, {"version", HLR_VERSION}};
  report["config"] = config_to_json(cfg);
  for (auto it = body.begin(); it != body.end(); ++it) {
    report[it.key()] = it.value();
  }
  report["timings"] = {{"total_seconds", total_seconds}};
  if (!run_seconds.empty()) report["timings"]["run_seconds"] = run_seconds;
  return report;
}

void write_report_if_asked(const ExperimentConfig& cfg, const json& report) {
  if (cfg.out_path.empty()) return;
  std::ofstream out(cfg.out_path);
  if (!out) throw DataError("failed to open report file: " + cfg.out_path);
  out << report.dump(2) << '\n';
  if (!out) throw DataError("failed while writing report: " + cfg.out_path);
}

Eigen::VectorXd labelled_vector(const Dataset& ds) {
  Eigen::VectorXd y(ds.label_count());
  for (int i = 0; i < ds.label_count(); ++i) {
    y[i] = ds.labels[static_cast<std::size_t>(i)];
  }
  return y;
}

// MAE/MSE plus guarded MRE (it diverges on zero targets by design).
json metric_block(const Eigen::VectorXd& truth, const Eigen::VectorXd& pred) {
  json m;
  m["mae"] = mae(truth, pred);
  m["mse"] = mse(truth, pred);
  try {
    m["mre"] = mre(truth, pred);
  } catch (const std::invalid_argument& e) {
    m["mre"] = nullptr;
    m["mre_note"] = e.what();
  }
  return m;
}

}  // namespace

json run_fit(const ExperimentConfig& cfg) {
  if (cfg.data_path.empty()) {
    throw ConfigError("fit: config.data.path is required");
  }
  const auto start = std::chrono::steady_clock::now();
  const Dataset ds = load_csv(cfg.data_path, cfg.view_dims, cfg.with_labels);
  if (ds.label_count() == 0) throw DataError("fit: dataset has no labels");
  const FitBundle fb = fit_dataset(ds, cfg);
  if (!cfg.model_path.empty()) save_model(fb.model, cfg.model_path);

  Eigen::VectorXd pred(ds.label_count());
  for (int i = 0; i < ds.label_count(); ++i) {
    pred[i] = predict(fb.model, ds.samples[static_cast<std::size_t>(i)]);
  }
  json body;
  body["metrics"] = metric_block(labelled_vector(ds), pred);
  body["xi_history"] = fb.model.xi_history;
  body["removed_count"] = fb.model.removed.size();
  body["removed_indices"] = removed_indices(fb.model);
  body["removed_by_refinement"] = removed_by_refinement(fb.model);
  if (!cfg.model_path.empty()) body["model_path"] = cfg.model_path;
  const double total =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  json report = wrap_report(cfg, body, total, {fb.seconds});
  write_report_if_asked(cfg, report);
  return report;
}

json run_predict(const ExperimentConfig& cfg) {
  if (cfg.model_path.empty()) {
    throw ConfigError("predict: config.model is required");
  }
  if (cfg.data_path.empty()) {
    throw ConfigError("predict: config.data.path is required");
  }
  const auto start = std::chrono::steady_clock::now();
  const HlrModel model = load_model(cfg.model_path);
  const Dataset ds = load_csv(cfg.data_path, cfg.view_dims, cfg.with_labels);
  Eigen::VectorXd pred(ds.size());
  for (int i = 0; i < ds.size(); ++i) {
    pred[i] = predict(model, ds.samples[static_cast<std::size_t>(i)]);
  }
  if (!cfg.predictions_path.empty()) {
    std::ofstream out(cfg.predictions_path);
    if (!out) {
      throw DataError("failed to open predictions file: " +
                      cfg.predictions_path);
    }
    out << "truth,prediction\n";
    char buf[64];
    for (int i = 0; i < ds.size(); ++i) {
      if (i < ds.label_count()) {
        auto [p1, e1] = std::to_chars(buf, buf + sizeof(buf),
                                      ds.labels[static_cast<std::size_t>(i)]);
        out.write(buf, p1 - buf);
      }
      out << ',';
      auto [p2, e2] = std::to_chars(buf, buf + sizeof(buf), pred[i]);
      out.write(buf, p2 - buf);
      out << '\n';
    }
    if (!out) {
      throw DataError("failed while writing predictions: " +
                      cfg.predictions_path);
    }
  }
  json body;
  if (ds.label_count() > 0) {
    body["metrics"] =
        metric_block(labelled_vector(ds), pred.head(ds.label_count()));
  }
  body["predicted"] = ds.size();
  if (!cfg.predictions_path.empty()) {
    body["predictions_path"] = cfg.predictions_path;
  }
  const double total =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  json report = wrap_report(cfg, body, total);
  write_report_if_asked(cfg, report);
  return report;
}

namespace {

// Ground truth beta . x recomputed from features, so it survives any
// reordering done by label masking.
Eigen::VectorXd truth_from_features(const Dataset& ds,
                                    const Eigen::VectorXd& beta) {
  Eigen::VectorXd t(ds.size());
  for (int i = 0; i < ds.size(); ++i) {
    t[i] = ds.samples[static_cast<std::size_t>(i)].views[0].dot(beta);
  }
  return t;
}

Eigen::VectorXd in_sample_predictions(const HlrModel& model,
                                      const Dataset& ds) {
  return predict_batch(model, ds.samples);
}

}  // namespace

json run_synth_linear(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const Eigen::VectorXd beta = resolved_beta(cfg);
  struct Cell {
    int n;
    int rep;
  };
  std::vector<Cell> cells;
  for (int n : cfg.n_values) {
    for (int rep = 0; rep < cfg.reps; ++rep) cells.push_back({n, rep});
  }
  std::vector<json> runs(cells.size());
  std::vector<double> run_seconds(cells.size(), 0.0);
  parallel_runs(
      static_cast<int>(cells.size()), cfg.threads, [&](int idx) {
        const auto [n, rep] = cells[static_cast<std::size_t>(idx)];
        const std::uint64_t seed_r = cfg.seed + static_cast<std::uint64_t>(rep);
        json run;
        run["n"] = n;
        run["rep"] = rep;
        run["seed"] = seed_r;
        double seconds = 0.0;

        auto evaluate = [&](double noise_std, const char* tag) {
          Dataset ds = gen_linear_uniform(n, cfg.dim, beta, noise_std, seed_r);
          if (cfg.label_fraction < 1.0) {
            ds = mask_labels(ds, cfg.label_fraction, seed_r + kMaskOffset);
          }
          const Eigen::VectorXd truth = truth_from_features(ds, beta);
          const FitBundle hlr_fit = fit_dataset(ds, cfg);
          const FitBundle quad_fit = fit_dataset(ds, cfg, 0);
          seconds += hlr_fit.seconds + quad_fit.seconds;
          json block;
          block["hlr_mae"] =
              mae(truth, in_sample_predictions(hlr_fit.model, ds));
          block["quad_mae"] =
              mae(truth, in_sample_predictions(quad_fit.model, ds));
          block["hlr_fit_removed"] = hlr_fit.model.removed.size();
          block["hlr_xi_history"] = hlr_fit.model.xi_history;
          run[tag] = block;
        };
        evaluate(0.0, "clean");
        if (cfg.noise_std > 0.0) evaluate(cfg.noise_std, "noisy");
        runs[static_cast<std::size_t>(idx)] = std::move(run);
        run_seconds[static_cast<std::size_t>(idx)] = seconds;
      });

  json aggregate = json::array();
  for (int n : cfg.n_values) {
    std::vector<double> ch, cq, nh, nq;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (cells[i].n != n) continue;
      ch.push_back(runs[i]["clean"]["hlr_mae"].get<double>());
      cq.push_back(runs[i]["clean"]["quad_mae"].get<double>());
      if (runs[i].contains("noisy")) {
        nh.push_back(runs[i]["noisy"]["hlr_mae"].get<double>());
        nq.push_back(runs[i]["noisy"]["quad_mae"].get<double>());
      }
    }
    json a;
    a["n"] = n;
    a["clean_hlr_mae_mean"] = mean_of(ch);
    a["clean_hlr_mae_std"] = stddev_of(ch);
    a["clean_quad_mae_mean"] = mean_of(cq);
    a["clean_quad_mae_std"] = stddev_of(cq);
    if (!nh.empty()) {
      a["noisy_hlr_mae_mean"] = mean_of(nh);
      a["noisy_hlr_mae_std"] = stddev_of(nh);
      a["noisy_quad_mae_mean"] = mean_of(nq);
      a["noisy_quad_mae_std"] = stddev_of(nq);
    }
    aggregate.push_back(a);
  }

  json body;
  body["runs"] = runs;
  body["aggregate"] = aggregate;
  const double total =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  json report = wrap_report(cfg, body, total, run_seconds);
  write_report_if_asked(cfg, report);
  return report;
}

json run_noisy_curve(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const Eigen::VectorXd beta = resolved_beta(cfg);
  struct Cell {
    int n;
    double rate;
    int rep;
  };
  std::vector<Cell> cells;
  for (int n : cfg.n_values) {
    for (double rate : cfg.rates) {
      for (int rep = 0; rep < cfg.reps; ++rep) cells.push_back({n, rate, rep});
    }
  }
  std::vector<json> runs(cells.size());
  std::vector<double> run_seconds(cells.size(), 0.0);
  parallel_runs(
      static_cast<int>(cells.size()), cfg.threads, [&](int idx) {
        const auto [n, rate, rep] = cells[static_cast<std::size_t>(idx)];
        const std::uint64_t seed_r = cfg.seed + static_cast<std::uint64_t>(rep);
        const Dataset clean =
            gen_linear_uniform(n, cfg.dim, beta, 0.0, seed_r);
        auto [corrupted_ds, corrupted] =
            corrupt_sign_flip(clean, rate, seed_r + kCorruptOffset);
        const Eigen::VectorXd truth = labelled_vector(clean);
        const FitBundle hlr_fit = fit_dataset(corrupted_ds, cfg);
        const FitBundle quad_fit = fit_dataset(corrupted_ds, cfg, 0);
        const std::vector<int> removed = removed_indices(hlr_fit.model);

        json run;
        run["n"] = n;
        run["rate"] = rate;
        run["rep"] = rep;
        run["seed"] = seed_r;
        run["corrupted_count"] = corrupted.size();
        run["removed_count"] = removed.size();
        run["dice"] = dice(corrupted, removed);
        run["hlr_mae"] =
            mae(truth, in_sample_predictions(hlr_fit.model, corrupted_ds));
        run["quad_mae"] =
            mae(truth, in_sample_predictions(quad_fit.model, corrupted_ds));
        run["xi_history"] = hlr_fit.model.xi_history;
        runs[static_cast<std::size_t>(idx)] = std::move(run);
        run_seconds[static_cast<std::size_t>(idx)] =
            hlr_fit.seconds + quad_fit.seconds;
      });

  json aggregate = json::array();
  for (int n : cfg.n_values) {
    for (double rate : cfg.rates) {
      std::vector<double> dices, hmae, qmae;
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i].n != n || cells[i].rate != rate) continue;
        dices.push_back(runs[i]["dice"].get<double>());
        hmae.push_back(runs[i]["hlr_mae"].get<double>());
        qmae.push_back(runs[i]["quad_mae"].get<double>());
      }
      json a;
      a["n"] = n;
      a["rate"] = rate;
      a["dice_mean"] = mean_of(dices);
      a["dice_std"] = stddev_of(dices);
      a["hlr_mae_mean"] = mean_of(hmae);
      a["quad_mae_mean"] = mean_of(qmae);
      aggregate.push_back(a);
    }
  }

  json body;
  body["runs"] = runs;
  body["aggregate"] = aggregate;
  const double total =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  json report = wrap_report(cfg, body, total, run_seconds);
  write_report_if_asked(cfg, report);
  return report;
}

namespace {

// Shifts features to be symmetric about the origin and thresholds the
// linear response at its midpoint, giving a separable two-class problem a
// through-origin linear decision function can express.
Dataset make_binary(Dataset ds, const Eigen::VectorXd& beta) {
  const double threshold = 0.5 * beta.sum();
  for (auto& s : ds.samples) {
    s.views[0].array() -= 0.5;
  }
  for (auto& y : ds.labels) {
    y = y >= threshold ? 1.0 : -1.0;
  }
  return ds;
}

}  // namespace

json run_noisy_binary(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const Eigen::VectorXd beta = resolved_beta(cfg);
  const bool from_csv = !cfg.data_path.empty();
  if (from_csv && cfg.test_path.empty()) {
    throw ConfigError("noisy-binary: config.data.test_path is required "
                      "alongside config.data.path");
  }
  const int n = cfg.n_values.front();
  const int test_n = cfg.test_size > 0 ? cfg.test_size : n;

  std::vector<json> runs(static_cast<std::size_t>(cfg.reps));
  std::vector<double> run_seconds(static_cast<std::size_t>(cfg.reps), 0.0);
  parallel_runs(cfg.reps, cfg.threads, [&](int rep) {
    const std::uint64_t seed_r = cfg.seed + static_cast<std::uint64_t>(rep);
    Dataset train, test;
    if (from_csv) {
      train = load_csv(cfg.data_path, cfg.view_dims, true);
      test = load_csv(cfg.test_path, cfg.view_dims, true);
    } else {
      train = make_binary(gen_linear_uniform(n, cfg.dim, beta, 0.0, seed_r),
                          beta);
      test = make_binary(gen_linear_uniform(test_n, cfg.dim, beta, 0.0,
                                            seed_r + kTestOffset),
                         beta);
    }
    auto [noisy_train, flipped] = flip_binary_labels(
        train, cfg.rho_plus, cfg.rho_minus, seed_r + kCorruptOffset);
    const FitBundle hlr_fit = fit_dataset(noisy_train, cfg);
    const FitBundle quad_fit = fit_dataset(noisy_train, cfg, 0);

    auto accuracy = [&](const HlrModel& model) {
      int correct = 0;
      for (int i = 0; i < test.label_count(); ++i) {
        const double p =
            predict(model, test.samples[static_cast<std::size_t>(i)]);
        const int sign = p >= 0.0 ? 1 : -1;
        if (static_cast<double>(sign) ==
            test.labels[static_cast<std::size_t>(i)]) {
          ++correct;
        }
      }
      return static_cast<double>(correct) /
             static_cast<double>(test.label_count());
    };
    json run;
    run["rep"] = rep;
    run["seed"] = seed_r;
    run["flipped_count"] = flipped.size();
    run["removed_count"] = hlr_fit.model.removed.size();
    run["dice"] = dice(flipped, removed_indices(hlr_fit.model));
    run["hlr_accuracy"] = accuracy(hlr_fit.model);
    run["quad_accuracy"] = accuracy(quad_fit.model);
    run["xi_history"] = hlr_fit.model.xi_history;
    runs[static_cast<std::size_t>(rep)] = std::move(run);
    run_seconds[static_cast<std::size_t>(rep)] =
        hlr_fit.seconds + quad_fit.seconds;
  });

  std::vector<double> ha, qa, dc;
  for (const auto& r : runs) {
    ha.push_back(r["hlr_accuracy"].get<double>());
    qa.push_back(r["quad_accuracy"].get<double>());
    dc.push_back(r["dice"].get<double>());
  }
  json body;
  body["runs"] = runs;
  body["aggregate"] = {{"hlr_accuracy_mean", mean_of(ha)},
                       {"hlr_accuracy_std", stddev_of(ha)},
                       {"quad_accuracy_mean", mean_of(qa)},
                       {"quad_accuracy_std", stddev_of(qa)},
                       {"dice_mean", mean_of(dc)}};
  const double total =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  json report = wrap_report(cfg, body, total, run_seconds);
  write_report_if_asked(cfg, report);
  return report;
}

json run_folds_bench(const ExperimentConfig& cfg) {
  if (cfg.data_path.empty()) {
    throw ConfigError("folds-bench: config.data.path is required");
  }
  const auto start = std::chrono::steady_clock::now();
  const Dataset ds = load_csv(cfg.data_path, cfg.view_dims, true);
  const auto folds = split_folds(ds, cfg.folds);

  std::vector<json> runs(folds.size());
  std::vector<double> run_seconds(folds.size(), 0.0);
  parallel_runs(static_cast<int>(folds.size()), cfg.threads, [&](int f) {
    const FoldPair& fp = folds[static_cast<std::size_t>(f)];
    const FitBundle fb = fit_dataset(fp.train, cfg);
    Eigen::VectorXd pred(fp.test.label_count());
    for (int i = 0; i < fp.test.label_count(); ++i) {
      pred[i] = predict(fb.model, fp.test.samples[static_cast<std::size_t>(i)]);
    }
    json run;
    run["fold"] = f;
    run["train_labels"] = fp.train.label_count();
    run["test_labels"] = fp.test.label_count();
    run["metrics"] = metric_block(labelled_vector(fp.test), pred);
    run["removed_count"] = fb.model.removed.size();
    run["xi_history"] = fb.model.xi_history;
    runs[static_cast<std::size_t>(f)] = std::move(run);
    run_seconds[static_cast<std::size_t>(f)] = fb.seconds;
  });

  std::vector<double> maes, mses, mres;
  bool mre_ok = true;
  std::string mre_note;
  for (const auto& r : runs) {
    maes.push_back(r["metrics"]["mae"].get<double>());
    mses.push_back(r["metrics"]["mse"].get<double>());
    if (r["metrics"]["mre"].is_null()) {
      mre_ok = false;
      mre_note = r["metrics"].value("mre_note", "diverged");
    } else {
      mres.push_back(r["metrics"]["mre"].get<double>());
    }
  }
  json aggregate;
  aggregate["mae_mean"] = mean_of(maes);
  aggregate["mae_std"] = stddev_of(maes);
  aggregate["mse_mean"] = mean_of(mses);
  aggregate["mse_std"] = stddev_of(mses);
  if (mre_ok) {
    aggregate["mre_mean"] = mean_of(mres);
    aggregate["mre_std"] = stddev_of(mres);
  } else {
    aggregate["mre_mean"] = nullptr;
    aggregate["mre_note"] = mre_note;
  }

  json body;
  body["runs"] = runs;
  body["aggregate"] = aggregate;
  const double total =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  json report = wrap_report(cfg, body, total, run_seconds);
  write_report_if_asked(cfg, report);
  return report;
}

json run_experiment(const ExperimentConfig& cfg) {
  if (cfg.task == "fit") return run_fit(cfg);
  if (cfg.task == "predict") return run_predict(cfg);
  if (cfg.task == "synth-linear") return run_synth_linear(cfg);
  if (cfg.task == "noisy-curve") return run_noisy_curve(cfg);
  if (cfg.task == "noisy-binary") return run_noisy_binary(cfg);
  if (cfg.task == "folds-bench") return run_folds_bench(cfg);
  throw ConfigError("unknown task '" + cfg.task + "'");
}

}  // namespace hlr
