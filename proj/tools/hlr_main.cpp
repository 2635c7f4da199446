#include <CLI11.hpp>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <string>

#include "hlr/errors.hpp"
#include "hlr/experiment.hpp"

namespace {

nlohmann::json read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw hlr::ConfigError("cannot open config file: " + path);
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw hlr::ConfigError("config file " + path + ": " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "hlr: exact Huber-loss multi-view regression with adaptive threshold "
      "refinement.\nRuns the task named in a JSON config "
      "(fit, predict, synth-linear, noisy-curve, noisy-binary, folds-bench)."};
  std::string config_path;
  std::string task_override;
  std::string out_override;
  std::string model_override;
  std::string predictions_override;
  std::uint64_t seed_override = 0;
  int reps_override = 0;
  int threads_override = 0;
  app.add_option("--config", config_path, "JSON experiment config")
      ->required();
  auto* task_opt = app.add_option("--task", task_override,
                                  "override the config's task");
  auto* out_opt =
      app.add_option("--out", out_override, "write the report to this path");
  auto* model_opt = app.add_option("--model", model_override,
                                   "model path (fit output, predict input)");
  auto* pred_opt = app.add_option("--predictions", predictions_override,
                                  "predictions CSV path (predict)");
  auto* seed_opt =
      app.add_option("--seed", seed_override, "override the config's seed");
  auto* reps_opt =
      app.add_option("--reps", reps_override, "override the config's reps");
  auto* threads_opt = app.add_option("--threads", threads_override,
                                     "override the config's threads");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    nlohmann::json jcfg = read_config_file(config_path);
    // Flag overrides land in the JSON before the strict parse, so they are
    // validated exactly like file values.
    if (task_opt->count() > 0) jcfg["task"] = task_override;
    if (out_opt->count() > 0) jcfg["out"] = out_override;
    if (model_opt->count() > 0) jcfg["model"] = model_override;
    if (pred_opt->count() > 0) jcfg["predictions"] = predictions_override;
    if (seed_opt->count() > 0) jcfg["seed"] = seed_override;
    if (reps_opt->count() > 0) jcfg["reps"] = reps_override;
    if (threads_opt->count() > 0) jcfg["threads"] = threads_override;

    const hlr::ExperimentConfig cfg = hlr::config_from_json(jcfg);
    const nlohmann::json report = hlr::run_experiment(cfg);
    if (cfg.out_path.empty()) {
      std::cout << report.dump(2) << '\n';
    } else {
      std::cerr << "report written to " << cfg.out_path << '\n';
    }
    return 0;
  } catch (const hlr::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const hlr::SolverError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return 4;
  } catch (const hlr::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
