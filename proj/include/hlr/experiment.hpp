#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "hlr/kernel.hpp"
#include "hlr/manifold.hpp"
#include "hlr/solver.hpp"

namespace hlr {

// Resolved experiment description. Built from a strict JSON config: unknown
// keys anywhere are rejected, presets are applied before explicit fields.
//
// Per-repetition randomness is derived from documented stream offsets on
// (seed + rep): +0 draws the data, +2^32 the label corruption, +2^33 the
// held-out test set, +3*2^32 the label-fraction mask.
struct ExperimentConfig {
  std::string task;  // fit, predict, synth-linear, noisy-curve, noisy-binary,
                     // folds-bench
  HlrConfig hlr;
  std::vector<KernelSpec> kernels;  // empty: one linear kernel per view
  ManifoldSpec manifold;            // defaulted from gamma when absent

  // File-backed data (fit, predict, folds-bench, optional noisy-binary).
  std::string data_path;
  std::string test_path;
  std::vector<int> view_dims;
  bool with_labels = true;

  // Synthetic generator.
  std::vector<int> n_values = {100};
  int dim = 10;
  Eigen::VectorXd beta;  // empty: 1/dim in every coordinate
  double noise_std = 0.31622776601683794;  // sqrt(0.1); 0 skips the noisy arm
  double label_fraction = 1.0;
  int test_size = 0;  // 0: same as n

  // Label noise.
  std::vector<double> rates = {0.1};
  double rho_plus = 0.2;
  double rho_minus = 0.2;

  int folds = 5;

  std::uint64_t seed = 1;
  int reps = 1;
  int threads = 1;

  std::string out_path;
  std::string model_path;
  std::string predictions_path;
};

// Strict parse; throws ConfigError with the offending key or value.
ExperimentConfig config_from_json(const nlohmann::json& j);

// Echo of the resolved configuration (deterministic, no timing content).
nlohmann::json config_to_json(const ExperimentConfig& cfg);

// Runs the configured task and returns the report. Reports carry the
// artifact version, the resolved config echo, per-run metrics, aggregates,
// and wall-clock timings (timings are the only nondeterministic fields).
nlohmann::json run_experiment(const ExperimentConfig& cfg);

// Individual tasks, exposed for direct use by tests.
nlohmann::json run_fit(const ExperimentConfig& cfg);
nlohmann::json run_predict(const ExperimentConfig& cfg);
nlohmann::json run_synth_linear(const ExperimentConfig& cfg);
nlohmann::json run_noisy_curve(const ExperimentConfig& cfg);
nlohmann::json run_noisy_binary(const ExperimentConfig& cfg);
nlohmann::json run_folds_bench(const ExperimentConfig& cfg);

}  // namespace hlr
