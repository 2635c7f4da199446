#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "hlr/errors.hpp"
#include "hlr/experiment.hpp"
#include "test_util.hpp"

using hlr_test::temp_dir;
using hlr_test::write_file;
using nlohmann::json;

TEST_CASE("config parsing resolves per-task defaults") {
  const auto synth = hlr::config_from_json(json{{"task", "synth-linear"}});
  CHECK(synth.hlr.lambda == doctest::Approx(1e-2));
  CHECK(synth.hlr.gamma == doctest::Approx(1e-3));
  CHECK(synth.hlr.delta_xi == doctest::Approx(0.1));
  CHECK(synth.hlr.refinements == 1);
  // The protocol's noisy arm runs by default.
  CHECK(synth.noise_std == doctest::Approx(0.31622776601683794));
  // gamma > 0 must bring a neighborhood operator along.
  CHECK(synth.manifold.kind == hlr::ManifoldSpec::Kind::Knn);

  const auto curve = hlr::config_from_json(json{{"task", "noisy-curve"}});
  CHECK(curve.hlr.lambda == doctest::Approx(1e-3));
  CHECK(curve.hlr.gamma == 0.0);
  CHECK(curve.hlr.delta_xi == doctest::Approx(0.05));
  CHECK(curve.hlr.refinements == 40);
  CHECK(curve.manifold.kind == hlr::ManifoldSpec::Kind::None);
}

TEST_CASE("presets overwrite task defaults and explicit fields win") {
  const auto cfg = hlr::config_from_json(
      json{{"task", "fit"},
           {"preset", "bench-uci"},
           {"data",
            {{"path", "unused.csv"}, {"view_dims", json::array({2})}}},
           {"hlr", {{"lambda", 0.5}}}});
  CHECK(cfg.hlr.lambda == doctest::Approx(0.5));  // explicit beats preset
  CHECK(cfg.hlr.gamma == doctest::Approx(1e-4));  // preset beats task default
  CHECK(cfg.hlr.delta_xi == doctest::Approx(0.01));
  CHECK(cfg.hlr.refinements == 3);
  CHECK_THROWS_AS(hlr::config_from_json(
                      json{{"task", "fit"}, {"preset", "no-such-preset"}}),
                  hlr::ConfigError);
}

TEST_CASE("config parsing is strict") {
  CHECK_THROWS_AS(hlr::config_from_json(json{{"task", "fit"}, {"oops", 1}}),
                  hlr::ConfigError);
  CHECK_THROWS_AS(hlr::config_from_json(
                      json{{"task", "fit"}, {"hlr", {{"lambdaa", 0.1}}}}),
                  hlr::ConfigError);
  CHECK_THROWS_AS(hlr::config_from_json(json{{"task", "teleport"}}),
                  hlr::ConfigError);
  CHECK_THROWS_AS(hlr::config_from_json(json::object()), hlr::ConfigError);
  CHECK_THROWS_AS(hlr::config_from_json(
                      json{{"task", "fit"}, {"hlr", {{"lambda", "high"}}}}),
                  hlr::ConfigError);
  CHECK_THROWS_AS(hlr::config_from_json(json{{"task", "fit"}, {"seed", -4}}),
                  hlr::ConfigError);
  CHECK_THROWS_AS(
      hlr::config_from_json(json{
          {"task", "noisy-curve"},
          {"noise", {{"rate", 0.1}, {"rates", json::array({0.1, 0.2})}}}}),
      hlr::ConfigError);
  CHECK_THROWS_AS(
      hlr::config_from_json(json{{"task", "fit"},
                                 {"hlr", {{"gamma", 0.1}}},
                                 {"manifold", {{"kind", "none"}}}}),
      hlr::ConfigError);
  CHECK_THROWS_AS(hlr::config_from_json(json{{"task", "fit"},
                                             {"generator", {{"n", 1}}}}),
                  hlr::ConfigError);
}

TEST_CASE("path fields are rejected for tasks that never touch them") {
  const json data = {{"path", "x.csv"}, {"view_dims", json::array({1})}};
  CHECK_THROWS_AS(hlr::config_from_json(json{{"task", "fit"},
                                             {"data", data},
                                             {"predictions", "p.csv"}}),
                  hlr::ConfigError);
  CHECK_THROWS_AS(hlr::config_from_json(
                      json{{"task", "fit"},
                           {"data",
                            {{"path", "x.csv"},
                             {"test_path", "t.csv"},
                             {"view_dims", json::array({1})}}}}),
                  hlr::ConfigError);
  CHECK_THROWS_AS(hlr::config_from_json(json{{"task", "synth-linear"},
                                             {"model", "m.json"}}),
                  hlr::ConfigError);
  CHECK_THROWS_AS(hlr::config_from_json(json{{"task", "noisy-curve"},
                                             {"data", data}}),
                  hlr::ConfigError);
  // noisy-binary genuinely reads a held-out CSV, so the pair stays legal.
  const auto ok = hlr::config_from_json(
      json{{"task", "noisy-binary"},
           {"data",
            {{"path", "x.csv"},
             {"test_path", "t.csv"},
             {"view_dims", json::array({1})}}}});
  CHECK(ok.test_path == "t.csv");
}

TEST_CASE("config echo carries the resolved values") {
  const auto cfg = hlr::config_from_json(
      json{{"task", "noisy-curve"}, {"seed", 9}, {"reps", 2}});
  const json echo = hlr::config_to_json(cfg);
  CHECK(echo["task"] == "noisy-curve");
  CHECK(echo["seed"] == 9);
  CHECK(echo["reps"] == 2);
  CHECK(echo["hlr"]["refinements"] == 40);
  CHECK(echo["noise"]["rates"] == json::array({0.1}));
}

namespace {

json small_synth_config() {
  return json{{"task", "synth-linear"},
              {"generator",
               {{"n", json::array({24, 30})}, {"dim", 3}, {"noise_std", 0.8}}},
              {"seed", 5},
              {"reps", 2}};
}

}  // namespace

TEST_CASE("synthetic comparison produces one run per cell and aggregates") {
  const auto cfg = hlr::config_from_json(small_synth_config());
  const json report = hlr::run_experiment(cfg);
  CHECK(report["artifact"]["name"] == "hlr");
  CHECK(report.contains("timings"));
  CHECK(report["timings"].contains("total_seconds"));
  REQUIRE(report["runs"].size() == 4);  // two sizes x two reps
  for (const auto& run : report["runs"]) {
    CHECK(run.contains("clean"));
    CHECK(run.contains("noisy"));
    CHECK(run["clean"]["hlr_mae"].is_number());
    CHECK(run["noisy"]["quad_mae"].is_number());
  }
  REQUIRE(report["aggregate"].size() == 2);
  CHECK(report["aggregate"][0]["n"] == 24);
  CHECK(report["aggregate"][1]["n"] == 30);
  CHECK(report["aggregate"][0]["noisy_hlr_mae_mean"].is_number());
}

TEST_CASE("reports are deterministic outside the timing block") {
  const auto cfg = hlr::config_from_json(small_synth_config());
  const json a = hlr::run_experiment(cfg);
  const json b = hlr::run_experiment(cfg);
  CHECK(a["runs"].dump() == b["runs"].dump());
  CHECK(a["aggregate"].dump() == b["aggregate"].dump());
  CHECK(a["config"].dump() == b["config"].dump());

  // Worker threads change scheduling, never content.
  auto threaded = small_synth_config();
  threaded["threads"] = 3;
  const json c = hlr::run_experiment(hlr::config_from_json(threaded));
  CHECK(c["runs"].dump() == a["runs"].dump());
  CHECK(c["aggregate"].dump() == a["aggregate"].dump());
}

TEST_CASE("label removal recovers planted sign flips") {
  const auto cfg = hlr::config_from_json(
      json{{"task", "noisy-curve"},
           {"generator", {{"n", 60}, {"dim", 3}}},
           {"noise", {{"rate", 0.1}}},
           {"seed", 3}});
  const json report = hlr::run_experiment(cfg);
  REQUIRE(report["runs"].size() == 1);
  const auto& run = report["runs"][0];
  CHECK(run["corrupted_count"] == 6);  // floor(0.1 * 60)
  CHECK(run["dice"].get<double>() >= 0.5);
  CHECK(run["hlr_mae"].get<double>() <= run["quad_mae"].get<double>());
  CHECK(report["aggregate"][0]["dice_mean"].is_number());
}

TEST_CASE("fold benchmark reports divergence instead of infinities") {
  const auto dir = temp_dir();
  std::string csv = "x1,x2,y\n";
  for (int i = 0; i < 10; ++i) {
    const double v = 0.1 * (i + 1);
    csv += std::to_string(v) + "," + std::to_string(1.0 - v) + "," +
           (i == 0 ? std::string("0") : std::to_string(v)) + "\n";
  }
  const auto path = write_file(dir, "folds.csv", csv);
  const auto cfg = hlr::config_from_json(
      json{{"task", "folds-bench"},
           {"data", {{"path", path}, {"view_dims", json::array({2})}}},
           {"folds", 2},
           {"hlr", {{"gamma", 0.0}, {"refinements", 0}}}});
  const json report = hlr::run_experiment(cfg);
  REQUIRE(report["runs"].size() == 2);
  int null_mre = 0;
  for (const auto& run : report["runs"]) {
    CHECK(run["metrics"]["mae"].is_number());
    CHECK(run["metrics"]["mse"].is_number());
    if (run["metrics"]["mre"].is_null()) {
      ++null_mre;
      CHECK(run["metrics"]["mre_note"].get<std::string>().find("zero target") !=
            std::string::npos);
    }
  }
  CHECK(null_mre == 1);  // exactly the fold holding the zero-target row
  CHECK(report["aggregate"]["mae_mean"].is_number());
  CHECK(report["aggregate"]["mre_mean"].is_null());
  CHECK(report["aggregate"].contains("mre_note"));
}

TEST_CASE("binary flip comparison stays within meaningful bounds") {
  const auto cfg = hlr::config_from_json(
      json{{"task", "noisy-binary"},
           {"generator", {{"n", 50}, {"dim", 2}, {"test_size", 80}}},
           {"reps", 2},
           {"seed", 11}});
  const json report = hlr::run_experiment(cfg);
  REQUIRE(report["runs"].size() == 2);
  for (const auto& run : report["runs"]) {
    const double acc = run["hlr_accuracy"].get<double>();
    CHECK(acc >= 0.0);
    CHECK(acc <= 1.0);
    CHECK(run["flipped_count"].get<int>() <= 50);
  }
  CHECK(report["aggregate"]["hlr_accuracy_mean"].is_number());
  CHECK(report["aggregate"]["dice_mean"].is_number());
}

TEST_CASE("fit and predict round-trip through model and prediction files") {
  const auto dir = temp_dir();
  std::string csv;
  for (int i = 0; i < 12; ++i) {
    const double x = 0.1 * i;
    csv += std::to_string(x) + "," + std::to_string(0.5 * x) + "\n";
  }
  const auto data_path = write_file(dir, "train.csv", csv);
  const auto model_path = (dir / "model.json").string();
  const auto pred_path = (dir / "pred.csv").string();

  const auto fit_cfg = hlr::config_from_json(
      json{{"task", "fit"},
           {"data", {{"path", data_path}, {"view_dims", json::array({1})}}},
           {"model", model_path},
           {"hlr", {{"lambda", 1e-6}}}});
  const json fit_report = hlr::run_fit(fit_cfg);
  CHECK(fit_report["metrics"]["mae"].get<double>() < 1e-3);
  CHECK(std::filesystem::exists(model_path));

  const auto pred_cfg = hlr::config_from_json(
      json{{"task", "predict"},
           {"data", {{"path", data_path}, {"view_dims", json::array({1})}}},
           {"model", model_path},
           {"predictions", pred_path}});
  const json pred_report = hlr::run_predict(pred_cfg);
  CHECK(pred_report["predicted"] == 12);
  CHECK(pred_report["metrics"]["mae"].get<double>() < 1e-3);

  std::ifstream in(pred_path);
  REQUIRE(in.good());
  std::string line;
  int lines = 0;
  std::getline(in, line);
  CHECK(line == "truth,prediction");
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 12);
}

TEST_CASE("kernel count must match the view count") {
  const auto dir = temp_dir();
  const auto path = write_file(dir, "two_view.csv",
                               "0.1,0.2,0.3,1.0\n0.4,0.5,0.6,2.0\n"
                               "0.7,0.8,0.9,3.0\n");
  const auto cfg = hlr::config_from_json(
      json{{"task", "fit"},
           {"data", {{"path", path}, {"view_dims", json::array({2, 1})}}},
           {"kernels", json::array({json{{"kind", "linear"}},
                                    json{{"kind", "linear"}},
                                    json{{"kind", "linear"}}})},
           {"hlr", {{"gamma", 0.0}}}});
  CHECK_THROWS_AS(hlr::run_fit(cfg), hlr::ConfigError);
}
