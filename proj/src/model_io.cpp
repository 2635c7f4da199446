#include "hlr/model_io.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <stdexcept>

#include "hlr/errors.hpp"

namespace hlr {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& where) {
  if (!obj.is_object()) throw DataError(where + ": expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw DataError(where + ": unknown key '" + it.key() + "'");
    }
  }
}

std::string hexfloat(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v,
                                 std::chars_format::hex);
  return std::string(buf, ptr);
}

double parse_hexfloat(const std::string& s, const std::string& where) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto [ptr, ec] =
      std::from_chars(begin, end, v, std::chars_format::hex);
  if (ec != std::errc() || ptr != end) {
    throw DataError(where + ": bad hexfloat '" + s + "'");
  }
  return v;
}

}  // namespace

json kernel_to_json(const KernelSpec& spec) {
  json j;
  j["kind"] = spec.name();
  if (spec.kind == KernelSpec::Kind::Polynomial) {
    j["degree"] = spec.degree;
    j["offset"] = spec.offset;
  } else if (spec.kind == KernelSpec::Kind::Gaussian) {
    j["bandwidth"] = spec.bandwidth;
  }
  return j;
}

KernelSpec kernel_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    throw DataError("kernel: expected an object with a 'kind' string");
  }
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "linear") {
    check_keys(j, {"kind"}, "kernel(linear)");
    return KernelSpec::linear();
  }
  if (kind == "polynomial") {
    check_keys(j, {"kind", "degree", "offset"}, "kernel(polynomial)");
    if (!j.contains("degree") || !j["degree"].is_number_integer()) {
      throw DataError("kernel(polynomial): integer 'degree' required");
    }
    const double offset = j.value("offset", 0.0);
    return KernelSpec::polynomial(j["degree"].get<int>(), offset);
  }
  if (kind == "gaussian") {
    check_keys(j, {"kind", "bandwidth"}, "kernel(gaussian)");
    if (!j.contains("bandwidth") || !j["bandwidth"].is_number()) {
      throw DataError("kernel(gaussian): numeric 'bandwidth' required");
    }
    return KernelSpec::gaussian(j["bandwidth"].get<double>());
  }
  throw DataError("kernel: unknown kind '" + kind + "'");
}

json manifold_spec_to_json(const ManifoldSpec& spec) {
  json j;
  switch (spec.kind) {
    case ManifoldSpec::Kind::None:
      j["kind"] = "none";
      break;
    case ManifoldSpec::Kind::Knn:
      j["kind"] = "knn";
      j["neighbors"] = spec.neighbors;
      j["bandwidth"] = spec.bandwidth;
      j["normalized"] = spec.normalized;
      break;
    case ManifoldSpec::Kind::Explicit:
      j["kind"] = "explicit";
      j["paths"] = spec.paths;
      break;
  }
  return j;
}

ManifoldSpec manifold_spec_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    throw DataError("manifold: expected an object with a 'kind' string");
  }
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "none") {
    check_keys(j, {"kind"}, "manifold(none)");
    return ManifoldSpec::none();
  }
  if (kind == "knn") {
    check_keys(j, {"kind", "neighbors", "bandwidth", "normalized"},
               "manifold(knn)");
    ManifoldSpec s;
    s.kind = ManifoldSpec::Kind::Knn;
    s.neighbors = j.value("neighbors", 6);
    s.bandwidth = j.value("bandwidth", 0.0);
    s.normalized = j.value("normalized", true);
    s.validate();
    return s;
  }
  if (kind == "explicit") {
    check_keys(j, {"kind", "paths"}, "manifold(explicit)");
    if (!j.contains("paths") || !j["paths"].is_array()) {
      throw DataError("manifold(explicit): 'paths' array required");
    }
    ManifoldSpec s;
    s.kind = ManifoldSpec::Kind::Explicit;
    for (const auto& p : j["paths"]) {
      if (!p.is_string()) {
        throw DataError("manifold(explicit): paths must be strings");
      }
      s.paths.push_back(p.get<std::string>());
    }
    s.validate();
    return s;
  }
  throw DataError("manifold: unknown kind '" + kind + "'");
}

json model_to_json(const HlrModel& model) {
  json j;
  j["format"] = "hlr-model";
  j["version"] = 1;
  json kernels = json::array();
  for (const auto& k : model.kernels) kernels.push_back(kernel_to_json(k));
  j["kernels"] = kernels;
  j["view_weights"] = std::vector<double>(
      model.view_weights.data(),
      model.view_weights.data() + model.view_weights.size());
  j["config"] = {{"lambda", model.config.lambda},
                 {"gamma", model.config.gamma},
                 {"delta_xi", model.config.delta_xi},
                 {"refinements", model.config.refinements}};
  j["xi_history"] = model.xi_history;
  json removed = json::array();
  for (const auto& r : model.removed) {
    removed.push_back({{"index", r.index}, {"refinement", r.refinement}});
  }
  j["removed"] = removed;
  json support = json::array();
  for (const auto& s : model.support) {
    json views = json::array();
    for (const auto& v : s.views) {
      views.push_back(std::vector<double>(v.data(), v.data() + v.size()));
    }
    support.push_back(views);
  }
  j["support"] = support;
  json w = json::array();
  for (Eigen::Index a = 0; a < model.w.cols(); ++a) {
    json col = json::array();
    for (Eigen::Index i = 0; i < model.w.rows(); ++i) {
      col.push_back(hexfloat(model.w(i, a)));
    }
    w.push_back(col);
  }
  j["w"] = w;
  return j;
}

HlrModel model_from_json(const json& j) {
  check_keys(j,
             {"format", "version", "kernels", "view_weights", "config",
              "xi_history", "removed", "support", "w"},
             "model");
  if (j.value("format", "") != "hlr-model") {
    throw DataError("model: missing or wrong 'format' tag");
  }
  if (j.value("version", 0) != 1) {
    throw DataError("model: unsupported version");
  }
  HlrModel model;
  for (const auto& k : j.at("kernels")) {
    model.kernels.push_back(kernel_from_json(k));
  }
  const int m = static_cast<int>(model.kernels.size());
  if (m == 0) throw DataError("model: no kernels");

  const auto& vw = j.at("view_weights");
  if (!vw.is_array() || static_cast<int>(vw.size()) != m) {
    throw DataError("model: view_weights size mismatch");
  }
  model.view_weights.resize(m);
  for (int a = 0; a < m; ++a) model.view_weights[a] = vw[a].get<double>();

  const auto& cfg = j.at("config");
  check_keys(cfg, {"lambda", "gamma", "delta_xi", "refinements"},
             "model.config");
  model.config.lambda = cfg.at("lambda").get<double>();
  model.config.gamma = cfg.at("gamma").get<double>();
  model.config.delta_xi = cfg.at("delta_xi").get<double>();
  model.config.refinements = cfg.at("refinements").get<int>();
  model.config.view_weights = model.view_weights;

  model.xi_history = j.at("xi_history").get<std::vector<double>>();
  for (const auto& r : j.at("removed")) {
    check_keys(r, {"index", "refinement"}, "model.removed");
    model.removed.push_back(
        {r.at("index").get<int>(), r.at("refinement").get<int>()});
  }

  const auto& support = j.at("support");
  if (!support.is_array() || support.empty()) {
    throw DataError("model: empty support");
  }
  for (const auto& s : support) {
    if (!s.is_array() || static_cast<int>(s.size()) != m) {
      throw DataError("model: support sample view count mismatch");
    }
    MultiViewSample sample;
    for (const auto& v : s) {
      const auto vals = v.get<std::vector<double>>();
      sample.views.push_back(Eigen::Map<const Eigen::VectorXd>(
          vals.data(), static_cast<Eigen::Index>(vals.size())));
    }
    model.support.push_back(std::move(sample));
  }
  const int n = static_cast<int>(model.support.size());

  const auto& w = j.at("w");
  if (!w.is_array() || static_cast<int>(w.size()) != m) {
    throw DataError("model: w must hold one column per view");
  }
  model.w.resize(n, m);
  for (int a = 0; a < m; ++a) {
    const auto& col = w[a];
    if (!col.is_array() || static_cast<int>(col.size()) != n) {
      throw DataError("model: w column " + std::to_string(a) +
                      " has wrong length");
    }
    for (int i = 0; i < n; ++i) {
      model.w(i, a) =
          parse_hexfloat(col[i].get<std::string>(), "model.w");
    }
  }
  return model;
}

void save_model(const HlrModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("failed to open model file for writing: " + path);
  out << model_to_json(model).dump(2) << '\n';
  if (!out) throw DataError("failed while writing model file: " + path);
}

HlrModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("failed to open model file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("model file " + path + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace hlr
