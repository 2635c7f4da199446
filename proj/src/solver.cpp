#include "hlr/solver.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "hlr/errors.hpp"
#include "hlr/loss.hpp"

namespace hlr {

void HlrConfig::validate(int views) const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("lambda must be finite and > 0");
  }
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw std::invalid_argument("gamma must be finite and >= 0");
  }
  if (refinements < 0) {
    throw std::invalid_argument("refinements must be >= 0");
  }
  if (refinements > 0 && (!(delta_xi > 0.0) || !std::isfinite(delta_xi))) {
    throw std::invalid_argument("delta_xi must be finite and > 0");
  }
  if (view_weights.size() != 0) {
    if (view_weights.size() != views) {
      throw std::invalid_argument("view_weights has size " +
                                  std::to_string(view_weights.size()) +
                                  ", expected " + std::to_string(views));
    }
    for (Eigen::Index a = 0; a < view_weights.size(); ++a) {
      if (!(view_weights[a] > 0.0) || !std::isfinite(view_weights[a])) {
        throw std::invalid_argument("view_weights entries must be > 0");
      }
    }
  }
}

Eigen::VectorXd HlrConfig::resolved_weights(int views) const {
  if (view_weights.size() != 0) return view_weights;
  return Eigen::VectorXd::Constant(views, 1.0 / static_cast<double>(views));
}

Eigen::VectorXd decision_values(const GramBlocks& gram,
                                const Eigen::VectorXd& c,
                                const Eigen::MatrixXd& w) {
  if (gram.m == 0 || gram.n == 0) {
    throw std::invalid_argument("decision_values: empty gram");
  }
  if (c.size() != gram.m || w.rows() != gram.n || w.cols() != gram.m) {
    throw std::invalid_argument("decision_values: shape mismatch");
  }
  Eigen::VectorXd preds = Eigen::VectorXd::Zero(gram.n);
  for (int a = 0; a < gram.m; ++a) {
    preds.noalias() +=
        c[a] * (gram.per_view[static_cast<std::size_t>(a)] * w.col(a));
  }
  return preds;
}

double decision_value(const std::vector<Eigen::VectorXd>& kernel_rows,
                      const Eigen::VectorXd& c, const Eigen::MatrixXd& w) {
  if (static_cast<Eigen::Index>(kernel_rows.size()) != c.size() ||
      w.cols() != c.size()) {
    throw std::invalid_argument("decision_value: view count mismatch");
  }
  double v = 0.0;
  for (Eigen::Index a = 0; a < c.size(); ++a) {
    v += c[a] * kernel_rows[static_cast<std::size_t>(a)].dot(w.col(a));
  }
  return v;
}

namespace {

int retained_count(const Dataset& ds, const std::vector<char>& retained) {
  if (retained.size() != static_cast<std::size_t>(ds.size())) {
    throw std::invalid_argument("retained mask size mismatch");
  }
  int l = 0;
  for (int i = 0; i < ds.size(); ++i) {
    if (retained[static_cast<std::size_t>(i)]) {
      if (i >= ds.label_count()) {
        throw std::invalid_argument("retained mask set on unlabelled sample " +
                                    std::to_string(i));
      }
      ++l;
    }
  }
  return l;
}

// Per-view blocks 2 lambda I + 2 gamma M^a G^a; the l scaling is applied at
// assembly time so one cache serves every retained-count.
struct SystemCache {
  std::vector<Eigen::MatrixXd> base;
};

SystemCache make_cache(const GramBlocks& gram, const ManifoldOperator* manifold,
                       const HlrConfig& config) {
  const int n = gram.n;
  const bool use_manifold = config.gamma > 0.0;
  if (use_manifold) {
    if (manifold == nullptr ||
        manifold->view_count() != gram.m) {
      throw std::invalid_argument(
          "gamma > 0 requires one manifold block per view");
    }
    for (int a = 0; a < gram.m; ++a) {
      const auto& mb = manifold->per_view[static_cast<std::size_t>(a)];
      if (mb.rows() != n || mb.cols() != n) {
        throw std::invalid_argument("manifold view " + std::to_string(a) +
                                    " has wrong shape");
      }
    }
  }
  SystemCache cache;
  cache.base.reserve(static_cast<std::size_t>(gram.m));
  for (int a = 0; a < gram.m; ++a) {
    Eigen::MatrixXd block =
        2.0 * config.lambda * Eigen::MatrixXd::Identity(n, n);
    if (use_manifold) {
      block.noalias() += 2.0 * config.gamma *
                         (manifold->per_view[static_cast<std::size_t>(a)] *
                          gram.per_view[static_cast<std::size_t>(a)]);
    }
    cache.base.push_back(std::move(block));
  }
  return cache;
}

SystemMatrices assemble_from_cache(const SystemCache& cache,
                                   const GramBlocks& gram,
                                   const HlrConfig& config, const Dataset& ds,
                                   const std::vector<char>& retained,
                                   const PartitionSets& partition, double xi) {
  const int n = gram.n;
  const int m = gram.m;
  if (ds.size() != n) {
    throw std::invalid_argument("assemble_system: dataset/gram size mismatch");
  }
  const int l = retained_count(ds, retained);
  if (partition.total() != l) {
    throw std::invalid_argument(
        "assemble_system: partition does not cover the retained labels");
  }
  if (l == 0) throw std::invalid_argument("assemble_system: no labels");
  if (!partition.plus.empty() || !partition.minus.empty()) {
    if (!(xi > 0.0) || !std::isfinite(xi)) {
      throw std::invalid_argument(
          "assemble_system: xi must be finite and > 0 with saturated labels");
    }
  }
  const Eigen::VectorXd c = config.resolved_weights(m);
  const double dl = static_cast<double>(l);

  SystemMatrices sys;
  sys.lhs = Eigen::MatrixXd::Zero(n * m, n * m);
  sys.rhs = Eigen::VectorXd::Zero(n * m);
  for (int a = 0; a < m; ++a) {
    sys.lhs.block(a * n, a * n, n, n) =
        dl * cache.base[static_cast<std::size_t>(a)];
  }
  // Quadratic-piece labels couple every view pair through the prediction.
  for (int i : partition.zero) {
    for (int a = 0; a < m; ++a) {
      for (int b = 0; b < m; ++b) {
        sys.lhs.row(a * n + i).segment(b * n, n) +=
            c[a] * c[b] * gram.per_view[static_cast<std::size_t>(b)].row(i);
      }
    }
  }
  auto set_rhs = [&](int i, double value) {
    for (int a = 0; a < m; ++a) sys.rhs[a * n + i] = value * c[a];
  };
  for (int i : partition.plus) set_rhs(i, -xi);
  for (int i : partition.zero) set_rhs(i, ds.labels[static_cast<std::size_t>(i)]);
  for (int i : partition.minus) set_rhs(i, xi);
  return sys;
}

}  // namespace

PartitionSets compute_partition(const Dataset& ds,
                                const std::vector<char>& retained,
                                const Eigen::VectorXd& predictions,
                                double xi) {
  if (predictions.size() != ds.size()) {
    throw std::invalid_argument("compute_partition: prediction size mismatch");
  }
  if (!(xi > 0.0) || !std::isfinite(xi)) {
    throw std::invalid_argument("compute_partition: xi must be finite and > 0");
  }
  retained_count(ds, retained);
  PartitionSets p;
  for (int i = 0; i < ds.label_count(); ++i) {
    if (!retained[static_cast<std::size_t>(i)]) continue;
    const double e = predictions[i] - ds.labels[static_cast<std::size_t>(i)];
    if (e >= xi) {
      p.plus.push_back(i);
    } else if (e <= -xi) {
      p.minus.push_back(i);
    } else {
      p.zero.push_back(i);
    }
  }
  return p;
}

double compute_xi(const Dataset& ds, const std::vector<char>& retained,
                  const Eigen::VectorXd& predictions) {
  if (predictions.size() != ds.size()) {
    throw std::invalid_argument("compute_xi: prediction size mismatch");
  }
  const int l = retained_count(ds, retained);
  if (l == 0) {
    throw std::invalid_argument("compute_xi: no retained labels");
  }
  double worst = 0.0;
  for (int i = 0; i < ds.label_count(); ++i) {
    if (!retained[static_cast<std::size_t>(i)]) continue;
    worst = std::max(
        worst, std::abs(predictions[i] - ds.labels[static_cast<std::size_t>(i)]));
  }
  return worst;
}

SystemMatrices assemble_system(const GramBlocks& gram,
                               const ManifoldOperator* manifold,
                               const HlrConfig& config, const Dataset& ds,
                               const std::vector<char>& retained,
                               const PartitionSets& partition, double xi) {
  config.validate(gram.m);
  return assemble_from_cache(make_cache(gram, manifold, config), gram, config,
                             ds, retained, partition, xi);
}

Eigen::VectorXd solve_linear(const SystemMatrices& sys) {
  if (sys.lhs.rows() != sys.lhs.cols() || sys.lhs.rows() != sys.rhs.size()) {
    throw std::invalid_argument("solve_linear: shape mismatch");
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(sys.lhs);
  Eigen::VectorXd x = lu.solve(sys.rhs);
  const double tol = 1e-8 * std::max(1.0, sys.rhs.cwiseAbs().maxCoeff());
  // Negated comparisons so a NaN residual (singular factor) fails too.
  double resid = (sys.lhs * x - sys.rhs).cwiseAbs().maxCoeff();
  if (!(resid <= tol)) {
    // One pass of iterative refinement before giving up.
    x += lu.solve(sys.rhs - sys.lhs * x);
    resid = (sys.lhs * x - sys.rhs).cwiseAbs().maxCoeff();
    if (!(resid <= tol)) {
      throw SolverError(
          "linear solve failed: residual " + std::to_string(resid) +
          " exceeds tolerance " + std::to_string(tol) +
          " (reciprocal condition estimate " + std::to_string(lu.rcond()) +
          ")");
    }
  }
  return x;
}

namespace {

Eigen::MatrixXd solve_as_matrix(const SystemCache& cache,
                                const GramBlocks& gram,
                                const HlrConfig& config, const Dataset& ds,
                                const std::vector<char>& retained,
                                const PartitionSets& partition, double xi) {
  const SystemMatrices sys =
      assemble_from_cache(cache, gram, config, ds, retained, partition, xi);
  const Eigen::VectorXd flat = solve_linear(sys);
  // View-major flattening coincides with column-major n x m storage.
  return Eigen::Map<const Eigen::MatrixXd>(flat.data(), gram.n, gram.m);
}

PartitionSets all_zero_partition(const Dataset& ds,
                                 const std::vector<char>& retained) {
  PartitionSets p;
  for (int i = 0; i < ds.label_count(); ++i) {
    if (retained[static_cast<std::size_t>(i)]) p.zero.push_back(i);
  }
  return p;
}

HlrState initial_solve_cached(const SystemCache& cache, const Dataset& ds,
                              const GramBlocks& gram, const HlrConfig& config) {
  HlrState state;
  state.retained = ds.label_mask;
  const PartitionSets p = all_zero_partition(ds, state.retained);
  if (p.zero.empty()) {
    throw std::invalid_argument("initial_solve: dataset has no labels");
  }
  state.w =
      solve_as_matrix(cache, gram, config, ds, state.retained, p, 0.0);
  const Eigen::VectorXd c = config.resolved_weights(gram.m);
  state.xi = compute_xi(ds, state.retained, decision_values(gram, c, state.w));
  state.tau = 0;
  return state;
}

bool refine_step_cached(const SystemCache& cache, HlrState& state,
                        const Dataset& ds, const GramBlocks& gram,
                        const HlrConfig& config,
                        std::vector<RemovalRecord>& removals) {
  const double xi_new = state.xi - config.delta_xi;
  if (!(xi_new > 0.0)) return true;
  const Eigen::VectorXd c = config.resolved_weights(gram.m);

  // Solve at the partition the current coefficients induce at xi_new.
  std::vector<char> mask = state.retained;
  const PartitionSets induced = compute_partition(
      ds, mask, decision_values(gram, c, state.w), xi_new);
  Eigen::MatrixXd w =
      solve_as_matrix(cache, gram, config, ds, mask, induced, xi_new);

  // Re-partition at the new coefficients; saturated labels leave the pool.
  const PartitionSets after =
      compute_partition(ds, mask, decision_values(gram, c, w), xi_new);
  if (after.zero.empty()) return true;
  std::vector<int> dropped;
  for (int i : after.plus) dropped.push_back(i);
  for (int i : after.minus) dropped.push_back(i);
  for (int i : dropped) mask[static_cast<std::size_t>(i)] = 0;

  // Consolidate: refit the survivors inside the quadratic piece, shedding
  // any label whose error reaches xi_new, until fit and partition agree.
  // Each pass removes at least one label, so this terminates. Agreement is
  // what makes the committed pair (w, xi) exactly stationary.
  double xi_out = 0.0;
  while (true) {
    const PartitionSets p = all_zero_partition(ds, mask);
    if (p.zero.empty()) return true;
    w = solve_as_matrix(cache, gram, config, ds, mask, p, 0.0);
    const Eigen::VectorXd preds = decision_values(gram, c, w);
    std::vector<int> out;
    double worst = 0.0;
    for (int i : p.zero) {
      const double err =
          std::abs(preds[i] - ds.labels[static_cast<std::size_t>(i)]);
      if (err >= xi_new) {
        out.push_back(i);
      } else {
        worst = std::max(worst, err);
      }
    }
    if (out.empty()) {
      xi_out = worst;
      break;
    }
    for (int i : out) {
      mask[static_cast<std::size_t>(i)] = 0;
      dropped.push_back(i);
    }
  }

  std::sort(dropped.begin(), dropped.end());
  for (int i : dropped) removals.push_back({i, state.tau + 1});
  state.w = std::move(w);
  state.retained = std::move(mask);
  state.xi = xi_out;
  state.tau += 1;
  return false;
}

}  // namespace

HlrState initial_solve(const Dataset& ds, const GramBlocks& gram,
                       const ManifoldOperator* manifold,
                       const HlrConfig& config) {
  ds.validate();
  config.validate(gram.m);
  return initial_solve_cached(make_cache(gram, manifold, config), ds, gram,
                              config);
}

bool refine_step(HlrState& state, const Dataset& ds, const GramBlocks& gram,
                 const ManifoldOperator* manifold, const HlrConfig& config,
                 std::vector<RemovalRecord>& removals) {
  ds.validate();
  config.validate(gram.m);
  return refine_step_cached(make_cache(gram, manifold, config), state, ds,
                            gram, config, removals);
}

HlrModel fit(const Dataset& ds, const std::vector<KernelSpec>& kernels,
             const ManifoldOperator* manifold, const HlrConfig& config) {
  ds.validate();
  const GramBlocks gram = build_gram(kernels, ds.samples);
  config.validate(gram.m);
  const SystemCache cache = make_cache(gram, manifold, config);

  HlrState state = initial_solve_cached(cache, ds, gram, config);
  HlrModel model;
  model.xi_history.push_back(state.xi);
  for (int t = 0; t < config.refinements; ++t) {
    if (refine_step_cached(cache, state, ds, gram, config, model.removed)) {
      break;
    }
    model.xi_history.push_back(state.xi);
  }
  model.w = std::move(state.w);
  model.support = ds.samples;
  model.kernels = kernels;
  model.view_weights = config.resolved_weights(gram.m);
  model.config = config;
  return model;
}

double predict(const HlrModel& model, const MultiViewSample& query) {
  const auto rows = cross_gram(model.kernels, model.support, query);
  return decision_value(rows, model.view_weights, model.w);
}

Eigen::VectorXd predict_batch(const HlrModel& model,
                              const std::vector<MultiViewSample>& queries) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(queries.size()));
  for (std::size_t i = 0; i < queries.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = predict(model, queries[i]);
  }
  return out;
}

int predict_sign(const HlrModel& model, const MultiViewSample& query) {
  return predict(model, query) >= 0.0 ? 1 : -1;
}

double objective_value(const Dataset& ds, const std::vector<char>& retained,
                       const GramBlocks& gram, const ManifoldOperator* manifold,
                       const HlrConfig& config, const Eigen::MatrixXd& w,
                       double xi) {
  config.validate(gram.m);
  const int l = retained_count(ds, retained);
  if (l == 0) throw std::invalid_argument("objective_value: no labels");
  const HuberThreshold thr(xi);
  const Eigen::VectorXd c = config.resolved_weights(gram.m);
  const Eigen::VectorXd preds = decision_values(gram, c, w);
  double risk = 0.0;
  for (int i = 0; i < ds.label_count(); ++i) {
    if (!retained[static_cast<std::size_t>(i)]) continue;
    risk += huber(thr, ds.labels[static_cast<std::size_t>(i)] - preds[i]);
  }
  risk /= static_cast<double>(l);
  double ambient = 0.0;
  double smooth = 0.0;
  for (int a = 0; a < gram.m; ++a) {
    const Eigen::VectorXd gw =
        gram.per_view[static_cast<std::size_t>(a)] * w.col(a);
    ambient += w.col(a).dot(gw);
    if (config.gamma > 0.0) {
      smooth += gw.dot(manifold->per_view[static_cast<std::size_t>(a)] * gw);
    }
  }
  return risk + config.lambda * ambient + config.gamma * smooth;
}

Eigen::VectorXd stationarity_residual(const Dataset& ds,
                                      const std::vector<char>& retained,
                                      const GramBlocks& gram,
                                      const ManifoldOperator* manifold,
                                      const HlrConfig& config,
                                      const Eigen::MatrixXd& w, double xi) {
  config.validate(gram.m);
  const int l = retained_count(ds, retained);
  if (l == 0) throw std::invalid_argument("stationarity_residual: no labels");
  const HuberThreshold thr(xi);
  const Eigen::VectorXd c = config.resolved_weights(gram.m);
  const Eigen::VectorXd preds = decision_values(gram, c, w);
  const int n = gram.n;
  Eigen::VectorXd psi(n * gram.m);
  for (int a = 0; a < gram.m; ++a) {
    Eigen::VectorXd seg = 2.0 * config.lambda * w.col(a);
    if (config.gamma > 0.0) {
      if (manifold == nullptr || manifold->view_count() != gram.m) {
        throw std::invalid_argument(
            "gamma > 0 requires one manifold block per view");
      }
      seg.noalias() += 2.0 * config.gamma *
                       (manifold->per_view[static_cast<std::size_t>(a)] *
                        (gram.per_view[static_cast<std::size_t>(a)] * w.col(a)));
    }
    for (int i = 0; i < ds.label_count(); ++i) {
      if (!retained[static_cast<std::size_t>(i)]) continue;
      const double resid = ds.labels[static_cast<std::size_t>(i)] - preds[i];
      seg[i] -= huber_deriv(thr, resid) * c[a] / static_cast<double>(l);
    }
    psi.segment(a * n, n) = seg;
  }
  return psi;
}

}  // namespace hlr
