#include "hlr/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "hlr/errors.hpp"
#include "hlr/kernel.hpp"

namespace hlr {

ManifoldSpec ManifoldSpec::none() { return ManifoldSpec{}; }

ManifoldSpec ManifoldSpec::knn(int neighbors, double bandwidth,
                               bool normalized) {
  ManifoldSpec s;
  s.kind = Kind::Knn;
  s.neighbors = neighbors;
  s.bandwidth = bandwidth;
  s.normalized = normalized;
  s.validate();
  return s;
}

ManifoldSpec ManifoldSpec::explicit_csv(std::vector<std::string> paths, bool) {
  ManifoldSpec s;
  s.kind = Kind::Explicit;
  s.paths = std::move(paths);
  s.validate();
  return s;
}

void ManifoldSpec::validate() const {
  switch (kind) {
    case Kind::None:
      return;
    case Kind::Knn:
      if (neighbors < 1) {
        throw std::invalid_argument("manifold neighbors must be >= 1");
      }
      if (!(bandwidth >= 0.0) || !std::isfinite(bandwidth)) {
        throw std::invalid_argument("manifold bandwidth must be >= 0");
      }
      return;
    case Kind::Explicit:
      if (paths.empty()) {
        throw std::invalid_argument("explicit manifold needs one CSV per view");
      }
      return;
  }
  throw std::invalid_argument("unknown manifold kind");
}

Eigen::MatrixXd knn_adjacency(const std::vector<Eigen::VectorXd>& points,
                              int k, double bandwidth) {
  const int n = static_cast<int>(points.size());
  if (n < 2) throw std::invalid_argument("knn_adjacency: need >= 2 points");
  if (k < 1 || k >= n) {
    throw std::invalid_argument("knn_adjacency: k must satisfy 0 < k < n, got k=" +
                                std::to_string(k) + ", n=" + std::to_string(n));
  }
  Eigen::MatrixXd dist(n, n);
  for (int i = 0; i < n; ++i) {
    dist(i, i) = 0.0;
    for (int j = i + 1; j < n; ++j) {
      const double d = (points[static_cast<std::size_t>(i)] -
                        points[static_cast<std::size_t>(j)])
                           .norm();
      dist(i, j) = d;
      dist(j, i) = d;
    }
  }
  double bw = bandwidth;
  if (bw == 0.0) {
    std::vector<double> pd;
    pd.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) pd.push_back(dist(i, j));
    }
    auto mid = pd.begin() + static_cast<std::ptrdiff_t>(pd.size() / 2);
    std::nth_element(pd.begin(), mid, pd.end());
    bw = *mid;
    if (bw <= 0.0) {
      throw std::invalid_argument(
          "knn_adjacency: median pairwise distance is zero; supply a bandwidth");
    }
  }
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::iota(order.begin(), order.end(), 0);
    // Stable tie handling: sort by (distance, index), skip self.
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (dist(i, a) != dist(i, b)) return dist(i, a) < dist(i, b);
      return a < b;
    });
    int picked = 0;
    for (int j : order) {
      if (j == i) continue;
      w(i, j) = std::exp(-dist(i, j) * dist(i, j) / (2.0 * bw * bw));
      if (++picked == k) break;
    }
  }
  // Symmetrize by elementwise max; diagonal stays zero.
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double v = std::max(w(i, j), w(j, i));
      w(i, j) = v;
      w(j, i) = v;
    }
    w(i, i) = 0.0;
  }
  return w;
}

Eigen::MatrixXd laplacian(const Eigen::MatrixXd& adjacency, bool normalized) {
  if (adjacency.rows() != adjacency.cols()) {
    throw std::invalid_argument("laplacian: adjacency not square");
  }
  const Eigen::Index n = adjacency.rows();
  const double scale = std::max(1.0, adjacency.cwiseAbs().maxCoeff());
  if ((adjacency - adjacency.transpose()).cwiseAbs().maxCoeff() >
      1e-12 * scale) {
    throw std::invalid_argument("laplacian: adjacency not symmetric");
  }
  if (adjacency.minCoeff() < 0.0) {
    throw std::invalid_argument("laplacian: adjacency has negative weights");
  }
  const Eigen::VectorXd deg = adjacency.rowwise().sum();
  if (!normalized) {
    Eigen::MatrixXd l = -adjacency;
    l.diagonal() += deg;
    return l;
  }
  Eigen::VectorXd dinv_sqrt(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    dinv_sqrt[i] = deg[i] > 0.0 ? 1.0 / std::sqrt(deg[i]) : 0.0;
  }
  Eigen::MatrixXd l =
      -(dinv_sqrt.asDiagonal() * adjacency * dinv_sqrt.asDiagonal());
  l.diagonal().array() += 1.0;
  return l;
}

void validate_manifold_block(const Eigen::MatrixXd& m, int view) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument("manifold view " + std::to_string(view) +
                                ": matrix not square");
  }
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale) {
    throw std::invalid_argument("manifold view " + std::to_string(view) +
                                ": matrix not symmetric (max asymmetry " +
                                std::to_string(asym) + ")");
  }
  if (!is_positive_semidefinite(m, 1e-8)) {
    throw std::invalid_argument("manifold view " + std::to_string(view) +
                                ": matrix not positive semidefinite");
  }
}

ManifoldOperator assemble_manifold(const std::vector<MultiViewSample>& samples,
                                   const ManifoldSpec& spec) {
  spec.validate();
  ManifoldOperator op;
  if (spec.kind == ManifoldSpec::Kind::None) return op;
  if (samples.empty()) {
    throw std::invalid_argument("assemble_manifold: no samples");
  }
  const int m = samples.front().view_count();
  const int n = static_cast<int>(samples.size());
  if (spec.kind == ManifoldSpec::Kind::Knn) {
    for (int a = 0; a < m; ++a) {
      std::vector<Eigen::VectorXd> pts;
      pts.reserve(static_cast<std::size_t>(n));
      for (const auto& s : samples) {
        pts.push_back(s.views[static_cast<std::size_t>(a)]);
      }
      const Eigen::MatrixXd w =
          knn_adjacency(pts, spec.neighbors, spec.bandwidth);
      // Laplacians of a symmetric nonnegative graph are PSD by construction;
      // only the cheap symmetry check is repeated here.
      op.per_view.push_back(laplacian(w, spec.normalized));
    }
    return op;
  }
  // Explicit matrices: fully validated, they come from outside.
  if (static_cast<int>(spec.paths.size()) != m) {
    throw std::invalid_argument("explicit manifold: " +
                                std::to_string(spec.paths.size()) +
                                " CSVs for " + std::to_string(m) + " views");
  }
  for (int a = 0; a < m; ++a) {
    Eigen::MatrixXd mat =
        load_matrix_csv(spec.paths[static_cast<std::size_t>(a)]);
    if (mat.rows() != n) {
      throw std::invalid_argument(
          "explicit manifold view " + std::to_string(a) + ": matrix is " +
          std::to_string(mat.rows()) + "x" + std::to_string(mat.cols()) +
          ", expected " + std::to_string(n) + "x" + std::to_string(n));
    }
    validate_manifold_block(mat, a);
    op.per_view.push_back(std::move(mat));
  }
  return op;
}

}  // namespace hlr
