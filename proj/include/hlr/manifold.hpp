#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "hlr/data.hpp"

namespace hlr {

// How the per-view smoothness operators are obtained.
struct ManifoldSpec {
  enum class Kind { None, Knn, Explicit };

  Kind kind = Kind::None;
  int neighbors = 6;
  double bandwidth = 0.0;  // 0 selects the median pairwise distance
  bool normalized = true;
  std::vector<std::string> paths;  // explicit matrices, one CSV per view

  static ManifoldSpec none();
  static ManifoldSpec knn(int neighbors, double bandwidth, bool normalized);
  static ManifoldSpec explicit_csv(std::vector<std::string> paths,
                                   bool normalized_ignored = false);
  void validate() const;
};

// One symmetric PSD matrix per view, all n x n.
struct ManifoldOperator {
  std::vector<Eigen::MatrixXd> per_view;
  int view_count() const { return static_cast<int>(per_view.size()); }
};

// Gaussian-weighted k-nearest-neighbour graph: directed weights
// exp(-|xi-xj|^2 / (2 bw^2)) to each of the k nearest points, symmetrized by
// the elementwise max, zero diagonal. bandwidth == 0 selects the median of
// all pairwise distances. Requires 0 < k < n.
Eigen::MatrixXd knn_adjacency(const std::vector<Eigen::VectorXd>& points,
                              int k, double bandwidth);

// Graph Laplacian of a symmetric nonnegative adjacency. Unnormalized: D - W.
// Normalized: I - D^-1/2 W D^-1/2, where D^-1/2_ii = 0 whenever D_ii = 0
// (an isolated vertex keeps its identity entry).
Eigen::MatrixXd laplacian(const Eigen::MatrixXd& adjacency, bool normalized);

// Symmetry within 1e-12 and min eigenvalue >= -1e-8, both relative to
// max(1, |M|_inf). Throws std::invalid_argument naming the view on failure.
void validate_manifold_block(const Eigen::MatrixXd& m, int view);

// Builds the per-view operators for a sample set: a kNN-graph Laplacian per
// view, or explicit matrices loaded from CSV (validated for shape, symmetry
// and positive semidefiniteness). Kind::None yields no blocks.
ManifoldOperator assemble_manifold(const std::vector<MultiViewSample>& samples,
                                   const ManifoldSpec& spec);

}  // namespace hlr
