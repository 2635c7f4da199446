#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "hlr/data.hpp"

namespace hlr {

// Positive-definite kernel description, one per view.
struct KernelSpec {
  enum class Kind { Linear, Polynomial, Gaussian };

  Kind kind = Kind::Linear;
  int degree = 1;          // polynomial only, >= 1
  double offset = 0.0;     // polynomial only, >= 0
  double bandwidth = 1.0;  // gaussian only, > 0

  static KernelSpec linear();
  static KernelSpec polynomial(int degree, double offset);
  static KernelSpec gaussian(double bandwidth);

  void validate() const;
  std::string name() const;
};

// k(a, b) for one view. Linear: a.b; polynomial: (a.b + offset)^degree;
// gaussian: exp(-|a-b|^2 / (2 bandwidth^2)).
double eval_kernel(const KernelSpec& spec, const Eigen::VectorXd& a,
                   const Eigen::VectorXd& b);

// Per-view Gram matrices over one sample set. Blocks are symmetric by
// construction; positive semidefiniteness follows from the kernel family.
struct GramBlocks {
  std::vector<Eigen::MatrixXd> per_view;
  int n = 0;
  int m = 0;
};

GramBlocks build_gram(const std::vector<KernelSpec>& specs,
                      const std::vector<MultiViewSample>& samples);

// Kernel row between one query and every training sample, per view:
// out[a][j] = k_a(query^a, train_j^a).
std::vector<Eigen::VectorXd> cross_gram(
    const std::vector<KernelSpec>& specs,
    const std::vector<MultiViewSample>& train, const MultiViewSample& query);

// Smallest eigenvalue check used by tests and explicit-matrix validation:
// true iff min eig >= -tol * max(1, |m|_inf). Requires a square matrix.
bool is_positive_semidefinite(const Eigen::MatrixXd& m, double tol);

}  // namespace hlr
