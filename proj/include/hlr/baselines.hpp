#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "hlr/data.hpp"
#include "hlr/kernel.hpp"
#include "hlr/manifold.hpp"
#include "hlr/solver.hpp"

namespace hlr {

// Single-view kernel ridge fit over the labelled samples:
// (G + 2 l lambda I) alpha = y. The scaling matches the quadratic
// reduction of the main solver (single view, gamma = 0, no refinements).
struct RidgeModel {
  Eigen::VectorXd alpha;
  std::vector<MultiViewSample> support;  // labelled samples only
  KernelSpec kernel;
};

RidgeModel kernel_ridge(const Dataset& ds, const KernelSpec& kernel,
                        double lambda);
double ridge_predict(const RidgeModel& model, const MultiViewSample& query);

// Pure quadratic-loss variant: the main pipeline with zero refinements.
HlrModel quadratic_mr(const Dataset& ds, const std::vector<KernelSpec>& kernels,
                      const ManifoldOperator* manifold, const HlrConfig& config);

// Central differences, componentwise: (f(x + h e_i) - f(x - h e_i)) / (2h).
Eigen::VectorXd finite_difference_gradient(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& point, double step);

}  // namespace hlr
