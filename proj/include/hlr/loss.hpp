#pragma once

#include <Eigen/Core>
#include <vector>

namespace hlr {

// Transition point of the Huber loss. Strictly positive and finite; the
// unbounded initial fit is handled by the solver without a sentinel value.
class HuberThreshold {
 public:
  explicit HuberThreshold(double value);
  double value() const { return value_; }

 private:
  double value_;
};

// Huber loss: y^2 / 2 on |y| <= xi, xi * |y| - xi^2 / 2 outside.
double huber(HuberThreshold xi, double y);

// Derivative of the Huber loss: clamps y to [-xi, +xi].
double huber_deriv(HuberThreshold xi, double y);

// Elementwise aggregates over prediction errors. Inputs must be the same
// nonzero length.
double mae(const Eigen::VectorXd& truth, const Eigen::VectorXd& pred);
double mse(const Eigen::VectorXd& truth, const Eigen::VectorXd& pred);

// Mean relative error |pred - truth| / |truth|. Any zero target makes the
// metric meaningless, so it is rejected rather than averaged over infinities.
double mre(const Eigen::VectorXd& truth, const Eigen::VectorXd& pred);

// Dice overlap 2|A n B| / (|A| + |B|) between index sets. Duplicates are
// collapsed. Two empty sets overlap perfectly by convention.
double dice(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace hlr
