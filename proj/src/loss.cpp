#include "hlr/loss.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

namespace hlr {

HuberThreshold::HuberThreshold(double value) : value_(value) {
  if (!std::isfinite(value) || value <= 0.0) {
    throw std::invalid_argument("HuberThreshold must be finite and > 0, got " +
                                std::to_string(value));
  }
}

double huber(HuberThreshold xi, double y) {
  const double x = xi.value();
  const double a = std::abs(y);
  if (a <= x) return 0.5 * y * y;
  return x * a - 0.5 * x * x;
}

double huber_deriv(HuberThreshold xi, double y) {
  const double x = xi.value();
  if (y <= -x) return -x;
  if (y >= x) return x;
  return y;
}

namespace {

void check_pair(const Eigen::VectorXd& truth, const Eigen::VectorXd& pred) {
  if (truth.size() == 0) throw std::invalid_argument("metric over empty vectors");
  if (truth.size() != pred.size()) {
    throw std::invalid_argument("metric size mismatch: " +
                                std::to_string(truth.size()) + " vs " +
                                std::to_string(pred.size()));
  }
}

}  // namespace

double mae(const Eigen::VectorXd& truth, const Eigen::VectorXd& pred) {
  check_pair(truth, pred);
  return (pred - truth).cwiseAbs().mean();
}

double mse(const Eigen::VectorXd& truth, const Eigen::VectorXd& pred) {
  check_pair(truth, pred);
  return (pred - truth).squaredNorm() / static_cast<double>(truth.size());
}

double mre(const Eigen::VectorXd& truth, const Eigen::VectorXd& pred) {
  check_pair(truth, pred);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < truth.size(); ++i) {
    if (truth[i] == 0.0) {
      throw std::invalid_argument(
          "mre diverges: zero target at position " + std::to_string(i));
    }
    acc += std::abs(pred[i] - truth[i]) / std::abs(truth[i]);
  }
  return acc / static_cast<double>(truth.size());
}

double dice(const std::vector<int>& a, const std::vector<int>& b) {
  const std::set<int> sa(a.begin(), a.end());
  const std::set<int> sb(b.begin(), b.end());
  if (sa.empty() && sb.empty()) return 1.0;
  std::size_t inter = 0;
  for (int x : sa) inter += sb.count(x);
  return 2.0 * static_cast<double>(inter) /
         static_cast<double>(sa.size() + sb.size());
}

}  // namespace hlr
