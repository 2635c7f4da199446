#include "hlr/baselines.hpp"

#include <cmath>
#include <stdexcept>

#include "hlr/errors.hpp"

namespace hlr {

RidgeModel kernel_ridge(const Dataset& ds, const KernelSpec& kernel,
                        double lambda) {
  ds.validate();
  if (ds.view_count() != 1) {
    throw std::invalid_argument("kernel_ridge: expects a single view, got " +
                                std::to_string(ds.view_count()));
  }
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("kernel_ridge: lambda must be > 0");
  }
  const int l = ds.label_count();
  if (l == 0) throw std::invalid_argument("kernel_ridge: no labels");
  RidgeModel model;
  model.kernel = kernel;
  model.support.assign(ds.samples.begin(), ds.samples.begin() + l);
  const GramBlocks gram = build_gram({kernel}, model.support);
  Eigen::VectorXd y(l);
  for (int i = 0; i < l; ++i) y[i] = ds.labels[static_cast<std::size_t>(i)];
  SystemMatrices sys;
  sys.lhs = gram.per_view[0] +
            2.0 * static_cast<double>(l) * lambda *
                Eigen::MatrixXd::Identity(l, l);
  sys.rhs = y;
  model.alpha = solve_linear(sys);
  return model;
}

double ridge_predict(const RidgeModel& model, const MultiViewSample& query) {
  const auto rows = cross_gram({model.kernel}, model.support, query);
  return rows[0].dot(model.alpha);
}

HlrModel quadratic_mr(const Dataset& ds, const std::vector<KernelSpec>& kernels,
                      const ManifoldOperator* manifold,
                      const HlrConfig& config) {
  HlrConfig quad = config;
  quad.refinements = 0;
  return fit(ds, kernels, manifold, quad);
}

Eigen::VectorXd finite_difference_gradient(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& point, double step) {
  if (!(step > 0.0) || !std::isfinite(step)) {
    throw std::invalid_argument("finite_difference_gradient: step must be > 0");
  }
  Eigen::VectorXd grad(point.size());
  Eigen::VectorXd x = point;
  for (Eigen::Index i = 0; i < point.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + step;
    const double fp = f(x);
    x[i] = orig - step;
    const double fm = f(x);
    x[i] = orig;
    grad[i] = (fp - fm) / (2.0 * step);
  }
  return grad;
}

}  // namespace hlr
