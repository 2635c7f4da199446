#include "hlr/kernel.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace hlr {

KernelSpec KernelSpec::linear() { return KernelSpec{}; }

KernelSpec KernelSpec::polynomial(int degree, double offset) {
  KernelSpec s;
  s.kind = Kind::Polynomial;
  s.degree = degree;
  s.offset = offset;
  s.validate();
  return s;
}

KernelSpec KernelSpec::gaussian(double bandwidth) {
  KernelSpec s;
  s.kind = Kind::Gaussian;
  s.bandwidth = bandwidth;
  s.validate();
  return s;
}

void KernelSpec::validate() const {
  switch (kind) {
    case Kind::Linear:
      return;
    case Kind::Polynomial:
      if (degree < 1) {
        throw std::invalid_argument("polynomial kernel degree must be >= 1");
      }
      if (!(offset >= 0.0) || !std::isfinite(offset)) {
        throw std::invalid_argument("polynomial kernel offset must be >= 0");
      }
      return;
    case Kind::Gaussian:
      if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
        throw std::invalid_argument("gaussian kernel bandwidth must be > 0");
      }
      return;
  }
  throw std::invalid_argument("unknown kernel kind");
}

std::string KernelSpec::name() const {
  switch (kind) {
    case Kind::Linear:
      return "linear";
    case Kind::Polynomial:
      return "polynomial";
    case Kind::Gaussian:
      return "gaussian";
  }
  return "unknown";
}

double eval_kernel(const KernelSpec& spec, const Eigen::VectorXd& a,
                   const Eigen::VectorXd& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("eval_kernel: dimension mismatch " +
                                std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
  }
  switch (spec.kind) {
    case KernelSpec::Kind::Linear:
      return a.dot(b);
    case KernelSpec::Kind::Polynomial:
      return std::pow(a.dot(b) + spec.offset, spec.degree);
    case KernelSpec::Kind::Gaussian: {
      const double d2 = (a - b).squaredNorm();
      return std::exp(-d2 / (2.0 * spec.bandwidth * spec.bandwidth));
    }
  }
  throw std::invalid_argument("unknown kernel kind");
}

GramBlocks build_gram(const std::vector<KernelSpec>& specs,
                      const std::vector<MultiViewSample>& samples) {
  if (samples.empty()) throw std::invalid_argument("build_gram: no samples");
  const int m = samples.front().view_count();
  if (static_cast<int>(specs.size()) != m) {
    throw std::invalid_argument("build_gram: " + std::to_string(specs.size()) +
                                " kernel specs for " + std::to_string(m) +
                                " views");
  }
  for (const auto& s : specs) s.validate();
  const int n = static_cast<int>(samples.size());
  GramBlocks g;
  g.n = n;
  g.m = m;
  g.per_view.reserve(static_cast<std::size_t>(m));
  for (int a = 0; a < m; ++a) {
    Eigen::MatrixXd block(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        const double v = eval_kernel(specs[static_cast<std::size_t>(a)],
                                     samples[static_cast<std::size_t>(i)]
                                         .views[static_cast<std::size_t>(a)],
                                     samples[static_cast<std::size_t>(j)]
                                         .views[static_cast<std::size_t>(a)]);
        block(i, j) = v;
        block(j, i) = v;
      }
    }
    g.per_view.push_back(std::move(block));
  }
  return g;
}

std::vector<Eigen::VectorXd> cross_gram(
    const std::vector<KernelSpec>& specs,
    const std::vector<MultiViewSample>& train, const MultiViewSample& query) {
  if (train.empty()) throw std::invalid_argument("cross_gram: no samples");
  const int m = train.front().view_count();
  if (query.view_count() != m) {
    throw std::invalid_argument("cross_gram: query has " +
                                std::to_string(query.view_count()) +
                                " views, expected " + std::to_string(m));
  }
  if (static_cast<int>(specs.size()) != m) {
    throw std::invalid_argument("cross_gram: kernel spec count mismatch");
  }
  const int n = static_cast<int>(train.size());
  std::vector<Eigen::VectorXd> rows;
  rows.reserve(static_cast<std::size_t>(m));
  for (int a = 0; a < m; ++a) {
    Eigen::VectorXd row(n);
    for (int j = 0; j < n; ++j) {
      row[j] = eval_kernel(specs[static_cast<std::size_t>(a)],
                           query.views[static_cast<std::size_t>(a)],
                           train[static_cast<std::size_t>(j)]
                               .views[static_cast<std::size_t>(a)]);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

bool is_positive_semidefinite(const Eigen::MatrixXd& m, double tol) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument("is_positive_semidefinite: matrix not square");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      m, Eigen::EigenvaluesOnly);
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return es.eigenvalues().minCoeff() >= -tol * scale;
}

}  // namespace hlr
