#pragma once

#include <unistd.h>

#include <Eigen/Core>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "hlr/data.hpp"
#include "hlr/kernel.hpp"
#include "hlr/manifold.hpp"
#include "hlr/rng.hpp"

namespace hlr_test {

inline std::filesystem::path temp_dir() {
  static int counter = 0;
  auto dir = std::filesystem::temp_directory_path() /
             ("hlr_test_" + std::to_string(::getpid()) + "_" +
              std::to_string(counter++));
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string write_file(const std::filesystem::path& dir,
                              const std::string& name,
                              const std::string& content) {
  const auto path = dir / name;
  std::ofstream out(path);
  out << content;
  return path.string();
}

// Random multi-view dataset with mixed kernels, for property tests.
struct RandomProblem {
  hlr::Dataset ds;
  std::vector<hlr::KernelSpec> kernels;
  hlr::ManifoldOperator manifold;
};

inline RandomProblem random_problem(std::uint64_t seed, int n, int labelled,
                                    int views, bool with_manifold) {
  hlr::Rng rng(seed);
  std::vector<Eigen::MatrixXd> feats;
  std::vector<hlr::KernelSpec> kernels;
  for (int a = 0; a < views; ++a) {
    const int d = 1 + static_cast<int>(rng.uniform_int(3));
    Eigen::MatrixXd x(n, d);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) x(i, j) = rng.uniform(-1.0, 1.0);
    }
    feats.push_back(x);
    switch (rng.uniform_int(3)) {
      case 0:
        kernels.push_back(hlr::KernelSpec::linear());
        break;
      case 1:
        kernels.push_back(hlr::KernelSpec::polynomial(2, 1.0));
        break;
      default:
        kernels.push_back(hlr::KernelSpec::gaussian(rng.uniform(0.5, 2.0)));
        break;
    }
  }
  std::vector<double> labels;
  for (int i = 0; i < labelled; ++i) labels.push_back(rng.normal(0.0, 1.0));
  RandomProblem p;
  p.ds = hlr::make_dataset(feats, labels);
  p.kernels = kernels;
  if (with_manifold) {
    p.manifold = hlr::assemble_manifold(
        p.ds.samples,
        hlr::ManifoldSpec::knn(std::min(4, n - 1), 0.0, true));
  }
  return p;
}

}  // namespace hlr_test
