#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "hlr/kernel.hpp"
#include "test_util.hpp"

using hlr::KernelSpec;

TEST_CASE("kernel spec validation") {
  CHECK_THROWS_AS(KernelSpec::polynomial(0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::polynomial(2, -0.5), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::gaussian(0.0), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::gaussian(-1.0), std::invalid_argument);
  CHECK(KernelSpec::linear().name() == "linear");
  CHECK(KernelSpec::polynomial(3, 1.0).name() == "polynomial");
  CHECK(KernelSpec::gaussian(0.7).name() == "gaussian");
}

TEST_CASE("kernel evaluations against hand values") {
  Eigen::VectorXd a(2), b(2);
  a << 1.0, 2.0;
  b << 3.0, -1.0;
  CHECK(hlr::eval_kernel(KernelSpec::linear(), a, b) == doctest::Approx(1.0));
  CHECK(hlr::eval_kernel(KernelSpec::polynomial(2, 1.0), a, b) ==
        doctest::Approx(4.0));  // (1 + 1)^2
  // |a-b|^2 = 4 + 9 = 13; bandwidth 2 -> exp(-13/8)
  CHECK(hlr::eval_kernel(KernelSpec::gaussian(2.0), a, b) ==
        doctest::Approx(std::exp(-13.0 / 8.0)));

  Eigen::VectorXd c(3);
  c << 1.0, 2.0, 3.0;
  CHECK_THROWS_AS(hlr::eval_kernel(KernelSpec::linear(), a, c),
                  std::invalid_argument);
}

TEST_CASE("gram blocks are symmetric and positive semidefinite") {
  const auto prob = hlr_test::random_problem(7, 12, 8, 3, false);
  const auto gram = hlr::build_gram(prob.kernels, prob.ds.samples);
  REQUIRE(gram.m == 3);
  REQUIRE(gram.n == 12);
  for (const auto& block : gram.per_view) {
    CHECK((block - block.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(hlr::is_positive_semidefinite(block, 1e-8));
  }
}

TEST_CASE("cross gram against a training sample reproduces the gram row") {
  const auto prob = hlr_test::random_problem(13, 9, 5, 2, false);
  const auto gram = hlr::build_gram(prob.kernels, prob.ds.samples);
  const auto rows =
      hlr::cross_gram(prob.kernels, prob.ds.samples, prob.ds.samples[4]);
  REQUIRE(rows.size() == 2);
  for (int a = 0; a < 2; ++a) {
    CHECK((rows[static_cast<std::size_t>(a)].transpose() -
           gram.per_view[static_cast<std::size_t>(a)].row(4))
              .cwiseAbs()
              .maxCoeff() < 1e-14);
  }
}

TEST_CASE("cross gram rejects mismatched queries") {
  const auto prob = hlr_test::random_problem(17, 6, 4, 2, false);
  hlr::MultiViewSample bad;
  bad.views.push_back(Eigen::VectorXd::Zero(99));
  CHECK_THROWS_AS(hlr::cross_gram(prob.kernels, prob.ds.samples, bad),
                  std::invalid_argument);
}

TEST_CASE("build_gram rejects spec count mismatch") {
  const auto prob = hlr_test::random_problem(23, 5, 3, 2, false);
  std::vector<KernelSpec> wrong = {KernelSpec::linear()};
  CHECK_THROWS_AS(hlr::build_gram(wrong, prob.ds.samples),
                  std::invalid_argument);
}
