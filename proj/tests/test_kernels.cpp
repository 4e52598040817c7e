#include "kapc/kernels.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace kapc;

namespace {

VectorXd random_vector(Index n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  VectorXd x(n);
  for (Index i = 0; i < n; ++i) x[i] = normal(rng);
  return x;
}

// Independent construction of the non-polynomial kernel part from the
// cosine eigen-series: (-1)^{m-1} B_{2m}(t)/(2m)! = 2 sum cos(2 pi v t)/(2 pi v)^{2m}.
double sobolev_series_oracle(int m, double x, double y, int terms) {
  double fm = 1.0;
  for (int i = 2; i <= m; ++i) fm *= i;
  double val = bernoulli_poly(m, x) * bernoulli_poly(m, y) / (fm * fm);
  const double t = x - y;
  for (int v = 1; v <= terms; ++v) {
    const double w = 2.0 * M_PI * v;
    val += 2.0 * std::cos(w * t) / std::pow(w, 2 * m);
  }
  return val;
}

}  // namespace

TEST_CASE("gaussian kernel values") {
  const KernelSpec g = KernelSpec::gaussian(1.0);
  CHECK(eval_kernel(g, 3.7, 3.7) == 1.0);
  CHECK(eval_kernel(g, 0.0, 1.0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
  CHECK(eval_kernel(g, 0.0, 1.0) == doctest::Approx(0.6065306597126334).epsilon(1e-12));

  const KernelSpec wide = KernelSpec::gaussian(2.0);
  CHECK(eval_kernel(wide, 0.0, 2.0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));

  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  for (int i = 0; i < 50; ++i) {
    const double a = normal(rng), b = normal(rng);
    CHECK(eval_kernel(g, a, b) == eval_kernel(g, b, a));  // exact symmetry
    CHECK(eval_kernel(g, a, b) > 0.0);
    CHECK(eval_kernel(g, a, b) <= 1.0);
  }
}

TEST_CASE("bernoulli polynomials") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    const double x = unif(rng);
    CHECK(bernoulli_poly(2, x) ==
          doctest::Approx(x * x - x + 1.0 / 6.0).epsilon(1e-14));
    CHECK(bernoulli_poly(4, x) ==
          doctest::Approx(x * x * x * x - 2 * x * x * x + x * x - 1.0 / 30.0)
              .epsilon(1e-13));
  }
  CHECK(bernoulli_poly(6, 0.0) == doctest::Approx(1.0 / 42.0).epsilon(1e-13));
}

TEST_CASE("sobolev kernel against its eigen-series") {
  const double pts[][2] = {{0.3, 0.3}, {0.1, 0.9}, {0.7, 0.2}, {0.0, 1.0}};
  for (int m : {2, 3}) {
    const KernelSpec s = KernelSpec::sobolev(m);
    for (const auto& pt : pts) {
      const double closed = eval_kernel(s, pt[0], pt[1]);
      const double series = sobolev_series_oracle(m, pt[0], pt[1], 10000);
      CHECK(std::abs(closed - series) <= 1e-8);
      CHECK(eval_kernel(s, pt[0], pt[1]) == eval_kernel(s, pt[1], pt[0]));
    }
  }
}

TEST_CASE("eval_kernel error paths") {
  KernelSpec pre;
  pre.kind = KernelKind::kPrecomputed;
  CHECK_THROWS_AS(eval_kernel(pre, 0.0, 0.0), DataError);
  CHECK_THROWS_AS(KernelSpec::gaussian(0.0), DataError);
  CHECK_THROWS_AS(KernelSpec::gaussian(-1.0), DataError);
  CHECK_THROWS_AS(KernelSpec::sobolev(0), DataError);
  const KernelSpec g = KernelSpec::gaussian(1.0);
  CHECK_THROWS_AS(eval_kernel(g, std::nan(""), 0.0), DataError);
}

TEST_CASE("kernel_matrix two-point and repeated-point") {
  const KernelSpec g = KernelSpec::gaussian(1.0);
  VectorXd xs(2);
  xs << 0.0, 1.0;
  const MatrixXd K = kernel_matrix(g, xs);
  CHECK(K(0, 0) == 1.0);
  CHECK(K(1, 1) == 1.0);
  CHECK(K(0, 1) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
  CHECK(K(1, 0) == K(0, 1));

  VectorXd rep(4);
  rep << -0.3, 1.2, -0.3, 0.5;  // rows 0 and 2 must be identical
  const MatrixXd Kr = kernel_matrix(g, rep);
  CHECK((Kr.row(0) - Kr.row(2)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((Kr.col(0) - Kr.col(2)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("kernel_matrix is symmetric PSD") {
  for (int m : {1, 2, 3}) {
    const KernelSpec s = KernelSpec::sobolev(m);
    VectorXd xs = VectorXd::LinSpaced(20, 0.0, 1.0);
    const MatrixXd K = kernel_matrix(s, xs);
    CHECK((K - K.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(K, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);
  }
  const KernelSpec g = KernelSpec::gaussian(0.7);
  const VectorXd xs = random_vector(30, 5);
  const MatrixXd K = kernel_matrix(g, xs);
  CHECK((K - K.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(K, Eigen::EigenvaluesOnly);
  CHECK(es.eigenvalues().minCoeff() >=
        -1e-8 * std::abs(es.eigenvalues().maxCoeff()));

  VectorXd bad(3);
  bad << 0.0, std::nan(""), 1.0;
  CHECK_THROWS_AS(kernel_matrix(g, bad), DataError);
}

TEST_CASE("feature_gram_kernel") {
  const MatrixXd ones = MatrixXd::Ones(5, 1);
  const MatrixXd K1 = feature_gram_kernel(ones);
  CHECK((K1.array() - 0.2).abs().maxCoeff() <= 1e-15);

  const MatrixXd eye = MatrixXd::Identity(4, 4);
  const MatrixXd K2 = feature_gram_kernel(eye);
  CHECK((K2 - 0.25 * MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-15);

  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal;
  MatrixXd H(6, 3);
  for (Index i = 0; i < 6; ++i)
    for (Index j = 0; j < 3; ++j) H(i, j) = normal(rng);
  const MatrixXd K3 = feature_gram_kernel(H);
  CHECK(K3.trace() == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(feature_gram_kernel(MatrixXd::Zero(4, 2)), DataError);
}

TEST_CASE("null_space_basis") {
  const KernelSpec s2 = KernelSpec::sobolev(2);
  VectorXd xs(3);
  xs << 0.0, 0.5, 1.0;
  const MatrixXd Q = null_space_basis(s2, xs);
  REQUIRE(Q.cols() == 1);
  CHECK(std::abs(Q(0, 0) + 0.5) <= 1e-14);
  CHECK(std::abs(Q(1, 0)) <= 1e-14);
  CHECK(std::abs(Q(2, 0) - 0.5) <= 1e-14);

  const KernelSpec s1 = KernelSpec::sobolev(1);
  CHECK(null_space_basis(s1, xs).cols() == 0);

  const KernelSpec s3 = KernelSpec::sobolev(3);
  const VectorXd grid = VectorXd::LinSpaced(10, 0.0, 1.0);
  const MatrixXd Q3 = null_space_basis(s3, grid);
  REQUIRE(Q3.cols() == 2);
  Eigen::JacobiSVD<MatrixXd> svd(Q3);
  svd.setThreshold(1e-10);
  CHECK(svd.rank() == 2);
  for (Index j = 0; j < Q3.cols(); ++j)
    CHECK(std::abs(Q3.col(j).sum()) <= 1e-12);

  VectorXd two_values(5);
  two_values << 0.0, 1.0, 0.0, 1.0, 0.0;
  CHECK_THROWS_AS(null_space_basis(s3, two_values), DataError);
}

TEST_CASE("precomputed spec validation") {
  MatrixXd K(3, 3);
  K << 2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0;
  const KernelSpec pre = KernelSpec::precomputed(K);
  CHECK(pre.null_space_dim() == 0);
  const MatrixXd back = kernel_matrix(pre, VectorXd::Zero(3));
  CHECK((back - K).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK_THROWS_AS(kernel_matrix(pre, VectorXd::Zero(4)), DataError);

  MatrixXd neg(2, 2);
  neg << 1.0, 2.0, 2.0, 1.0;  // eigenvalues 3 and -1
  CHECK_THROWS_AS(KernelSpec::precomputed(neg), DataError);
}
