#include "kapc/model_selection.hpp"

#include "kapc/kernels.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace kapc;

namespace {

MatrixXd sample_matrix(Index n, int p, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  MatrixXd X(n, p);
  for (Index i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) X(i, j) = normal(rng);
  return X;
}

}  // namespace

TEST_CASE("standardize basics") {
  MatrixXd data(3, 1);
  data << 1.0, 2.0, 3.0;
  auto [std_data, rec] = standardize(data);
  CHECK(std_data(0, 0) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(std::abs(std_data(1, 0)) <= 1e-15);
  CHECK(std_data(2, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(rec.mean[0] == 2.0);
  CHECK(rec.scale[0] == 1.0);

  // idempotence: an already standardized column is unchanged
  auto [again, rec2] = standardize(std_data);
  CHECK((again - std_data).cwiseAbs().maxCoeff() <= 1e-12);

  // round trip
  CHECK((invert_standardize(rec, std_data) - data).cwiseAbs().maxCoeff() <=
        1e-12);

  CHECK_THROWS_AS(standardize(MatrixXd::Ones(5, 2)), DataError);
}

TEST_CASE("standardize record generalizes to fresh draws") {
  const MatrixXd train = 3.0 * sample_matrix(500, 2, 1).array() + 7.0;
  auto [ignored, rec] = standardize(train);
  const MatrixXd fresh = 3.0 * sample_matrix(2000, 2, 2).array() + 7.0;
  const MatrixXd mapped = apply_standardize(rec, fresh);
  for (int j = 0; j < 2; ++j) {
    const double m = mapped.col(j).mean();
    const double v = (mapped.col(j).array() - m).square().sum() / 1999.0;
    CHECK(std::abs(m) <= 0.2);
    CHECK(v == doctest::Approx(1.0).epsilon(0.1));
  }
}

TEST_CASE("alpha grids") {
  const auto grid = default_alpha_grid();
  REQUIRE(grid.size() == 35);
  CHECK(grid.front() == doctest::Approx(std::pow(1.5, -29)).epsilon(1e-14));
  CHECK(grid.back() == doctest::Approx(std::pow(1.5, 5)).epsilon(1e-14));
  for (size_t i = 1; i < grid.size(); ++i) CHECK(grid[i] > grid[i - 1]);
  CHECK_THROWS_AS(alpha_grid(1.0, 0, 3), DataError);
  CHECK_THROWS_AS(alpha_grid(1.5, 3, 0), DataError);
}

TEST_CASE("cross validation on a small fixture") {
  // two associated variables so the holdout score is informative
  MatrixXd X = sample_matrix(36, 2, 3);
  X.col(1) = X.col(0) + 0.3 * sample_matrix(36, 1, 4);
  const std::vector<KernelSpec> specs(2, KernelSpec::gaussian(1.0));
  SolverConfig config;
  config.seed = 9;

  SUBCASE("single grid point is selected trivially") {
    const CvResult cv = cross_validate(X, specs, {0.01}, 3, 5, config);
    CHECK(cv.selected_alpha == 0.01);
    CHECK(cv.cv_scores.size() == 1);
    CHECK(cv.per_fold.rows() == 3);
  }

  SUBCASE("scores are fold means, within range, deterministic") {
    const std::vector<double> grid{1e-4, 1e-2, 1.0};
    const CvResult a = cross_validate(X, specs, grid, 3, 5, config);
    const CvResult b = cross_validate(X, specs, grid, 3, 5, config);
    CHECK(a.per_fold == b.per_fold);  // deterministic given seed
    for (size_t g = 0; g < grid.size(); ++g) {
      CHECK(a.cv_scores[g] ==
            doctest::Approx(a.per_fold.col(g).mean()).epsilon(1e-15));
      CHECK(a.cv_scores[g] >= 0.0);
      CHECK(a.cv_scores[g] <= 2.0 + 1e-8);
    }
    double best = *std::min_element(a.cv_scores.begin(), a.cv_scores.end());
    for (size_t g = 0; g < grid.size(); ++g)
      if (a.cv_scores[g] == best) {
        CHECK(a.selected_alpha == grid[g]);  // ties resolve to the smaller
        break;
      }
  }

  SUBCASE("validation errors") {
    CHECK_THROWS_AS(cross_validate(X, specs, {0.1}, 1, 5, config), DataError);
    CHECK_THROWS_AS(cross_validate(X, specs, {}, 3, 5, config), DataError);
    const MatrixXd tiny = sample_matrix(5, 2, 6);
    CHECK_THROWS_AS(cross_validate(tiny, specs, {0.1}, 3, 5, config),
                    DataError);
  }
}

TEST_CASE("cross validation with precomputed kernels") {
  // full n x n kernels built from feature blocks; block 2 mirrors block 1
  const Index n = 30;
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  MatrixXd H1(n, 4), noise(n, 4);
  for (Index i = 0; i < n; ++i)
    for (int j = 0; j < 4; ++j) {
      H1(i, j) = normal(rng);
      noise(i, j) = 0.1 * normal(rng);
    }
  const MatrixXd H2 = -H1 + noise;
  std::vector<KernelSpec> specs{
      KernelSpec::precomputed(feature_gram_kernel(H1)),
      KernelSpec::precomputed(feature_gram_kernel(H2))};
  SolverConfig config;
  config.seed = 4;
  const MatrixXd placeholder = MatrixXd::Zero(n, 2);
  const CvResult cv =
      cross_validate(placeholder, specs, {1e-6, 1e-4, 1e-2}, 3, 11, config);
  for (double s : cv.cv_scores) {
    CHECK(std::isfinite(s));
    CHECK(s >= 0.0);
    CHECK(s <= 2.0 + 1e-8);
  }
  // the associated pair should look concurved on holdout data too
  CHECK(*std::min_element(cv.cv_scores.begin(), cv.cv_scores.end()) < 0.5);
}

TEST_CASE("cross validation with sobolev kernels") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unif;
  std::normal_distribution<double> normal;
  MatrixXd X(30, 2);
  for (Index i = 0; i < 30; ++i) {
    X(i, 0) = unif(rng);
    X(i, 1) = X(i, 0) + 0.1 * normal(rng);
  }
  const std::vector<KernelSpec> specs(2, KernelSpec::sobolev(2));
  SolverConfig config;
  config.seed = 3;
  const CvResult cv =
      cross_validate(X, specs, {1e-4, 1e-2, 1.0}, 3, 8, config);
  for (double s : cv.cv_scores) {
    CHECK(std::isfinite(s));
    CHECK(s >= 0.0);
    CHECK(s <= 2.0 + 1e-8);
  }
  CHECK(*std::min_element(cv.cv_scores.begin(), cv.cv_scores.end()) < 0.7);
}

TEST_CASE("df calibration by bisection") {
  const MatrixXd X = sample_matrix(40, 1, 8);
  const KernelSpec g = KernelSpec::gaussian(1.0);
  const CenteredGram gram = center_gram(kernel_matrix(g, X.col(0)));
  const MatrixXd Q(40, 0);
  auto eig = make_gram_eigen(gram);

  for (double target : {3.0, 8.0}) {
    const double alpha = calibrate_alpha_for_df(gram, Q, target, DfKind::kTrS);
    const double df = PenalizedSmoother(eig, Q, alpha).df(DfKind::kTrS);
    CHECK(std::abs(df - target) <= 0.01);
  }

  // an unreachable target is rejected
  CHECK_THROWS_AS(calibrate_alpha_for_df(gram, Q, 60.0, DfKind::kTrS),
                  DataError);

  // near-interpolation needs a numerically full-rank Gram: narrow kernel on
  // an equispaced grid; df close to n is then reached with a tiny alpha
  const KernelSpec narrow = KernelSpec::gaussian(0.02);
  const VectorXd grid_xs = VectorXd::LinSpaced(40, 0.0, 2.0);
  const CenteredGram gn = center_gram(kernel_matrix(narrow, grid_xs));
  const double tiny = calibrate_alpha_for_df(gn, Q, 35.0, DfKind::kTrS);
  CHECK(tiny <= 1e-2);
  CHECK(std::abs(PenalizedSmoother(make_gram_eigen(gn), Q, tiny)
                     .df(DfKind::kTrS) -
                 35.0) <= 0.01);

  // null-space floor: df -> q as alpha grows, so a target just above q
  // calibrates to a very large alpha
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> unif;
  VectorXd xs(40);
  for (Index i = 0; i < 40; ++i) xs[i] = unif(rng);
  const KernelSpec s2 = KernelSpec::sobolev(2);
  const CenteredGram gs = center_gram(kernel_matrix(s2, xs));
  const MatrixXd Qs = null_space_basis(s2, xs);
  const double huge = calibrate_alpha_for_df(gs, Qs, 1.005, DfKind::kTrS);
  CHECK(huge >= 1e4);
  // near-interpolation target calibrates to a tiny alpha
  const double rank_df =
      PenalizedSmoother(make_gram_eigen(gs), Qs, 1e-10).df(DfKind::kTrS);
  const double small =
      calibrate_alpha_for_df(gs, Qs, 0.9 * rank_df, DfKind::kTrS);
  CHECK(small <= 1e-2);
}
