#include "kapc/simulation.hpp"

#include <cmath>
#include <random>

namespace kapc {

namespace {

MatrixXd draw_latent(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd Y(n, 4);
  for (Index i = 0; i < n; ++i) {
    const double w1 = normal(rng), w2 = normal(rng);
    const double z1 = 0.1 * normal(rng), z2 = 0.1 * normal(rng);
    const double z3 = 0.1 * normal(rng), z4 = 0.1 * normal(rng);
    Y(i, 0) = w1 + z1;
    Y(i, 1) = w2 + z2;
    Y(i, 2) = w1 + w2 + z3;
    Y(i, 3) = z4;
  }
  return Y;
}

double logistic(double y) { return 1.0 / (1.0 + std::exp(-y)); }

}  // namespace

SimulationData generate_simulation(Index n, std::uint64_t seed) {
  if (n < 2) throw DataError("generate_simulation: need n >= 2");
  SimulationData out;
  out.Y = draw_latent(n, seed);
  out.X.resize(n, 4);
  for (Index i = 0; i < n; ++i) {
    out.X(i, 0) = std::exp(out.Y(i, 0));
    out.X(i, 1) = -std::cbrt(out.Y(i, 1));  // real signed cube root
    out.X(i, 2) = logistic(out.Y(i, 2));
    out.X(i, 3) = out.Y(i, 3);
  }
  return out;
}

SimulationTruth population_correlation_eigen() {
  Eigen::Matrix4d cov = Eigen::Matrix4d::Zero();
  cov.diagonal() << 1.01, 1.01, 2.01, 0.01;
  cov(0, 2) = cov(2, 0) = 1.0;  // Cov(W1+Z1, W1+W2+Z3)
  cov(1, 2) = cov(2, 1) = 1.0;

  SimulationTruth truth;
  const Eigen::Vector4d sd = cov.diagonal().cwiseSqrt();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      truth.population_corr(i, j) = cov(i, j) / (sd[i] * sd[j]);

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(truth.population_corr);
  truth.smallest_eigenvalue = es.eigenvalues()[0];
  truth.eigenvector = es.eigenvectors().col(0);
  if (truth.eigenvector[0] < 0.0) truth.eigenvector = -truth.eigenvector;
  truth.component_variances << 0.25, 0.25, 0.5, 0.0;
  return truth;
}

TrueTransforms::TrueTransforms(std::uint64_t seed, Index n_calibrate) {
  // variance-match the raw transforms Y1, Y2, Y3 against a large draw so
  // that Var phi1* = Var phi2* = 1/4 and Var phi3* = 1/2
  const MatrixXd Y = draw_latent(n_calibrate, seed);
  const auto var_of = [&](int j) {
    const double mean = Y.col(j).mean();
    return (Y.col(j).array() - mean).square().sum() /
           static_cast<double>(n_calibrate - 1);
  };
  c1_ = 0.5 / std::sqrt(var_of(0));
  c2_ = 0.5 / std::sqrt(var_of(1));
  c3_ = std::sqrt(0.5) / std::sqrt(var_of(2));
}

double TrueTransforms::eval(int j, double x) const {
  switch (j) {
    case 0: return c1_ * std::log(x);               // recovers Y1
    case 1: return c2_ * (-x * x * x);              // recovers Y2
    case 2: return -c3_ * std::log(x / (1.0 - x));  // -(scaled) Y3
    case 3: return 0.0;
    default: throw DataError("variable index out of range");
  }
}

double estimation_error(const std::function<double(int, double)>& fitted,
                        int j, const TrueTransforms& truth, Index n_eval,
                        std::uint64_t seed, double sign) {
  if (j < 0 || j > 3) throw DataError("variable index out of range");
  const SimulationData fresh = generate_simulation(n_eval, seed);
  VectorXd diff(n_eval);
  for (Index i = 0; i < n_eval; ++i) {
    const double x = fresh.X(i, j);
    diff[i] = sign * fitted(j, x) - truth.eval(j, x);
  }
  const double mean = diff.mean();
  return (diff.array() - mean).square().sum() /
         static_cast<double>(n_eval - 1);
}

double align_sign(const std::function<double(int, double)>& fitted,
                  const TrueTransforms& truth, Index n_eval,
                  std::uint64_t seed) {
  const SimulationData fresh = generate_simulation(n_eval, seed);
  double score = 0.0;
  for (int j = 0; j < 3; ++j) {  // phi4* is zero, no sign information
    VectorXd a(n_eval), b(n_eval);
    for (Index i = 0; i < n_eval; ++i) {
      a[i] = fitted(j, fresh.X(i, j));
      b[i] = truth.eval(j, fresh.X(i, j));
    }
    const double am = a.mean(), bm = b.mean();
    const double num = ((a.array() - am) * (b.array() - bm)).sum();
    const double den = std::sqrt((a.array() - am).square().sum() *
                                 (b.array() - bm).square().sum());
    if (den > 0.0) score += num / den;
  }
  return score >= 0.0 ? 1.0 : -1.0;
}

}  // namespace kapc
