#include "kapc/gram.hpp"

#include <algorithm>
#include <cmath>

namespace kapc {

namespace {

void check_square_symmetric(const MatrixXd& K, double tol) {
  if (K.rows() != K.cols())
    throw DataError("center_gram: matrix must be square");
  const double asym = (K - K.transpose()).cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, K.cwiseAbs().maxCoeff());
  if (asym > tol * scale)
    throw DataError("center_gram: matrix is not symmetric");
}

}  // namespace

CenteredGram center_gram(const MatrixXd& K) {
  check_square_symmetric(K, 1e-10);
  const Index n = K.rows();
  const VectorXd rowmean = K.rowwise().mean();
  const double grand = rowmean.mean();
  MatrixXd G(n, n);
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      G(i, j) = K(i, j) - rowmean[i] - rowmean[j] + grand;
    }
  }
  // pin exact symmetry against rounding in the two rank-one updates
  G = 0.5 * (G + G.transpose()).eval();
  return CenteredGram{std::move(G), n};
}

namespace reference {

CenteredGram center_gram(const MatrixXd& K) {
  check_square_symmetric(K, 1e-10);
  const Index n = K.rows();
  const MatrixXd H = MatrixXd::Identity(n, n) -
                     MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
  MatrixXd G = H * K * H;
  G = 0.5 * (G + G.transpose()).eval();
  return CenteredGram{std::move(G), n};
}

}  // namespace reference

MatrixXd validate_kernel_matrix(const MatrixXd& K, Index n_expected) {
  if (K.rows() != n_expected || K.cols() != n_expected)
    throw DataError("kernel matrix has dimension " +
                    std::to_string(K.rows()) + "x" + std::to_string(K.cols()) +
                    ", expected " + std::to_string(n_expected) + "x" +
                    std::to_string(n_expected));
  if (!K.allFinite())
    throw DataError("kernel matrix contains non-finite entries");
  const double scale = std::max(1.0, K.cwiseAbs().maxCoeff());
  const double asym = (K - K.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * scale)
    throw DataError("kernel matrix asymmetry above tolerance");
  MatrixXd sym = 0.5 * (K + K.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym,
                                             Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = std::max(es.eigenvalues().maxCoeff(), 0.0);
  if (lo < -1e-8 * std::max(hi, 1e-300))
    throw DataError("kernel matrix is not positive semidefinite");
  return sym;
}

std::shared_ptr<const GramEigen> make_gram_eigen(const CenteredGram& gram) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(gram.G);
  if (es.info() != Eigen::Success)
    throw SolverError("eigendecomposition of centered Gram failed");
  auto out = std::make_shared<GramEigen>();
  out->U = es.eigenvectors();
  out->evals = es.eigenvalues().cwiseMax(0.0);  // centered PSD up to rounding
  out->n = gram.n;
  return out;
}

}  // namespace kapc
