#pragma once

#include "kapc/types.hpp"

namespace kapc {

/// Double-centered kernel matrix G = H K H, H = I - 11^T/n.  Rows and
/// columns of G sum to zero; G is PSD whenever K is.
struct CenteredGram {
  MatrixXd G;
  Index n = 0;
};

/// Center a square symmetric kernel matrix:
///   G[i][j] = K[i][j] - rowmean_i - colmean_j + grandmean.
CenteredGram center_gram(const MatrixXd& K);

namespace reference {
CenteredGram center_gram(const MatrixXd& K);
}  // namespace reference

/// Validate a user-supplied kernel matrix: square of the expected size,
/// symmetric within 1e-10 (symmetrized when below tolerance), smallest
/// eigenvalue >= -1e-8 relative to the largest.  Returns the checked matrix.
MatrixXd validate_kernel_matrix(const MatrixXd& K, Index n_expected);

/// Eigendecomposition of a centered Gram matrix, cached so that smoothers at
/// many penalty values can share one factorization.
struct GramEigen {
  MatrixXd U;       // eigenvectors, columns
  VectorXd evals;   // ascending, clamped below at 0
  Index n = 0;
};

std::shared_ptr<const GramEigen> make_gram_eigen(const CenteredGram& gram);

}  // namespace kapc
