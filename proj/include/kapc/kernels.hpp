#pragma once

#include "kapc/types.hpp"

namespace kapc {

/// Evaluate a pointwise kernel.  For Sobolev specs the arguments must already
/// live on the rescaled domain [0,1].  Throws DataError for precomputed specs.
double eval_kernel(const KernelSpec& spec, double x, double y);

/// Bernoulli polynomial B_n(x); exposed because the Sobolev kernel and its
/// series oracle are both built from it.
double bernoulli_poly(int n, double x);

/// Min-max map of xs onto [0,1] (identity bounds for non-Sobolev specs).
Rescale make_rescale(const KernelSpec& spec, const VectorXd& xs);

/// Raw n x n kernel matrix K[i][j] = k(x_i, x_j).  Sobolev inputs are
/// rescaled internally by the min-max of xs; precomputed specs pass their
/// validated matrix through after a dimension check.
MatrixXd kernel_matrix(const KernelSpec& spec, const VectorXd& xs);

namespace reference {
/// Single-threaded version of kernel_matrix, kept as the test oracle for the
/// parallel implementation.
MatrixXd kernel_matrix(const KernelSpec& spec, const VectorXd& xs);
}  // namespace reference

/// Normalized Gram kernel of a feature block: H H^T / tr(H H^T).
MatrixXd feature_gram_kernel(const MatrixXd& features);

/// Column-centered null-space design: monomials t, t^2, ..., t^{m-1} of the
/// rescaled variable, each column mean-centered.  n x 0 for specs without a
/// null space.
MatrixXd null_space_basis(const KernelSpec& spec, const VectorXd& xs);

}  // namespace kapc
