#pragma once

#include "kapc/gram.hpp"
#include "kapc/types.hpp"

#include <functional>

namespace kapc {

/// Solution of the penalized regression
///   min_{c,d} (1/n) ||y - (G c + Q d)||^2 + alpha c^T G c
/// with y centered internally.  fitted = G c + Q d has mean zero.
struct SmootherFit {
  VectorXd c;
  VectorXd d;
  VectorXd fitted;
  double alpha = 0.0;
};

/// Linear map from a centered response to the fitted values of the penalized
/// regression.  Symmetric with eigenvalues in [0,1].
struct HatMatrix {
  MatrixXd S;
  double alpha = 0.0;
};

enum class DfKind { kTrS, kTrS2, kTr2SminusS2 };

/// Penalized smoother for one variable, reusable across responses.  Built on
/// the spectral decomposition of G so that solves are O(n^2) and many alpha
/// values can share one factorization.
class PenalizedSmoother {
 public:
  PenalizedSmoother(std::shared_ptr<const GramEigen> eig, MatrixXd Q,
                    double alpha);

  SmootherFit fit(const VectorXd& y) const;
  MatrixXd hat_matrix() const;  // S = G M^{-1} + n a M^{-1}Q A^{-1}Q^T M^{-1}
  double df(DfKind kind) const;  // trace formulas, no n x n assembly

  double alpha() const { return alpha_; }
  Index n() const { return eig_->n; }
  Index q() const { return Q_.cols(); }

 private:
  std::shared_ptr<const GramEigen> eig_;
  MatrixXd Q_;          // n x q, column-centered
  double alpha_;
  VectorXd minv_diag_;  // 1/(g_i + n alpha)
  MatrixXd ut_q_;       // U^T Q
  MatrixXd minv_q_;     // M^{-1} Q
  Eigen::LDLT<MatrixXd> a_ldlt_;  // Q^T M^{-1} Q
};

SmootherFit fit_penalized_regression(const CenteredGram& gram, const MatrixXd& Q,
                                     const VectorXd& y, double alpha);

HatMatrix hat_matrix(const CenteredGram& gram, const MatrixXd& Q, double alpha);

double degrees_of_freedom(const HatMatrix& hat, DfKind kind);

/// Out-of-sample evaluator for a fitted transform
///   phi(x) = sum_l beta_l (k(x_l,x) - mean_a k(x_a,x)) + sum_l d_l q_l(x) - mu,
/// where mu centers the transform to mean zero over the training points.
class TransformEvaluator {
 public:
  TransformEvaluator(KernelSpec spec, VectorXd xs, Rescale rescale,
                     VectorXd beta, VectorXd d);
  /// Variant reusing an already-built raw kernel matrix of the training xs.
  TransformEvaluator(KernelSpec spec, VectorXd xs, Rescale rescale,
                     VectorXd beta, VectorXd d, const MatrixXd& K);

  double operator()(double x) const;
  VectorXd at(const VectorXd& xs_new) const;

  /// Evaluate from a column of kernel values k(x_train_l, x_new); this is how
  /// precomputed-kernel models are applied to held-out rows.
  double from_kernel_column(const VectorXd& kcol) const;

 private:
  void finish_setup(const MatrixXd& K);

  KernelSpec spec_;
  VectorXd xs_;      // training values, rescaled domain for Sobolev
  Rescale rescale_;
  VectorXd beta_;
  VectorXd d_;
  double beta_sum_ = 0.0;
  double mu_ = 0.0;  // training mean of the raw transform
};

}  // namespace kapc
