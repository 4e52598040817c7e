#include "kapc/smoother.hpp"

#include "kapc/kernels.hpp"

#include <cmath>

namespace kapc {

PenalizedSmoother::PenalizedSmoother(std::shared_ptr<const GramEigen> eig,
                                     MatrixXd Q, double alpha)
    : eig_(std::move(eig)), Q_(std::move(Q)), alpha_(alpha) {
  if (!(alpha_ > 0.0) || !std::isfinite(alpha_))
    throw DataError("penalized smoother requires alpha > 0");
  const Index n = eig_->n;
  if (Q_.rows() != n && Q_.cols() > 0)
    throw DataError("null-space design has wrong number of rows");
  const double na = static_cast<double>(n) * alpha_;
  minv_diag_ = (eig_->evals.array() + na).inverse().matrix();
  if (Q_.cols() > 0) {
    ut_q_ = eig_->U.transpose() * Q_;
    minv_q_ = eig_->U * minv_diag_.asDiagonal() * ut_q_;
    MatrixXd A = Q_.transpose() * minv_q_;
    a_ldlt_.compute(A);
    const VectorXd dv = a_ldlt_.vectorD().cwiseAbs();
    if (a_ldlt_.info() != Eigen::Success ||
        dv.minCoeff() <= 1e-12 * dv.maxCoeff())
      throw SolverError(
          "singular Q^T M^{-1} Q: collinear null-space columns");
  }
}

SmootherFit PenalizedSmoother::fit(const VectorXd& y) const {
  const Index n = eig_->n;
  if (y.size() != n) throw DataError("response has wrong length");
  VectorXd yc = y.array() - y.mean();
  const VectorXd t = eig_->U.transpose() * yc;
  const VectorXd wt = minv_diag_.cwiseProduct(t);

  SmootherFit out;
  out.alpha = alpha_;
  VectorXd ut_c;  // U^T c, reused for fitted = G c + Q d
  if (Q_.cols() > 0) {
    const VectorXd rhs = minv_q_.transpose() * yc;  // Q^T M^{-1} y
    out.d = a_ldlt_.solve(rhs);
    ut_c = wt - minv_diag_.asDiagonal() * (ut_q_ * out.d);
    out.c = eig_->U * ut_c;
    out.fitted = eig_->U * eig_->evals.cwiseProduct(ut_c) + Q_ * out.d;
  } else {
    out.d = VectorXd(0);
    ut_c = wt;
    out.c = eig_->U * wt;
    out.fitted = eig_->U * eig_->evals.cwiseProduct(wt);
  }
  return out;
}

MatrixXd PenalizedSmoother::hat_matrix() const {
  // S = G M^{-1} + n a M^{-1} Q (Q^T M^{-1} Q)^{-1} Q^T M^{-1}; symmetric.
  const double na = static_cast<double>(eig_->n) * alpha_;
  const VectorXd gw = eig_->evals.cwiseProduct(minv_diag_);
  MatrixXd S = eig_->U * gw.asDiagonal() * eig_->U.transpose();
  if (Q_.cols() > 0) {
    const MatrixXd AinvMQ = a_ldlt_.solve(minv_q_.transpose());
    S.noalias() += na * minv_q_ * AinvMQ;
  }
  return 0.5 * (S + S.transpose());
}

double PenalizedSmoother::df(DfKind kind) const {
  const double na = static_cast<double>(eig_->n) * alpha_;
  const VectorXd gw = eig_->evals.cwiseProduct(minv_diag_);
  double tr_s = gw.sum();
  double tr_s2 = gw.squaredNorm();
  if (Q_.cols() > 0) {
    const VectorXd w = minv_diag_;
    const MatrixXd B =
        ut_q_.transpose() * w.array().square().matrix().asDiagonal() * ut_q_;
    const MatrixXd C = ut_q_.transpose() *
                       (eig_->evals.array() * w.array().cube()).matrix().asDiagonal() *
                       ut_q_;
    const MatrixXd AinvB = a_ldlt_.solve(B);
    const MatrixXd AinvC = a_ldlt_.solve(C);
    tr_s += na * AinvB.trace();
    tr_s2 += 2.0 * na * AinvC.trace() + na * na * (AinvB * AinvB).trace();
  }
  switch (kind) {
    case DfKind::kTrS: return tr_s;
    case DfKind::kTrS2: return tr_s2;
    case DfKind::kTr2SminusS2: return 2.0 * tr_s - tr_s2;
  }
  return tr_s;
}

SmootherFit fit_penalized_regression(const CenteredGram& gram,
                                     const MatrixXd& Q, const VectorXd& y,
                                     double alpha) {
  PenalizedSmoother sm(make_gram_eigen(gram), Q, alpha);
  return sm.fit(y);
}

HatMatrix hat_matrix(const CenteredGram& gram, const MatrixXd& Q,
                     double alpha) {
  PenalizedSmoother sm(make_gram_eigen(gram), Q, alpha);
  return HatMatrix{sm.hat_matrix(), alpha};
}

double degrees_of_freedom(const HatMatrix& hat, DfKind kind) {
  switch (kind) {
    case DfKind::kTrS: return hat.S.trace();
    case DfKind::kTrS2: return (hat.S * hat.S).trace();
    case DfKind::kTr2SminusS2:
      return 2.0 * hat.S.trace() - (hat.S * hat.S).trace();
  }
  return hat.S.trace();
}

TransformEvaluator::TransformEvaluator(KernelSpec spec, VectorXd xs,
                                       Rescale rescale, VectorXd beta,
                                       VectorXd d)
    : spec_(std::move(spec)), rescale_(rescale), beta_(std::move(beta)),
      d_(std::move(d)) {
  if (spec_.kind == KernelKind::kSobolev) {
    xs_.resize(xs.size());
    for (Index i = 0; i < xs.size(); ++i) xs_[i] = rescale_.to_unit(xs[i]);
  } else {
    xs_ = std::move(xs);
  }
  const Index n = xs_.size();
  if (!spec_.pointwise())
    throw DataError("transform evaluator needs a pointwise kernel; "
                    "use from_kernel_column for precomputed kernels");
  if (beta_.size() != n) throw DataError("beta has wrong length");
  MatrixXd K(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j <= i; ++j)
      K(i, j) = K(j, i) = eval_kernel(spec_, xs_[i], xs_[j]);
  finish_setup(K);
}

TransformEvaluator::TransformEvaluator(KernelSpec spec, VectorXd xs,
                                       Rescale rescale, VectorXd beta,
                                       VectorXd d, const MatrixXd& K)
    : spec_(std::move(spec)), rescale_(rescale), beta_(std::move(beta)),
      d_(std::move(d)) {
  if (spec_.kind == KernelKind::kSobolev) {
    xs_.resize(xs.size());
    for (Index i = 0; i < xs.size(); ++i) xs_[i] = rescale_.to_unit(xs[i]);
  } else {
    xs_ = std::move(xs);
  }
  if (spec_.pointwise() && beta_.size() != xs_.size())
    throw DataError("beta has wrong length");
  if (K.rows() != beta_.size()) throw DataError("kernel matrix mismatch");
  finish_setup(K);
}

void TransformEvaluator::finish_setup(const MatrixXd& K) {
  const Index n = beta_.size();
  beta_sum_ = beta_.sum();
  // raw transform at the training points: K H beta + Qtilde d
  VectorXd v = K * beta_;
  v -= beta_sum_ * K.rowwise().mean();
  if (d_.size() > 0) {
    for (int j = 0; j < d_.size(); ++j)
      for (Index i = 0; i < n; ++i) v[i] += d_[j] * std::pow(xs_[i], j + 1);
  }
  mu_ = v.mean();
}

double TransformEvaluator::operator()(double x) const {
  if (!spec_.pointwise())
    throw DataError(
        "out-of-sample evaluation unsupported for precomputed kernels");
  const Index n = xs_.size();
  double t = x;
  if (spec_.kind == KernelKind::kSobolev) {
    // rescaled coordinates outside the training range are clamped to [0,1]
    t = Rescale{0.0, 1.0}.to_unit_clamped(rescale_.to_unit(x));
  }
  double dot = 0.0, mean = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double kv = eval_kernel(spec_, xs_[i], t);
    dot += beta_[i] * kv;
    mean += kv;
  }
  mean /= static_cast<double>(n);
  double val = dot - beta_sum_ * mean;
  for (int j = 0; j < d_.size(); ++j) val += d_[j] * std::pow(t, j + 1);
  return val - mu_;
}

VectorXd TransformEvaluator::at(const VectorXd& xs_new) const {
  if (!spec_.pointwise())
    throw DataError(
        "out-of-sample evaluation unsupported for precomputed kernels");
  VectorXd out(xs_new.size());
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < xs_new.size(); ++i) out[i] = (*this)(xs_new[i]);
  return out;
}

double TransformEvaluator::from_kernel_column(const VectorXd& kcol) const {
  if (kcol.size() != beta_.size())
    throw DataError("kernel column has wrong length");
  return beta_.dot(kcol) - beta_sum_ * kcol.mean() - mu_;
}

}  // namespace kapc
