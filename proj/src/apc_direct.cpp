#include "kapc/apc_direct.hpp"

#include <algorithm>
#include <cmath>

namespace kapc {

namespace {

void check_problem(const std::vector<CenteredGram>& grams,
                   const std::vector<double>& alphas, int k) {
  if (grams.size() < 2) throw DataError("need at least p = 2 variables");
  if (grams.size() != alphas.size())
    throw DataError("one penalty per variable required");
  const Index n = grams.front().n;
  for (const auto& g : grams)
    if (g.n != n) throw DataError("blocks disagree on sample size");
  for (double a : alphas)
    if (!(a > 0.0)) throw DataError("all penalties must be > 0");
  if (k < 1) throw DataError("need k >= 1 components");
}

// Normalize beta blocks to the unit constraint
//   sum_j [ (1/n)||G_j b_j||^2 + alpha_j b_j^T G_j b_j ] = 1
// and package the result.  The eigenvalue reported on the component is the
// exact penalized Rayleigh value of the recovered coefficients.
ApcComponent finish_component(const std::vector<CenteredGram>& grams,
                              const std::vector<double>& alphas,
                              std::vector<VectorXd> beta) {
  const int p = static_cast<int>(grams.size());
  const double n = static_cast<double>(grams.front().n);
  std::vector<VectorXd> phi(p);
  double norm2 = 0.0;
  for (int j = 0; j < p; ++j) {
    phi[j] = grams[j].G * beta[j];
    norm2 += phi[j].squaredNorm() / n + alphas[j] * beta[j].dot(phi[j]);
  }
  if (!(norm2 > 1e-300))
    throw SolverError("direct solver produced a zero-norm component");
  const double scale = 1.0 / std::sqrt(norm2);

  ApcComponent comp;
  comp.var.resize(p);
  comp.penalty.resize(p);
  double extreme = 0.0;
  for (int j = 0; j < p; ++j) {
    beta[j] *= scale;
    phi[j] *= scale;
    for (Index i = 0; i < phi[j].size(); ++i)
      if (std::abs(phi[j][i]) > std::abs(extreme)) extreme = phi[j][i];
  }
  if (extreme < 0.0)
    for (int j = 0; j < p; ++j) {
      beta[j] = -beta[j];
      phi[j] = -phi[j];
    }
  VectorXd total = VectorXd::Zero(grams.front().n);
  for (int j = 0; j < p; ++j) {
    comp.var[j] = phi[j].squaredNorm() / n;
    comp.penalty[j] = alphas[j] * beta[j].dot(phi[j]);
    total += phi[j];
  }
  const double var_sum = comp.var.sum();
  const double pen_sum = comp.penalty.sum();
  comp.raw_eigenvalue =
      var_sum > 0.0 ? (total.squaredNorm() / n) / var_sum : 0.0;
  comp.eigenvalue =
      (total.squaredNorm() / n + pen_sum) / (var_sum + pen_sum);
  comp.beta = std::move(beta);
  comp.d.assign(p, VectorXd(0));
  comp.phi = std::move(phi);
  comp.converged = true;
  return comp;
}

}  // namespace

DirectSolution solve_direct(const std::vector<CenteredGram>& grams,
                            const std::vector<double>& alphas, int k) {
  check_problem(grams, alphas, k);
  const int p = static_cast<int>(grams.size());
  const Index n = grams.front().n;

  DirectSolution sol;
  sol.retained_rank.assign(p, n);
  sol.degenerate = true;
  for (const auto& g : grams)
    if (g.G.cwiseAbs().maxCoeff() > 1e-14) sol.degenerate = false;

  // R_j = G_j (G_j + (n alpha_j/2) I)^{-1}; R has identity diagonal blocks
  // and off-diagonal blocks R_i R_j.
  std::vector<MatrixXd> R(p);
  std::vector<Eigen::LDLT<MatrixXd>> ldlt(p);
  for (int j = 0; j < p; ++j) {
    MatrixXd Nj = grams[j].G;
    Nj.diagonal().array() += 0.5 * static_cast<double>(n) * alphas[j];
    ldlt[j].compute(Nj);
    if (ldlt[j].info() != Eigen::Success)
      throw SolverError("factorization of G + (n alpha/2) I failed");
    R[j] = ldlt[j].solve(grams[j].G);
    R[j] = 0.5 * (R[j] + R[j].transpose()).eval();
  }

  MatrixXd big = MatrixXd::Identity(p * n, p * n);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) {
      if (i == j) continue;
      big.block(i * n, j * n, n, n).noalias() = R[i] * R[j];
    }

  Eigen::SelfAdjointEigenSolver<MatrixXd> es(big);
  if (es.info() != Eigen::Success)
    throw SolverError("eigendecomposition of R failed");
  sol.spectrum = es.eigenvalues();

  if (sol.degenerate) return sol;  // R is the identity; nothing to recover

  const int kk = std::min<int>(k, static_cast<int>(p * n));
  for (int c = 0; c < kk; ++c) {
    std::vector<VectorXd> beta(p);
    for (int j = 0; j < p; ++j) {
      const VectorXd gamma_j = es.eigenvectors().col(c).segment(j * n, n);
      beta[j] = ldlt[j].solve(gamma_j);
    }
    sol.components.push_back(finish_component(grams, alphas, beta));
  }
  return sol;
}

DirectSolution solve_oracle_exact(const std::vector<CenteredGram>& grams,
                                  const std::vector<double>& alphas, int k,
                                  double rank_tol) {
  check_problem(grams, alphas, k);
  const int p = static_cast<int>(grams.size());
  const double n = static_cast<double>(grams.front().n);

  // Reduce each block to the eigenbasis of G_j, keeping eigenvalues above
  // rank_tol relative to the largest; the constraint form is positive
  // definite on the retained subspace.
  std::vector<MatrixXd> U(p);
  std::vector<VectorXd> lam(p);
  DirectSolution sol;
  sol.retained_rank.resize(p);
  Index total = 0;
  for (int j = 0; j < p; ++j) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(grams[j].G);
    if (es.info() != Eigen::Success)
      throw SolverError("eigendecomposition of a centered Gram failed");
    const double top = es.eigenvalues().maxCoeff();
    if (top <= 1e-14)
      throw SolverError("oracle solver: all-zero centered Gram");
    std::vector<Index> keep;
    for (Index i = 0; i < es.eigenvalues().size(); ++i)
      if (es.eigenvalues()[i] > rank_tol * top) keep.push_back(i);
    const Index r = static_cast<Index>(keep.size());
    U[j].resize(grams[j].n, r);
    lam[j].resize(r);
    for (Index i = 0; i < r; ++i) {
      U[j].col(i) = es.eigenvectors().col(keep[i]);
      lam[j][i] = es.eigenvalues()[keep[i]];
    }
    sol.retained_rank[j] = r;
    total += r;
  }

  // In reduced coordinates z_j the two quadratic forms become
  //   A: blocks (1/n) L_i U_i^T U_j L_j (i != j), diag (1/n) L_j^2 + a_j L_j
  //   B: diag (1/n) L_j^2 + a_j L_j             (diagonal, positive)
  VectorXd bdiag(total);
  std::vector<Index> offset(p + 1, 0);
  for (int j = 0; j < p; ++j) {
    offset[j + 1] = offset[j] + lam[j].size();
    bdiag.segment(offset[j], lam[j].size()) =
        (lam[j].array().square() / n + alphas[j] * lam[j].array()).matrix();
  }
  MatrixXd A = MatrixXd::Zero(total, total);
  for (int i = 0; i < p; ++i) {
    A.block(offset[i], offset[i], lam[i].size(), lam[i].size()) =
        bdiag.segment(offset[i], lam[i].size()).asDiagonal();
    for (int j = 0; j < p; ++j) {
      if (i == j) continue;
      A.block(offset[i], offset[j], lam[i].size(), lam[j].size()).noalias() =
          (lam[i].asDiagonal() * (U[i].transpose() * U[j]) *
           lam[j].asDiagonal()) /
          n;
    }
  }

  // scale out B: solve the ordinary symmetric problem on B^{-1/2} A B^{-1/2}
  const VectorXd binv_sqrt = bdiag.cwiseSqrt().cwiseInverse();
  MatrixXd Atil = binv_sqrt.asDiagonal() * A * binv_sqrt.asDiagonal();
  Atil = 0.5 * (Atil + Atil.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(Atil);
  if (es.info() != Eigen::Success)
    throw SolverError("reduced eigenproblem failed");
  sol.spectrum = es.eigenvalues();

  const int kk = std::min<int>(k, static_cast<int>(total));
  for (int c = 0; c < kk; ++c) {
    const VectorXd z = binv_sqrt.cwiseProduct(es.eigenvectors().col(c));
    std::vector<VectorXd> beta(p);
    for (int j = 0; j < p; ++j)
      beta[j] = U[j] * z.segment(offset[j], lam[j].size());
    sol.components.push_back(finish_component(grams, alphas, beta));
  }
  return sol;
}

}  // namespace kapc
