#pragma once

#include "kapc/gram.hpp"
#include "kapc/smoother.hpp"
#include "kapc/types.hpp"

#include <optional>

namespace kapc {

/// One variable prepared for the eigenproblem: centered Gram, centered
/// null-space design, penalty, and the shared spectral factorization.
struct VariableBlock {
  KernelSpec spec;
  VectorXd xs;      // raw training values; empty for precomputed kernels
  Rescale rescale;
  CenteredGram gram;
  MatrixXd Q;       // n x q
  double alpha = 0.0;
  std::shared_ptr<const GramEigen> eig;
};

/// Build a block from raw values (pointwise kernels) or from the matrix
/// carried by a precomputed spec.
VariableBlock prepare_block(const KernelSpec& spec, const VectorXd& xs,
                            double alpha);
VariableBlock prepare_block_precomputed(const KernelSpec& spec, double alpha);

/// The assembled eigenproblem.  gamma = (p+1)/2 shifts the spectrum so that
/// power iteration targets the smallest eigenvalue.
struct ApcProblem {
  std::vector<VariableBlock> blocks;
  SolverConfig config;
  std::vector<PenalizedSmoother> smoothers;  // one per block

  int p() const { return static_cast<int>(blocks.size()); }
  Index n() const { return blocks.empty() ? 0 : blocks.front().gram.n; }
  double gamma() const { return (p() + 1) / 2.0; }
};

ApcProblem make_problem(std::vector<VariableBlock> blocks, SolverConfig config);

/// One eigen-solution.  phi_j = G_j beta_j + Q_j d_j (centered values at the
/// training points); var_j + penalty_j sum to 1 across variables.
struct ApcComponent {
  std::vector<VectorXd> beta;
  std::vector<VectorXd> d;
  std::vector<VectorXd> phi;
  VectorXd var;      // per-variable sample variance of phi_j (1/n convention)
  VectorXd penalty;  // alpha_j beta_j^T G_j beta_j
  double eigenvalue = 0.0;      // penalized Rayleigh value
  double raw_eigenvalue = 0.0;  // Var(sum phi) / sum Var(phi), unpenalized
  int iterations = 0;
  bool converged = false;
  bool near_tie = false;  // set by the multi-component driver
  std::vector<double> criterion_trace;  // penalized criterion per iteration
};

/// <Phi,Psi>_* = sum_j [ Cov(phi_j, psi_j) + alpha_j beta_j^T G_j beta'_j ].
double star_inner_product(const std::vector<VariableBlock>& blocks,
                          const ApcComponent& a, const ApcComponent& b);

/// Penalized Rayleigh quotient
///   (Var sum phi + sum penalties) / (sum Var phi + sum penalties).
double penalized_rayleigh(const std::vector<VariableBlock>& blocks,
                          const ApcComponent& comp);

/// One sweep of the power algorithm: for each i, smooth the sum of the other
/// transforms against variable i, apply beta_i <- (gamma-1) beta_i - c_i,
/// orthogonalize against priors, renormalize to the unit constraint.
ApcComponent power_step(const ApcProblem& problem, const ApcComponent& current,
                        const std::vector<ApcComponent>& priors = {});

/// Run the power algorithm for the smallest component orthogonal to priors.
ApcComponent solve_power(const ApcProblem& problem,
                         const std::vector<ApcComponent>& priors = {});

/// Extract config.n_components components by deflation.
std::vector<ApcComponent> solve_components(const ApcProblem& problem);

}  // namespace kapc
