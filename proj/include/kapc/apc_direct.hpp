#pragma once

#include "kapc/apc_power.hpp"

namespace kapc {

/// Result of a non-iterative solve: components from the smallest eigenvalue
/// up, the computed spectrum, and the per-variable retained rank.
struct DirectSolution {
  std::vector<ApcComponent> components;
  VectorXd spectrum;  // ascending
  std::vector<Index> retained_rank;
  bool degenerate = false;  // all Grams zero: spectrum collapses to 1
};

/// Approximate eigensolver: eigendecomposition of the pn x pn matrix R with
/// identity diagonal blocks and off-diagonal blocks R_i R_j, where
/// R_j = G_j (G_j + (n alpha_j / 2) I)^{-1}.  No null-space support.
DirectSolution solve_direct(const std::vector<CenteredGram>& grams,
                            const std::vector<double>& alphas, int k);

/// Exact solver on the reduced subspace: each G_j is rank-truncated at
/// rank_tol relative to its largest eigenvalue and the generalized
/// eigenproblem is solved exactly in the reduced coordinates.  This is the
/// brute-force oracle the iterative solvers are validated against.
DirectSolution solve_oracle_exact(const std::vector<CenteredGram>& grams,
                                  const std::vector<double>& alphas, int k,
                                  double rank_tol = 1e-10);

}  // namespace kapc
