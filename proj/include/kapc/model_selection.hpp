#pragma once

#include "kapc/apc_power.hpp"

namespace kapc {

/// Per-column location/scale of the training data; supports applying the
/// same transform to fresh rows and inverting it.
struct StandardizeRecord {
  VectorXd mean;
  VectorXd scale;  // sample standard deviation, n-1 denominator
};

std::pair<MatrixXd, StandardizeRecord> standardize(const MatrixXd& data);
MatrixXd apply_standardize(const StandardizeRecord& rec, const MatrixXd& data);
MatrixXd invert_standardize(const StandardizeRecord& rec, const MatrixXd& data);

/// Grid of holdout scores for a common penalty value.
struct CvResult {
  std::vector<double> grid;
  std::vector<double> cv_scores;  // mean over folds, one per grid point
  MatrixXd per_fold;              // folds x grid
  double selected_alpha = 0.0;    // argmin, ties resolved to the smaller alpha
  int folds = 0;
};

std::vector<double> alpha_grid(double base, int exp_min, int exp_max);
std::vector<double> default_alpha_grid();  // 1.5^{-29} .. 1.5^{5}

/// k-fold cross-validation of the unpenalized holdout eigenvalue
///   Var(sum phi_j) / sum Var(phi_j),
/// transforms fitted on the training folds, variances taken on the holdout.
/// Precomputed specs carry the full n x n kernel matrix and are handled by
/// sub-setting it; data column values are ignored for those variables.
CvResult cross_validate(const MatrixXd& data,
                        const std::vector<KernelSpec>& specs,
                        std::vector<double> grid, int folds,
                        std::uint64_t seed, const SolverConfig& config);

/// Bisection on log(alpha) until |df(alpha) - target| <= 0.01.
double calibrate_alpha_for_df(const CenteredGram& gram, const MatrixXd& Q,
                              double target_df, DfKind kind);

}  // namespace kapc
