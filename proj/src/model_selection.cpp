#include "kapc/model_selection.hpp"

#include "kapc/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <random>

namespace kapc {

std::pair<MatrixXd, StandardizeRecord> standardize(const MatrixXd& data) {
  const Index n = data.rows(), p = data.cols();
  if (n < 2) throw DataError("standardize: need at least 2 rows");
  StandardizeRecord rec;
  rec.mean.resize(p);
  rec.scale.resize(p);
  for (Index j = 0; j < p; ++j) {
    rec.mean[j] = data.col(j).mean();
    const double ss = (data.col(j).array() - rec.mean[j]).square().sum();
    const double var = ss / static_cast<double>(n - 1);
    if (!(var > 0.0))
      throw DataError("standardize: column " + std::to_string(j + 1) +
                      " has zero variance");
    rec.scale[j] = std::sqrt(var);
  }
  return {apply_standardize(rec, data), rec};
}

MatrixXd apply_standardize(const StandardizeRecord& rec, const MatrixXd& data) {
  if (data.cols() != rec.mean.size())
    throw DataError("standardize record does not match column count");
  MatrixXd out = data;
  for (Index j = 0; j < data.cols(); ++j)
    out.col(j) = (data.col(j).array() - rec.mean[j]) / rec.scale[j];
  return out;
}

MatrixXd invert_standardize(const StandardizeRecord& rec,
                            const MatrixXd& data) {
  if (data.cols() != rec.mean.size())
    throw DataError("standardize record does not match column count");
  MatrixXd out = data;
  for (Index j = 0; j < data.cols(); ++j)
    out.col(j) = data.col(j).array() * rec.scale[j] + rec.mean[j];
  return out;
}

std::vector<double> alpha_grid(double base, int exp_min, int exp_max) {
  if (!(base > 0.0) || base == 1.0)
    throw DataError("grid base must be positive and != 1");
  if (exp_min > exp_max) throw DataError("grid exponents out of order");
  std::vector<double> grid;
  for (int e = exp_min; e <= exp_max; ++e)
    grid.push_back(std::pow(base, e));
  std::sort(grid.begin(), grid.end());
  return grid;
}

std::vector<double> default_alpha_grid() { return alpha_grid(1.5, -29, 5); }

namespace {

double sample_variance(const VectorXd& v) {
  const Index m = v.size();
  if (m < 2) throw SolverError("variance of fewer than 2 values");
  const double mean = v.mean();
  return (v.array() - mean).square().sum() / static_cast<double>(m - 1);
}

struct FoldData {
  std::vector<Index> train, hold;
  std::vector<VariableBlock> blocks;   // alpha filled in per grid point
  std::vector<MatrixXd> raw_kernel;    // kernel on training rows
  std::vector<MatrixXd> cross_kernel;  // precomputed: k(train, hold)
  MatrixXd x_hold;                     // holdout raw columns
};

MatrixXd submatrix(const MatrixXd& K, const std::vector<Index>& rows,
                   const std::vector<Index>& cols) {
  MatrixXd out(rows.size(), cols.size());
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < cols.size(); ++j) out(i, j) = K(rows[i], cols[j]);
  return out;
}

VectorXd subvector(const Eigen::Ref<const VectorXd>& v,
                   const std::vector<Index>& rows) {
  VectorXd out(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) out[i] = v[rows[i]];
  return out;
}

}  // namespace

CvResult cross_validate(const MatrixXd& data,
                        const std::vector<KernelSpec>& specs,
                        std::vector<double> grid, int folds,
                        std::uint64_t seed, const SolverConfig& config) {
  const Index n = data.rows();
  const int p = static_cast<int>(specs.size());
  if (p < 2) throw DataError("cross_validate: need at least 2 variables");
  if (data.cols() != p)
    throw DataError("cross_validate: data has wrong number of columns");
  if (folds < 2) throw DataError("cross_validate: need folds >= 2");
  if (n < 2 * folds)
    throw DataError("cross_validate: need n >= 2 * folds");
  if (grid.empty()) throw DataError("cross_validate: empty grid");
  std::sort(grid.begin(), grid.end());
  for (const auto& s : specs)
    if (s.kind == KernelKind::kPrecomputed &&
        (!s.matrix || s.matrix->rows() != n))
      throw DataError("precomputed kernel does not match the sample size");

  // seeded shuffle, then contiguous near-equal folds
  std::vector<Index> perm(n);
  std::iota(perm.begin(), perm.end(), Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);

  std::vector<FoldData> fold_data(folds);
  for (int f = 0; f < folds; ++f) {
    const Index lo = n * f / folds, hi = n * (f + 1) / folds;
    FoldData& fd = fold_data[f];
    for (Index i = 0; i < n; ++i) {
      if (i >= lo && i < hi)
        fd.hold.push_back(perm[i]);
      else
        fd.train.push_back(perm[i]);
    }
    if (fd.hold.size() < 2) throw DataError("cross_validate: fold too small");

    fd.x_hold.resize(fd.hold.size(), p);
    for (int j = 0; j < p; ++j) {
      fd.x_hold.col(j) = subvector(data.col(j), fd.hold);
      VariableBlock b;
      b.spec = specs[j];
      b.alpha = 1.0;  // placeholder, set per grid point
      if (specs[j].pointwise()) {
        b.xs = subvector(data.col(j), fd.train);
        b.rescale = make_rescale(specs[j], b.xs);
        fd.raw_kernel.push_back(kernel_matrix(specs[j], b.xs));
        fd.cross_kernel.emplace_back();
        b.Q = null_space_basis(specs[j], b.xs);
      } else {
        fd.raw_kernel.push_back(
            submatrix(*specs[j].matrix, fd.train, fd.train));
        fd.cross_kernel.push_back(
            submatrix(*specs[j].matrix, fd.train, fd.hold));
        b.Q = MatrixXd(static_cast<Index>(fd.train.size()), 0);
      }
      b.gram = center_gram(fd.raw_kernel.back());
      b.eig = make_gram_eigen(b.gram);
      fd.blocks.push_back(std::move(b));
    }
  }

  const int g = static_cast<int>(grid.size());
  CvResult result;
  result.grid = grid;
  result.folds = folds;
  result.per_fold.resize(folds, g);

  SolverConfig cv_config = config;
  cv_config.n_components = 1;
  cv_config.init = InitKind::kRandomNormal;

  // grid x folds tasks are independent; results land in distinct cells
  std::exception_ptr err;
#pragma omp parallel for schedule(dynamic)
  for (int task = 0; task < folds * g; ++task) {
    try {
      const int f = task / g;
      const int gi = task % g;
      const FoldData& fd = fold_data[f];
      std::vector<VariableBlock> blocks = fd.blocks;
      for (auto& b : blocks) b.alpha = grid[gi];
      ApcProblem prob = make_problem(std::move(blocks), cv_config);
      const ApcComponent comp = solve_power(prob);

      const Index nh = static_cast<Index>(fd.hold.size());
      VectorXd total = VectorXd::Zero(nh);
      double var_sum = 0.0;
      for (int j = 0; j < p; ++j) {
        VectorXd vals(nh);
        if (specs[j].pointwise()) {
          TransformEvaluator ev(specs[j], prob.blocks[j].xs,
                                prob.blocks[j].rescale, comp.beta[j],
                                comp.d[j], fd.raw_kernel[j]);
          for (Index h = 0; h < nh; ++h) vals[h] = ev(fd.x_hold(h, j));
        } else {
          TransformEvaluator ev(specs[j], VectorXd(), Rescale{}, comp.beta[j],
                                VectorXd(0), fd.raw_kernel[j]);
          for (Index h = 0; h < nh; ++h)
            vals[h] = ev.from_kernel_column(fd.cross_kernel[j].col(h));
        }
        total += vals;
        var_sum += sample_variance(vals);
      }
      result.per_fold(f, gi) = sample_variance(total) / var_sum;
    } catch (...) {
#pragma omp critical
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);

  result.cv_scores.resize(g);
  int best = 0;
  for (int gi = 0; gi < g; ++gi) {
    result.cv_scores[gi] = result.per_fold.col(gi).mean();
    if (result.cv_scores[gi] < result.cv_scores[best]) best = gi;
  }
  result.selected_alpha = grid[best];
  return result;
}

double calibrate_alpha_for_df(const CenteredGram& gram, const MatrixXd& Q,
                              double target_df, DfKind kind) {
  auto eig = make_gram_eigen(gram);
  const auto df_at = [&](double alpha) {
    return PenalizedSmoother(eig, Q, alpha).df(kind);
  };
  double lo = 1e-10, hi = 1e6;  // df decreasing in alpha
  const double df_max = df_at(lo), df_min = df_at(hi);
  const double tol = 0.01;
  if (target_df > df_max + tol || target_df < df_min - tol)
    throw DataError("df target " + std::to_string(target_df) +
                    " outside achievable range [" + std::to_string(df_min) +
                    ", " + std::to_string(df_max) + "]");
  if (std::abs(df_max - target_df) <= tol) return lo;
  if (std::abs(df_min - target_df) <= tol) return hi;
  for (int it = 0; it < 200; ++it) {
    const double mid = std::sqrt(lo * hi);
    const double df = df_at(mid);
    if (std::abs(df - target_df) <= tol) return mid;
    if (df > target_df)
      lo = mid;
    else
      hi = mid;
  }
  throw SolverError("df bisection failed to converge");
}

}  // namespace kapc
