#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace kapc {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Bad user input: malformed files, invalid dimensions, out-of-range options.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure inside a solver (degenerate problem, singular system).
struct SolverError : std::runtime_error {
  explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class KernelKind { kGaussian, kSobolev, kPrecomputed };

/// Affine map of a variable's training range onto [0,1].  Identity for
/// kernels that do not need a bounded domain.
struct Rescale {
  double lo = 0.0;
  double hi = 1.0;

  double to_unit(double x) const {
    if (hi <= lo) return 0.5;
    return (x - lo) / (hi - lo);
  }
  /// Same map with the result clamped to [0,1]; out-of-sample points beyond
  /// the training range evaluate at the nearest domain endpoint.
  double to_unit_clamped(double x) const {
    double t = to_unit(x);
    if (t < 0.0) return 0.0;
    if (t > 1.0) return 1.0;
    return t;
  }
};

/// Description of one variable's kernel.
///
/// Gaussian: k(x,x') = exp(-(x-x')^2 / (2 bw^2)), no null space.
/// Sobolev of order m: spline kernel on [0,1] built from scaled Bernoulli
///   polynomials, null space spanned by x, ..., x^{m-1} (constants excluded).
/// Precomputed: caller-supplied positive semidefinite similarity matrix.
struct KernelSpec {
  KernelKind kind = KernelKind::kGaussian;
  double bandwidth = 1.0;  // Gaussian only
  int order = 2;           // Sobolev only, m >= 1
  std::shared_ptr<const MatrixXd> matrix;  // Precomputed only

  static KernelSpec gaussian(double bw);
  static KernelSpec sobolev(int m);
  static KernelSpec precomputed(MatrixXd k);  // validates the matrix

  int null_space_dim() const {
    return kind == KernelKind::kSobolev ? order - 1 : 0;
  }
  bool pointwise() const { return kind != KernelKind::kPrecomputed; }
  const char* name() const;
};

enum class InitKind { kRandomNormal, kSupplied };

/// Solver knobs shared by the power and direct paths.
struct SolverConfig {
  double tol = 1e-9;       // relative change of the penalized criterion
  int max_iter = 10000;
  std::uint64_t seed = 0;
  int n_components = 1;
  InitKind init = InitKind::kRandomNormal;
  std::vector<VectorXd> init_beta;  // used when init == kSupplied
  std::vector<VectorXd> init_d;
};

}  // namespace kapc
