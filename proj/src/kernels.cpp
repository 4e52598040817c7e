#include "kapc/kernels.hpp"

#include "kapc/gram.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <set>

namespace kapc {

KernelSpec KernelSpec::gaussian(double bw) {
  if (!(bw > 0.0) || !std::isfinite(bw))
    throw DataError("Gaussian kernel requires bandwidth > 0");
  KernelSpec s;
  s.kind = KernelKind::kGaussian;
  s.bandwidth = bw;
  return s;
}

KernelSpec KernelSpec::sobolev(int m) {
  if (m < 1) throw DataError("Sobolev kernel requires order m >= 1");
  KernelSpec s;
  s.kind = KernelKind::kSobolev;
  s.order = m;
  return s;
}

KernelSpec KernelSpec::precomputed(MatrixXd k) {
  if (k.rows() < 2 || k.rows() != k.cols())
    throw DataError("precomputed kernel must be square with n >= 2");
  KernelSpec s;
  s.kind = KernelKind::kPrecomputed;
  s.matrix = std::make_shared<const MatrixXd>(
      validate_kernel_matrix(k, k.rows()));
  return s;
}

const char* KernelSpec::name() const {
  switch (kind) {
    case KernelKind::kGaussian: return "gaussian";
    case KernelKind::kSobolev: return "sobolev";
    case KernelKind::kPrecomputed: return "precomputed";
  }
  return "?";
}

namespace {

// Bernoulli numbers B_0.. via the defining recurrence
// sum_{k=0}^{n} C(n+1,k) B_k = 0.  Doubles are ample for the orders a
// Sobolev kernel can reasonably use (2m <= ~40).
const std::vector<double>& bernoulli_numbers(int up_to) {
  static std::vector<double> cache{1.0, -0.5};
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  while (static_cast<int>(cache.size()) <= up_to) {
    int n = static_cast<int>(cache.size());
    // C(n+1, k) running binomial
    double binom = 1.0;  // C(n+1, 0)
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
      acc += binom * cache[k];
      binom = binom * (n + 1 - k) / (k + 1);
    }
    cache.push_back(-acc / (n + 1.0));
  }
  return cache;
}

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

}  // namespace

double bernoulli_poly(int n, double x) {
  // B_n(x) = sum_{k=0}^{n} C(n,k) B_{n-k} x^k
  const auto& B = bernoulli_numbers(n);
  double binom = 1.0;
  double xpow = 1.0;
  double acc = 0.0;
  for (int k = 0; k <= n; ++k) {
    acc += binom * B[n - k] * xpow;
    binom = binom * (n - k) / (k + 1);
    xpow *= x;
  }
  return acc;
}

namespace {

double sobolev_kernel(int m, double x, double y) {
  // Order-m spline kernel on [0,1]:
  //   k(x,y) = B_m(x) B_m(y) / (m!)^2 + (-1)^{m-1} B_{2m}(|x-y|) / (2m)!
  const double fm = factorial(m);
  double val = bernoulli_poly(m, x) * bernoulli_poly(m, y) / (fm * fm);
  double sign = (m % 2 == 1) ? 1.0 : -1.0;
  val += sign * bernoulli_poly(2 * m, std::abs(x - y)) / factorial(2 * m);
  return val;
}

}  // namespace

double eval_kernel(const KernelSpec& spec, double x, double y) {
  if (!std::isfinite(x) || !std::isfinite(y))
    throw DataError("eval_kernel: non-finite input");
  switch (spec.kind) {
    case KernelKind::kGaussian: {
      const double z = (x - y) / spec.bandwidth;
      return std::exp(-0.5 * z * z);
    }
    case KernelKind::kSobolev:
      return sobolev_kernel(spec.order, x, y);
    case KernelKind::kPrecomputed:
      throw DataError("precomputed kernel has no pointwise form");
  }
  throw DataError("unknown kernel kind");
}

Rescale make_rescale(const KernelSpec& spec, const VectorXd& xs) {
  if (spec.kind != KernelKind::kSobolev) return Rescale{};
  return Rescale{xs.minCoeff(), xs.maxCoeff()};
}

namespace {

void check_inputs(const VectorXd& xs) {
  if (xs.size() < 2) throw DataError("kernel_matrix: need n >= 2 points");
  if (!xs.allFinite()) throw DataError("kernel_matrix: non-finite input");
}

VectorXd rescaled_inputs(const KernelSpec& spec, const VectorXd& xs) {
  if (spec.kind != KernelKind::kSobolev) return xs;
  const Rescale r = make_rescale(spec, xs);
  VectorXd t(xs.size());
  for (Index i = 0; i < xs.size(); ++i) t[i] = r.to_unit(xs[i]);
  return t;
}

}  // namespace

MatrixXd kernel_matrix(const KernelSpec& spec, const VectorXd& xs) {
  if (spec.kind == KernelKind::kPrecomputed) {
    if (!spec.matrix || spec.matrix->rows() != xs.size())
      throw DataError("precomputed kernel matrix has wrong dimension");
    return *spec.matrix;
  }
  check_inputs(xs);
  const VectorXd t = rescaled_inputs(spec, xs);
  const Index n = t.size();
  MatrixXd K(n, n);
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j <= i; ++j) {
      K(i, j) = eval_kernel(spec, t[i], t[j]);
    }
  }
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) K(i, j) = K(j, i);
  return K;
}

namespace reference {

MatrixXd kernel_matrix(const KernelSpec& spec, const VectorXd& xs) {
  if (spec.kind == KernelKind::kPrecomputed) {
    if (!spec.matrix || spec.matrix->rows() != xs.size())
      throw DataError("precomputed kernel matrix has wrong dimension");
    return *spec.matrix;
  }
  check_inputs(xs);
  const VectorXd t = rescaled_inputs(spec, xs);
  const Index n = t.size();
  MatrixXd K(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j <= i; ++j) K(i, j) = eval_kernel(spec, t[i], t[j]);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) K(i, j) = K(j, i);
  return K;
}

}  // namespace reference

MatrixXd feature_gram_kernel(const MatrixXd& features) {
  if (features.rows() < 2 || features.cols() < 1)
    throw DataError("feature_gram_kernel: need n >= 2 rows, m >= 1 columns");
  if (!features.allFinite())
    throw DataError("feature_gram_kernel: non-finite input");
  const double tr = features.squaredNorm();  // tr(H H^T) = ||H||_F^2
  if (tr <= 0.0)
    throw DataError("feature_gram_kernel: all-zero feature matrix");
  MatrixXd K = features * features.transpose();
  K /= tr;
  return K;
}

MatrixXd null_space_basis(const KernelSpec& spec, const VectorXd& xs) {
  const int q = spec.null_space_dim();
  const Index n = xs.size();
  if (q == 0) return MatrixXd(n, 0);
  check_inputs(xs);
  const VectorXd t = rescaled_inputs(spec, xs);

  std::set<double> distinct(t.data(), t.data() + n);
  if (static_cast<int>(distinct.size()) < spec.order)
    throw DataError("null_space_basis: rank deficiency, need at least " +
                    std::to_string(spec.order) + " distinct values");

  MatrixXd Q(n, q);
  for (int j = 0; j < q; ++j) {
    for (Index i = 0; i < n; ++i) Q(i, j) = std::pow(t[i], j + 1);
    Q.col(j).array() -= Q.col(j).mean();
  }
  return Q;
}

}  // namespace kapc
