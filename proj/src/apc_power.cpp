#include "kapc/apc_power.hpp"

#include "kapc/kernels.hpp"

#include <cmath>
#include <exception>
#include <random>

namespace kapc {

VariableBlock prepare_block(const KernelSpec& spec, const VectorXd& xs,
                            double alpha) {
  if (spec.kind == KernelKind::kPrecomputed)
    return prepare_block_precomputed(spec, alpha);
  VariableBlock b;
  b.spec = spec;
  b.xs = xs;
  b.rescale = make_rescale(spec, xs);
  const MatrixXd K = kernel_matrix(spec, xs);
  b.gram = center_gram(K);
  b.Q = null_space_basis(spec, xs);
  b.alpha = alpha;
  b.eig = make_gram_eigen(b.gram);
  return b;
}

VariableBlock prepare_block_precomputed(const KernelSpec& spec, double alpha) {
  if (!spec.matrix) throw DataError("precomputed spec carries no matrix");
  VariableBlock b;
  b.spec = spec;
  b.gram = center_gram(*spec.matrix);
  b.Q = MatrixXd(b.gram.n, 0);
  b.alpha = alpha;
  b.eig = make_gram_eigen(b.gram);
  return b;
}

ApcProblem make_problem(std::vector<VariableBlock> blocks,
                        SolverConfig config) {
  if (blocks.size() < 2) throw DataError("need at least p = 2 variables");
  const Index n = blocks.front().gram.n;
  for (const auto& b : blocks) {
    if (b.gram.n != n) throw DataError("blocks disagree on sample size");
    if (!(b.alpha > 0.0)) throw DataError("all penalties must be > 0");
  }
  if (!(config.tol > 0.0)) throw DataError("tol must be > 0");
  if (config.max_iter < 1) throw DataError("max_iter must be >= 1");
  if (config.n_components < 1) throw DataError("n_components must be >= 1");
  ApcProblem prob;
  prob.config = std::move(config);
  for (auto& b : blocks) {
    if (!b.eig) b.eig = make_gram_eigen(b.gram);
    prob.smoothers.emplace_back(b.eig, b.Q, b.alpha);
  }
  prob.blocks = std::move(blocks);
  return prob;
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Working representation of a candidate component in coefficient space,
// with the value vectors G_j beta_j and phi_j kept in sync.
struct CoefState {
  std::vector<VectorXd> beta, d, gbeta, phi;
};

void refresh_values(const ApcProblem& prob, CoefState& s) {
  const int p = prob.p();
  s.gbeta.resize(p);
  s.phi.resize(p);
  for (int j = 0; j < p; ++j) {
    const auto& b = prob.blocks[j];
    s.gbeta[j].noalias() = b.gram.G * s.beta[j];
    s.phi[j] = s.gbeta[j];
    if (b.Q.cols() > 0) s.phi[j].noalias() += b.Q * s.d[j];
  }
}

double state_star_norm2(const ApcProblem& prob, const CoefState& s) {
  const double n = static_cast<double>(prob.n());
  double acc = 0.0;
  for (int j = 0; j < prob.p(); ++j) {
    acc += s.phi[j].squaredNorm() / n;
    acc += prob.blocks[j].alpha * s.beta[j].dot(s.gbeta[j]);
  }
  return acc;
}

double star_with_prior(const ApcProblem& prob, const ApcComponent& prior,
                       const CoefState& s) {
  const double n = static_cast<double>(prob.n());
  double acc = 0.0;
  for (int j = 0; j < prob.p(); ++j) {
    acc += prior.phi[j].dot(s.phi[j]) / n;
    acc += prob.blocks[j].alpha * prior.beta[j].dot(s.gbeta[j]);
  }
  return acc;
}

void gram_schmidt(const ApcProblem& prob,
                  const std::vector<ApcComponent>& priors, CoefState& s) {
  for (const auto& prior : priors) {
    const double ip = star_with_prior(prob, prior, s);
    for (int j = 0; j < prob.p(); ++j) {
      s.beta[j] -= ip * prior.beta[j];
      if (s.d[j].size() > 0) s.d[j] -= ip * prior.d[j];
      s.phi[j] -= ip * prior.phi[j];
      s.gbeta[j] -= ip * (prior.phi[j] - prob.blocks[j].Q * prior.d[j]);
    }
  }
}

void normalize(const ApcProblem& prob, CoefState& s) {
  const double norm2 = state_star_norm2(prob, s);
  if (!(norm2 > 1e-300) || !std::isfinite(norm2))
    throw SolverError("degenerate start: component has zero norm");
  const double c = 1.0 / std::sqrt(norm2);
  for (int j = 0; j < prob.p(); ++j) {
    s.beta[j] *= c;
    if (s.d[j].size() > 0) s.d[j] *= c;
    s.gbeta[j] *= c;
    s.phi[j] *= c;
  }
}

// Penalized criterion Var(sum phi) + sum alpha_j beta_j^T G_j beta_j; equals
// the Rayleigh quotient once the state is normalized to the unit constraint.
double criterion(const ApcProblem& prob, const CoefState& s) {
  const double n = static_cast<double>(prob.n());
  VectorXd total = VectorXd::Zero(prob.n());
  double pen = 0.0;
  for (int j = 0; j < prob.p(); ++j) {
    total += s.phi[j];
    pen += prob.blocks[j].alpha * s.beta[j].dot(s.gbeta[j]);
  }
  return total.squaredNorm() / n + pen;
}

// One sweep: every variable is smoothed against the sum of the time-t values
// of the others, then beta_i <- (gamma-1) beta_i - c_i.
void sweep(const ApcProblem& prob, CoefState& s) {
  const int p = prob.p();
  const double gm1 = prob.gamma() - 1.0;
  VectorXd total = VectorXd::Zero(prob.n());
  for (int j = 0; j < p; ++j) total += s.phi[j];

  std::exception_ptr err;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < p; ++i) {
    try {
      const VectorXd y = total - s.phi[i];
      SmootherFit f = prob.smoothers[i].fit(y);
      s.beta[i] = gm1 * s.beta[i] - f.c;
      if (s.d[i].size() > 0) s.d[i] = gm1 * s.d[i] - f.d;
    } catch (...) {
#pragma omp critical
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  refresh_values(prob, s);
}

CoefState random_init(const ApcProblem& prob, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  CoefState s;
  for (int j = 0; j < prob.p(); ++j) {
    VectorXd b(prob.n());
    for (Index i = 0; i < b.size(); ++i) b[i] = normal(rng);
    s.beta.push_back(std::move(b));
    VectorXd d(prob.blocks[j].Q.cols());
    for (Index i = 0; i < d.size(); ++i) d[i] = normal(rng);
    s.d.push_back(std::move(d));
  }
  refresh_values(prob, s);
  return s;
}

CoefState state_from_component(const ApcProblem& prob,
                               const ApcComponent& comp) {
  if (static_cast<int>(comp.beta.size()) != prob.p())
    throw DataError("component has wrong number of variables");
  CoefState s;
  s.beta = comp.beta;
  s.d.resize(prob.p());
  for (int j = 0; j < prob.p(); ++j) {
    if (s.beta[j].size() != prob.n())
      throw DataError("coefficient vector has wrong length");
    const Index q = prob.blocks[j].Q.cols();
    if (comp.d.size() > static_cast<size_t>(j) && comp.d[j].size() == q)
      s.d[j] = comp.d[j];
    else if (comp.d.size() <= static_cast<size_t>(j) || comp.d[j].size() == 0)
      s.d[j] = VectorXd::Zero(q);  // tolerate missing null-space coefficients
    else
      throw DataError("null-space coefficients have wrong length");
  }
  refresh_values(prob, s);
  return s;
}

ApcComponent state_to_component(const ApcProblem& prob, CoefState s) {
  const double n = static_cast<double>(prob.n());
  ApcComponent comp;
  // deterministic sign: the largest-magnitude transform value is positive
  double extreme = 0.0;
  for (const auto& phi : s.phi)
    for (Index i = 0; i < phi.size(); ++i)
      if (std::abs(phi[i]) > std::abs(extreme)) extreme = phi[i];
  if (extreme < 0.0) {
    for (int j = 0; j < prob.p(); ++j) {
      s.beta[j] = -s.beta[j];
      if (s.d[j].size() > 0) s.d[j] = -s.d[j];
      s.gbeta[j] = -s.gbeta[j];
      s.phi[j] = -s.phi[j];
    }
  }
  comp.var.resize(prob.p());
  comp.penalty.resize(prob.p());
  VectorXd total = VectorXd::Zero(prob.n());
  for (int j = 0; j < prob.p(); ++j) {
    comp.var[j] = s.phi[j].squaredNorm() / n;
    comp.penalty[j] = prob.blocks[j].alpha * s.beta[j].dot(s.gbeta[j]);
    total += s.phi[j];
  }
  const double var_sum = comp.var.sum();
  comp.raw_eigenvalue =
      var_sum > 0.0 ? (total.squaredNorm() / n) / var_sum : 0.0;
  comp.beta = std::move(s.beta);
  comp.d = std::move(s.d);
  comp.phi = std::move(s.phi);
  return comp;
}

void check_not_degenerate(const ApcProblem& prob) {
  bool any = false;
  for (const auto& b : prob.blocks)
    if (b.eig->evals.maxCoeff() > 1e-14) any = true;
  if (!any)
    throw SolverError("degenerate problem: all centered Gram matrices vanish");
}

struct RunResult {
  CoefState state;
  double crit = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;
};

RunResult run_power(const ApcProblem& prob,
                    const std::vector<ApcComponent>& priors, CoefState s) {
  const SolverConfig& cfg = prob.config;
  gram_schmidt(prob, priors, s);
  normalize(prob, s);

  RunResult run;
  double prev = criterion(prob, s);
  run.trace.push_back(prev);
  for (int t = 1; t <= cfg.max_iter; ++t) {
    sweep(prob, s);
    gram_schmidt(prob, priors, s);
    normalize(prob, s);
    const double crit = criterion(prob, s);
    run.trace.push_back(crit);
    run.iterations = t;
    if (std::abs(crit - prev) / std::max(prev, 1e-300) < cfg.tol) {
      run.converged = true;
      prev = crit;
      break;
    }
    prev = crit;
  }
  run.crit = prev;
  run.state = std::move(s);
  return run;
}

}  // namespace

double star_inner_product(const std::vector<VariableBlock>& blocks,
                          const ApcComponent& a, const ApcComponent& b) {
  const size_t p = blocks.size();
  if (a.beta.size() != p || b.beta.size() != p)
    throw DataError("star_inner_product: dimension mismatch");
  const double n = static_cast<double>(blocks.front().gram.n);
  double acc = 0.0;
  for (size_t j = 0; j < p; ++j) {
    if (a.beta[j].size() != blocks[j].gram.n ||
        b.beta[j].size() != blocks[j].gram.n)
      throw DataError("star_inner_product: dimension mismatch");
    const VectorXd gb = blocks[j].gram.G * b.beta[j];
    VectorXd phi_a = blocks[j].gram.G * a.beta[j];
    VectorXd phi_b = gb;
    if (blocks[j].Q.cols() > 0) {
      if (a.d.size() <= j || a.d[j].size() != blocks[j].Q.cols() ||
          b.d.size() <= j || b.d[j].size() != blocks[j].Q.cols())
        throw DataError("star_inner_product: null-space coefficient mismatch");
      phi_a.noalias() += blocks[j].Q * a.d[j];
      phi_b.noalias() += blocks[j].Q * b.d[j];
    }
    acc += phi_a.dot(phi_b) / n + blocks[j].alpha * a.beta[j].dot(gb);
  }
  return acc;
}

double penalized_rayleigh(const std::vector<VariableBlock>& blocks,
                          const ApcComponent& comp) {
  const size_t p = blocks.size();
  if (comp.beta.size() != p)
    throw DataError("penalized_rayleigh: dimension mismatch");
  const double n = static_cast<double>(blocks.front().gram.n);
  VectorXd total = VectorXd::Zero(blocks.front().gram.n);
  double pen = 0.0, var_sum = 0.0;
  for (size_t j = 0; j < p; ++j) {
    const VectorXd gb = blocks[j].gram.G * comp.beta[j];
    VectorXd phi = gb;
    if (blocks[j].Q.cols() > 0 && comp.d.size() > j && comp.d[j].size() > 0) {
      if (comp.d[j].size() != blocks[j].Q.cols())
        throw DataError("penalized_rayleigh: null-space coefficient mismatch");
      phi.noalias() += blocks[j].Q * comp.d[j];
    }
    total += phi;
    pen += blocks[j].alpha * comp.beta[j].dot(gb);
    var_sum += phi.squaredNorm() / n;
  }
  const double den = var_sum + pen;
  if (!(den > 0.0))
    throw SolverError("penalized_rayleigh: zero denominator");
  return (total.squaredNorm() / n + pen) / den;
}

ApcComponent power_step(const ApcProblem& problem, const ApcComponent& current,
                        const std::vector<ApcComponent>& priors) {
  CoefState s = state_from_component(problem, current);
  sweep(problem, s);
  gram_schmidt(problem, priors, s);
  normalize(problem, s);
  const double crit = criterion(problem, s);
  ApcComponent out = state_to_component(problem, std::move(s));
  out.eigenvalue = crit;
  out.iterations = 1;
  return out;
}

ApcComponent solve_power(const ApcProblem& problem,
                         const std::vector<ApcComponent>& priors) {
  check_not_degenerate(problem);
  const SolverConfig& cfg = problem.config;

  CoefState init;
  if (cfg.init == InitKind::kSupplied) {
    ApcComponent supplied;
    supplied.beta = cfg.init_beta;
    supplied.d = cfg.init_d;
    init = state_from_component(problem, supplied);
  } else {
    init = random_init(problem, mix_seed(cfg.seed, priors.size()));
  }

  RunResult run = run_power(problem, priors, std::move(init));
  if (!run.converged && cfg.init == InitKind::kRandomNormal) {
    // one restart from a fresh direction; keep the lower-criterion run
    CoefState again =
        random_init(problem, mix_seed(cfg.seed ^ 0xA5A5A5A5u, priors.size()));
    RunResult second = run_power(problem, priors, std::move(again));
    if (second.crit < run.crit) run = std::move(second);
  }

  ApcComponent comp = state_to_component(problem, std::move(run.state));
  comp.eigenvalue = run.crit;
  comp.iterations = run.iterations;
  comp.converged = run.converged;
  comp.criterion_trace = std::move(run.trace);
  return comp;
}

std::vector<ApcComponent> solve_components(const ApcProblem& problem) {
  std::vector<ApcComponent> comps;
  for (int k = 0; k < problem.config.n_components; ++k) {
    ApcComponent c = solve_power(problem, comps);
    if (k > 0 &&
        std::abs(c.eigenvalue - comps.back().eigenvalue) < 1e-6) {
      c.near_tie = true;
      comps.back().near_tie = true;
    }
    comps.push_back(std::move(c));
  }
  return comps;
}

}  // namespace kapc
