#include "kapc/model.hpp"

#include "kapc/kernels.hpp"

#include <fstream>

namespace kapc {

namespace {

using nlohmann::json;

json vec_to_json(const VectorXd& v) {
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

VectorXd json_to_vec(const json& arr) {
  VectorXd v(arr.size());
  for (size_t i = 0; i < arr.size(); ++i) v[static_cast<Index>(i)] = arr[i];
  return v;
}

json spec_to_json(const KernelSpec& s) {
  json j{{"kind", s.name()}};
  if (s.kind == KernelKind::kGaussian) j["bandwidth"] = s.bandwidth;
  if (s.kind == KernelKind::kSobolev) j["order"] = s.order;
  return j;
}

KernelSpec spec_from_json(const json& j) {
  const std::string kind = j.at("kind");
  if (kind == "gaussian") return KernelSpec::gaussian(j.at("bandwidth"));
  if (kind == "sobolev") return KernelSpec::sobolev(j.at("order"));
  if (kind == "precomputed") {
    KernelSpec s;
    s.kind = KernelKind::kPrecomputed;
    return s;  // the matrix itself is not stored in the model document
  }
  throw DataError("unknown kernel kind '" + kind + "' in model document");
}

std::string solver_name(SolverChoice s) {
  return s == SolverChoice::kPower ? "power" : "direct";
}

}  // namespace

FittedModel fit_model(const MatrixXd& data, const FitOptions& opts) {
  const int p = static_cast<int>(opts.specs.size());
  if (p < 2) throw DataError("need at least 2 variables");

  const int n_penalty_modes = (!opts.alphas.empty() ? 1 : 0) +
                              (opts.cv ? 1 : 0) +
                              (opts.df_target.has_value() ? 1 : 0);
  if (n_penalty_modes != 1)
    throw DataError(
        "exactly one of an explicit alpha, --cv, or a df target is required");

  bool any_pointwise = false;
  Index n = 0;
  for (const auto& s : opts.specs) {
    if (s.pointwise())
      any_pointwise = true;
    else if (s.matrix)
      n = s.matrix->rows();
  }
  if (any_pointwise) {
    if (data.cols() != p)
      throw DataError("data has " + std::to_string(data.cols()) +
                      " columns, expected " + std::to_string(p));
    n = data.rows();
  }
  if (n < 2) throw DataError("need at least 2 observations");
  for (const auto& s : opts.specs)
    if (!s.pointwise() && s.matrix && s.matrix->rows() != n)
      throw DataError("precomputed kernel does not match the sample size");

  if (opts.solver == SolverChoice::kDirect)
    for (const auto& s : opts.specs)
      if (s.null_space_dim() > 0)
        throw DataError(
            "the direct solver does not support kernels with a null space");

  MatrixXd work = data;
  std::optional<StandardizeRecord> record;
  if (opts.standardize) {
    if (!any_pointwise)
      throw DataError("--standardize has no effect with precomputed kernels");
    auto [std_data, rec] = standardize(data);
    work = std::move(std_data);
    record = std::move(rec);
  }

  // penalty selection
  std::vector<double> alphas = opts.alphas;
  std::optional<CvResult> cv;
  if (opts.cv) {
    auto grid = opts.cv_grid.empty() ? default_alpha_grid() : opts.cv_grid;
    cv = cross_validate(work, opts.specs, grid, opts.cv_folds,
                        opts.config.seed, opts.config);
    alphas.assign(p, cv->selected_alpha);
  }

  if (!alphas.empty() && alphas.size() != 1 &&
      static_cast<int>(alphas.size()) != p)
    throw DataError("need one alpha or one per variable");

  // blocks (alpha deferred when a df target still has to be calibrated)
  std::vector<VariableBlock> blocks;
  for (int j = 0; j < p; ++j) {
    const double a0 = alphas.empty() ? 1.0 : alphas[alphas.size() == 1 ? 0 : j];
    if (opts.specs[j].pointwise())
      blocks.push_back(prepare_block(opts.specs[j], work.col(j), a0));
    else
      blocks.push_back(prepare_block_precomputed(opts.specs[j], a0));
  }
  if (opts.df_target)
    for (auto& b : blocks)
      b.alpha =
          calibrate_alpha_for_df(b.gram, b.Q, *opts.df_target, opts.df_kind);

  FittedModel model;
  model.config = json{
      {"kernels", json::array()},
      {"alphas", json::array()},
      {"standardize", opts.standardize},
      {"solver", solver_name(opts.solver)},
      {"n_components", opts.config.n_components},
      {"seed", opts.config.seed},
      {"tol", opts.config.tol},
      {"max_iter", opts.config.max_iter},
  };
  for (int j = 0; j < p; ++j) {
    model.config["kernels"].push_back(spec_to_json(opts.specs[j]));
    model.config["alphas"].push_back(blocks[j].alpha);
  }
  if (opts.cv)
    model.config["cv"] = json{{"folds", opts.cv_folds},
                              {"grid_size", cv->grid.size()},
                              {"selected_alpha", cv->selected_alpha}};
  if (opts.df_target) model.config["df_target"] = *opts.df_target;

  for (int j = 0; j < p; ++j) {
    FittedVariable v;
    v.spec = opts.specs[j];
    v.rescale = blocks[j].rescale;
    v.alpha = blocks[j].alpha;
    if (opts.specs[j].pointwise()) v.training_x = data.col(j);
    model.variables.push_back(std::move(v));
  }
  model.standardized = record;
  model.cv = std::move(cv);

  if (opts.solver == SolverChoice::kPower) {
    ApcProblem prob = make_problem(std::move(blocks), opts.config);
    model.components = solve_components(prob);
  } else {
    std::vector<CenteredGram> grams;
    std::vector<double> as;
    for (const auto& b : blocks) {
      grams.push_back(b.gram);
      as.push_back(b.alpha);
    }
    DirectSolution sol =
        solve_direct(grams, as, opts.config.n_components);
    if (sol.degenerate)
      throw SolverError("degenerate problem: all centered Grams vanish");
    model.components = std::move(sol.components);
  }

  model.build_evaluators();
  return model;
}

void FittedModel::build_evaluators() {
  evaluators_.clear();
  for (const auto& comp : components) {
    std::vector<TransformEvaluator> row;
    for (int j = 0; j < p(); ++j) {
      const auto& v = variables[j];
      if (!v.spec.pointwise()) continue;  // not evaluable out of sample
      VectorXd xs = v.training_x;
      if (standardized)
        xs = (xs.array() - standardized->mean[j]) / standardized->scale[j];
      row.emplace_back(v.spec, xs, v.rescale, comp.beta[j],
                       comp.d.size() > static_cast<size_t>(j)
                           ? comp.d[j]
                           : VectorXd(0));
    }
    evaluators_.push_back(std::move(row));
  }
}

double FittedModel::evaluate(int comp, int var, double x) const {
  if (comp < 0 || comp >= static_cast<int>(components.size()))
    throw DataError("component index out of range");
  if (var < 0 || var >= p()) throw DataError("variable index out of range");
  if (!variables[var].spec.pointwise())
    throw DataError(
        "out-of-sample evaluation unsupported for precomputed kernels");
  // evaluators_ skips precomputed variables; recover the dense index
  int dense = 0;
  for (int j = 0; j < var; ++j)
    if (variables[j].spec.pointwise()) ++dense;
  double xstd = x;
  if (standardized)
    xstd = (x - standardized->mean[var]) / standardized->scale[var];
  return evaluators_[comp][dense](xstd);
}

MatrixXd FittedModel::evaluate_all(const MatrixXd& points) const {
  if (points.cols() != p())
    throw DataError("points have wrong number of columns");
  MatrixXd out(points.rows(), static_cast<Index>(components.size()) * p());
  for (size_t c = 0; c < components.size(); ++c)
    for (int j = 0; j < p(); ++j)
      for (Index i = 0; i < points.rows(); ++i)
        out(i, static_cast<Index>(c) * p() + j) =
            evaluate(static_cast<int>(c), j, points(i, j));
  return out;
}

json cv_to_json(const CvResult& cv) {
  json per_fold = json::array();
  for (Index f = 0; f < cv.per_fold.rows(); ++f)
    per_fold.push_back(vec_to_json(cv.per_fold.row(f).transpose()));
  return json{{"grid", cv.grid},
              {"cv_scores", cv.cv_scores},
              {"per_fold", per_fold},
              {"selected_alpha", cv.selected_alpha},
              {"folds", cv.folds}};
}

namespace {

CvResult cv_from_json(const json& j) {
  CvResult cv;
  cv.grid = j.at("grid").get<std::vector<double>>();
  cv.cv_scores = j.at("cv_scores").get<std::vector<double>>();
  cv.selected_alpha = j.at("selected_alpha");
  cv.folds = j.at("folds");
  const auto& pf = j.at("per_fold");
  cv.per_fold.resize(pf.size(), cv.grid.size());
  for (size_t f = 0; f < pf.size(); ++f)
    cv.per_fold.row(static_cast<Index>(f)) =
        json_to_vec(pf[f]).transpose();
  return cv;
}

}  // namespace

void save_cv_result(const CvResult& cv, const json& config,
                    const std::string& path) {
  json doc{{"format", "kapc-cv"},
           {"version", 1},
           {"config", config},
           {"result", cv_to_json(cv)}};
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << doc.dump(2) << "\n";
}

void save_model(const FittedModel& model, const std::string& path) {
  json doc{{"format", "kapc-model"}, {"version", 1}, {"config", model.config}};
  if (model.standardized)
    doc["standardize"] = json{{"mean", vec_to_json(model.standardized->mean)},
                              {"scale", vec_to_json(model.standardized->scale)}};
  doc["variables"] = json::array();
  for (const auto& v : model.variables) {
    json jv{{"kernel", spec_to_json(v.spec)},
            {"alpha", v.alpha},
            {"rescale", json{{"lo", v.rescale.lo}, {"hi", v.rescale.hi}}}};
    jv["training_x"] = vec_to_json(v.training_x);
    doc["variables"].push_back(std::move(jv));
  }
  doc["components"] = json::array();
  for (const auto& c : model.components) {
    json jc{{"eigenvalue", c.eigenvalue},
            {"raw_eigenvalue", c.raw_eigenvalue},
            {"iterations", c.iterations},
            {"converged", c.converged},
            {"near_tie", c.near_tie}};
    jc["variables"] = json::array();
    const double var_total = c.var.sum();
    for (size_t j = 0; j < c.beta.size(); ++j) {
      jc["variables"].push_back(
          json{{"beta", vec_to_json(c.beta[j])},
               {"d", vec_to_json(c.d.size() > j ? c.d[j] : VectorXd(0))},
               {"phi", vec_to_json(c.phi[j])},
               {"var", c.var[static_cast<Index>(j)]},
               {"var_share", var_total > 0.0
                                 ? c.var[static_cast<Index>(j)] / var_total
                                 : 0.0},
               {"penalty", c.penalty[static_cast<Index>(j)]}});
    }
    doc["components"].push_back(std::move(jc));
  }
  if (model.cv) doc["cv"] = cv_to_json(*model.cv);

  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << doc.dump(2) << "\n";
  if (!out) throw DataError("failed writing " + path);
}

FittedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw DataError(path + ": invalid model document: " + e.what());
  }
  if (doc.value("format", "") != "kapc-model")
    throw DataError(path + ": not a model document");

  FittedModel model;
  model.config = doc.value("config", json::object());
  if (doc.contains("standardize")) {
    StandardizeRecord rec;
    rec.mean = json_to_vec(doc["standardize"]["mean"]);
    rec.scale = json_to_vec(doc["standardize"]["scale"]);
    model.standardized = std::move(rec);
  }
  for (const auto& jv : doc.at("variables")) {
    FittedVariable v;
    v.spec = spec_from_json(jv.at("kernel"));
    v.alpha = jv.at("alpha");
    v.rescale = Rescale{jv.at("rescale").at("lo"), jv.at("rescale").at("hi")};
    v.training_x = json_to_vec(jv.at("training_x"));
    model.variables.push_back(std::move(v));
  }
  for (const auto& jc : doc.at("components")) {
    ApcComponent c;
    c.eigenvalue = jc.at("eigenvalue");
    c.raw_eigenvalue = jc.at("raw_eigenvalue");
    c.iterations = jc.at("iterations");
    c.converged = jc.at("converged");
    c.near_tie = jc.value("near_tie", false);
    const auto& vars = jc.at("variables");
    c.var.resize(vars.size());
    c.penalty.resize(vars.size());
    Index j = 0;
    for (const auto& jv : vars) {
      c.beta.push_back(json_to_vec(jv.at("beta")));
      c.d.push_back(json_to_vec(jv.at("d")));
      c.phi.push_back(json_to_vec(jv.at("phi")));
      c.var[j] = jv.at("var");
      c.penalty[j] = jv.at("penalty");
      ++j;
    }
    model.components.push_back(std::move(c));
  }
  if (doc.contains("cv")) model.cv = cv_from_json(doc["cv"]);
  model.build_evaluators();
  return model;
}

}  // namespace kapc
