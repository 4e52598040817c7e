#include "kapc/csv.hpp"
#include "kapc/model.hpp"
#include "kapc/simulation.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

namespace {

using namespace kapc;

struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

std::vector<double> parse_double_list(const std::string& s,
                                      const char* what) {
  std::vector<double> out;
  for (const auto& item : split_commas(s)) {
    try {
      size_t pos = 0;
      out.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(std::string("cannot parse ") + what + " value '" +
                       item + "'");
    }
  }
  if (out.empty()) throw UsageError(std::string("empty ") + what + " list");
  return out;
}

struct CommonOpts {
  std::string input;
  std::string kernel = "gaussian";
  double bandwidth = 1.0;
  int order = 2;
  std::string matrices;
  bool standardize = false;
  std::uint64_t seed = 0;
  std::string output;
};

void add_data_flags(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--input", o.input, "data CSV (header row, one column per variable)");
  cmd->add_option("--kernel", o.kernel, "kernel: gaussian|sobolev|precomputed")
      ->check(CLI::IsMember({"gaussian", "sobolev", "precomputed"}));
  cmd->add_option("--bandwidth", o.bandwidth, "Gaussian bandwidth (default 1)");
  cmd->add_option("--order", o.order, "Sobolev order m (default 2)");
  cmd->add_option("--matrices", o.matrices,
                  "comma-separated precomputed kernel CSV files");
  cmd->add_flag("--standardize", o.standardize,
                "standardize variables to unit variance before fitting");
  cmd->add_option("--seed", o.seed, "random seed (default 0)");
}

// Returns {data, specs}.  For precomputed kernels the data matrix is a
// placeholder of the right shape; its values are never used.
std::pair<MatrixXd, std::vector<KernelSpec>> load_dataset(
    const CommonOpts& o) {
  std::vector<KernelSpec> specs;
  if (o.kernel == "precomputed") {
    if (o.matrices.empty())
      throw UsageError("--kernel precomputed requires --matrices");
    if (o.standardize)
      throw UsageError("--standardize cannot be used with precomputed kernels");
    Index n = 0;
    for (const auto& path : split_commas(o.matrices)) {
      MatrixXd K = read_matrix_csv(path);
      if (n == 0) n = K.rows();
      specs.push_back(KernelSpec::precomputed(std::move(K)));
      if (specs.back().matrix->rows() != n)
        throw DataError("precomputed kernels disagree on size");
    }
    if (specs.size() < 2)
      throw UsageError("need at least two precomputed kernels");
    return {MatrixXd::Zero(n, static_cast<Index>(specs.size())), specs};
  }
  if (o.input.empty()) throw UsageError("--input is required");
  CsvTable table = read_csv(o.input);
  if (table.values.cols() < 2)
    throw DataError(o.input + ": need at least two variables");
  for (Index j = 0; j < table.values.cols(); ++j)
    specs.push_back(o.kernel == "gaussian" ? KernelSpec::gaussian(o.bandwidth)
                                           : KernelSpec::sobolev(o.order));
  return {table.values, specs};
}

struct PenaltyOpts {
  std::string alpha;
  bool cv = false;
  std::string df_target;
  double grid_base = 1.5;
  int grid_min = -29;
  int grid_max = 5;
  std::string grid_list;
  int folds = 5;
};

void add_penalty_flags(CLI::App* cmd, PenaltyOpts& o, bool cv_command) {
  if (!cv_command) {
    cmd->add_option("--alpha", o.alpha,
                    "penalty: one value or a comma list, one per variable");
    cmd->add_flag("--cv", o.cv, "pick a common alpha by k-fold CV");
    cmd->add_option("--df-target", o.df_target,
                    "per-variable df target; 'auto' uses p*df = n/10");
  }
  cmd->add_option("--grid-base", o.grid_base, "CV grid base (default 1.5)");
  cmd->add_option("--grid-min", o.grid_min, "smallest grid exponent (default -29)");
  cmd->add_option("--grid-max", o.grid_max, "largest grid exponent (default 5)");
  cmd->add_option("--grid", o.grid_list, "explicit comma-separated alpha grid");
  cmd->add_option("--folds", o.folds, "number of CV folds (default 5)");
}

std::vector<double> make_grid(const PenaltyOpts& o) {
  if (!o.grid_list.empty()) return parse_double_list(o.grid_list, "--grid");
  return alpha_grid(o.grid_base, o.grid_min, o.grid_max);
}

int cmd_fit(const CommonOpts& common, const PenaltyOpts& pen,
            const std::string& solver, int components, double tol,
            int max_iter) {
  auto [data, specs] = load_dataset(common);

  FitOptions opts;
  opts.specs = specs;
  opts.standardize = common.standardize;
  opts.solver = solver == "direct" ? SolverChoice::kDirect : SolverChoice::kPower;
  opts.config.seed = common.seed;
  opts.config.n_components = components;
  opts.config.tol = tol;
  opts.config.max_iter = max_iter;
  opts.cv_folds = pen.folds;

  const int modes = (!pen.alpha.empty()) + pen.cv + (!pen.df_target.empty());
  if (modes != 1)
    throw UsageError("pick exactly one of --alpha, --cv, --df-target");
  if (!pen.alpha.empty()) opts.alphas = parse_double_list(pen.alpha, "--alpha");
  if (pen.cv) {
    opts.cv = true;
    opts.cv_grid = make_grid(pen);
  }
  if (!pen.df_target.empty()) {
    if (pen.df_target == "auto") {
      // common heuristic: p * df = n / 10
      opts.df_target = static_cast<double>(data.rows()) /
                       (10.0 * static_cast<double>(specs.size()));
    } else {
      opts.df_target = parse_double_list(pen.df_target, "--df-target").at(0);
    }
  }
  if (opts.solver == SolverChoice::kDirect)
    for (const auto& s : specs)
      if (s.null_space_dim() > 0)
        throw UsageError(
            "--solver direct does not support kernels with a null space");

  FittedModel model = fit_model(data, opts);
  model.config["command"] = "fit";
  if (!common.input.empty()) model.config["input"] = common.input;

  for (size_t c = 0; c < model.components.size(); ++c) {
    const auto& comp = model.components[c];
    std::cout << "component " << (c + 1) << ": eigenvalue=" << comp.eigenvalue
              << " raw=" << comp.raw_eigenvalue
              << " iterations=" << comp.iterations
              << (comp.converged ? "" : " (not converged)") << "\n";
  }
  if (model.cv)
    std::cout << "cv-selected alpha: " << model.cv->selected_alpha << "\n";
  const std::string out = common.output.empty() ? "model.json" : common.output;
  save_model(model, out);
  std::cout << "model written to " << out << "\n";
  return 0;
}

int cmd_cv(const CommonOpts& common, const PenaltyOpts& pen, double tol,
           int max_iter) {
  auto [data, specs] = load_dataset(common);
  MatrixXd work = data;
  if (common.standardize) work = standardize(data).first;

  SolverConfig config;
  config.seed = common.seed;
  config.tol = tol;
  config.max_iter = max_iter;
  CvResult cv = cross_validate(work, specs, make_grid(pen), pen.folds,
                               common.seed, config);

  nlohmann::json config_json{{"command", "cv"},
                             {"folds", pen.folds},
                             {"seed", common.seed},
                             {"standardize", common.standardize},
                             {"kernel", common.kernel}};
  if (!common.input.empty()) config_json["input"] = common.input;
  const std::string out = common.output.empty() ? "cv.json" : common.output;
  save_cv_result(cv, config_json, out);
  std::cout << "selected alpha: " << cv.selected_alpha << " (grid of "
            << cv.grid.size() << ")\n"
            << "cv result written to " << out << "\n";
  return 0;
}

int cmd_simulate(Index n, std::uint64_t seed, bool with_latent,
                 bool with_truth, const std::string& output) {
  SimulationData sim = generate_simulation(n, seed);
  std::vector<std::string> header{"x1", "x2", "x3", "x4"};
  MatrixXd values = sim.X;
  if (with_latent) {
    for (int j = 1; j <= 4; ++j) header.push_back("y" + std::to_string(j));
    MatrixXd joined(n, values.cols() + 4);
    joined << values, sim.Y;
    values = std::move(joined);
  }
  if (with_truth) {
    TrueTransforms truth;
    for (int j = 1; j <= 4; ++j) header.push_back("phi" + std::to_string(j));
    MatrixXd phis(n, 4);
    for (Index i = 0; i < n; ++i)
      for (int j = 0; j < 4; ++j) phis(i, j) = truth.eval(j, sim.X(i, j));
    MatrixXd joined(n, values.cols() + 4);
    joined << values, phis;
    values = std::move(joined);
  }
  const std::string out = output.empty() ? "simulated.csv" : output;
  write_csv(out, header, values);
  std::cout << "wrote " << n << " rows to " << out << "\n";
  return 0;
}

int cmd_eval(const std::string& model_path, const std::string& points_path,
             const std::string& output) {
  FittedModel model = load_model(model_path);
  CsvTable points = read_csv(points_path);
  if (points.values.cols() != model.p())
    throw DataError(points_path + ": expected " + std::to_string(model.p()) +
                    " columns");
  MatrixXd values = model.evaluate_all(points.values);
  std::vector<std::string> header;
  for (size_t c = 0; c < model.components.size(); ++c)
    for (int j = 0; j < model.p(); ++j)
      header.push_back("comp" + std::to_string(c + 1) + "_phi" +
                       std::to_string(j + 1));
  const std::string out = output.empty() ? "transforms.csv" : output;
  write_csv(out, header, values);
  std::cout << "wrote transform values to " << out << "\n";
  return 0;
}

int cmd_plotdata(const std::string& model_path, const std::string& output) {
  FittedModel model = load_model(model_path);
  constexpr int kGridPoints = 200;
  std::vector<std::string> header{"component", "variable", "x", "phi"};
  const Index rows = static_cast<Index>(model.components.size()) * model.p() *
                     kGridPoints;
  MatrixXd values(rows, 4);
  Index r = 0;
  for (size_t c = 0; c < model.components.size(); ++c) {
    for (int j = 0; j < model.p(); ++j) {
      const auto& xs = model.variables[j].training_x;
      if (xs.size() == 0)
        throw DataError("plotdata unsupported for precomputed kernels");
      const double lo = xs.minCoeff(), hi = xs.maxCoeff();
      for (int i = 0; i < kGridPoints; ++i) {
        const double x = i + 1 == kGridPoints
                             ? hi
                             : lo + (hi - lo) * i / double(kGridPoints - 1);
        values(r, 0) = static_cast<double>(c + 1);
        values(r, 1) = static_cast<double>(j + 1);
        values(r, 2) = x;
        values(r, 3) = model.evaluate(static_cast<int>(c), j, x);
        ++r;
      }
    }
  }
  const std::string out = output.empty() ? "curves.csv" : output;
  write_csv(out, header, values);
  std::cout << "wrote plot data to " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"smallest kernelized additive principal components"};
  app.require_subcommand(1);

  CommonOpts fit_common, cv_common;
  PenaltyOpts fit_pen, cv_pen;
  std::string fit_solver = "power";
  int fit_components = 1;
  double fit_tol = 1e-9, cv_tol = 1e-9;
  int fit_max_iter = 10000, cv_max_iter = 10000;

  auto* fit = app.add_subcommand("fit", "estimate smallest APC components");
  add_data_flags(fit, fit_common);
  add_penalty_flags(fit, fit_pen, false);
  fit->add_option("--solver", fit_solver, "power|direct (default power)")
      ->check(CLI::IsMember({"power", "direct"}));
  fit->add_option("--components", fit_components, "number of components");
  fit->add_option("--tol", fit_tol, "convergence tolerance");
  fit->add_option("--max-iter", fit_max_iter, "iteration cap");
  fit->add_option("--output", fit_common.output, "model output path");

  auto* cv = app.add_subcommand("cv", "cross-validate the penalty grid");
  add_data_flags(cv, cv_common);
  add_penalty_flags(cv, cv_pen, true);
  cv->add_option("--tol", cv_tol, "convergence tolerance");
  cv->add_option("--max-iter", cv_max_iter, "iteration cap");
  cv->add_option("--output", cv_common.output, "cv result output path");

  Index sim_n = 250;
  std::uint64_t sim_seed = 0;
  bool sim_latent = false, sim_truth = false;
  std::string sim_output;
  auto* sim = app.add_subcommand("simulate", "draw the 4-variable benchmark");
  sim->add_option("--n", sim_n, "number of rows (default 250)");
  sim->add_option("--seed", sim_seed, "random seed");
  sim->add_flag("--with-latent", sim_latent, "also emit latent y columns");
  sim->add_flag("--with-truth", sim_truth, "also emit true transform values");
  sim->add_option("--output", sim_output, "output CSV path");

  std::string eval_model, eval_points, eval_output;
  auto* ev = app.add_subcommand("eval", "evaluate a model at fresh points");
  ev->add_option("--model", eval_model, "model document")->required();
  ev->add_option("--points", eval_points, "points CSV")->required();
  ev->add_option("--output", eval_output, "output CSV path");

  std::string plot_model, plot_output;
  auto* plot = app.add_subcommand("plotdata",
                                  "per-variable transform curves on a grid");
  plot->add_option("--model", plot_model, "model document")->required();
  plot->add_option("--output", plot_output, "output CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (fit->parsed())
      return cmd_fit(fit_common, fit_pen, fit_solver, fit_components, fit_tol,
                     fit_max_iter);
    if (cv->parsed()) return cmd_cv(cv_common, cv_pen, cv_tol, cv_max_iter);
    if (sim->parsed())
      return cmd_simulate(sim_n, sim_seed, sim_latent, sim_truth, sim_output);
    if (ev->parsed()) return cmd_eval(eval_model, eval_points, eval_output);
    if (plot->parsed()) return cmd_plotdata(plot_model, plot_output);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
