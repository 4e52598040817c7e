#pragma once

#include "kapc/apc_direct.hpp"
#include "kapc/apc_power.hpp"
#include "kapc/model_selection.hpp"
#include "kapc/smoother.hpp"

#include <json.hpp>

#include <optional>

namespace kapc {

enum class SolverChoice { kPower, kDirect };

/// Everything needed to fit a model from a prepared data matrix.  Exactly one
/// of {alphas, cv, df_target} selects the penalty.
struct FitOptions {
  std::vector<KernelSpec> specs;
  std::vector<double> alphas;          // explicit penalties (1 or p values)
  bool cv = false;                     // common alpha by k-fold CV
  std::vector<double> cv_grid;         // defaults to 1.5^{-29..5}
  int cv_folds = 5;
  std::optional<double> df_target;     // per-variable df via bisection
  DfKind df_kind = DfKind::kTrS;
  bool standardize = false;
  SolverChoice solver = SolverChoice::kPower;
  SolverConfig config;
};

struct FittedVariable {
  KernelSpec spec;
  Rescale rescale;
  VectorXd training_x;  // original units; empty for precomputed kernels
  double alpha = 0.0;
};

/// A fitted model plus the configuration needed to reproduce it.
struct FittedModel {
  nlohmann::json config;
  std::vector<FittedVariable> variables;
  std::optional<StandardizeRecord> standardized;
  std::vector<ApcComponent> components;
  std::optional<CvResult> cv;

  int p() const { return static_cast<int>(variables.size()); }
  Index n() const {
    return components.empty() || components[0].phi.empty()
               ? 0
               : components[0].phi[0].size();
  }

  /// phi-hat of component `comp`, variable `var`, at x in original units.
  /// Throws DataError for precomputed kernels (no pointwise form).
  double evaluate(int comp, int var, double x) const;

  /// Evaluate all components at fresh points (rows of `points`, original
  /// units, one column per variable).  Output columns are ordered
  /// component-major: comp1 var1..varp, comp2 var1..varp, ...
  MatrixXd evaluate_all(const MatrixXd& points) const;

  void build_evaluators();  // called by fit_model and load_model

 private:
  std::vector<std::vector<TransformEvaluator>> evaluators_;  // [comp][var]
};

FittedModel fit_model(const MatrixXd& data, const FitOptions& opts);

void save_model(const FittedModel& model, const std::string& path);
FittedModel load_model(const std::string& path);

nlohmann::json cv_to_json(const CvResult& cv);
void save_cv_result(const CvResult& cv, const nlohmann::json& config,
                    const std::string& path);

}  // namespace kapc
