#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jssl/data.hpp"
#include "jssl/hazard.hpp"
#include "jssl/learners.hpp"
#include "jssl/selection.hpp"
#include "jssl/state.hpp"

namespace jssl {

struct IpcwOptions {
  // Censoring survival at or below epsilon is a positivity violation.
  double epsilon = 1e-6;
  // Clamp the censoring survival at epsilon instead of failing.
  bool truncate = false;
  // Grid points t* k / grid_size, k = 1..grid_size, of the integrated variant.
  std::size_t grid_size = 100;
};

struct IpcwScore {
  double value = 0.0;
  std::vector<std::string> warnings;
};

// Inverse-probability-of-censoring weighted Brier score of the cause-1 risk at t*:
//   (1/n) sum_i [1{T_i <= t*, event} (1{cause 1} - r_i)^2 / G(T_i- | X_i)
//                + 1{T_i > t*} r_i^2 / G(t* | X_i)],
// where r_i is the cause-1 occupation probability of `risk_model` at t* and G = exp(-gamma).
IpcwScore ipcw_brier(const StateModel& risk_model, const Dataset& d, const CumulativeHazard& gamma, double t_star,
                     const IpcwOptions& options = {});

// The same score averaged over the grid t* k / grid_size, k = 1..grid_size.
IpcwScore ipcw_integrated_brier(const StateModel& risk_model, const Dataset& d, const CumulativeHazard& gamma,
                                double t_star, const IpcwOptions& options = {});

enum class CensorKind { km, cox };

std::string to_string(CensorKind k);
CensorKind censor_kind_from_string(const std::string& s);

// The censoring learner used by an IPCW super learner of the given kind.
LearnerPtr censoring_learner(CensorKind kind);

struct IpcwSelection {
  std::size_t selected = 0;
  std::vector<double> losses;  // cross-validated integrated IPCW Brier per event learner
  std::vector<std::string> diagnostics;
};

// IPCW super learner over the cause-1 learners: per fold, the censoring model is fitted on
// the training part, every event learner is scored on the held-out part by the integrated
// IPCW Brier score on [0, t*], and the argmin (lowest index on ties) is selected. The risk
// model of an event learner ignores cause 2 (single-endpoint, Lambda2 = 0).
IpcwSelection select_ipcw_sl(const std::vector<LearnerPtr>& event_learners, CensorKind censor_kind, const Dataset& d,
                             const FoldPlan& plan, double t_star, std::uint64_t master_seed,
                             const IpcwOptions& options = {}, std::size_t jobs = 1);

// As above from precomputed fold fits: event learners are libraries.cause1 and the
// censoring model is libraries.censoring[censor_index].
IpcwSelection select_ipcw_sl(const LearnerLibraries& libraries, const FoldFits& fits, std::size_t censor_index,
                             const Dataset& d, const FoldPlan& plan, double t_star, const IpcwOptions& options = {},
                             std::size_t jobs = 1);

struct EvaluationReport {
  std::string method;
  double ipa = 0.0;
  double brier = 0.0;
  double null_brier = 0.0;
  std::size_t n_test = 0;
  double standard_error = 0.0;  // across benchmark repetitions, when aggregated
};

// Cause-1 risks r(t*, X_i) of `model` for every row of `test`.
std::vector<double> cause1_risks(const StateModel& model, const Dataset& test, double t_star, std::size_t jobs = 1);

// Index of prediction accuracy against the covariate-free empirical cause-1 incidence of the
// (uncensored) test set. Throws UndefinedMetricError when the null Brier score is zero.
EvaluationReport ipa(const std::vector<double>& risks, const Dataset& test, double t_star);
EvaluationReport ipa(const StateModel& model, const Dataset& test, double t_star);

// argmax of the IPA over candidates; lowest index on ties.
std::size_t oracle_select(const std::vector<const StateModel*>& candidates, const Dataset& test, double t_star);

}  // namespace jssl
