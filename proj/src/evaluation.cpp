#include "jssl/evaluation.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <memory>

#include "jssl/error.hpp"
#include "jssl/parallel.hpp"

namespace jssl {

namespace {

constexpr double kInfinity = std::numeric_limits<double>::infinity();

const HazardPtr& zero_hazard() {
  static const HazardPtr zero = std::make_shared<ZeroHazard>();
  return zero;
}

// Mean over rows and over `grid` of the weighted squared cause-1 residuals.
IpcwScore ipcw_score(const StateModel& model, const Dataset& d, const CumulativeHazard& gamma,
                     const std::vector<double>& grid, double t_star, const IpcwOptions& options) {
  if (d.empty()) throw EmptyInputError("IPCW Brier score needs a non-empty data set");
  if (!(t_star > 0.0)) throw InvalidConfiguration("t* must be positive");
  const auto survival = [&](double g, std::size_t i, double at) {
    if (g <= options.epsilon) {
      if (options.truncate) return options.epsilon;
      throw PositivityError("censoring survival " + std::to_string(g) + " <= " + std::to_string(options.epsilon) +
                                " for observation " + std::to_string(i) + " at time " + std::to_string(at),
                            i);
    }
    return g;
  };

  double total = 0.0;
  std::size_t contributing = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto x = d.covariates(i);
    const double time = d.time(i);
    const int status = d.status(i);
    const auto curve = model.curve(x, t_star);
    double g_event = 0.0;
    if (status != kCensored && time <= t_star) g_event = survival(std::exp(-gamma.evaluate_before(time, x)), i, time);
    double row = 0.0;
    for (double t : grid) {
      const double r = curve->at(t, State::cause1);
      if (time <= t && status != kCensored) {
        const double y = status == kCause1 ? 1.0 : 0.0;
        row += (y - r) * (y - r) / g_event;
        ++contributing;
      } else if (time > t) {
        row += r * r / survival(std::exp(-gamma.evaluate(t, x)), i, t);
        ++contributing;
      }
    }
    total += row / static_cast<double>(grid.size());
  }
  IpcwScore out;
  out.value = total / static_cast<double>(d.size());
  if (contributing == 0) out.warnings.push_back("every observation is censored before its evaluation time; score set to 0");
  return out;
}

}  // namespace

IpcwScore ipcw_brier(const StateModel& risk_model, const Dataset& d, const CumulativeHazard& gamma, double t_star,
                     const IpcwOptions& options) {
  return ipcw_score(risk_model, d, gamma, {t_star}, t_star, options);
}

IpcwScore ipcw_integrated_brier(const StateModel& risk_model, const Dataset& d, const CumulativeHazard& gamma,
                                double t_star, const IpcwOptions& options) {
  if (options.grid_size < 1) throw InvalidConfiguration("IPCW grid needs at least one point");
  std::vector<double> grid(options.grid_size);
  for (std::size_t k = 1; k <= options.grid_size; ++k) {
    grid[k - 1] = t_star * static_cast<double>(k) / static_cast<double>(options.grid_size);
  }
  return ipcw_score(risk_model, d, gamma, grid, t_star, options);
}

std::string to_string(CensorKind k) { return k == CensorKind::km ? "km" : "cox"; }

CensorKind censor_kind_from_string(const std::string& s) {
  if (s == "km") return CensorKind::km;
  if (s == "cox") return CensorKind::cox;
  throw InvalidConfiguration("unknown censoring model '" + s + "' (expected km or cox)");
}

LearnerPtr censoring_learner(CensorKind kind) {
  LearnerSpec spec;
  spec.kind = kind == CensorKind::km ? LearnerKind::nelson_aalen : LearnerKind::cox;
  spec.target = Target::censoring;
  return make_learner(spec);
}

IpcwSelection select_ipcw_sl(const LearnerLibraries& libraries, const FoldFits& fits, std::size_t censor_index,
                             const Dataset& d, const FoldPlan& plan, double t_star, const IpcwOptions& options,
                             std::size_t jobs) {
  const auto& learners = libraries.cause1;
  if (learners.empty()) throw InvalidConfiguration("IPCW super learner needs at least one event learner");
  if (censor_index >= libraries.censoring.size()) throw InvalidConfiguration("censoring learner index out of range");
  if (plan.size() != d.size()) throw InvalidConfiguration("fold plan does not match the data set size");
  const std::size_t reps = plan.repetitions();
  const std::size_t folds = plan.folds();
  const std::size_t cells = reps * folds;

  std::vector<std::vector<double>> fold_loss(cells, std::vector<double>(learners.size(), 0.0));
  std::vector<std::vector<std::string>> notes(cells);
  std::vector<std::exception_ptr> failures(cells);

  parallel_for(cells, jobs, [&](std::size_t cell) {
    const std::size_t rep = cell / folds;
    const int fold = static_cast<int>(cell % folds) + 1;
    const std::string context = "rep " + std::to_string(rep + 1) + " fold " + std::to_string(fold);
    try {
      const auto test_rows = plan.test_rows(rep, fold);
      const Dataset test = d.subset(test_rows);
      const auto& censor = fits.at(Role::censoring, censor_index, rep, fold);
      if (!censor.hazard) {
        throw FitError(context + ": censoring model " + libraries.censoring[censor_index]->name() +
                       " failed: " + censor.error);
      }
      for (std::size_t k = 0; k < learners.size(); ++k) {
        const auto& event = fits.at(Role::cause1, k, rep, fold);
        if (!event.hazard) {
          fold_loss[cell][k] = kInfinity;
          notes[cell].push_back(context + " learner " + learners[k]->name() + ": " + event.error);
          continue;
        }
        const StateOccupationModel model(event.hazard, zero_hazard(), zero_hazard());
        try {
          fold_loss[cell][k] = ipcw_integrated_brier(model, test, *censor.hazard, t_star, options).value;
        } catch (const PositivityError& e) {
          const std::size_t row = test_rows[e.observation()];
          throw PositivityError(context + ": " + e.what() + " (data row " + std::to_string(row) + ")", row);
        }
      }
    } catch (...) {
      failures[cell] = std::current_exception();
    }
  });
  // Rethrow the first failure in cell order so the reported error does not depend on threads.
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  IpcwSelection out;
  out.losses.assign(learners.size(), 0.0);
  for (std::size_t k = 0; k < learners.size(); ++k) {
    double sum = 0.0;
    for (std::size_t rep = 0; rep < reps; ++rep) {
      double fold_sum = 0.0;
      for (std::size_t f = 0; f < folds; ++f) fold_sum += fold_loss[rep * folds + f][k];
      sum += fold_sum / static_cast<double>(folds);
    }
    out.losses[k] = sum / static_cast<double>(reps);
  }
  for (const auto& n : notes) out.diagnostics.insert(out.diagnostics.end(), n.begin(), n.end());
  out.selected = 0;
  for (std::size_t k = 1; k < learners.size(); ++k) {
    if (out.losses[k] < out.losses[out.selected]) out.selected = k;
  }
  if (std::isinf(out.losses[out.selected])) {
    throw SelectionError("every event learner failed in the IPCW super learner", out.diagnostics);
  }
  return out;
}

IpcwSelection select_ipcw_sl(const std::vector<LearnerPtr>& event_learners, CensorKind censor_kind, const Dataset& d,
                             const FoldPlan& plan, double t_star, std::uint64_t master_seed,
                             const IpcwOptions& options, std::size_t jobs) {
  const LearnerLibraries libraries{event_learners, {}, {censoring_learner(censor_kind)}};
  const auto fits = FoldFits::fit(libraries, d, plan, master_seed, jobs);
  return select_ipcw_sl(libraries, fits, 0, d, plan, t_star, options, jobs);
}

std::vector<double> cause1_risks(const StateModel& model, const Dataset& test, double t_star, std::size_t jobs) {
  std::vector<double> out(test.size());
  parallel_for(test.size(), jobs, [&](std::size_t i) {
    out[i] = t_star > 0.0 ? model.curve(test.covariates(i), t_star)->at(t_star, State::cause1) : 0.0;
  });
  return out;
}

EvaluationReport ipa(const std::vector<double>& risks, const Dataset& test, double t_star) {
  if (test.empty()) throw EmptyInputError("IPA needs a non-empty test set");
  if (risks.size() != test.size()) throw InvalidConfiguration("risk vector does not match the test set");
  const auto n = static_cast<double>(test.size());
  std::vector<double> y(test.size());
  double incidence = 0.0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    y[i] = test.time(i) <= t_star && test.status(i) == kCause1 ? 1.0 : 0.0;
    incidence += y[i];
  }
  incidence /= n;
  double model = 0.0;
  double null = 0.0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    model += (y[i] - risks[i]) * (y[i] - risks[i]);
    null += (y[i] - incidence) * (y[i] - incidence);
  }
  if (null == 0.0) throw UndefinedMetricError("IPA is undefined: the null model's Brier score is zero");
  EvaluationReport r;
  r.brier = model / n;
  r.null_brier = null / n;
  r.ipa = 1.0 - model / null;
  r.n_test = test.size();
  return r;
}

EvaluationReport ipa(const StateModel& model, const Dataset& test, double t_star) {
  return ipa(cause1_risks(model, test, t_star), test, t_star);
}

std::size_t oracle_select(const std::vector<const StateModel*>& candidates, const Dataset& test, double t_star) {
  if (candidates.empty()) throw InvalidConfiguration("oracle selector needs at least one candidate");
  std::size_t best = 0;
  double best_ipa = -kInfinity;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const double v = ipa(*candidates[k], test, t_star).ipa;
    if (v > best_ipa) {
      best = k;
      best_ipa = v;
    }
  }
  return best;
}

}  // namespace jssl
