#include "jssl/selection.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <set>
#include <tuple>

#include "jssl/brier.hpp"
#include "jssl/error.hpp"
#include "jssl/parallel.hpp"
#include "jssl/random.hpp"
#include "jssl/stats.hpp"

namespace jssl {

namespace {

constexpr std::array<Role, 3> kRoles{Role::cause1, Role::cause2, Role::censoring};
constexpr double kInfinity = std::numeric_limits<double>::infinity();

const char* role_name(Role r) {
  switch (r) {
    case Role::cause1: return "cause1";
    case Role::cause2: return "cause2";
    case Role::censoring: return "censoring";
  }
  return "?";
}

void check_plan(const Dataset& d, const FoldPlan& plan, double tau) {
  if (d.empty()) throw EmptyInputError("selection needs a non-empty data set");
  if (plan.size() != d.size()) throw InvalidConfiguration("fold plan does not match the data set size");
  if (!(tau > 0.0)) throw InvalidConfiguration("tau must be positive");
}

}  // namespace

const std::vector<LearnerPtr>& LearnerLibraries::operator[](Role r) const {
  switch (r) {
    case Role::cause1: return cause1;
    case Role::cause2: return cause2;
    case Role::censoring: return censoring;
  }
  return cause1;
}

void LearnerLibraries::validate(bool require_all) const {
  for (Role r : kRoles) {
    const auto& lib = (*this)[r];
    if (require_all && lib.empty()) throw InvalidConfiguration(std::string("learner library for ") + role_name(r) + " is empty");
    std::set<std::string> names;
    for (const auto& l : lib) {
      if (!l) throw InvalidConfiguration(std::string("null learner in library ") + role_name(r));
      if (!names.insert(l->name()).second) {
        throw InvalidConfiguration("duplicate learner name '" + l->name() + "' in library " + role_name(r));
      }
    }
  }
}

std::uint64_t fit_seed(std::uint64_t master, std::uint64_t repetition, std::uint64_t fold, const std::string& name) {
  return derive_seed(master, {repetition, fold, hash_name(name)});
}

FoldFits FoldFits::fit(const LearnerLibraries& libraries, const Dataset& d, const FoldPlan& plan,
                       std::uint64_t master_seed, std::size_t jobs) {
  libraries.validate(false);
  if (plan.size() != d.size()) throw InvalidConfiguration("fold plan does not match the data set size");
  FoldFits out;
  out.repetitions_ = plan.repetitions();
  out.folds_ = plan.folds();
  for (Role r : kRoles) out.library_sizes_[static_cast<std::size_t>(r)] = libraries[r].size();
  out.fits_per_fold_ = out.library_sizes_[0] + out.library_sizes_[1] + out.library_sizes_[2];
  out.outcomes_.resize(out.repetitions_ * out.folds_ * out.fits_per_fold_);

  // Training sets are built once per (repetition, fold) and shared by every learner.
  const std::size_t cells = out.repetitions_ * out.folds_;
  std::vector<Dataset> training(cells);
  parallel_for(cells, jobs, [&](std::size_t c) {
    training[c] = d.subset(plan.train_rows(c / out.folds_, static_cast<int>(c % out.folds_) + 1));
  });

  parallel_for(out.outcomes_.size(), jobs, [&](std::size_t task) {
    const std::size_t cell = task / out.fits_per_fold_;
    std::size_t k = task % out.fits_per_fold_;
    std::size_t role = 0;
    while (k >= out.library_sizes_[role]) k -= out.library_sizes_[role++];
    const auto& learner = libraries[kRoles[role]][k];
    const std::size_t rep = cell / out.folds_;
    const std::size_t fold = cell % out.folds_ + 1;
    auto& slot = out.outcomes_[task];
    try {
      slot.hazard = learner->fit(training[cell], role_target(kRoles[role]), fit_seed(master_seed, rep, fold, learner->name()));
    } catch (const std::exception& e) {
      slot.error = e.what();
    }
  });
  return out;
}

std::size_t FoldFits::offset(Role role, std::size_t learner, std::size_t repetition, int fold) const {
  std::size_t k = learner;
  for (std::size_t r = 0; r < static_cast<std::size_t>(role); ++r) k += library_sizes_[r];
  return (repetition * folds_ + static_cast<std::size_t>(fold - 1)) * fits_per_fold_ + k;
}

const FoldFits::Outcome& FoldFits::at(Role role, std::size_t learner, std::size_t repetition, int fold) const {
  if (repetition >= repetitions_ || fold < 1 || static_cast<std::size_t>(fold) > folds_ ||
      learner >= library_sizes_[static_cast<std::size_t>(role)]) {
    throw InvalidConfiguration("fold fit index out of range");
  }
  return outcomes_[offset(role, learner, repetition, fold)];
}

Selection select_discrete_jssl(const LearnerLibraries& libraries, const FoldFits& fits, const Dataset& d,
                               const FoldPlan& plan, double tau, const SelectionOptions& options) {
  check_plan(d, plan, tau);
  libraries.validate();
  if (fits.repetitions() != plan.repetitions() || fits.folds() != plan.folds()) {
    throw InvalidConfiguration("fold fits do not match the fold plan");
  }
  const std::size_t n1 = libraries.cause1.size();
  const std::size_t n2 = libraries.cause2.size();
  const std::size_t nb = libraries.censoring.size();
  const std::size_t triples = n1 * n2 * nb;
  const std::size_t reps = plan.repetitions();
  const std::size_t folds = plan.folds();

  // fold_loss[cell][triple]: held-out mean loss, +inf when a component failed.
  std::vector<std::vector<double>> fold_loss(reps * folds, std::vector<double>(triples, 0.0));
  struct Note {
    std::size_t role;
    std::size_t learner;
    std::string text;
  };
  std::vector<std::vector<Note>> cell_notes(reps * folds);

  parallel_for(reps * folds, options.jobs, [&](std::size_t cell) {
    const std::size_t rep = cell / folds;
    const int fold = static_cast<int>(cell % folds) + 1;
    const auto test = plan.test_rows(rep, fold);
    auto& loss = fold_loss[cell];
    if (test.empty()) return;

    // Paths for every held-out row and every fitted component.
    std::array<std::vector<std::vector<StepPath>>, 3> paths;
    std::array<std::vector<bool>, 3> failed;
    std::array<std::vector<HazardPtr>, 3> hazards;
    for (Role r : kRoles) {
      const auto ri = static_cast<std::size_t>(r);
      const auto& lib = libraries[r];
      failed[ri].assign(lib.size(), false);
      hazards[ri].resize(lib.size());
      paths[ri].resize(lib.size());
      for (std::size_t k = 0; k < lib.size(); ++k) {
        const auto& o = fits.at(r, k, rep, fold);
        if (!o.hazard) {
          failed[ri][k] = true;
          cell_notes[cell].push_back({ri, k,
                                      "rep " + std::to_string(rep + 1) + " fold " + std::to_string(fold) + " " +
                                          role_name(r) + " learner " + lib[k]->name() + ": " + o.error});
          continue;
        }
        hazards[ri][k] = o.hazard;
        if (!o.hazard->is_step()) continue;
        paths[ri][k].reserve(test.size());
        for (std::size_t i : test) paths[ri][k].push_back(o.hazard->path(d.covariates(i), tau));
      }
    }

    for (std::size_t t = 0; t < triples; ++t) {
      const std::size_t a1 = t / (n2 * nb);
      const std::size_t a2 = (t / nb) % n2;
      const std::size_t b = t % nb;
      if (failed[0][a1] || failed[1][a2] || failed[2][b]) {
        loss[t] = kInfinity;
        continue;
      }
      const bool step = hazards[0][a1]->is_step() && hazards[1][a2]->is_step() && hazards[2][b]->is_step();
      double sum = 0.0;
      for (std::size_t j = 0; j < test.size(); ++j) {
        const std::size_t i = test[j];
        double l;
        if (step) {
          const auto curve = compose_paths(paths[0][a1][j], paths[1][a2][j], paths[2][b][j], options.composition);
          l = integrated_brier(curve, d.time(i), d.status(i), tau);
        } else {
          const StateOccupationModel m(hazards[0][a1], hazards[1][a2], hazards[2][b], options.composition);
          l = integrated_brier(*m.curve(d.covariates(i), tau), d.time(i), d.status(i), tau);
        }
        sum += l;
      }
      loss[t] = sum / static_cast<double>(test.size());
    }
  });

  RiskTable table;
  table.tau = tau;
  table.folds = folds;
  table.repetitions = reps;
  table.seed = plan.seed();
  table.rows.resize(triples);
  std::vector<Note> notes;
  for (const auto& c : cell_notes) notes.insert(notes.end(), c.begin(), c.end());

  for (std::size_t t = 0; t < triples; ++t) {
    auto& row = table.rows[t];
    row.key.a1 = t / (n2 * nb);
    row.key.a2 = (t / nb) % n2;
    row.key.b = t % nb;
    row.key.names = {libraries.cause1[row.key.a1]->name(), libraries.cause2[row.key.a2]->name(),
                     libraries.censoring[row.key.b]->name()};
    RunningStats across;
    bool infinite = false;
    for (std::size_t rep = 0; rep < reps; ++rep) {
      double sum = 0.0;
      for (std::size_t f = 0; f < folds; ++f) sum += fold_loss[rep * folds + f][t];
      const double r = sum / static_cast<double>(folds);
      row.per_repetition.push_back(r);
      if (std::isinf(r)) infinite = true;
      else across.add(r);
    }
    if (infinite) {
      row.loss = kInfinity;
      row.sd = kInfinity;
      const std::array<std::size_t, 3> index{row.key.a1, row.key.a2, row.key.b};
      for (const auto& note : notes) {
        if (index[note.role] == note.learner) row.diagnostics.push_back(note.text);
      }
    } else {
      row.loss = across.mean();
      row.sd = reps > 1 ? across.sd() : 0.0;
    }
  }

  std::stable_sort(table.rows.begin(), table.rows.end(), [](const RiskTable::Row& a, const RiskTable::Row& b) {
    if (a.loss != b.loss) return a.loss < b.loss;
    return a.key.index_tuple() < b.key.index_tuple();
  });
  for (std::size_t k = 0; k < table.rows.size(); ++k) table.rows[k].rank = k + 1;

  if (std::isinf(table.rows.front().loss)) {
    std::vector<std::string> all;
    for (const auto& note : notes) all.push_back(note.text);
    throw SelectionError("every learner triple failed during cross-validation", std::move(all));
  }
  Selection out;
  out.selected = table.rows.front().key;
  out.table = std::move(table);
  out.fits_per_fold = fits.fits_per_fold();
  return out;
}

Selection select_discrete_jssl(const LearnerLibraries& libraries, const Dataset& d, const FoldPlan& plan, double tau,
                               std::uint64_t master_seed, const SelectionOptions& options) {
  check_plan(d, plan, tau);
  const auto fits = FoldFits::fit(libraries, d, plan, master_seed, options.jobs);
  return select_discrete_jssl(libraries, fits, d, plan, tau, options);
}

CvRisk cv_risk(const TripleKey& triple, const LearnerLibraries& libraries, const Dataset& d, const FoldPlan& plan,
               double tau, std::uint64_t master_seed, const SelectionOptions& options) {
  libraries.validate();
  if (triple.a1 >= libraries.cause1.size() || triple.a2 >= libraries.cause2.size() ||
      triple.b >= libraries.censoring.size()) {
    throw InvalidConfiguration("triple index out of range");
  }
  // Seeds depend on learner names only, so scoring the single triple reproduces the full table.
  const LearnerLibraries single{{libraries.cause1[triple.a1]}, {libraries.cause2[triple.a2]},
                                {libraries.censoring[triple.b]}};
  CvRisk out;
  try {
    const auto s = select_discrete_jssl(single, d, plan, tau, master_seed, options);
    const auto& row = s.table.rows.front();
    out.mean = row.loss;
    out.per_repetition = row.per_repetition;
    out.diagnostics = row.diagnostics;
  } catch (const SelectionError& e) {
    out.mean = kInfinity;
    out.per_repetition.assign(plan.repetitions(), kInfinity);
    out.diagnostics = e.diagnostics();
  }
  return out;
}

void RiskTable::write_csv(std::ostream& out) const {
  out << "rank,cause1_learner,cause2_learner,censoring_learner,loss,sd\n" << std::setprecision(10);
  for (const auto& r : rows) {
    out << r.rank << ',' << r.key.names[0] << ',' << r.key.names[1] << ',' << r.key.names[2] << ',';
    if (std::isinf(r.loss)) out << "inf,inf\n";
    else out << r.loss << ',' << r.sd << '\n';
  }
}

nlohmann::json RiskTable::to_json() const {
  const auto number = [](double v) -> nlohmann::json {
    if (std::isinf(v)) return "inf";
    return v;
  };
  nlohmann::json out{{"tau", tau}, {"folds", folds}, {"repetitions", repetitions}, {"seed", seed}};
  auto& arr = out["rows"] = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json per = nlohmann::json::array();
    for (double v : r.per_repetition) per.push_back(number(v));
    arr.push_back({{"rank", r.rank},
                   {"cause1_learner", r.key.names[0]},
                   {"cause2_learner", r.key.names[1]},
                   {"censoring_learner", r.key.names[2]},
                   {"loss", number(r.loss)},
                   {"sd", number(r.sd)},
                   {"per_repetition", per},
                   {"diagnostics", r.diagnostics}});
  }
  return out;
}

}  // namespace jssl
