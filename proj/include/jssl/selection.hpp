#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "jssl/data.hpp"
#include "jssl/hazard.hpp"
#include "jssl/learners.hpp"
#include "jssl/state.hpp"

namespace jssl {

enum class Role : std::size_t { cause1 = 0, cause2 = 1, censoring = 2 };

constexpr Target role_target(Role r) {
  return r == Role::cause1 ? Target::cause1 : r == Role::cause2 ? Target::cause2 : Target::censoring;
}

// The three learner libraries A1 (cause 1), A2 (cause 2) and B (censoring).
struct LearnerLibraries {
  std::vector<LearnerPtr> cause1;
  std::vector<LearnerPtr> cause2;
  std::vector<LearnerPtr> censoring;

  const std::vector<LearnerPtr>& operator[](Role r) const;
  // Rejects null learners and duplicate names within a library; with require_all, also
  // empty libraries.
  void validate(bool require_all = true) const;
};

struct TripleKey {
  std::size_t a1 = 0;
  std::size_t a2 = 0;
  std::size_t b = 0;
  std::array<std::string, 3> names;

  auto index_tuple() const { return std::tie(a1, a2, b); }
};

// Repetition index used for fits on the full data set.
inline constexpr std::uint64_t kFullDataRepetition = std::numeric_limits<std::uint64_t>::max();

// Per-fit seed: hash(master, repetition, fold, learner name).
std::uint64_t fit_seed(std::uint64_t master, std::uint64_t repetition, std::uint64_t fold, const std::string& name);

// Every learner of every role fitted once per (repetition, fold) on the training part.
// A learner that throws is recorded with its message instead of a hazard.
class FoldFits {
 public:
  struct Outcome {
    HazardPtr hazard;
    std::string error;
  };

  static FoldFits fit(const LearnerLibraries& libraries, const Dataset& d, const FoldPlan& plan,
                      std::uint64_t master_seed, std::size_t jobs = 1);

  const Outcome& at(Role role, std::size_t learner, std::size_t repetition, int fold) const;
  std::size_t repetitions() const { return repetitions_; }
  std::size_t folds() const { return folds_; }
  // Learner fits performed for one (repetition, fold).
  std::size_t fits_per_fold() const { return fits_per_fold_; }

 private:
  std::size_t repetitions_ = 0;
  std::size_t folds_ = 0;
  std::size_t fits_per_fold_ = 0;
  std::array<std::size_t, 3> library_sizes_{};
  std::vector<Outcome> outcomes_;  // [repetition][fold][role][learner], flattened
  std::size_t offset(Role role, std::size_t learner, std::size_t repetition, int fold) const;
};

struct CvRisk {
  double mean = 0.0;  // +infinity when a component failed in any fold
  std::vector<double> per_repetition;
  std::vector<std::string> diagnostics;
};

struct RiskTable {
  struct Row {
    TripleKey key;
    double loss = 0.0;
    double sd = 0.0;
    std::size_t rank = 0;
    std::vector<double> per_repetition;
    std::vector<std::string> diagnostics;
  };
  std::vector<Row> rows;  // ascending rank
  double tau = 0.0;
  std::size_t folds = 0;
  std::size_t repetitions = 0;
  std::uint64_t seed = 0;

  // rank,cause1_learner,cause2_learner,censoring_learner,loss,sd
  void write_csv(std::ostream& out) const;
  nlohmann::json to_json() const;
};

struct SelectionOptions {
  std::size_t jobs = 1;
  CompositionOptions composition;
};

struct Selection {
  TripleKey selected;
  RiskTable table;
  std::size_t fits_per_fold = 0;
};

// Cross-validated integrated Brier risk of one triple: mean over folds of the held-out
// mean loss, averaged over repetitions.
CvRisk cv_risk(const TripleKey& triple, const LearnerLibraries& libraries, const Dataset& d, const FoldPlan& plan,
               double tau, std::uint64_t master_seed, const SelectionOptions& options = {});

// Scores every triple of A1 x A2 x B from shared fold fits and ranks them; ties break on
// the lexicographic (a1, a2, b) order. Throws SelectionError when every triple failed.
Selection select_discrete_jssl(const LearnerLibraries& libraries, const Dataset& d, const FoldPlan& plan, double tau,
                               std::uint64_t master_seed, const SelectionOptions& options = {});

Selection select_discrete_jssl(const LearnerLibraries& libraries, const FoldFits& fits, const Dataset& d,
                               const FoldPlan& plan, double tau, const SelectionOptions& options = {});

}  // namespace jssl
