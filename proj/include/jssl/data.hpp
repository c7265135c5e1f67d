#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace jssl {

// Observation status codes.
inline constexpr int kCensored = 0;
inline constexpr int kCause1 = 1;
inline constexpr int kCause2 = 2;

// One right-censored competing-risks record.
struct Observation {
  double time = 0.0;
  int status = kCensored;
  std::vector<double> covariates;
};

// Column-oriented storage of right-censored competing-risks data. Covariates are kept
// row-major in one contiguous buffer so learners can scan rows without indirection.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<std::string> covariate_names);

  // Throws SchemaError/ParseError when the record violates the observation invariants.
  void add(double time, int status, std::span<const double> covariates);
  void add(const Observation& o) { add(o.time, o.status, o.covariates); }

  std::size_t size() const { return times_.size(); }
  bool empty() const { return times_.empty(); }
  std::size_t dimension() const { return names_.size(); }

  double time(std::size_t i) const { return times_[i]; }
  int status(std::size_t i) const { return statuses_[i]; }
  std::span<const double> covariates(std::size_t i) const {
    return {covariates_.data() + i * dimension(), dimension()};
  }
  Observation observation(std::size_t i) const;

  std::span<const double> times() const { return times_; }
  std::span<const int> statuses() const { return statuses_; }
  const std::vector<std::string>& covariate_names() const { return names_; }

  Dataset subset(std::span<const std::size_t> rows) const;

  // Mutable status access for derived datasets (role reversal, relabelling).
  void set_status(std::size_t i, int status);

 private:
  std::vector<std::string> names_;
  std::vector<double> times_;
  std::vector<int> statuses_;
  std::vector<double> covariates_;
};

// Column mapping for CSV ingestion.
struct CsvSchema {
  std::string time_column = "time";
  std::string status_column = "status";
};

Dataset load_dataset(const std::string& path, const CsvSchema& schema = {});
Dataset parse_dataset(std::istream& in, const CsvSchema& schema = {});

// Writes time,status,covariates... with 17 significant digits (round-trips doubles).
void write_dataset(std::ostream& out, const Dataset& d, const CsvSchema& schema = {});
void save_dataset(const std::string& path, const Dataset& d, const CsvSchema& schema = {});

// Censoring becomes the event of interest: status 0 -> 1, statuses 1 and 2 -> 0.
Dataset reverse_roles(const Dataset& d);

// Cross-validation plan: per repetition, a fold label in 1..K for every observation.
class FoldPlan {
 public:
  FoldPlan(std::size_t folds, std::uint64_t seed, std::vector<std::vector<int>> assignments);

  std::size_t folds() const { return folds_; }
  std::size_t repetitions() const { return assignments_.size(); }
  std::size_t size() const { return assignments_.empty() ? 0 : assignments_.front().size(); }
  std::uint64_t seed() const { return seed_; }
  const std::vector<int>& assignment(std::size_t repetition) const { return assignments_[repetition]; }

  // fold is 1-based.
  std::vector<std::size_t> test_rows(std::size_t repetition, int fold) const;
  std::vector<std::size_t> train_rows(std::size_t repetition, int fold) const;

  nlohmann::json to_json() const;
  static FoldPlan from_json(const nlohmann::json& j);

 private:
  std::size_t folds_;
  std::uint64_t seed_;
  std::vector<std::vector<int>> assignments_;
};

struct FoldOptions {
  // Deal each status group separately into the folds. Off by default.
  bool stratify_by_status = false;
};

// Each repetition slices an independent random permutation of 0..n-1 into K contiguous
// blocks whose sizes differ by at most one. `statuses` is only read when stratifying.
FoldPlan make_folds(std::size_t n, std::size_t folds, std::size_t repetitions, std::uint64_t seed,
                    const FoldOptions& options = {}, std::span<const int> statuses = {});

}  // namespace jssl
