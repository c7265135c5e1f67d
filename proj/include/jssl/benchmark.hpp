#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "jssl/evaluation.hpp"
#include "jssl/learners.hpp"
#include "jssl/selection.hpp"
#include "jssl/simulation.hpp"

namespace jssl {

// Learner specs per role; the role fixes each spec's target.
struct LibrarySpecs {
  std::vector<LearnerSpec> cause1;
  std::vector<LearnerSpec> cause2;
  std::vector<LearnerSpec> censoring;

  LearnerLibraries build() const;
  nlohmann::json to_json() const;
  static LibrarySpecs from_json(const nlohmann::json& j);
};

struct BenchmarkConfig {
  SimulationScenario scenario;
  std::vector<std::size_t> sizes{300, 1000};
  std::size_t repetitions = 100;
  std::vector<std::string> methods{"jssl", "ipcw_km", "ipcw_cox", "oracle"};
  LibrarySpecs libraries;
  std::size_t folds = 5;
  std::size_t cv_repetitions = 1;
  double tau = 36.0;
  double t_star = 36.0;
  std::uint64_t seed = 1;
  std::size_t test_size = 20000;
  std::string output_dir = "benchmark_out";
  IpcwOptions ipcw;

  // Throws InvalidConfiguration for unknown methods, sizes below 2K, and similar.
  void validate() const;
  nlohmann::json to_json() const;
  // `base_dir` resolves a scenario given as a relative file path.
  static BenchmarkConfig from_json(const nlohmann::json& j, const std::string& base_dir = ".");
};

// Default {Nelson-Aalen, Cox, forest} for cause 1 and censoring, {Nelson-Aalen} for cause 2.
LibrarySpecs default_benchmark_libraries(std::size_t n_trees = 100);

struct BenchmarkRow {
  std::string scenario;
  std::size_t n = 0;
  std::size_t repetition = 0;
  std::uint64_t seed = 0;
  std::string method;
  double ipa = 0.0;
  double brier = 0.0;
  double null_brier = 0.0;
  std::string selected;       // "cause1 learner|cause2 learner", empty on failure
  bool agrees_with_oracle = false;
  std::string error;
};

struct BenchmarkAggregate {
  std::string scenario;
  std::size_t n = 0;
  std::string method;
  double mean_ipa = 0.0;
  double se_ipa = 0.0;
  double oracle_agreement = 0.0;
  std::size_t repetitions = 0;
  std::size_t failures = 0;
};

struct BenchmarkResult {
  std::vector<BenchmarkRow> rows;  // sorted by (n, repetition, method order)
  std::vector<BenchmarkAggregate> aggregate;

  // scenario,n,repetition,seed,method,ipa,brier,null_brier,selected,oracle_agreement,error
  void write_tidy(std::ostream& out) const;
  // scenario,n,method,mean_ipa,se_ipa,oracle_agreement,repetitions,failures
  void write_aggregate(std::ostream& out) const;
  const BenchmarkAggregate& find(std::size_t n, const std::string& method) const;
};

// Simulates a training set per (n, repetition), runs every method on it and evaluates
// the IPA at t* on one shared uncensored test set. Cells run on up to `jobs` threads;
// the result does not depend on `jobs`.
BenchmarkResult run_benchmark(const BenchmarkConfig& config, std::size_t jobs = 1, std::ostream* progress = nullptr);

}  // namespace jssl
