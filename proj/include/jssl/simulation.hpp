#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "jssl/data.hpp"
#include "jssl/random.hpp"
#include "jssl/state.hpp"

namespace jssl {

// Marginal distribution of one covariate. Categorical covariates take numeric `values`
// (default 0..k-1) with the given probabilities.
struct CovariateSpec {
  enum class Kind { gaussian, bernoulli, categorical };

  std::string name;
  Kind kind = Kind::gaussian;
  double mean = 0.0;
  double sd = 1.0;
  double p = 0.5;
  std::vector<double> values;
  std::vector<double> probabilities;

  double draw(Rng& rng) const;
  void validate() const;
  nlohmann::json to_json() const;
  static CovariateSpec from_json(const nlohmann::json& j);
};

// Lambda(t | x) = scale * t^shape * exp(coefficients' x).
struct WeibullSpec {
  double scale = 1.0;
  double shape = 1.0;
  std::vector<double> coefficients;

  nlohmann::json to_json() const;
  static WeibullSpec from_json(const nlohmann::json& j);
};

enum class CensoringMode { dependent, independent };

struct SimulationScenario {
  std::string name = "scenario";
  std::vector<CovariateSpec> covariates;
  WeibullSpec cause1;
  std::optional<WeibullSpec> cause2;  // absent: no competing cause
  WeibullSpec censoring;              // scale 0 disables censoring
  CensoringMode mode = CensoringMode::dependent;
  double tau = 36.0;
  std::optional<double> admin_censoring_time;  // default 2 tau

  std::size_t dimension() const { return covariates.size(); }
  std::vector<std::string> covariate_names() const;
  double admin_time() const { return admin_censoring_time.value_or(2.0 * tau); }
  // Censoring coefficients in effect: zero in independent mode.
  std::vector<double> censoring_coefficients() const;

  // Throws InvalidConfiguration on non-positive scales/shapes or coefficient length mismatch.
  void validate() const;
  nlohmann::json to_json() const;
  static SimulationScenario from_json(const nlohmann::json& j);
};

SimulationScenario load_scenario(const std::string& path);
void save_scenario(const std::string& path, const SimulationScenario& s);

// Inverse of exp(-scale t^shape e^lp) = u. Throws OutOfRangeError unless 0 < u < 1.
double invert_weibull(double u, double scale, double shape, double linear_predictor);

struct LatentRecord {
  double event_time = 0.0;   // T = min(T1, T2)
  int cause = kCause1;       // D
  double censor_time = 0.0;  // C (infinite without censoring)
  std::vector<double> covariates;
  Observation observed;  // time min(T, C, admin), status D if T is observed else 0
};

struct SimulatedData {
  Dataset data;
  std::vector<LatentRecord> latent;
};

SimulatedData simulate_dataset(const SimulationScenario& s, std::size_t n, std::uint64_t seed);

// Uncensored evaluation set: time T, status D for every latent record.
Dataset latent_dataset(const std::vector<LatentRecord>& latent, const std::vector<std::string>& names);

// Draws covariate vectors from the scenario's marginals.
CovariateSampler covariate_sampler(const SimulationScenario& s);

// The true F_P of the scenario from its Weibull hazards (zero hazard for an absent cause 2).
StateOccupationModel true_state_occupation(const SimulationScenario& s, CompositionOptions options = {});

struct MarginalRates {
  double event_rate = 0.0;   // P(T <= h, D = 1)
  double censor_rate = 0.0;  // P(C <= h)
};

// Monte Carlo marginal rates at the horizon from n latent draws.
MarginalRates marginal_rates(const SimulationScenario& s, double horizon, std::size_t n, std::uint64_t seed);

struct CalibrationTargets {
  double event_rate = 0.246;
  double censor_rate = 0.619;
  double horizon = 36.0;
};

struct CalibrationOptions {
  std::size_t n = 50000;
  std::uint64_t seed = 20240607;
  double tolerance = 1e-3;  // absolute, on the rate scale
  int max_iterations = 60;
};

// Adjusts the cause-1 and censoring scales by bisection on log scale, with common random
// numbers, until both Monte Carlo marginal rates are within tolerance of the targets.
// Throws CalibrationError with the achievable range when a target cannot be bracketed.
SimulationScenario calibrate_scenario(const CalibrationTargets& targets, const SimulationScenario& templ,
                                      const CalibrationOptions& options = {});

}  // namespace jssl
