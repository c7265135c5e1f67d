#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jssl/simulation.hpp"
#include "jssl/state.hpp"

namespace jssl {

struct NamedModel {
  std::string name;
  StateOccupationModel model;
};

// Five misspecified versions of the scenario's true F_P: every hazard scaled by 0.5, 0.8,
// 1.25 and 2 (the state-0 hazard scales by the same factor), and a covariate-blind model
// with all hazards evaluated at the covariate means.
std::vector<NamedModel> perturbed_models(const SimulationScenario& s);

struct PropernessCheck {
  std::string model;
  double gap = 0.0;  // mean of B(F', O) - B(F_P, O) over observations
  double se = 0.0;
  bool pass = false;  // gap > 3 se
};

struct ExcessRiskCheck {
  std::string model;
  double excess = 0.0;  // same paired mean as the properness gap
  double excess_se = 0.0;
  double norm = 0.0;  // Monte Carlo ||F' - F_P||^2 on independent covariate draws
  double norm_se = 0.0;
  bool pass = false;  // |excess - norm| <= 3 sqrt(se^2 + se^2)
};

struct VerificationReport {
  std::size_t observations = 0;
  double risk_true = 0.0;  // mean integrated Brier score of F_P
  std::vector<PropernessCheck> properness;
  std::vector<ExcessRiskCheck> excess_risk;

  bool properness_passed() const;
  bool excess_risk_passed() const;
};

// Draws m observations from the scenario and scores F_P and every perturbed model by the
// integrated Brier score on [0, tau]. The excess-risk comparison uses m further covariate
// draws for the norm when `with_norm` is set.
VerificationReport verify_scoring_rule(const SimulationScenario& s, std::size_t m, std::uint64_t seed,
                                       bool with_norm = true, std::size_t jobs = 1);

}  // namespace jssl
