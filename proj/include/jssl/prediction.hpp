#pragma once

#include <span>

#include "jssl/hazard.hpp"
#include "jssl/state.hpp"

namespace jssl {

// Absolute risk of cause j (1 or 2) by time t:
//   int_0^t exp{-L1(u-|x) - L2(u-|x)} L_j(du|x),
// summed exactly over jumps for step hazards, adaptive Simpson otherwise.
double cause_specific_risk(const HazardPtr& lambda1, const HazardPtr& lambda2, double t, std::span<const double> x,
                           int j, const CompositionOptions& options = {});

// exp{-L1(t|x) - L2(t|x)}.
double event_free_survival(const CumulativeHazard& lambda1, const CumulativeHazard& lambda2, double t,
                           std::span<const double> x);

// exp{-G(t|x)}.
double censoring_survival(const CumulativeHazard& gamma, double t, std::span<const double> x);

struct RiskPrediction {
  double risk_cause1 = 0.0;
  double risk_cause2 = 0.0;
  double event_free_survival = 1.0;
  double censoring_survival = 1.0;
};

// Predictions from a selected hazard triple. Queries outside [0, tau] are rejected.
class RiskPredictionModel {
 public:
  RiskPredictionModel(HazardPtr lambda1, HazardPtr lambda2, HazardPtr gamma, double tau,
                      CompositionOptions options = {});

  // j in {1, 2}.
  double predict(double t, std::span<const double> x, int j) const;
  RiskPrediction predict_all(double t, std::span<const double> x) const;

  const HazardPtr& lambda1() const { return lambda1_; }
  const HazardPtr& lambda2() const { return lambda2_; }
  const HazardPtr& gamma() const { return gamma_; }
  double tau() const { return tau_; }

 private:
  void check_time(double t) const;

  HazardPtr lambda1_;
  HazardPtr lambda2_;
  HazardPtr gamma_;
  double tau_;
  CompositionOptions options_;
};

}  // namespace jssl
