#include "jssl/prediction.hpp"

#include <cmath>
#include <memory>

#include "jssl/error.hpp"

namespace jssl {

namespace {

const HazardPtr& zero_hazard() {
  static const HazardPtr zero = std::make_shared<ZeroHazard>();
  return zero;
}

State cause_state(int j) {
  if (j == 1) return State::cause1;
  if (j == 2) return State::cause2;
  throw InvalidConfiguration("cause must be 1 or 2, got " + std::to_string(j));
}

}  // namespace

double cause_specific_risk(const HazardPtr& lambda1, const HazardPtr& lambda2, double t, std::span<const double> x,
                           int j, const CompositionOptions& options) {
  const State s = cause_state(j);
  if (!lambda1 || !lambda2) throw InvalidConfiguration("cause-specific risk needs two hazards");
  if (t <= 0.0) return 0.0;
  // The censoring hazard does not enter the cause-specific risk; compose with zero.
  const StateOccupationModel m(lambda1, lambda2, zero_hazard(), options);
  return m.curve(x, t)->at(t, s);
}

double event_free_survival(const CumulativeHazard& lambda1, const CumulativeHazard& lambda2, double t,
                           std::span<const double> x) {
  return std::exp(-lambda1.evaluate(t, x) - lambda2.evaluate(t, x));
}

double censoring_survival(const CumulativeHazard& gamma, double t, std::span<const double> x) {
  return std::exp(-gamma.evaluate(t, x));
}

RiskPredictionModel::RiskPredictionModel(HazardPtr lambda1, HazardPtr lambda2, HazardPtr gamma, double tau,
                                         CompositionOptions options)
    : lambda1_(std::move(lambda1)), lambda2_(std::move(lambda2)), gamma_(std::move(gamma)), tau_(tau),
      options_(options) {
  if (!lambda1_ || !lambda2_ || !gamma_) throw InvalidConfiguration("prediction model needs three hazards");
  if (!(tau_ > 0.0)) throw InvalidConfiguration("tau must be positive");
}

void RiskPredictionModel::check_time(double t) const {
  if (!(t >= 0.0 && t <= tau_)) {
    throw OutOfRangeError("prediction time " + std::to_string(t) + " outside [0, " + std::to_string(tau_) + "]");
  }
}

double RiskPredictionModel::predict(double t, std::span<const double> x, int j) const {
  check_time(t);
  return cause_specific_risk(lambda1_, lambda2_, t, x, j, options_);
}

RiskPrediction RiskPredictionModel::predict_all(double t, std::span<const double> x) const {
  check_time(t);
  RiskPrediction p;
  if (t > 0.0) {
    const StateOccupationModel m(lambda1_, lambda2_, zero_hazard(), options_);
    const auto v = m.curve(x, t)->at(t);
    p.risk_cause1 = v[state_index(State::cause1)];
    p.risk_cause2 = v[state_index(State::cause2)];
  }
  p.event_free_survival = event_free_survival(*lambda1_, *lambda2_, t, x);
  p.censoring_survival = censoring_survival(*gamma_, t, x);
  return p;
}

}  // namespace jssl
