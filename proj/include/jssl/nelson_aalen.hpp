#pragma once

#include <span>
#include <vector>

#include "jssl/data.hpp"
#include "jssl/hazard.hpp"
#include "jssl/learners.hpp"

namespace jssl {

// Distinct target event times with event counts and the weighted risk-set totals needed
// by Breslow-type estimators. Observations are visited in descending time order.
struct EventTable {
  std::vector<double> times;       // ascending distinct event times
  std::vector<double> events;      // d(s)
  std::vector<double> risk_total;  // sum of weights over {i : time_i >= s}
};

// `weights` holds exp(linear predictor) per observation, or is empty for unit weights.
EventTable event_table(const Dataset& d, Target target, std::span<const double> weights = {});

// Cumulative sum of d(s) / risk_total(s).
std::vector<double> breslow_cumulative(const EventTable& table);

// Lambda(t) = sum_{s <= t} d(s) / Y(s); ignores covariates. Zero events give Lambda == 0.
HazardPtr fit_nelson_aalen(const Dataset& d, Target target);

}  // namespace jssl
