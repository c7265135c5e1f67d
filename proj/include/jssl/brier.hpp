#pragma once

#include "jssl/data.hpp"
#include "jssl/state.hpp"

namespace jssl {

// Absolute tolerance of the per-interval adaptive Simpson rule for continuous curves.
inline constexpr double kBrierTolerance = 1e-8;

// int_0^tau sum_l (F(t, l, x) - 1{eta(t) = l})^2 dt for one observation. Step curves are
// integrated exactly between breakpoints (curve jumps, the observed time, 0 and tau);
// continuous curves by adaptive Simpson on each such interval. Throws when tau <= 0.
double integrated_brier(const StateCurve& curve, double time, int status, double tau);

double integrated_brier(const StateModel& model, const Observation& o, double tau);

}  // namespace jssl
