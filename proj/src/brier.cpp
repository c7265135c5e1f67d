#include "jssl/brier.hpp"

#include <algorithm>

#include "jssl/error.hpp"
#include "jssl/quadrature.hpp"

namespace jssl {

namespace {

double squared_error(const StateValues& f, State observed) {
  double sum = 0.0;
  for (std::size_t l = 0; l < 4; ++l) {
    const double indicator = l == state_index(observed) ? 1.0 : 0.0;
    sum += (f[l] - indicator) * (f[l] - indicator);
  }
  return sum;
}

// Linear walk over the jumps of a step curve; same breakpoints as the generic path.
double step_brier(const StepStateCurve& curve, double time, int status, double tau) {
  const auto times = curve.breakpoints();
  const auto& values = curve.values();
  StateValues v = curve.initial();
  std::size_t j = 0;
  while (j < times.size() && times[j] <= 0.0) v = values[j++];
  bool time_pending = time > 0.0 && time < tau;
  double a = 0.0;
  double total = 0.0;
  while (a < tau) {
    double b = tau;
    if (j < times.size() && times[j] < b) b = times[j];
    if (time_pending && time < b) b = time;
    total += (b - a) * squared_error(v, eta(time, status, 0.5 * (a + b)));
    a = b;
    if (time_pending && time <= a) time_pending = false;
    while (j < times.size() && times[j] <= a) v = values[j++];
  }
  return total;
}

}  // namespace

double integrated_brier(const StateCurve& curve, double time, int status, double tau) {
  if (!(tau > 0.0)) throw InvalidConfiguration("integrated Brier score needs tau > 0");
  if (const auto* step = dynamic_cast<const StepStateCurve*>(&curve)) return step_brier(*step, time, status, tau);
  std::vector<double> points{0.0};
  for (double s : curve.breakpoints()) {
    if (s > 0.0 && s < tau) points.push_back(s);
  }
  if (time > 0.0 && time < tau) points.push_back(time);
  points.push_back(tau);
  std::sort(points.begin(), points.end());

  double total = 0.0;
  for (std::size_t k = 0; k + 1 < points.size(); ++k) {
    const double a = points[k];
    const double b = points[k + 1];
    if (!(b > a)) continue;
    const double mid = 0.5 * (a + b);
    const State observed = eta(time, status, mid);
    if (curve.is_step()) {
      total += (b - a) * squared_error(curve.at(mid), observed);
    } else {
      total += adaptive_simpson([&](double t) { return squared_error(curve.at(t), observed); }, a, b,
                                kBrierTolerance);
    }
  }
  return total;
}

double integrated_brier(const StateModel& model, const Observation& o, double tau) {
  if (!(tau > 0.0)) throw InvalidConfiguration("integrated Brier score needs tau > 0");
  return integrated_brier(*model.curve(o.covariates, tau), o.time, o.status, tau);
}

}  // namespace jssl
