#pragma once

#include <array>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "jssl/data.hpp"
#include "jssl/hazard.hpp"
#include "jssl/random.hpp"

namespace jssl {

// Value of the observed process eta(t): censored, still at risk, or after a cause-1/2 event.
enum class State : int { censored = -1, at_risk = 0, cause1 = 1, cause2 = 2 };

inline constexpr std::array<State, 4> kStates{State::censored, State::at_risk, State::cause1, State::cause2};

// Position of a state in a StateValues array.
constexpr std::size_t state_index(State s) { return static_cast<std::size_t>(static_cast<int>(s) + 1); }

// Occupation probabilities indexed by state_index: {censored, at_risk, cause1, cause2}.
using StateValues = std::array<double, 4>;

// Right-continuous: 0 before the observed time, afterwards the state coded by the status.
State eta(double time, int status, double t);
inline State eta(const Observation& o, double t) { return eta(o.time, o.status, t); }

// State occupation function t -> F(t, ., x) for one covariate vector.
class StateCurve {
 public:
  virtual ~StateCurve() = default;
  virtual StateValues at(double t) const = 0;
  double at(double t, State s) const { return at(t)[state_index(s)]; }

  // Piecewise constant between breakpoints() (all components were step functions).
  virtual bool is_step() const = 0;

  // Jump locations of the step components within the curve's horizon.
  virtual std::span<const double> breakpoints() const = 0;
};

// Piecewise-constant curve: values[k] holds on [times[k], times[k+1]); `initial` before times[0].
class StepStateCurve final : public StateCurve {
 public:
  StepStateCurve(std::vector<double> times, std::vector<StateValues> values,
                 StateValues initial = {0.0, 1.0, 0.0, 0.0});

  StateValues at(double t) const override;
  bool is_step() const override { return true; }
  std::span<const double> breakpoints() const override { return times_; }

  const std::vector<StateValues>& values() const { return values_; }
  const StateValues& initial() const { return initial_; }

 private:
  std::vector<double> times_;
  std::vector<StateValues> values_;
  StateValues initial_;
};

struct CompositionOptions {
  // Use prod(1 - dA) for the at-risk state instead of exp(-A) (step components only).
  bool product_limit = false;
  // Absolute tolerance of the adaptive Simpson rule for continuous components.
  double tolerance = 1e-8;
};

// Composes three step paths (cause 1, cause 2, censoring) by a Lebesgue-Stieltjes sum with
// left limits of the at-risk probability.
StepStateCurve compose_paths(const StepPath& cause1, const StepPath& cause2, const StepPath& censoring,
                             const CompositionOptions& options = {});

// Anything that yields a state occupation curve per covariate vector.
class StateModel {
 public:
  virtual ~StateModel() = default;
  // The curve must be accurate on [0, horizon].
  virtual std::unique_ptr<StateCurve> curve(std::span<const double> x, double horizon) const = 0;

  double evaluate(double t, State s, std::span<const double> x) const { return curve(x, t)->at(t, s); }
};

// F(t, 0, x) = exp{-L1 - L2 - G}; F(t, l, x) = int_0^t F(s-, 0, x) dL_l(s) for l = 1, 2, -1.
class StateOccupationModel final : public StateModel {
 public:
  StateOccupationModel(HazardPtr cause1, HazardPtr cause2, HazardPtr censoring, CompositionOptions options = {});

  std::unique_ptr<StateCurve> curve(std::span<const double> x, double horizon) const override;

  // Merged sorted jump times of the step components.
  std::vector<double> grid(std::span<const double> x) const;

  bool is_step() const;
  const HazardPtr& cause1() const { return cause1_; }
  const HazardPtr& cause2() const { return cause2_; }
  const HazardPtr& censoring() const { return censoring_; }
  const CompositionOptions& options() const { return options_; }

 private:
  HazardPtr cause1_;
  HazardPtr cause2_;
  HazardPtr censoring_;
  CompositionOptions options_;
};

StateOccupationModel compose(HazardPtr cause1, HazardPtr cause2, HazardPtr censoring,
                             CompositionOptions options = {});

// The same occupation probabilities for every x.
class ConstantStateModel final : public StateModel {
 public:
  explicit ConstantStateModel(StateValues values) : values_(values) {}
  std::unique_ptr<StateCurve> curve(std::span<const double>, double) const override {
    return std::make_unique<StepStateCurve>(std::vector<double>{}, std::vector<StateValues>{}, values_);
  }

 private:
  StateValues values_;
};

struct McEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
};

using CovariateSampler = std::function<std::vector<double>(Rng&)>;

// Monte Carlo estimate of sum_l int_0^tau E[(F - G)^2(t, l, X)] dt: m draws of X, trapezoidal
// rule on grid_size equispaced points of [0, tau].
McEstimate mc_norm_squared(const StateModel& f, const StateModel& reference, const CovariateSampler& sampler,
                           std::size_t m, double tau, Rng& rng, std::size_t grid_size = 200);

// Long-format export: t, l, x_id, F on an equispaced grid of grid_size points in [0, tau].
void write_state_curves(std::ostream& out, const StateModel& model, const std::vector<std::vector<double>>& xs,
                        double tau, std::size_t grid_size = 200);

}  // namespace jssl
