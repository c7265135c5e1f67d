#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace jssl {

struct Increment {
  double time;
  double delta;
};

// Right-continuous step function materialized for one covariate vector: cumulative[k] is
// the value on [times[k], times[k+1]). The value before times[0] is zero.
struct StepPath {
  std::vector<double> times;
  std::vector<double> cumulative;

  double at(double t) const;
  double before(double t) const;
  double increment(std::size_t k) const { return cumulative[k] - (k == 0 ? 0.0 : cumulative[k - 1]); }
};

// A continuous hazard with its covariate vector bound, for repeated evaluation along t.
class HazardProfile {
 public:
  virtual ~HazardProfile() = default;
  // Lambda(t | x) and d Lambda(t | x) / dt.
  virtual void evaluate(double t, double& level, double& rate) const = 0;
};

// A fitted conditional cumulative hazard t -> Lambda(t | x). Step models expose their
// jump grid; continuous models expose an intensity instead.
class CumulativeHazard {
 public:
  virtual ~CumulativeHazard() = default;

  virtual bool is_step() const = 0;

  // Sorted distinct potential jump times; empty for continuous or identically zero hazards.
  virtual std::span<const double> jump_times() const = 0;

  virtual double evaluate(double t, std::span<const double> x) const = 0;

  // Left limit Lambda(t- | x).
  virtual double evaluate_before(double t, std::span<const double> x) const = 0;

  // Step models: cumulative values at every jump time, for covariate vector x.
  virtual std::vector<double> cumulative_at_jumps(std::span<const double> x) const;

  // Continuous models: the hazard rate d Lambda(t|x) / dt.
  virtual double intensity(double t, std::span<const double> x) const;

  virtual nlohmann::json to_json() const = 0;

  // Continuous models: the hazard at fixed x. The default forwards to evaluate/intensity.
  virtual std::unique_ptr<HazardProfile> bind(std::span<const double> x) const;

  // Step models: jumps with positive increment up to and including `horizon`.
  StepPath path(std::span<const double> x, double horizon) const;

  // Step models: (jump_time, increment) over the full jump grid, zero increments included.
  std::vector<Increment> increments(std::span<const double> x) const;
};

using HazardPtr = std::shared_ptr<const CumulativeHazard>;

// Lambda == 0.
class ZeroHazard final : public CumulativeHazard {
 public:
  bool is_step() const override { return true; }
  std::span<const double> jump_times() const override { return {}; }
  double evaluate(double, std::span<const double>) const override { return 0.0; }
  double evaluate_before(double, std::span<const double>) const override { return 0.0; }
  std::vector<double> cumulative_at_jumps(std::span<const double>) const override { return {}; }
  nlohmann::json to_json() const override { return {{"type", "zero"}}; }
};

// Covariate-free step function, e.g. a Nelson-Aalen estimate.
class MarginalStepHazard final : public CumulativeHazard {
 public:
  MarginalStepHazard(std::vector<double> times, std::vector<double> cumulative);

  bool is_step() const override { return true; }
  std::span<const double> jump_times() const override { return times_; }
  double evaluate(double t, std::span<const double> x) const override;
  double evaluate_before(double t, std::span<const double> x) const override;
  std::vector<double> cumulative_at_jumps(std::span<const double>) const override { return cumulative_; }
  nlohmann::json to_json() const override;

  const std::vector<double>& cumulative() const { return cumulative_; }

 private:
  std::vector<double> times_;
  std::vector<double> cumulative_;
};

// Lambda(t | x) = Lambda0(t) * exp(beta' (x - center)). With center = 0 this is the textbook
// Cox form; a non-zero center keeps the stored baseline on a numerically sensible scale.
class ProportionalStepHazard final : public CumulativeHazard {
 public:
  ProportionalStepHazard(std::vector<double> times, std::vector<double> baseline, std::vector<double> beta,
                         std::vector<double> center);

  bool is_step() const override { return true; }
  std::span<const double> jump_times() const override { return times_; }
  double evaluate(double t, std::span<const double> x) const override;
  double evaluate_before(double t, std::span<const double> x) const override;
  std::vector<double> cumulative_at_jumps(std::span<const double> x) const override;
  nlohmann::json to_json() const override;

  double relative_risk(std::span<const double> x) const;
  const std::vector<double>& coefficients() const { return beta_; }
  const std::vector<double>& center() const { return center_; }
  const std::vector<double>& baseline() const { return baseline_; }

 private:
  std::vector<double> times_;
  std::vector<double> baseline_;
  std::vector<double> beta_;
  std::vector<double> center_;
};

// Lambda(t | x) = scale * t^shape * exp(beta' x).
class WeibullHazard final : public CumulativeHazard {
 public:
  WeibullHazard(double scale, double shape, std::vector<double> beta);

  bool is_step() const override { return false; }
  std::span<const double> jump_times() const override { return {}; }
  double evaluate(double t, std::span<const double> x) const override;
  double evaluate_before(double t, std::span<const double> x) const override { return evaluate(t, x); }
  double intensity(double t, std::span<const double> x) const override;
  nlohmann::json to_json() const override;
  std::unique_ptr<HazardProfile> bind(std::span<const double> x) const override;

  double scale() const { return scale_; }
  double shape() const { return shape_; }
  const std::vector<double>& coefficients() const { return beta_; }

 private:
  double linear_predictor(std::span<const double> x) const;

  double scale_;
  double shape_;
  std::vector<double> beta_;
};

// factor * base(t | x).
class ScaledHazard final : public CumulativeHazard {
 public:
  ScaledHazard(HazardPtr base, double factor);

  bool is_step() const override { return base_->is_step(); }
  std::span<const double> jump_times() const override { return base_->jump_times(); }
  double evaluate(double t, std::span<const double> x) const override { return factor_ * base_->evaluate(t, x); }
  double evaluate_before(double t, std::span<const double> x) const override {
    return factor_ * base_->evaluate_before(t, x);
  }
  std::vector<double> cumulative_at_jumps(std::span<const double> x) const override;
  double intensity(double t, std::span<const double> x) const override { return factor_ * base_->intensity(t, x); }
  nlohmann::json to_json() const override;
  std::unique_ptr<HazardProfile> bind(std::span<const double> x) const override;

 private:
  HazardPtr base_;
  double factor_;
};

// base(t | x0) for every x: a covariate-blind version of `base`.
class FixedCovariateHazard final : public CumulativeHazard {
 public:
  FixedCovariateHazard(HazardPtr base, std::vector<double> x0);

  bool is_step() const override { return base_->is_step(); }
  std::span<const double> jump_times() const override { return base_->jump_times(); }
  double evaluate(double t, std::span<const double>) const override { return base_->evaluate(t, x0_); }
  double evaluate_before(double t, std::span<const double>) const override { return base_->evaluate_before(t, x0_); }
  std::vector<double> cumulative_at_jumps(std::span<const double>) const override {
    return base_->cumulative_at_jumps(x0_);
  }
  double intensity(double t, std::span<const double>) const override { return base_->intensity(t, x0_); }
  nlohmann::json to_json() const override;
  std::unique_ptr<HazardProfile> bind(std::span<const double>) const override { return base_->bind(x0_); }

 private:
  HazardPtr base_;
  std::vector<double> x0_;
};

// Reconstructs any hazard serialized by to_json(), including forests.
HazardPtr hazard_from_json(const nlohmann::json& j);

}  // namespace jssl
