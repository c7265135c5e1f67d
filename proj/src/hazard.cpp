#include "jssl/hazard.hpp"

#include <algorithm>
#include <cmath>

#include "jssl/error.hpp"
#include "jssl/forest.hpp"

namespace jssl {

namespace {

// Index of the last jump <= t, or -1.
std::ptrdiff_t last_at_or_before(std::span<const double> times, double t) {
  return std::upper_bound(times.begin(), times.end(), t) - times.begin() - 1;
}

std::ptrdiff_t last_before(std::span<const double> times, double t) {
  return std::lower_bound(times.begin(), times.end(), t) - times.begin() - 1;
}

void check_grid(const std::vector<double>& times, const std::vector<double>& values) {
  if (times.size() != values.size()) throw InvalidConfiguration("jump grid and values differ in length");
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!(times[k] > 0.0) || (k > 0 && !(times[k] > times[k - 1]))) {
      throw InvalidConfiguration("jump times must be positive, strictly increasing");
    }
  }
}

}  // namespace

double StepPath::at(double t) const {
  const auto k = last_at_or_before(times, t);
  return k < 0 ? 0.0 : cumulative[static_cast<std::size_t>(k)];
}

double StepPath::before(double t) const {
  const auto k = last_before(times, t);
  return k < 0 ? 0.0 : cumulative[static_cast<std::size_t>(k)];
}

std::vector<double> CumulativeHazard::cumulative_at_jumps(std::span<const double> x) const {
  const auto grid = jump_times();
  std::vector<double> out(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) out[k] = evaluate(grid[k], x);
  return out;
}

double CumulativeHazard::intensity(double, std::span<const double>) const {
  throw InvalidConfiguration("intensity is only defined for continuous hazards");
}

namespace {

class GenericProfile final : public HazardProfile {
 public:
  GenericProfile(const CumulativeHazard& h, std::span<const double> x) : h_(h), x_(x.begin(), x.end()) {}
  void evaluate(double t, double& level, double& rate) const override {
    level = h_.evaluate(t, x_);
    rate = h_.intensity(t, x_);
  }

 private:
  const CumulativeHazard& h_;
  std::vector<double> x_;
};

class WeibullProfile final : public HazardProfile {
 public:
  WeibullProfile(double coefficient, double shape) : c_(coefficient), shape_(shape) {}
  void evaluate(double t, double& level, double& rate) const override {
    if (t <= 0.0) {
      level = 0.0;
      rate = t < 0.0 ? 0.0 : c_ * shape_ * std::pow(0.0, shape_ - 1.0);
      return;
    }
    const double p = std::pow(t, shape_);
    level = c_ * p;
    rate = c_ * shape_ * p / t;
  }

 private:
  double c_;
  double shape_;
};

class ScaledProfile final : public HazardProfile {
 public:
  ScaledProfile(std::unique_ptr<HazardProfile> base, double factor) : base_(std::move(base)), factor_(factor) {}
  void evaluate(double t, double& level, double& rate) const override {
    base_->evaluate(t, level, rate);
    level *= factor_;
    rate *= factor_;
  }

 private:
  std::unique_ptr<HazardProfile> base_;
  double factor_;
};

}  // namespace

std::unique_ptr<HazardProfile> CumulativeHazard::bind(std::span<const double> x) const {
  return std::make_unique<GenericProfile>(*this, x);
}

StepPath CumulativeHazard::path(std::span<const double> x, double horizon) const {
  if (!is_step()) throw InvalidConfiguration("path() requires a step hazard");
  const auto grid = jump_times();
  const auto values = cumulative_at_jumps(x);
  StepPath out;
  double previous = 0.0;
  for (std::size_t k = 0; k < grid.size() && grid[k] <= horizon; ++k) {
    if (values[k] > previous) {
      out.times.push_back(grid[k]);
      out.cumulative.push_back(values[k]);
      previous = values[k];
    }
  }
  return out;
}

std::vector<Increment> CumulativeHazard::increments(std::span<const double> x) const {
  if (!is_step()) throw InvalidConfiguration("increments() requires a step hazard");
  const auto grid = jump_times();
  const auto values = cumulative_at_jumps(x);
  std::vector<Increment> out;
  out.reserve(grid.size());
  double previous = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    out.push_back({grid[k], values[k] - previous});
    previous = values[k];
  }
  return out;
}

MarginalStepHazard::MarginalStepHazard(std::vector<double> times, std::vector<double> cumulative)
    : times_(std::move(times)), cumulative_(std::move(cumulative)) {
  check_grid(times_, cumulative_);
}

double MarginalStepHazard::evaluate(double t, std::span<const double>) const {
  const auto k = last_at_or_before(times_, t);
  return k < 0 ? 0.0 : cumulative_[static_cast<std::size_t>(k)];
}

double MarginalStepHazard::evaluate_before(double t, std::span<const double>) const {
  const auto k = last_before(times_, t);
  return k < 0 ? 0.0 : cumulative_[static_cast<std::size_t>(k)];
}

nlohmann::json MarginalStepHazard::to_json() const {
  return {{"type", "marginal_step"}, {"times", times_}, {"cumulative", cumulative_}};
}

ProportionalStepHazard::ProportionalStepHazard(std::vector<double> times, std::vector<double> baseline,
                                               std::vector<double> beta, std::vector<double> center)
    : times_(std::move(times)), baseline_(std::move(baseline)), beta_(std::move(beta)), center_(std::move(center)) {
  check_grid(times_, baseline_);
  if (beta_.size() != center_.size()) throw InvalidConfiguration("coefficients and centers differ in length");
}

double ProportionalStepHazard::relative_risk(std::span<const double> x) const {
  if (x.size() != beta_.size()) throw SchemaError("covariate vector has the wrong dimension");
  double lp = 0.0;
  for (std::size_t j = 0; j < beta_.size(); ++j) lp += beta_[j] * (x[j] - center_[j]);
  return std::exp(lp);
}

double ProportionalStepHazard::evaluate(double t, std::span<const double> x) const {
  const auto k = last_at_or_before(times_, t);
  return k < 0 ? 0.0 : baseline_[static_cast<std::size_t>(k)] * relative_risk(x);
}

double ProportionalStepHazard::evaluate_before(double t, std::span<const double> x) const {
  const auto k = last_before(times_, t);
  return k < 0 ? 0.0 : baseline_[static_cast<std::size_t>(k)] * relative_risk(x);
}

std::vector<double> ProportionalStepHazard::cumulative_at_jumps(std::span<const double> x) const {
  const double rr = relative_risk(x);
  std::vector<double> out(baseline_.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = baseline_[k] * rr;
  return out;
}

nlohmann::json ProportionalStepHazard::to_json() const {
  return {{"type", "proportional_step"}, {"times", times_}, {"baseline", baseline_},
          {"coefficients", beta_},       {"center", center_}};
}

WeibullHazard::WeibullHazard(double scale, double shape, std::vector<double> beta)
    : scale_(scale), shape_(shape), beta_(std::move(beta)) {
  if (!(scale_ >= 0.0) || !(shape_ > 0.0)) throw InvalidConfiguration("Weibull scale must be >= 0 and shape > 0");
}

double WeibullHazard::linear_predictor(std::span<const double> x) const {
  if (x.size() != beta_.size()) throw SchemaError("covariate vector has the wrong dimension");
  double lp = 0.0;
  for (std::size_t j = 0; j < beta_.size(); ++j) lp += beta_[j] * x[j];
  return lp;
}

double WeibullHazard::evaluate(double t, std::span<const double> x) const {
  if (t <= 0.0) return 0.0;
  return scale_ * std::pow(t, shape_) * std::exp(linear_predictor(x));
}

double WeibullHazard::intensity(double t, std::span<const double> x) const {
  if (t < 0.0) return 0.0;
  return scale_ * shape_ * std::pow(t, shape_ - 1.0) * std::exp(linear_predictor(x));
}

std::unique_ptr<HazardProfile> WeibullHazard::bind(std::span<const double> x) const {
  return std::make_unique<WeibullProfile>(scale_ * std::exp(linear_predictor(x)), shape_);
}

nlohmann::json WeibullHazard::to_json() const {
  return {{"type", "weibull"}, {"scale", scale_}, {"shape", shape_}, {"coefficients", beta_}};
}

ScaledHazard::ScaledHazard(HazardPtr base, double factor) : base_(std::move(base)), factor_(factor) {
  if (!(factor_ >= 0.0)) throw InvalidConfiguration("hazard scale factor must be non-negative");
}

std::vector<double> ScaledHazard::cumulative_at_jumps(std::span<const double> x) const {
  auto out = base_->cumulative_at_jumps(x);
  for (double& v : out) v *= factor_;
  return out;
}

std::unique_ptr<HazardProfile> ScaledHazard::bind(std::span<const double> x) const {
  return std::make_unique<ScaledProfile>(base_->bind(x), factor_);
}

nlohmann::json ScaledHazard::to_json() const {
  return {{"type", "scaled"}, {"factor", factor_}, {"base", base_->to_json()}};
}

FixedCovariateHazard::FixedCovariateHazard(HazardPtr base, std::vector<double> x0)
    : base_(std::move(base)), x0_(std::move(x0)) {}

nlohmann::json FixedCovariateHazard::to_json() const {
  return {{"type", "fixed_covariate"}, {"x", x0_}, {"base", base_->to_json()}};
}

HazardPtr hazard_from_json(const nlohmann::json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "zero") return std::make_shared<ZeroHazard>();
  if (type == "marginal_step") {
    return std::make_shared<MarginalStepHazard>(j.at("times").get<std::vector<double>>(),
                                                j.at("cumulative").get<std::vector<double>>());
  }
  if (type == "proportional_step") {
    return std::make_shared<ProportionalStepHazard>(
        j.at("times").get<std::vector<double>>(), j.at("baseline").get<std::vector<double>>(),
        j.at("coefficients").get<std::vector<double>>(), j.at("center").get<std::vector<double>>());
  }
  if (type == "weibull") {
    return std::make_shared<WeibullHazard>(j.at("scale").get<double>(), j.at("shape").get<double>(),
                                           j.at("coefficients").get<std::vector<double>>());
  }
  if (type == "scaled") {
    return std::make_shared<ScaledHazard>(hazard_from_json(j.at("base")), j.at("factor").get<double>());
  }
  if (type == "fixed_covariate") {
    return std::make_shared<FixedCovariateHazard>(hazard_from_json(j.at("base")),
                                                  j.at("x").get<std::vector<double>>());
  }
  if (type == "forest") return ForestHazard::from_json(j);
  throw SchemaError("unknown hazard type '" + type + "'");
}

}  // namespace jssl
