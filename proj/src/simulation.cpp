#include "jssl/simulation.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <numeric>

#include "jssl/error.hpp"

namespace jssl {

namespace {

constexpr double kInfinity = std::numeric_limits<double>::infinity();

double dot(const std::vector<double>& beta, std::span<const double> x) {
  double s = 0.0;
  for (std::size_t j = 0; j < beta.size(); ++j) s += beta[j] * x[j];
  return s;
}

const char* kind_name(CovariateSpec::Kind k) {
  switch (k) {
    case CovariateSpec::Kind::gaussian: return "gaussian";
    case CovariateSpec::Kind::bernoulli: return "bernoulli";
    case CovariateSpec::Kind::categorical: return "categorical";
  }
  return "?";
}

void check_weibull(const WeibullSpec& w, const char* what, std::size_t p, bool allow_zero_scale) {
  const bool scale_ok = allow_zero_scale ? w.scale >= 0.0 : w.scale > 0.0;
  if (!scale_ok || !std::isfinite(w.scale)) {
    throw InvalidConfiguration(std::string(what) + " scale must be " + (allow_zero_scale ? "non-negative" : "positive"));
  }
  if (!(w.shape > 0.0) || !std::isfinite(w.shape)) throw InvalidConfiguration(std::string(what) + " shape must be positive");
  if (w.coefficients.size() != p) {
    throw InvalidConfiguration(std::string(what) + " has " + std::to_string(w.coefficients.size()) +
                               " coefficients for " + std::to_string(p) + " covariates");
  }
}

// One latent draw; the order of RNG calls is part of the reproducibility contract.
LatentRecord draw_record(const SimulationScenario& s, const std::vector<double>& censor_beta, Rng& rng) {
  LatentRecord r;
  r.covariates.resize(s.dimension());
  for (std::size_t j = 0; j < s.dimension(); ++j) r.covariates[j] = s.covariates[j].draw(rng);
  const double t1 = invert_weibull(rng.uniform_open(), s.cause1.scale, s.cause1.shape, dot(s.cause1.coefficients, r.covariates));
  double t2 = kInfinity;
  if (s.cause2) t2 = invert_weibull(rng.uniform_open(), s.cause2->scale, s.cause2->shape, dot(s.cause2->coefficients, r.covariates));
  const double uc = rng.uniform_open();
  r.censor_time = s.censoring.scale > 0.0
                      ? invert_weibull(uc, s.censoring.scale, s.censoring.shape, dot(censor_beta, r.covariates))
                      : kInfinity;
  r.event_time = std::min(t1, t2);
  r.cause = t2 < t1 ? kCause2 : kCause1;
  const double admin = s.admin_time();
  r.observed.covariates = r.covariates;
  if (r.event_time <= r.censor_time && r.event_time <= admin) {
    r.observed.time = r.event_time;
    r.observed.status = r.cause;
  } else {
    r.observed.time = std::min(r.censor_time, admin);
    r.observed.status = kCensored;
  }
  return r;
}

}  // namespace

double CovariateSpec::draw(Rng& rng) const {
  switch (kind) {
    case Kind::gaussian: return mean + sd * rng.normal();
    case Kind::bernoulli: return rng.uniform() < p ? 1.0 : 0.0;
    case Kind::categorical: {
      const double u = rng.uniform();
      double acc = 0.0;
      for (std::size_t k = 0; k < probabilities.size(); ++k) {
        acc += probabilities[k];
        if (u < acc) return values.empty() ? static_cast<double>(k) : values[k];
      }
      const std::size_t last = probabilities.size() - 1;
      return values.empty() ? static_cast<double>(last) : values[last];
    }
  }
  return 0.0;
}

void CovariateSpec::validate() const {
  const std::string where = "covariate '" + name + "'";
  switch (kind) {
    case Kind::gaussian:
      if (!(sd >= 0.0) || !std::isfinite(mean) || !std::isfinite(sd)) throw InvalidConfiguration(where + ": sd must be >= 0");
      break;
    case Kind::bernoulli:
      if (!(p >= 0.0 && p <= 1.0)) throw InvalidConfiguration(where + ": p must lie in [0, 1]");
      break;
    case Kind::categorical: {
      if (probabilities.empty()) throw InvalidConfiguration(where + ": categorical needs probabilities");
      if (!values.empty() && values.size() != probabilities.size()) {
        throw InvalidConfiguration(where + ": values and probabilities differ in length");
      }
      double total = 0.0;
      for (double q : probabilities) {
        if (!(q >= 0.0)) throw InvalidConfiguration(where + ": negative probability");
        total += q;
      }
      if (std::abs(total - 1.0) > 1e-9) throw InvalidConfiguration(where + ": probabilities must sum to 1");
      break;
    }
  }
}

nlohmann::json CovariateSpec::to_json() const {
  nlohmann::json j{{"name", name}, {"distribution", kind_name(kind)}};
  switch (kind) {
    case Kind::gaussian: j["mean"] = mean; j["sd"] = sd; break;
    case Kind::bernoulli: j["p"] = p; break;
    case Kind::categorical:
      if (!values.empty()) j["values"] = values;
      j["probabilities"] = probabilities;
      break;
  }
  return j;
}

CovariateSpec CovariateSpec::from_json(const nlohmann::json& j) {
  CovariateSpec c;
  c.name = j.at("name").get<std::string>();
  const auto dist = j.at("distribution").get<std::string>();
  if (dist == "gaussian") {
    c.kind = Kind::gaussian;
    c.mean = j.value("mean", 0.0);
    c.sd = j.value("sd", 1.0);
  } else if (dist == "bernoulli") {
    c.kind = Kind::bernoulli;
    c.p = j.at("p").get<double>();
  } else if (dist == "categorical") {
    c.kind = Kind::categorical;
    c.probabilities = j.at("probabilities").get<std::vector<double>>();
    if (j.contains("values")) c.values = j.at("values").get<std::vector<double>>();
  } else {
    throw InvalidConfiguration("unknown covariate distribution '" + dist + "'");
  }
  c.validate();
  return c;
}

nlohmann::json WeibullSpec::to_json() const {
  return {{"scale", scale}, {"shape", shape}, {"coefficients", coefficients}};
}

WeibullSpec WeibullSpec::from_json(const nlohmann::json& j) {
  WeibullSpec w;
  w.scale = j.at("scale").get<double>();
  w.shape = j.at("shape").get<double>();
  w.coefficients = j.at("coefficients").get<std::vector<double>>();
  return w;
}

std::vector<std::string> SimulationScenario::covariate_names() const {
  std::vector<std::string> out;
  for (const auto& c : covariates) out.push_back(c.name);
  return out;
}

std::vector<double> SimulationScenario::censoring_coefficients() const {
  if (mode == CensoringMode::independent) return std::vector<double>(dimension(), 0.0);
  return censoring.coefficients;
}

void SimulationScenario::validate() const {
  const std::size_t p = dimension();
  for (const auto& c : covariates) c.validate();
  check_weibull(cause1, "cause1", p, false);
  if (cause2) check_weibull(*cause2, "cause2", p, false);
  check_weibull(censoring, "censoring", p, true);
  if (!(tau > 0.0)) throw InvalidConfiguration("tau must be positive");
  if (admin_censoring_time && !(*admin_censoring_time > 0.0)) {
    throw InvalidConfiguration("admin_censoring_time must be positive");
  }
}

nlohmann::json SimulationScenario::to_json() const {
  nlohmann::json j;
  j["name"] = name;
  j["tau"] = tau;
  if (admin_censoring_time) j["admin_censoring_time"] = *admin_censoring_time;
  j["covariates"] = nlohmann::json::array();
  for (const auto& c : covariates) j["covariates"].push_back(c.to_json());
  j["cause1"] = cause1.to_json();
  j["cause2"] = cause2 ? cause2->to_json() : nlohmann::json(nullptr);
  j["censoring"] = censoring.to_json();
  j["censoring"]["mode"] = mode == CensoringMode::dependent ? "dependent" : "independent";
  return j;
}

SimulationScenario SimulationScenario::from_json(const nlohmann::json& j) {
  SimulationScenario s;
  try {
    s.name = j.value("name", std::string("scenario"));
    s.tau = j.at("tau").get<double>();
    if (j.contains("admin_censoring_time") && !j["admin_censoring_time"].is_null()) {
      s.admin_censoring_time = j["admin_censoring_time"].get<double>();
    }
    for (const auto& c : j.at("covariates")) s.covariates.push_back(CovariateSpec::from_json(c));
    s.cause1 = WeibullSpec::from_json(j.at("cause1"));
    if (j.contains("cause2") && !j["cause2"].is_null()) s.cause2 = WeibullSpec::from_json(j["cause2"]);
    s.censoring = WeibullSpec::from_json(j.at("censoring"));
    const auto mode = j.at("censoring").value("mode", std::string("dependent"));
    if (mode == "dependent") s.mode = CensoringMode::dependent;
    else if (mode == "independent") s.mode = CensoringMode::independent;
    else throw InvalidConfiguration("unknown censoring mode '" + mode + "'");
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("invalid scenario: ") + e.what());
  }
  s.validate();
  return s;
}

SimulationScenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open scenario file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path + ": " + e.what());
  }
  return SimulationScenario::from_json(j);
}

void save_scenario(const std::string& path, const SimulationScenario& s) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write scenario file " + path);
  out << s.to_json().dump(2) << '\n';
}

double invert_weibull(double u, double scale, double shape, double linear_predictor) {
  if (!(u > 0.0 && u < 1.0)) throw OutOfRangeError("Weibull inversion needs u in (0, 1), got " + std::to_string(u));
  if (!(scale > 0.0) || !(shape > 0.0)) throw InvalidConfiguration("Weibull scale and shape must be positive");
  return std::pow(-std::log(u) / (scale * std::exp(linear_predictor)), 1.0 / shape);
}

SimulatedData simulate_dataset(const SimulationScenario& s, std::size_t n, std::uint64_t seed) {
  s.validate();
  Rng rng(derive_seed(seed, {0x51u}));
  const auto censor_beta = s.censoring_coefficients();
  SimulatedData out{Dataset(s.covariate_names()), {}};
  out.latent.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = draw_record(s, censor_beta, rng);
    out.data.add(r.observed);
    out.latent.push_back(std::move(r));
  }
  return out;
}

Dataset latent_dataset(const std::vector<LatentRecord>& latent, const std::vector<std::string>& names) {
  Dataset d(names);
  for (const auto& r : latent) d.add(r.event_time, r.cause, r.covariates);
  return d;
}

CovariateSampler covariate_sampler(const SimulationScenario& s) {
  return [specs = s.covariates](Rng& rng) {
    std::vector<double> x(specs.size());
    for (std::size_t j = 0; j < specs.size(); ++j) x[j] = specs[j].draw(rng);
    return x;
  };
}

StateOccupationModel true_state_occupation(const SimulationScenario& s, CompositionOptions options) {
  s.validate();
  const auto weibull = [](const WeibullSpec& w, std::vector<double> beta) -> HazardPtr {
    if (w.scale == 0.0) return std::make_shared<ZeroHazard>();
    return std::make_shared<WeibullHazard>(w.scale, w.shape, std::move(beta));
  };
  HazardPtr cause2 = s.cause2 ? weibull(*s.cause2, s.cause2->coefficients) : std::make_shared<ZeroHazard>();
  return StateOccupationModel(weibull(s.cause1, s.cause1.coefficients), std::move(cause2),
                              weibull(s.censoring, s.censoring_coefficients()), options);
}

namespace {

// Common random numbers for calibration: per draw, the unit-scale exponential variates
// -log(u) / exp(lp), so that T = (E / scale)^(1/shape).
struct CrnSample {
  std::vector<double> e1, e2, ec;
};

CrnSample crn_sample(const SimulationScenario& s, std::size_t n, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {0xCA1u}));
  const auto censor_beta = s.censoring_coefficients();
  CrnSample out;
  out.e1.resize(n);
  out.ec.resize(n);
  if (s.cause2) out.e2.resize(n);
  std::vector<double> x(s.dimension());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = s.covariates[j].draw(rng);
    out.e1[i] = -std::log(rng.uniform_open()) / std::exp(dot(s.cause1.coefficients, x));
    if (s.cause2) out.e2[i] = -std::log(rng.uniform_open()) / std::exp(dot(s.cause2->coefficients, x));
    out.ec[i] = -std::log(rng.uniform_open()) / std::exp(dot(censor_beta, x));
  }
  return out;
}

double event_rate(const CrnSample& c, const SimulationScenario& s, double scale1, double horizon) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < c.e1.size(); ++i) {
    const double t1 = std::pow(c.e1[i] / scale1, 1.0 / s.cause1.shape);
    const double t2 = s.cause2 ? std::pow(c.e2[i] / s.cause2->scale, 1.0 / s.cause2->shape) : kInfinity;
    if (t1 <= horizon && t1 <= t2) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(c.e1.size());
}

double censor_rate(const CrnSample& c, const SimulationScenario& s, double scale, double horizon) {
  if (scale <= 0.0) return 0.0;
  std::size_t count = 0;
  for (double e : c.ec) {
    if (std::pow(e / scale, 1.0 / s.censoring.shape) <= horizon) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(c.ec.size());
}

// Bisection in log(scale) for a rate that increases with the scale.
template <typename Rate>
double solve_scale(const Rate& rate, double start, double target, const char* what, const CalibrationOptions& opt) {
  if (!(start > 0.0)) start = 1e-3;
  double lo = start, hi = start;
  double flo = rate(lo), fhi = flo;
  if (std::abs(flo - target) <= opt.tolerance) return start;
  for (int k = 0; k < 40 && flo > target; ++k) flo = rate(lo /= 10.0);
  for (int k = 0; k < 40 && fhi < target; ++k) fhi = rate(hi *= 10.0);
  if (flo > target || fhi < target) {
    throw CalibrationError(std::string(what) + " target " + std::to_string(target) +
                           " cannot be bracketed; achievable range [" + std::to_string(flo) + ", " +
                           std::to_string(fhi) + "]");
  }
  double best = start, best_gap = kInfinity;
  for (int it = 0; it < opt.max_iterations; ++it) {
    const double mid = std::sqrt(lo * hi);
    const double f = rate(mid);
    if (std::abs(f - target) < best_gap) {
      best_gap = std::abs(f - target);
      best = mid;
    }
    if (best_gap <= opt.tolerance) break;
    (f < target ? lo : hi) = mid;
  }
  if (best_gap > 5.0 * opt.tolerance) {
    throw CalibrationError(std::string(what) + " calibration stalled " + std::to_string(best_gap) + " from target");
  }
  return best;
}

}  // namespace

MarginalRates marginal_rates(const SimulationScenario& s, double horizon, std::size_t n, std::uint64_t seed) {
  s.validate();
  if (n == 0) throw InvalidConfiguration("marginal rates need n > 0");
  const auto c = crn_sample(s, n, seed);
  return {event_rate(c, s, s.cause1.scale, horizon), censor_rate(c, s, s.censoring.scale, horizon)};
}

SimulationScenario calibrate_scenario(const CalibrationTargets& targets, const SimulationScenario& templ,
                                      const CalibrationOptions& options) {
  templ.validate();
  const auto in_unit = [](double v) { return v > 0.0 && v < 1.0; };
  if (!in_unit(targets.event_rate) || !in_unit(targets.censor_rate)) {
    throw InvalidConfiguration("calibration targets must lie in (0, 1)");
  }
  if (!(targets.horizon > 0.0)) throw InvalidConfiguration("calibration horizon must be positive");
  if (options.n == 0) throw InvalidConfiguration("calibration needs n > 0");
  const auto c = crn_sample(templ, options.n, options.seed);
  SimulationScenario out = templ;
  out.cause1.scale = solve_scale([&](double v) { return event_rate(c, templ, v, targets.horizon); },
                                 templ.cause1.scale, targets.event_rate, "event rate", options);
  out.censoring.scale = solve_scale([&](double v) { return censor_rate(c, templ, v, targets.horizon); },
                                    templ.censoring.scale, targets.censor_rate, "censoring rate", options);
  return out;
}

}  // namespace jssl
