#include <algorithm>
#include <cmath>
#include <filesystem>

#include <doctest.h>

#include "jssl/error.hpp"
#include "jssl/simulation.hpp"
#include "support.hpp"

using namespace jssl;
using jssl::testing::for_all;

namespace {

SimulationScenario one_covariate(double beta1, double beta_c, CensoringMode mode) {
  SimulationScenario s;
  s.name = "test";
  CovariateSpec x;
  x.name = "x";
  s.covariates = {x};
  s.cause1 = {0.05, 1.3, {beta1}};
  s.cause2 = WeibullSpec{0.02, 1.0, {-0.3}};
  s.censoring = {0.03, 1.0, {beta_c}};
  s.mode = mode;
  s.tau = 10.0;
  return s;
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i] / n;
    mb += b[i] / n;
  }
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// Kolmogorov-Smirnov distance of a sample from Uniform(0, 1).
double ks_uniform(std::vector<double> u) {
  std::sort(u.begin(), u.end());
  const double n = static_cast<double>(u.size());
  double d = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - u[i], u[i] - static_cast<double>(i) / n});
  }
  return d;
}

}  // namespace

TEST_SUITE("simulation") {
  TEST_CASE("invert_weibull examples") {
    CHECK(invert_weibull(std::exp(-1.0), 1.0, 1.0, 0.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(invert_weibull(0.5, 2.0, 2.0, 0.0) == doctest::Approx(std::sqrt(std::log(2.0) / 2.0)).epsilon(1e-15));
    CHECK(invert_weibull(0.5, 1.0, 1.0, std::log(2.0)) == doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-15));
    CHECK_THROWS_AS(invert_weibull(0.0, 1.0, 1.0, 0.0), OutOfRangeError);
    CHECK_THROWS_AS(invert_weibull(1.0, 1.0, 1.0, 0.0), OutOfRangeError);
  }

  TEST_CASE("invariant: simulated cause-1 times pass a Kolmogorov-Smirnov test") {
    auto s = one_covariate(0.7, 0.0, CensoringMode::independent);
    s.cause2.reset();
    s.censoring.scale = 0.0;
    s.admin_censoring_time = 1e300;
    const std::size_t n = 100000;
    const double critical = 1.628 / std::sqrt(static_cast<double>(n));
    int below = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto sim = simulate_dataset(s, n, seed);
      std::vector<double> u(n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto& r = sim.latent[i];
        const double lp = s.cause1.coefficients[0] * r.covariates[0];
        u[i] = 1.0 - std::exp(-s.cause1.scale * std::pow(r.event_time, s.cause1.shape) * std::exp(lp));
      }
      below += ks_uniform(u) < critical ? 1 : 0;
    }
    CHECK(below >= 19);
  }

  TEST_CASE("invariant: observed data are consistent with the latent draws") {
    for_all(
        701, 20, [](Rng& rng) { return rng.next(); },
        [](std::uint64_t seed) {
          auto s = one_covariate(0.5, -0.8, CensoringMode::dependent);
          s.admin_censoring_time = 30.0;
          const auto sim = simulate_dataset(s, 200, seed);
          REQUIRE(sim.data.size() == 200);
          for (std::size_t i = 0; i < sim.data.size(); ++i) {
            const auto& r = sim.latent[i];
            const double observed = std::min({r.event_time, r.censor_time, 30.0});
            CHECK(sim.data.time(i) == observed);
            const int status = r.event_time <= std::min(r.censor_time, 30.0) ? r.cause : 0;
            CHECK(sim.data.status(i) == status);
            CHECK(sim.data.covariates(i)[0] == r.covariates[0]);
          }
        });
  }

  TEST_CASE("simulation is deterministic in the seed") {
    const auto s = one_covariate(0.5, -0.8, CensoringMode::dependent);
    const auto a = simulate_dataset(s, 100, 42), b = simulate_dataset(s, 100, 42), c = simulate_dataset(s, 100, 43);
    bool same = true, differs = false;
    for (std::size_t i = 0; i < 100; ++i) {
      same = same && a.data.time(i) == b.data.time(i) && a.data.status(i) == b.data.status(i);
      differs = differs || a.data.time(i) != c.data.time(i);
    }
    CHECK(same);
    CHECK(differs);
  }

  TEST_CASE("independent mode drops the censoring coefficients") {
    const auto dependent = one_covariate(0.5, -1.5, CensoringMode::dependent);
    auto independent = dependent;
    independent.mode = CensoringMode::independent;
    CHECK(independent.censoring_coefficients() == std::vector<double>{0.0});
    const auto correlation_with_x = [](const SimulationScenario& s) {
      const auto sim = simulate_dataset(s, 20000, 5);
      std::vector<double> c, x;
      for (const auto& r : sim.latent) {
        c.push_back(std::log(r.censor_time));
        x.push_back(r.covariates[0]);
      }
      return correlation(c, x);
    };
    CHECK(std::abs(correlation_with_x(independent)) < 0.03);
    CHECK(correlation_with_x(dependent) > 0.5);
  }

  TEST_CASE("true state occupation matches the constant-hazard closed form") {
    SimulationScenario s;
    s.cause1 = {0.2, 1.0, {}};
    s.cause2 = WeibullSpec{0.1, 1.0, {}};
    s.censoring = {0.05, 1.0, {}};
    s.tau = 10.0;
    const auto truth = true_state_occupation(s);
    const auto curve = truth.curve({}, s.tau);
    const double total = 0.35;
    for (double t : {0.5, 2.0, 7.5, 10.0}) {
      const double gone = 1.0 - std::exp(-total * t);
      CHECK(curve->at(t, State::cause1) == doctest::Approx(0.2 / total * gone).epsilon(1e-7));
      CHECK(curve->at(t, State::cause2) == doctest::Approx(0.1 / total * gone).epsilon(1e-7));
      CHECK(curve->at(t, State::censored) == doctest::Approx(0.05 / total * gone).epsilon(1e-7));
      CHECK(curve->at(t, State::at_risk) == doctest::Approx(std::exp(-total * t)).epsilon(1e-12));
    }
  }

  TEST_CASE("invariant: true state occupations sum to one") {
    for_all(
        702, 30,
        [](Rng& rng) {
          auto s = one_covariate(rng.normal(), rng.normal(), CensoringMode::dependent);
          s.cause1.shape = 0.5 + 1.5 * rng.uniform();
          return std::make_pair(s, testing::random_x(rng, 1));
        },
        [](const std::pair<SimulationScenario, std::vector<double>>& c) {
          const auto curve = true_state_occupation(c.first).curve(c.second, c.first.tau);
          for (int k = 0; k <= 20; ++k) {
            const auto v = curve->at(c.first.tau * (k / 20.0));
            CHECK(v[0] + v[1] + v[2] + v[3] == doctest::Approx(1.0).epsilon(1e-6));
          }
        });
  }

  TEST_CASE("calibration reaches its targets with common random numbers") {
    const auto templ = one_covariate(0.5, -0.8, CensoringMode::dependent);
    CalibrationOptions options;
    options.n = 20000;
    options.seed = 9;
    const CalibrationTargets targets{0.3, 0.5, 8.0};
    const auto s = calibrate_scenario(targets, templ, options);
    const auto rates = marginal_rates(s, targets.horizon, options.n, options.seed);
    CHECK(std::abs(rates.event_rate - 0.3) <= options.tolerance);
    CHECK(std::abs(rates.censor_rate - 0.5) <= options.tolerance);
    // a fresh sample agrees to Monte Carlo accuracy
    const auto fresh = marginal_rates(s, targets.horizon, 50000, 10);
    CHECK(std::abs(fresh.event_rate - 0.3) < 0.015);
    CHECK(std::abs(fresh.censor_rate - 0.5) < 0.015);
    CHECK(s.cause1.shape == templ.cause1.shape);
    CHECK(s.censoring.coefficients == templ.censoring.coefficients);
  }

  TEST_CASE("calibration failures") {
    const auto templ = one_covariate(0.5, -0.8, CensoringMode::dependent);
    CalibrationOptions coarse;
    coarse.n = 10;  // rates move in steps of 0.1
    CHECK_THROWS_AS(calibrate_scenario({0.55, 0.5, 8.0}, templ, coarse), CalibrationError);
    CHECK_THROWS_AS(calibrate_scenario({1.5, 0.5, 8.0}, templ), InvalidConfiguration);
  }

  TEST_CASE("scenario JSON round trip and validation") {
    auto s = one_covariate(0.5, -0.8, CensoringMode::independent);
    s.admin_censoring_time = 20.0;
    const auto back = SimulationScenario::from_json(s.to_json());
    CHECK(back.to_json() == s.to_json());
    CHECK(back.mode == CensoringMode::independent);
    CHECK(back.admin_time() == 20.0);

    auto bad = s.to_json();
    bad["cause1"]["coefficients"] = {1.0, 2.0};
    CHECK_THROWS_AS(SimulationScenario::from_json(bad), InvalidConfiguration);
    bad = s.to_json();
    bad["cause1"]["scale"] = -1.0;
    CHECK_THROWS_AS(SimulationScenario::from_json(bad), InvalidConfiguration);

    const auto path = std::filesystem::temp_directory_path() / "jssl_scenario_test.json";
    save_scenario(path.string(), s);
    CHECK(load_scenario(path.string()).to_json() == s.to_json());
    std::filesystem::remove(path);
  }

  TEST_CASE("checked-in scenarios load") {
    for (const char* name : {"template", "dependent", "independent", "predictive_competing"}) {
      CAPTURE(name);
      const auto s = load_scenario(std::string(JSSL_SOURCE_DIR "/scenarios/") + name + ".json");
      CHECK(s.dimension() == 5);
      CHECK(s.tau == 36.0);
    }
  }
}
