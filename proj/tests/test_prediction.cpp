#include <algorithm>
#include <cmath>
#include <memory>

#include <doctest.h>

#include "jssl/error.hpp"
#include "jssl/prediction.hpp"
#include "support.hpp"

using namespace jssl;
using jssl::testing::for_all;

namespace {

const std::vector<double> kNoX;

HazardPtr single_jump(double at, double size) {
  return std::make_shared<MarginalStepHazard>(std::vector<double>{at}, std::vector<double>{size});
}

HazardPtr zero() { return std::make_shared<ZeroHazard>(); }

HazardPtr constant_rate(double rate) { return std::make_shared<WeibullHazard>(rate, 1.0, std::vector<double>{}); }

struct Triple {
  HazardPtr l1, l2, g;
  std::vector<double> x;
  double tau;
};

Triple random_triple(Rng& rng) {
  const double tau = 1.0 + 20.0 * rng.uniform();
  return {testing::random_step_hazard(rng, 2, tau), testing::random_step_hazard(rng, 2, tau),
          testing::random_step_hazard(rng, 2, tau), testing::random_x(rng, 2), tau};
}

std::vector<double> beta(Rng& rng, std::size_t p) {
  std::vector<double> b(p);
  for (auto& v : b) v = 0.5 * rng.normal();
  return b;
}

Triple random_weibull_triple(Rng& rng) {
  const double tau = 1.0 + 20.0 * rng.uniform();
  auto weibull = [&] {
    return std::make_shared<WeibullHazard>(0.01 + 0.2 * rng.uniform(), 0.5 + 1.5 * rng.uniform(), beta(rng, 2));
  };
  auto l1 = weibull(), l2 = weibull(), g = weibull();
  return {l1, l2, g, testing::random_x(rng, 2), tau};
}

// Largest increment of L1 + L2 over their jump times.
double largest_jump(const Triple& c) {
  double worst = 0.0;
  for (const auto* h : {&c.l1, &c.l2}) {
    for (double s : (*h)->jump_times()) {
      const double da = c.l1->evaluate(s, c.x) - c.l1->evaluate_before(s, c.x) + c.l2->evaluate(s, c.x) -
                        c.l2->evaluate_before(s, c.x);
      worst = std::max(worst, da);
    }
  }
  return worst;
}

}  // namespace

TEST_SUITE("prediction") {
  TEST_CASE("single jump of 0.5 gives cause-1 risk 0.5") {
    const RiskPredictionModel m(single_jump(1.0, 0.5), zero(), zero(), 2.0);
    CHECK(m.predict(2.0, kNoX, 1) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(m.predict(0.5, kNoX, 1) == 0.0);
    CHECK(m.predict(2.0, kNoX, 2) == 0.0);
  }

  TEST_CASE("zero hazards give zero risk") {
    const RiskPredictionModel m(zero(), zero(), zero(), 5.0);
    const auto p = m.predict_all(5.0, kNoX);
    CHECK(p.risk_cause1 == 0.0);
    CHECK(p.risk_cause2 == 0.0);
    CHECK(p.event_free_survival == 1.0);
    CHECK(p.censoring_survival == 1.0);
  }

  TEST_CASE("two unit constant hazards split the risk evenly") {
    const double r = cause_specific_risk(constant_rate(1.0), constant_rate(1.0), 10.0, kNoX, 1);
    CHECK(r == doctest::Approx(0.5 * (1.0 - std::exp(-20.0))).epsilon(1e-8));
    CHECK(r == doctest::Approx(0.4999999).epsilon(1e-7));
  }

  TEST_CASE("survival examples") {
    CHECK(event_free_survival(*single_jump(1.0, 0.5), *single_jump(2.0, 0.2), 3.0, kNoX) ==
          doctest::Approx(std::exp(-0.7)).epsilon(1e-15));
    CHECK(censoring_survival(*single_jump(1.0, std::log(2.0)), 1.0, kNoX) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(censoring_survival(*single_jump(1.0, std::log(2.0)), 0.9, kNoX) == 1.0);
  }

  TEST_CASE("risks equal the cause states of the composition without censoring") {
    for_all(501, 100, random_triple, [](const Triple& c) {
      const auto curve = compose(c.l1, c.l2, zero()).curve(c.x, c.tau);
      const RiskPredictionModel m(c.l1, c.l2, c.g, c.tau);
      const RiskPredictionModel blind(c.l1, c.l2, zero(), c.tau);
      for (int k = 0; k <= 20; ++k) {
        const double t = c.tau * (k / 20.0);
        CHECK(m.predict(t, c.x, 1) == doctest::Approx(curve->at(t, State::cause1)).epsilon(1e-12));
        CHECK(m.predict(t, c.x, 2) == doctest::Approx(curve->at(t, State::cause2)).epsilon(1e-12));
        CHECK(m.predict(t, c.x, 1) == blind.predict(t, c.x, 1));
      }
    });
  }

  TEST_CASE("invalid queries") {
    const RiskPredictionModel m(single_jump(1.0, 0.5), zero(), zero(), 2.0);
    CHECK_THROWS_AS(m.predict(1.0, kNoX, 3), InvalidConfiguration);
    CHECK_THROWS_AS(m.predict(1.0, kNoX, 0), InvalidConfiguration);
    CHECK_THROWS_AS(m.predict(2.5, kNoX, 1), OutOfRangeError);
    CHECK_THROWS_AS(m.predict(-0.1, kNoX, 1), OutOfRangeError);
    CHECK_THROWS_AS(RiskPredictionModel(nullptr, zero(), zero(), 1.0), InvalidConfiguration);
  }

  TEST_CASE("invariant: continuous risks telescope to one minus event-free survival") {
    for_all(502, 100, random_weibull_triple, [](const Triple& c) {
      const RiskPredictionModel m(c.l1, c.l2, c.g, c.tau);
      const auto p = m.predict_all(c.tau, c.x);
      CHECK(p.risk_cause1 + p.risk_cause2 == doctest::Approx(1.0 - p.event_free_survival).epsilon(1e-8).scale(1.0));
    });
  }

  TEST_CASE("invariant: product-limit step risks telescope exactly") {
    CompositionOptions pl;
    pl.product_limit = true;
    for_all(503, 100, random_triple, [&](const Triple& c) {
      if (largest_jump(c) >= 1.0) return;  // 1 - dA is not a probability
      const auto curve = compose(c.l1, c.l2, zero(), pl).curve(c.x, c.tau);
      const double r1 = cause_specific_risk(c.l1, c.l2, c.tau, c.x, 1, pl);
      const double r2 = cause_specific_risk(c.l1, c.l2, c.tau, c.x, 2, pl);
      CHECK(r1 + r2 == doctest::Approx(1.0 - curve->at(c.tau, State::at_risk)).epsilon(1e-12).scale(1.0));
    });
  }

  TEST_CASE("invariant: risks are non-decreasing in t and bounded") {
    for_all(504, 100, random_triple, [](const Triple& c) {
      const RiskPredictionModel m(c.l1, c.l2, c.g, c.tau);
      double prev1 = 0.0, prev2 = 0.0;
      for (int k = 0; k <= 50; ++k) {
        const auto p = m.predict_all(c.tau * (k / 50.0), c.x);
        CHECK(p.risk_cause1 >= prev1);
        CHECK(p.risk_cause2 >= prev2);
        CHECK(p.risk_cause1 >= 0.0);
        // each jump contributes exp(-a) da >= exp(-a) - exp(-a - da)
        CHECK(p.risk_cause1 + p.risk_cause2 >= 1.0 - p.event_free_survival - 1e-12);
        prev1 = p.risk_cause1;
        prev2 = p.risk_cause2;
      }
    });
  }
}
