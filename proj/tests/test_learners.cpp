#include <cmath>
#include <vector>

#include <doctest.h>

#include "jssl/cox.hpp"
#include "jssl/elastic_net.hpp"
#include "jssl/error.hpp"
#include "jssl/forest.hpp"
#include "jssl/learners.hpp"
#include "jssl/nelson_aalen.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace jssl;
using jssl::testing::for_all;

namespace {

const std::vector<double> kNoX;

Dataset make(const std::vector<double>& times, const std::vector<int>& statuses,
             const std::vector<std::vector<double>>& x = {}) {
  const std::size_t p = x.empty() ? 0 : x.front().size();
  Dataset d(testing::names(p));
  for (std::size_t i = 0; i < times.size(); ++i) d.add(times[i], statuses[i], x.empty() ? kNoX : x[i]);
  return d;
}

// Fits one learner of every kind with small, fast settings.
std::vector<LearnerSpec> all_kinds() {
  std::vector<LearnerSpec> specs(4);
  specs[0].kind = LearnerKind::nelson_aalen;
  specs[1].kind = LearnerKind::cox;
  specs[2].kind = LearnerKind::cox_elastic_net;
  specs[2].hyperparameters = {{"alpha", 1.0}, {"lambda_grid_size", 10}, {"inner_folds", 3}};
  specs[3].kind = LearnerKind::survival_forest;
  specs[3].hyperparameters = {{"n_trees", 10}, {"min_node_size", 8}};
  for (auto& s : specs) s.name = to_string(s.kind);
  return specs;
}

// A 1-covariate dataset of size n with a moderate effect and some censoring.
Dataset cox_dataset(Rng& rng, std::size_t n, bool binary) {
  Dataset d({"x"});
  for (std::size_t i = 0; i < n; ++i) {
    const double x = binary ? (rng.uniform() < 0.5 ? 1.0 : 0.0) : rng.normal();
    const double t = -std::log(rng.uniform_open()) * std::exp(-0.7 * x);
    const double c = -std::log(rng.uniform_open()) * 1.5;
    d.add(std::min(t, c), t <= c ? 1 : 0, {&x, 1});
  }
  return d;
}

void oracle_inputs(const Dataset& d, std::vector<double>& time, std::vector<int>& event, std::vector<double>& x) {
  time.clear();
  event.clear();
  x.clear();
  for (std::size_t i = 0; i < d.size(); ++i) {
    time.push_back(d.time(i));
    event.push_back(d.status(i) == kCause1 ? 1 : 0);
    x.push_back(d.covariates(i)[0]);
  }
}

}  // namespace

TEST_SUITE("hazard_learners") {
  TEST_CASE("Nelson-Aalen hand examples") {
    const auto h = fit_nelson_aalen(make({1, 2, 3}, {1, 0, 1}), Target::cause1);
    CHECK(h->evaluate(1, kNoX) == doctest::Approx(1.0 / 3).epsilon(1e-15));
    CHECK(h->evaluate(2, kNoX) == doctest::Approx(1.0 / 3).epsilon(1e-15));
    CHECK(h->evaluate(3, kNoX) == doctest::Approx(4.0 / 3).epsilon(1e-15));
    CHECK(h->evaluate(0.5, kNoX) == 0.0);

    const auto tied = fit_nelson_aalen(make({1, 1, 2}, {1, 1, 0}), Target::cause1);
    CHECK(tied->evaluate(1, kNoX) == doctest::Approx(2.0 / 3).epsilon(1e-15));

    const auto none = fit_nelson_aalen(make({1, 2}, {0, 2}), Target::cause1);
    CHECK(none->evaluate(10, kNoX) == 0.0);
    CHECK(none->jump_times().empty());
  }

  TEST_CASE("Nelson-Aalen for censoring counts status 0") {
    const auto d = make({1, 2, 3, 4}, {0, 1, 0, 2});
    const auto h = fit_nelson_aalen(d, Target::censoring);
    CHECK(h->evaluate(1, kNoX) == doctest::Approx(0.25));
    CHECK(h->evaluate(3, kNoX) == doctest::Approx(0.25 + 0.5));
  }

  TEST_CASE("Cox with max_iter 0 reproduces Nelson-Aalen bit-for-bit on the jump grid") {
    Rng rng(5);
    const auto d = testing::random_dataset(rng, 60, 3, 0.5);
    CoxOptions o;
    o.max_iter = 0;
    const auto cox = fit_cox(d, Target::cause1, o);
    const auto na = fit_nelson_aalen(d, Target::cause1);
    const auto x = testing::random_x(rng, 3);
    REQUIRE(cox->jump_times().size() == na->jump_times().size());
    for (double t : na->jump_times()) CHECK(cox->evaluate(t, x) == na->evaluate(t, kNoX));
  }

  TEST_CASE("Cox with a constant covariate has zero coefficient and the Nelson-Aalen baseline") {
    Rng rng(6);
    Dataset d({"c"});
    const double c = 3.0;
    for (int i = 0; i < 40; ++i) d.add(1.0 + rng.uniform() * 10.0, rng.uniform() < 0.6 ? 1 : 0, {&c, 1});
    const auto fit = fit_cox_model(d, Target::cause1);
    CHECK(fit.coefficients[0] == 0.0);
    const auto na = fit_nelson_aalen(d, Target::cause1);
    for (double t : na->jump_times()) CHECK(fit.hazard->evaluate(t, std::vector<double>{c}) == doctest::Approx(na->evaluate(t, kNoX)).epsilon(1e-12));
  }

  TEST_CASE("Cox estimate matches a grid search on a 5-observation binary dataset") {
    const auto d = make({1, 2, 3, 4, 5}, {1, 1, 0, 1, 1}, {{1}, {0}, {1}, {1}, {0}});
    std::vector<double> time, x;
    std::vector<int> event;
    oracle_inputs(d, time, event, x);
    const double grid = oracle::grid_search_beta(time, event, x);
    const auto fit = fit_cox_model(d, Target::cause1);
    CHECK(std::abs(fit.coefficients[0] - grid) <= 1e-3);
  }

  TEST_CASE("Cox estimate matches a grid search on random datasets") {
    for_all(
        201, 5, [](Rng& rng) { return cox_dataset(rng, 30, false); },
        [](const Dataset& d) {
          std::vector<double> time, x;
          std::vector<int> event;
          oracle_inputs(d, time, event, x);
          const double grid = oracle::grid_search_beta(time, event, x, -10, 10, 1e-3);
          const auto fit = fit_cox_model(d, Target::cause1);
          CHECK(std::abs(fit.coefficients[0] - grid) <= 1e-3);
          // the library likelihood agrees with the oracle's double sum
          const double b = fit.coefficients[0];
          CHECK(cox_partial_likelihood(d, Target::cause1, std::vector<double>{b}, false).loglik ==
                doctest::Approx(oracle::cox_loglik_1d(time, event, x, b)).epsilon(1e-12));
        });
  }

  TEST_CASE("Cox divergence is reported as a fit error") {
    // perfect separation: the larger covariate always fails first
    const auto d = make({1, 2, 3, 4, 5, 6}, {1, 1, 1, 0, 0, 0}, {{3}, {2}, {1}, {0}, {-1}, {-2}});
    CHECK_THROWS_AS(fit_cox(d, Target::cause1), FitError);
  }

  TEST_CASE("Cox models without events have a zero hazard") {
    const auto d = make({1, 2, 3}, {0, 0, 2}, {{1}, {2}, {0}});
    const auto cox = fit_cox_model(d, Target::cause1);
    CHECK(cox.coefficients == std::vector<double>{0.0});
    CHECK(cox.hazard->evaluate(10.0, d.covariates(0)) == 0.0);
    const auto net = fit_cox_elastic_net_model(d, Target::cause1);
    CHECK(net.coefficients == std::vector<double>{0.0});
    CHECK(net.hazard->evaluate(10.0, d.covariates(1)) == 0.0);
  }

  TEST_CASE("invariant: Cox gradient and Hessian match central differences") {
    for_all(
        202, 20, [](Rng& rng) { return testing::random_dataset(rng, 20, 3, 0.0); },
        [](const Dataset& d) {
          Rng rng(d.size() + 17);
          std::vector<double> beta = testing::random_x(rng, 3);
          for (auto& b : beta) b *= 0.3;
          const auto pl = cox_partial_likelihood(d, Target::cause1, beta, true);
          const double h = 1e-5;
          for (std::size_t j = 0; j < 3; ++j) {
            auto up = beta, down = beta;
            up[j] += h;
            down[j] -= h;
            const auto pu = cox_partial_likelihood(d, Target::cause1, up, true);
            const auto pd = cox_partial_likelihood(d, Target::cause1, down, true);
            const double fd = (pu.loglik - pd.loglik) / (2 * h);
            const double g = pl.gradient(static_cast<Eigen::Index>(j));
            CHECK(std::abs(fd - g) <= 1e-4 * std::max(1.0, std::abs(g)));
            for (std::size_t k = 0; k < 3; ++k) {
              const auto jj = static_cast<Eigen::Index>(j), kk = static_cast<Eigen::Index>(k);
              const double fdh = (pu.gradient(kk) - pd.gradient(kk)) / (2 * h);
              CHECK(std::abs(fdh - pl.hessian(kk, jj)) <= 1e-4 * std::max(1.0, std::abs(pl.hessian(kk, jj))));
            }
          }
        });
  }

  TEST_CASE("invariant: Cox log partial likelihood never decreases across accepted steps") {
    for_all(
        203, 30, [](Rng& rng) { return testing::random_dataset(rng, 40 + rng.uniform_index(60), 2, 0.25); },
        [](const Dataset& d) {
          const auto fit = fit_cox_model(d, Target::cause1);
          REQUIRE(!fit.loglik_trace.empty());
          for (std::size_t k = 1; k < fit.loglik_trace.size(); ++k) CHECK(fit.loglik_trace[k] >= fit.loglik_trace[k - 1]);
        });
  }

  TEST_CASE("invariant: Cox with all-zero covariates equals Nelson-Aalen") {
    for_all(
        204, 20,
        [](Rng& rng) {
          auto src = testing::random_dataset(rng, 30 + rng.uniform_index(40), 0, 0.5);
          Dataset d({"z1", "z2"});
          const std::vector<double> zero(2, 0.0);
          for (std::size_t i = 0; i < src.size(); ++i) d.add(src.time(i), src.status(i), zero);
          return d;
        },
        [](const Dataset& d) {
          const auto cox = fit_cox(d, Target::cause1);
          const auto na = fit_nelson_aalen(d, Target::cause1);
          const std::vector<double> x{0.0, 0.0};
          for (double t : na->jump_times()) CHECK(cox->evaluate(t, x) == doctest::Approx(na->evaluate(t, kNoX)).epsilon(1e-14));
        });
  }

  TEST_CASE("elastic net at lambda_max is the zero model") {
    Rng rng(7);
    const auto d = testing::random_dataset(rng, 80, 3);
    const double lmax = cox_lambda_max(d, Target::cause1, 1.0);
    CHECK(lmax > 0.0);
    const auto beta = fit_penalized_cox(d, Target::cause1, 1.0, lmax);
    for (double b : beta) CHECK(b == 0.0);
    const auto above = fit_penalized_cox(d, Target::cause1, 0.5, 2 * cox_lambda_max(d, Target::cause1, 0.5));
    for (double b : above) CHECK(b == 0.0);
  }

  TEST_CASE("ridge with vanishing lambda approaches the unpenalized Cox fit") {
    Rng rng(8);
    Dataset d({"x1", "x2"});
    for (int i = 0; i < 50; ++i) {
      const std::vector<double> x{rng.normal(), rng.normal()};
      const double t = -std::log(rng.uniform_open()) * std::exp(-0.8 * x[0] + 0.4 * x[1]);
      d.add(t, rng.uniform() < 0.8 ? 1 : 0, x);
    }
    const auto cox = fit_cox_model(d, Target::cause1);
    ElasticNetOptions o;
    o.tol = 1e-14;
    o.max_iter = 100000;
    const auto ridge = fit_penalized_cox(d, Target::cause1, 0.0, 1e-8, o);
    for (std::size_t j = 0; j < 2; ++j) CHECK(std::abs(ridge[j] - cox.coefficients[j]) <= 1e-3);
  }

  TEST_CASE("lasso zeroes a pure-noise covariate in most seeds") {
    int zeroed = 0;
    int kept = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      Rng rng(derive_seed(2100, {seed}));
      Dataset d({"signal", "noise"});
      for (int i = 0; i < 200; ++i) {
        const std::vector<double> x{rng.normal(), rng.normal()};
        const double t = -std::log(rng.uniform_open()) * std::exp(-1.0 * x[0]);
        const double c = -std::log(rng.uniform_open()) * 2.0;
        d.add(std::min(t, c), t <= c ? 1 : 0, x);
      }
      ElasticNetOptions o;
      o.alpha = 1.0;
      o.seed = seed;
      const auto fit = fit_cox_elastic_net_model(d, Target::cause1, o);
      if (fit.coefficients[1] == 0.0) ++zeroed;
      if (fit.coefficients[0] != 0.0) ++kept;
    }
    MESSAGE("noise coefficient exactly zero in " << zeroed << " of 50 seeds; signal kept in " << kept);
    CHECK(zeroed >= 40);
    CHECK(kept == 50);
  }

  TEST_CASE("elastic net without covariate signal returns the Nelson-Aalen model") {
    Dataset d({"c"});
    const double c = 1.0;
    for (int i = 0; i < 30; ++i) d.add(1.0 + i, i % 3 ? 1 : 0, {&c, 1});
    const auto h = fit_cox_elastic_net(d, Target::cause1);
    const auto na = fit_nelson_aalen(d, Target::cause1);
    for (double t : na->jump_times()) CHECK(h->evaluate(t, std::vector<double>{c}) == doctest::Approx(na->evaluate(t, kNoX)));
  }

  TEST_CASE("forest of root-only trees equals Nelson-Aalen") {
    Rng rng(9);
    const auto d = testing::random_dataset(rng, 50, 3, 0.5);
    ForestOptions o;
    o.n_trees = 5;
    o.min_node_size = 50;
    o.bootstrap = false;
    const auto forest = fit_survival_forest(d, Target::cause1, o);
    const auto na = fit_nelson_aalen(d, Target::cause1);
    for (int k = 0; k < 10; ++k) {
      const auto x = testing::random_x(rng, 3);
      for (double t : {0.0, 0.5, 1.0, 3.0, 7.5, 20.0, 100.0}) {
        CHECK(forest->evaluate(t, x) == doctest::Approx(na->evaluate(t, kNoX)).epsilon(1e-14));
      }
    }
  }

  TEST_CASE("forest on constant covariates equals Nelson-Aalen") {
    Rng rng(10);
    Dataset d({"a", "b"});
    const std::vector<double> x{1.0, 2.0};
    for (int i = 0; i < 60; ++i) d.add(0.5 + rng.uniform() * 10, rng.uniform() < 0.7 ? 1 : 0, x);
    ForestOptions o;
    o.n_trees = 3;
    o.bootstrap = false;
    const auto forest = fit_survival_forest(d, Target::cause1, o);
    const auto na = fit_nelson_aalen(d, Target::cause1);
    for (double t : na->jump_times()) CHECK(forest->evaluate(t, x) == doctest::Approx(na->evaluate(t, kNoX)).epsilon(1e-14));
  }

  TEST_CASE("forest is deterministic given its seed") {
    Rng rng(11);
    const auto d = testing::random_dataset(rng, 120, 4);
    ForestOptions o;
    o.n_trees = 8;
    o.seed = 42;
    const auto a = fit_survival_forest(d, Target::cause1, o);
    const auto b = fit_survival_forest(d, Target::cause1, o);
    o.seed = 43;
    const auto c = fit_survival_forest(d, Target::cause1, o);
    bool differs = false;
    for (int k = 0; k < 20; ++k) {
      const auto x = testing::random_x(rng, 4);
      for (double t = 0; t <= 30; t += 1.5) {
        CHECK(a->evaluate(t, x) == b->evaluate(t, x));
        differs = differs || a->evaluate(t, x) != c->evaluate(t, x);
      }
    }
    CHECK(differs);
  }

  TEST_CASE("learner specs validate hyperparameters and round-trip through JSON") {
    auto spec = LearnerSpec::from_json({{"kind", "cox_elastic_net"}, {"target", "censoring"},
                                        {"hyperparameters", {{"alpha", 1.0}}}, {"name", "lasso"}});
    CHECK(spec.kind == LearnerKind::cox_elastic_net);
    CHECK(spec.target == Target::censoring);
    const auto back = LearnerSpec::from_json(spec.to_json());
    CHECK(back.name == "lasso");
    CHECK(back.hyperparameters == spec.hyperparameters);
    CHECK_THROWS_AS(LearnerSpec::from_json({{"kind", "cox"}, {"hyperparameters", {{"alpha", 1}}}}), InvalidConfiguration);
    CHECK_THROWS_AS(LearnerSpec::from_json({{"kind", "boosting"}}), InvalidConfiguration);
    CHECK_THROWS_AS(
        LearnerSpec::from_json({{"kind", "cox_elastic_net"}, {"hyperparameters", {{"alpha", 1.5}}}}),
        InvalidConfiguration);
  }

  TEST_CASE("fitted hazards survive serialization") {
    Rng rng(12);
    const auto d = testing::random_dataset(rng, 80, 2, 0.5);
    for (const auto& spec : all_kinds()) {
      const auto h = make_learner(spec)->fit(d, Target::cause1, 3);
      const auto back = hazard_from_json(h->to_json());
      for (int k = 0; k < 5; ++k) {
        const auto x = testing::random_x(rng, 2);
        for (double t = 0; t <= 25; t += 0.7) CHECK(back->evaluate(t, x) == h->evaluate(t, x));
      }
    }
  }

  TEST_CASE("invariant: fitted hazards are monotone, right-continuous, zero at 0 and finite") {
    for_all(
        205, 12, [](Rng& rng) { return testing::random_dataset(rng, 60 + rng.uniform_index(80), 3, 0.25); },
        [](const Dataset& d) {
          double tau = 0.0;
          for (double t : d.times()) tau = std::max(tau, t);
          Rng rng(d.size());
          for (const auto& spec : all_kinds()) {
            for (Target target : {Target::cause1, Target::cause2, Target::censoring}) {
              INFO(spec.name << " target " << to_string(target));
              const auto h = make_learner(spec)->fit(d, target, 7);
              for (int k = 0; k < 20; ++k) {
                const auto x = testing::random_x(rng, 3);
                CHECK(h->evaluate(0.0, x) == 0.0);
                double prev = 0.0;
                for (int g = 0; g <= 200; ++g) {
                  const double t = tau * g / 200.0;
                  const double v = h->evaluate(t, x);
                  CHECK(std::isfinite(v));
                  CHECK(v >= prev);
                  prev = v;
                }
                // right-continuity and the increment identity at every jump
                const auto incs = h->increments(x);
                double sum = 0.0;
                for (const auto& inc : incs) {
                  CHECK(inc.delta >= 0.0);
                  sum += inc.delta;
                  CHECK(h->evaluate(inc.time, x) == doctest::Approx(sum).epsilon(1e-12));
                  CHECK(h->evaluate(inc.time + 1e-9, x) == h->evaluate(inc.time, x));
                  CHECK(h->evaluate_before(inc.time, x) == doctest::Approx(sum - inc.delta).epsilon(1e-12));
                }
              }
            }
          }
        });
  }

  TEST_CASE("invariant: fitting censoring equals fitting cause 1 on role-reversed data") {
    for_all(
        206, 8, [](Rng& rng) { return testing::random_dataset(rng, 60 + rng.uniform_index(60), 3, 0.25); },
        [](const Dataset& d) {
          const auto reversed = reverse_roles(d);
          Rng rng(d.size() + 1);
          for (const auto& spec : all_kinds()) {
            INFO(spec.name);
            const auto learner = make_learner(spec);
            const auto a = learner->fit(d, Target::censoring, 99);
            const auto b = learner->fit(reversed, Target::cause1, 99);
            for (int k = 0; k < 10; ++k) {
              const auto x = testing::random_x(rng, 3);
              for (double t = 0; t <= 40; t += 0.37) CHECK(a->evaluate(t, x) == b->evaluate(t, x));
            }
          }
        });
  }
}
