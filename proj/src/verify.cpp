#include "jssl/verify.hpp"

#include <cmath>
#include <memory>
#include <sstream>

#include "jssl/brier.hpp"
#include "jssl/error.hpp"
#include "jssl/parallel.hpp"
#include "jssl/stats.hpp"

namespace jssl {

namespace {

std::vector<double> covariate_means(const SimulationScenario& s) {
  std::vector<double> out;
  for (const auto& c : s.covariates) {
    switch (c.kind) {
      case CovariateSpec::Kind::gaussian: out.push_back(c.mean); break;
      case CovariateSpec::Kind::bernoulli: out.push_back(c.p); break;
      case CovariateSpec::Kind::categorical: {
        double m = 0.0;
        for (std::size_t k = 0; k < c.probabilities.size(); ++k) {
          m += c.probabilities[k] * (c.values.empty() ? static_cast<double>(k) : c.values[k]);
        }
        out.push_back(m);
        break;
      }
    }
  }
  return out;
}

}  // namespace

std::vector<NamedModel> perturbed_models(const SimulationScenario& s) {
  const auto truth = true_state_occupation(s);
  const auto& l1 = truth.cause1();
  const auto& l2 = truth.cause2();
  const auto& g = truth.censoring();
  const auto mean = covariate_means(s);
  std::vector<NamedModel> out;
  // Scaling every component by c scales the state-0 hazard by c and keeps the transition shares.
  for (double c : {0.5, 0.8, 1.25, 2.0}) {
    std::ostringstream name;
    name << "state-0 hazard x" << c;
    out.push_back({name.str(), StateOccupationModel(std::make_shared<ScaledHazard>(l1, c), std::make_shared<ScaledHazard>(l2, c),
                                                    std::make_shared<ScaledHazard>(g, c))});
  }
  out.push_back({"covariate-blind", StateOccupationModel(std::make_shared<FixedCovariateHazard>(l1, mean),
                                                         std::make_shared<FixedCovariateHazard>(l2, mean),
                                                         std::make_shared<FixedCovariateHazard>(g, mean))});
  return out;
}

bool VerificationReport::properness_passed() const {
  for (const auto& c : properness) {
    if (!c.pass) return false;
  }
  return !properness.empty();
}

bool VerificationReport::excess_risk_passed() const {
  for (const auto& c : excess_risk) {
    if (!c.pass) return false;
  }
  return !excess_risk.empty();
}

VerificationReport verify_scoring_rule(const SimulationScenario& s, std::size_t m, std::uint64_t seed, bool with_norm,
                                       std::size_t jobs) {
  if (m < 2) throw InvalidConfiguration("verification needs at least two observations");
  const auto truth = true_state_occupation(s);
  const auto models = perturbed_models(s);
  const double tau = s.tau;
  const auto sim = simulate_dataset(s, m, derive_seed(seed, {1}));

  // loss[i][0] is F_P, loss[i][k + 1] the k-th perturbed model.
  std::vector<std::vector<double>> loss(m, std::vector<double>(models.size() + 1));
  parallel_for(m, jobs, [&](std::size_t i) {
    const auto& d = sim.data;
    loss[i][0] = integrated_brier(*truth.curve(d.covariates(i), tau), d.time(i), d.status(i), tau);
    for (std::size_t k = 0; k < models.size(); ++k) {
      loss[i][k + 1] = integrated_brier(*models[k].model.curve(d.covariates(i), tau), d.time(i), d.status(i), tau);
    }
  });

  VerificationReport report;
  report.observations = m;
  RunningStats base;
  for (const auto& row : loss) base.add(row[0]);
  report.risk_true = base.mean();

  const auto sampler = covariate_sampler(s);
  for (std::size_t k = 0; k < models.size(); ++k) {
    RunningStats gap;
    for (const auto& row : loss) gap.add(row[k + 1] - row[0]);
    PropernessCheck p{models[k].name, gap.mean(), gap.standard_error(), false};
    p.pass = p.gap > 3.0 * p.se;
    report.properness.push_back(p);
    if (!with_norm) continue;
    Rng rng(derive_seed(seed, {2, k}));
    const auto norm = mc_norm_squared(models[k].model, truth, sampler, m, tau, rng);
    ExcessRiskCheck e{models[k].name, p.gap, p.se, norm.estimate, norm.standard_error, false};
    e.pass = std::abs(e.excess - e.norm) <= 3.0 * std::sqrt(e.excess_se * e.excess_se + e.norm_se * e.norm_se);
    report.excess_risk.push_back(e);
  }
  return report;
}

}  // namespace jssl
