#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "jssl/data.hpp"
#include "jssl/hazard.hpp"
#include "jssl/learners.hpp"

namespace jssl {

// Breslow-tie log partial likelihood of a cause-specific Cox model and its derivatives.
struct PartialLikelihood {
  double loglik = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;  // empty unless requested
};

// Time-sorted design for repeated partial-likelihood evaluations.
class CoxProblem {
 public:
  // `design` is n x p (row i = covariates of observation i).
  CoxProblem(const Dataset& d, Target target, Eigen::MatrixXd design);

  std::size_t size() const { return static_cast<std::size_t>(design_.rows()); }
  std::size_t dimension() const { return static_cast<std::size_t>(design_.cols()); }
  std::size_t event_count() const { return event_count_; }

  PartialLikelihood evaluate(const Eigen::VectorXd& beta, bool with_hessian) const;
  double loglik(const Eigen::VectorXd& beta) const { return evaluate(beta, false).loglik; }

  // Per-observation first and (diagonal) second derivative of the log partial likelihood
  // with respect to the linear predictor, used by the elastic-net quadratic approximation.
  void linear_predictor_derivatives(const Eigen::VectorXd& eta, Eigen::VectorXd& score,
                                    Eigen::VectorXd& curvature) const;

  const Eigen::MatrixXd& design() const { return design_; }

 private:
  // Observations in descending time order; `group_end[g]` closes tie group g.
  std::vector<std::size_t> order_;
  std::vector<std::size_t> group_end_;
  std::vector<double> group_events_;
  std::vector<char> is_event_;
  Eigen::MatrixXd design_;
  std::size_t event_count_ = 0;
};

// Log partial likelihood, gradient and Hessian on the original covariate scale.
PartialLikelihood cox_partial_likelihood(const Dataset& d, Target target, std::span<const double> beta,
                                         bool with_hessian = true);

struct CoxOptions {
  double tol = 1e-9;
  int max_iter = 50;
  int max_halvings = 10;
  // Divergence cap on |beta| in standardized units (monotone likelihood guard).
  double beta_cap = 500.0;
};

struct CoxFit {
  std::vector<double> coefficients;  // original covariate scale
  double loglik = 0.0;
  int iterations = 0;
  std::vector<double> loglik_trace;  // one entry per accepted iterate, starting at beta = 0
  HazardPtr hazard;
};

// Newton-Raphson with step halving from beta = 0; Breslow baseline at the estimate.
// Throws FitError on divergence, non-convergence or a singular information matrix.
CoxFit fit_cox_model(const Dataset& d, Target target, const CoxOptions& opts = {});
HazardPtr fit_cox(const Dataset& d, Target target, const CoxOptions& opts = {});

// Breslow hazard Lambda0(t) exp(beta'(x - center)) for given original-scale coefficients.
HazardPtr breslow_hazard(const Dataset& d, Target target, std::vector<double> beta, std::vector<double> center);

// Column means and population standard deviations of the covariates.
struct Standardization {
  std::vector<double> mean;
  std::vector<double> scale;  // 0 for constant columns
  Eigen::MatrixXd standardized(const Dataset& d) const;
};
Standardization standardize(const Dataset& d);

}  // namespace jssl
