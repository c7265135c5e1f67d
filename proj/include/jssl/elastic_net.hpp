#pragma once

#include <cstdint>
#include <vector>

#include "jssl/data.hpp"
#include "jssl/hazard.hpp"
#include "jssl/learners.hpp"

namespace jssl {

struct ElasticNetOptions {
  double alpha = 0.5;  // 1 = lasso, 0 = ridge
  int lambda_grid_size = 50;
  double lambda_min_ratio = 1e-3;
  int inner_folds = 5;
  // Pick the largest lambda within one standard error of the best cross-validated
  // likelihood instead of the best itself.
  bool one_standard_error = true;
  std::uint64_t seed = 0;  // inner fold assignment
  double tol = 1e-9;       // relative objective change in the coordinate-descent loops
  int max_iter = 1000;
};

// Smallest lambda whose penalized solution is identically zero (standardized covariates,
// objective -loglik/n + lambda * (alpha |b|_1 + (1 - alpha)/2 |b|^2)). For alpha below 1e-3
// the path is anchored at alpha = 1e-3, as ridge has no finite zero-solution threshold.
double cox_lambda_max(const Dataset& d, Target target, double alpha);

// Penalized coefficients on the original scale at one lambda.
std::vector<double> fit_penalized_cox(const Dataset& d, Target target, double alpha, double lambda,
                                      const ElasticNetOptions& opts = {});

// Coefficients (original scale) along a decreasing lambda path with warm starts.
std::vector<std::vector<double>> penalized_cox_path(const Dataset& d, Target target, double alpha,
                                                    const std::vector<double>& lambdas,
                                                    const ElasticNetOptions& opts = {});

struct ElasticNetFit {
  std::vector<double> lambdas;
  std::vector<double> cv_loglik;  // summed cross-validated partial likelihood per lambda
  std::size_t selected = 0;
  std::vector<double> coefficients;
  HazardPtr hazard;
};

// Lambda chosen by inner K-fold cross-validated partial likelihood (Verweij & van
// Houwelingen form, one-standard-error rule by default), refit on all data, Breslow
// baseline at the estimate.
ElasticNetFit fit_cox_elastic_net_model(const Dataset& d, Target target, const ElasticNetOptions& opts = {});
HazardPtr fit_cox_elastic_net(const Dataset& d, Target target, const ElasticNetOptions& opts = {});

}  // namespace jssl
