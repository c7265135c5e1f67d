#include "jssl/elastic_net.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "jssl/cox.hpp"
#include "jssl/error.hpp"

namespace jssl {

namespace {

constexpr double kMinPathAlpha = 1e-3;

double soft_threshold(double z, double gamma) {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

// Standardized, constant-column-free penalized Cox problem.
class PenalizedCox {
 public:
  PenalizedCox(const Dataset& d, Target target) : standardization_(standardize(d)) {
    for (std::size_t j = 0; j < d.dimension(); ++j) {
      if (standardization_.scale[j] > 0.0) active_.push_back(j);
    }
    const Eigen::MatrixXd full = standardization_.standardized(d);
    Eigen::MatrixXd design(full.rows(), static_cast<Eigen::Index>(active_.size()));
    for (std::size_t k = 0; k < active_.size(); ++k) {
      design.col(static_cast<Eigen::Index>(k)) = full.col(static_cast<Eigen::Index>(active_[k]));
    }
    problem_ = std::make_unique<CoxProblem>(d, target, std::move(design));
    n_ = static_cast<double>(d.size());
    dimension_ = d.dimension();
  }

  std::size_t active_count() const { return active_.size(); }
  std::size_t event_count() const { return problem_->event_count(); }

  double lambda_max(double alpha) const {
    if (active_.empty() || event_count() == 0) return 0.0;
    const Eigen::VectorXd eta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(problem_->size()));
    Eigen::VectorXd score;
    Eigen::VectorXd curvature;
    problem_->linear_predictor_derivatives(eta, score, curvature);
    const Eigen::VectorXd gradient = problem_->design().transpose() * score / n_;
    return gradient.cwiseAbs().maxCoeff() / std::max(alpha, kMinPathAlpha);
  }

  double objective(const Eigen::VectorXd& beta, double alpha, double lambda) const {
    return -problem_->loglik(beta) / n_ +
           lambda * (alpha * beta.lpNorm<1>() + 0.5 * (1.0 - alpha) * beta.squaredNorm());
  }

  // Iterated quadratic approximation with cyclic coordinate descent, warm-started at `beta`.
  void solve(Eigen::VectorXd& beta, double alpha, double lambda, const ElasticNetOptions& opts) const {
    if (active_.empty() || event_count() == 0) return;
    const Eigen::MatrixXd& z = problem_->design();
    const Eigen::Index n = z.rows();
    const Eigen::Index p = z.cols();
    double current = objective(beta, alpha, lambda);
    Eigen::VectorXd score;
    Eigen::VectorXd curvature;
    for (int outer = 0; outer < opts.max_iter; ++outer) {
      const Eigen::VectorXd eta = z * beta;
      problem_->linear_predictor_derivatives(eta, score, curvature);
      Eigen::VectorXd weight = curvature.cwiseMax(1e-10);
      Eigen::VectorXd residual = score.cwiseQuotient(weight);
      Eigen::VectorXd candidate = beta;
      Eigen::VectorXd column_curvature(p);
      for (Eigen::Index j = 0; j < p; ++j) {
        column_curvature[j] = weight.dot(z.col(j).cwiseAbs2()) / static_cast<double>(n);
      }
      for (int inner = 0; inner < opts.max_iter; ++inner) {
        double max_change = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
          const double old = candidate[j];
          const double g = z.col(j).cwiseProduct(weight).dot(residual) / static_cast<double>(n) +
                           column_curvature[j] * old;
          const double updated =
              soft_threshold(g, lambda * alpha) / (column_curvature[j] + lambda * (1.0 - alpha));
          if (updated != old) {
            residual -= z.col(j) * (updated - old);
            candidate[j] = updated;
            max_change = std::max(max_change, column_curvature[j] * (updated - old) * (updated - old));
          }
        }
        if (max_change < 1e-14) break;
      }
      // Step halving keeps the penalized objective monotone.
      Eigen::VectorXd step = candidate - beta;
      double next = objective(candidate, alpha, lambda);
      for (int h = 0; h < 10 && !(next <= current); ++h) {
        step *= 0.5;
        candidate = beta + step;
        next = objective(candidate, alpha, lambda);
      }
      if (!(next <= current)) return;
      const double change = current - next;
      const double coefficient_change = step.cwiseAbs().maxCoeff();
      beta = candidate;
      current = next;
      if (change <= opts.tol * std::abs(current) && coefficient_change < 1e-8) return;
      if (coefficient_change == 0.0) return;
    }
  }

  std::vector<double> original_scale(const Eigen::VectorXd& beta) const {
    std::vector<double> out(dimension_, 0.0);
    for (std::size_t k = 0; k < active_.size(); ++k) {
      out[active_[k]] = beta[static_cast<Eigen::Index>(k)] / standardization_.scale[active_[k]];
    }
    return out;
  }

  Eigen::VectorXd zero() const { return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(active_.size())); }

 private:
  Standardization standardization_;
  std::vector<std::size_t> active_;
  std::unique_ptr<CoxProblem> problem_;
  double n_ = 0.0;
  std::size_t dimension_ = 0;
};

void check_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidConfiguration("elastic-net alpha must lie in [0, 1]");
}

// Log partial likelihood of original-scale coefficients on d.
double loglik_at(const Dataset& d, Target target, const std::vector<double>& beta,
                 const std::vector<double>& center) {
  Eigen::MatrixXd design(static_cast<Eigen::Index>(d.size()), static_cast<Eigen::Index>(d.dimension()));
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto x = d.covariates(i);
    for (std::size_t j = 0; j < x.size(); ++j) {
      design(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x[j] - center[j];
    }
  }
  const CoxProblem problem(d, target, std::move(design));
  return problem.loglik(Eigen::Map<const Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size())));
}

std::vector<double> lambda_path(double lambda_max, const ElasticNetOptions& opts) {
  std::vector<double> lambdas;
  if (lambda_max <= 0.0) return {0.0};
  const int size = std::max(opts.lambda_grid_size, 1);
  for (int k = 0; k < size; ++k) {
    const double fraction = size == 1 ? 0.0 : static_cast<double>(k) / (size - 1);
    lambdas.push_back(lambda_max * std::pow(opts.lambda_min_ratio, fraction));
  }
  return lambdas;
}

}  // namespace

double cox_lambda_max(const Dataset& d, Target target, double alpha) {
  check_alpha(alpha);
  return PenalizedCox(d, target).lambda_max(alpha);
}

std::vector<std::vector<double>> penalized_cox_path(const Dataset& d, Target target, double alpha,
                                                    const std::vector<double>& lambdas,
                                                    const ElasticNetOptions& opts) {
  check_alpha(alpha);
  const PenalizedCox problem(d, target);
  Eigen::VectorXd beta = problem.zero();
  std::vector<std::vector<double>> out;
  out.reserve(lambdas.size());
  for (double lambda : lambdas) {
    if (lambda < 0.0) throw InvalidConfiguration("lambda must be non-negative");
    problem.solve(beta, alpha, lambda, opts);
    out.push_back(problem.original_scale(beta));
  }
  return out;
}

std::vector<double> fit_penalized_cox(const Dataset& d, Target target, double alpha, double lambda,
                                      const ElasticNetOptions& opts) {
  return penalized_cox_path(d, target, alpha, {lambda}, opts).front();
}

ElasticNetFit fit_cox_elastic_net_model(const Dataset& d, Target target, const ElasticNetOptions& opts) {
  check_alpha(opts.alpha);
  if (d.empty()) throw FitError("cannot fit an elastic-net Cox model to an empty dataset");
  if (d.dimension() == 0) throw FitError("elastic-net Cox regression needs at least one covariate");
  if (opts.lambda_grid_size < 1 || opts.inner_folds < 2) {
    throw InvalidConfiguration("elastic net needs lambda_grid_size >= 1 and inner_folds >= 2");
  }

  const PenalizedCox full(d, target);
  const Standardization s = standardize(d);

  ElasticNetFit fit;
  if (full.event_count() == 0) {
    fit.coefficients.assign(d.dimension(), 0.0);
    fit.hazard = breslow_hazard(d, target, fit.coefficients, s.mean);
    return fit;
  }
  const double lambda_max = full.lambda_max(opts.alpha);
  fit.lambdas = lambda_path(lambda_max, opts);
  if (lambda_max <= 0.0) {
    fit.coefficients.assign(d.dimension(), 0.0);
    fit.cv_loglik.assign(1, 0.0);
    fit.hazard = breslow_hazard(d, target, fit.coefficients, s.mean);
    return fit;
  }

  const std::size_t folds =
      std::min<std::size_t>(static_cast<std::size_t>(opts.inner_folds), std::min(d.size(), full.event_count()));
  fit.cv_loglik.assign(fit.lambdas.size(), 0.0);
  if (folds >= 2) {
    const FoldPlan plan = make_folds(d.size(), folds, 1, opts.seed);
    // terms[k][l]: the fold's cross-validated likelihood contribution; events[k]: held-out events.
    std::vector<std::vector<double>> terms(folds, std::vector<double>(fit.lambdas.size(), 0.0));
    std::vector<double> events(folds, 0.0);
    for (std::size_t k = 1; k <= folds; ++k) {
      const auto held_out = plan.test_rows(0, static_cast<int>(k));
      for (std::size_t i : held_out) events[k - 1] += is_target_event(d.status(i), target) ? 1.0 : 0.0;
      const Dataset train = d.subset(plan.train_rows(0, static_cast<int>(k)));
      const auto path = penalized_cox_path(train, target, opts.alpha, fit.lambdas, opts);
      for (std::size_t l = 0; l < path.size(); ++l) {
        const double term = loglik_at(d, target, path[l], s.mean) - loglik_at(train, target, path[l], s.mean);
        terms[k - 1][l] = term;
        fit.cv_loglik[l] += term;
      }
    }
    const std::size_t best = static_cast<std::size_t>(std::max_element(fit.cv_loglik.begin(), fit.cv_loglik.end()) -
                                                      fit.cv_loglik.begin());
    fit.selected = best;
    const double total_events = std::accumulate(events.begin(), events.end(), 0.0);
    if (opts.one_standard_error && total_events > 0.0) {
      // Deviance per held-out event, weighted by events, as in glmnet: the largest lambda whose
      // mean is within one standard error of the best one is chosen.
      const auto mean_deviance = [&](std::size_t l) { return -2.0 * fit.cv_loglik[l] / total_events; };
      double spread = 0.0;
      for (std::size_t k = 0; k < folds; ++k) {
        if (events[k] == 0.0) continue;
        const double dev = -2.0 * terms[k][best] / events[k] - mean_deviance(best);
        spread += events[k] * dev * dev;
      }
      const double se = std::sqrt(spread / total_events / static_cast<double>(folds - 1));
      for (std::size_t l = 0; l < best; ++l) {
        if (mean_deviance(l) <= mean_deviance(best) + se) {
          fit.selected = l;
          break;
        }
      }
    }
  }

  const std::vector<double> chosen(fit.lambdas.begin(), fit.lambdas.begin() + fit.selected + 1);
  fit.coefficients = penalized_cox_path(d, target, opts.alpha, chosen, opts).back();
  fit.hazard = breslow_hazard(d, target, fit.coefficients, s.mean);
  return fit;
}

HazardPtr fit_cox_elastic_net(const Dataset& d, Target target, const ElasticNetOptions& opts) {
  return fit_cox_elastic_net_model(d, target, opts).hazard;
}

}  // namespace jssl
