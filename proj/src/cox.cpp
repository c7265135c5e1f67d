#include "jssl/cox.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "jssl/error.hpp"
#include "jssl/nelson_aalen.hpp"

namespace jssl {

CoxProblem::CoxProblem(const Dataset& d, Target target, Eigen::MatrixXd design) : design_(std::move(design)) {
  const std::size_t n = d.size();
  if (static_cast<std::size_t>(design_.rows()) != n) throw InvalidConfiguration("design has the wrong row count");
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), 0);
  std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) { return d.time(a) > d.time(b); });
  is_event_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    is_event_[i] = is_target_event(d.status(i), target) ? 1 : 0;
    event_count_ += is_event_[i];
  }
  std::size_t pos = 0;
  while (pos < n) {
    const double t = d.time(order_[pos]);
    double events = 0.0;
    for (; pos < n && d.time(order_[pos]) == t; ++pos) events += is_event_[order_[pos]];
    group_end_.push_back(pos);
    group_events_.push_back(events);
  }
}

PartialLikelihood CoxProblem::evaluate(const Eigen::VectorXd& beta, bool with_hessian) const {
  const Eigen::Index p = design_.cols();
  const Eigen::VectorXd eta = design_ * beta;
  const double offset = eta.size() > 0 ? eta.maxCoeff() : 0.0;

  PartialLikelihood out;
  out.gradient = Eigen::VectorXd::Zero(p);
  if (with_hessian) out.hessian = Eigen::MatrixXd::Zero(p, p);

  double s0 = 0.0;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(with_hessian ? p : 0, with_hessian ? p : 0);
  Eigen::VectorXd event_x_sum(p);

  std::size_t start = 0;
  for (std::size_t g = 0; g < group_end_.size(); ++g) {
    event_x_sum.setZero();
    double event_eta_sum = 0.0;
    for (std::size_t pos = start; pos < group_end_[g]; ++pos) {
      const std::size_t i = order_[pos];
      const double w = std::exp(eta[static_cast<Eigen::Index>(i)] - offset);
      const auto xi = design_.row(static_cast<Eigen::Index>(i)).transpose();
      s0 += w;
      s1 += w * xi;
      if (with_hessian) s2.noalias() += w * xi * xi.transpose();
      if (is_event_[i]) {
        event_eta_sum += eta[static_cast<Eigen::Index>(i)];
        event_x_sum += xi;
      }
    }
    start = group_end_[g];
    const double d = group_events_[g];
    if (d == 0.0) continue;
    const Eigen::VectorXd mean = s1 / s0;
    out.loglik += event_eta_sum - d * (std::log(s0) + offset);
    out.gradient += event_x_sum - d * mean;
    if (with_hessian) out.hessian -= d * (s2 / s0 - mean * mean.transpose());
  }
  return out;
}

void CoxProblem::linear_predictor_derivatives(const Eigen::VectorXd& eta, Eigen::VectorXd& score,
                                              Eigen::VectorXd& curvature) const {
  const std::size_t n = size();
  const double offset = eta.size() > 0 ? eta.maxCoeff() : 0.0;
  std::vector<double> first(group_end_.size());   // d / S0
  std::vector<double> second(group_end_.size());  // d / S0^2
  double s0 = 0.0;
  std::size_t start = 0;
  for (std::size_t g = 0; g < group_end_.size(); ++g) {
    for (std::size_t pos = start; pos < group_end_[g]; ++pos) {
      s0 += std::exp(eta[static_cast<Eigen::Index>(order_[pos])] - offset);
    }
    start = group_end_[g];
    first[g] = group_events_[g] / s0;
    second[g] = group_events_[g] / (s0 * s0);
  }
  score.resize(static_cast<Eigen::Index>(n));
  curvature.resize(static_cast<Eigen::Index>(n));
  // Ascending time: groups in reverse, accumulating sums over event times <= t_i.
  double a = 0.0;
  double b = 0.0;
  std::size_t end = n;
  for (std::size_t g = group_end_.size(); g-- > 0;) {
    a += first[g];
    b += second[g];
    const std::size_t begin = g == 0 ? 0 : group_end_[g - 1];
    for (std::size_t pos = begin; pos < end; ++pos) {
      const std::size_t i = order_[pos];
      const double w = std::exp(eta[static_cast<Eigen::Index>(i)] - offset);
      score[static_cast<Eigen::Index>(i)] = is_event_[i] - w * a;
      curvature[static_cast<Eigen::Index>(i)] = w * a - w * w * b;
    }
    end = begin;
  }
}

namespace {

Eigen::MatrixXd raw_design(const Dataset& d) {
  Eigen::MatrixXd design(static_cast<Eigen::Index>(d.size()), static_cast<Eigen::Index>(d.dimension()));
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto x = d.covariates(i);
    for (std::size_t j = 0; j < x.size(); ++j) design(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x[j];
  }
  return design;
}

}  // namespace

PartialLikelihood cox_partial_likelihood(const Dataset& d, Target target, std::span<const double> beta,
                                         bool with_hessian) {
  if (beta.size() != d.dimension()) throw InvalidConfiguration("coefficient vector has the wrong length");
  const CoxProblem problem(d, target, raw_design(d));
  const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
  return problem.evaluate(b, with_hessian);
}

Standardization standardize(const Dataset& d) {
  const std::size_t p = d.dimension();
  const double n = static_cast<double>(d.size());
  Standardization s{std::vector<double>(p, 0.0), std::vector<double>(p, 0.0)};
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto x = d.covariates(i);
    for (std::size_t j = 0; j < p; ++j) s.mean[j] += x[j];
  }
  for (double& m : s.mean) m /= n;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto x = d.covariates(i);
    for (std::size_t j = 0; j < p; ++j) s.scale[j] += (x[j] - s.mean[j]) * (x[j] - s.mean[j]);
  }
  for (std::size_t j = 0; j < p; ++j) {
    s.scale[j] = std::sqrt(s.scale[j] / n);
    // Treat columns constant up to rounding as constant.
    if (s.scale[j] <= 1e-12 * std::max(1.0, std::abs(s.mean[j]))) s.scale[j] = 0.0;
  }
  return s;
}

Eigen::MatrixXd Standardization::standardized(const Dataset& d) const {
  Eigen::MatrixXd z(static_cast<Eigen::Index>(d.size()), static_cast<Eigen::Index>(mean.size()));
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto x = d.covariates(i);
    for (std::size_t j = 0; j < mean.size(); ++j) {
      z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = scale[j] > 0.0 ? (x[j] - mean[j]) / scale[j] : 0.0;
    }
  }
  return z;
}

HazardPtr breslow_hazard(const Dataset& d, Target target, std::vector<double> beta, std::vector<double> center) {
  std::vector<double> weights(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto x = d.covariates(i);
    double lp = 0.0;
    for (std::size_t j = 0; j < beta.size(); ++j) lp += beta[j] * (x[j] - center[j]);
    weights[i] = std::exp(lp);
  }
  auto table = event_table(d, target, weights);
  auto baseline = breslow_cumulative(table);
  return std::make_shared<ProportionalStepHazard>(std::move(table.times), std::move(baseline), std::move(beta),
                                                  std::move(center));
}

CoxFit fit_cox_model(const Dataset& d, Target target, const CoxOptions& opts) {
  if (d.empty()) throw FitError("cannot fit a Cox model to an empty dataset");
  if (d.dimension() == 0) throw FitError("Cox regression needs at least one covariate");

  const Standardization s = standardize(d);
  std::vector<std::size_t> active;
  for (std::size_t j = 0; j < d.dimension(); ++j) {
    if (s.scale[j] > 0.0) active.push_back(j);
  }
  const Eigen::MatrixXd full = s.standardized(d);
  Eigen::MatrixXd design(full.rows(), static_cast<Eigen::Index>(active.size()));
  for (std::size_t k = 0; k < active.size(); ++k) {
    design.col(static_cast<Eigen::Index>(k)) = full.col(static_cast<Eigen::Index>(active[k]));
  }
  const CoxProblem problem(d, target, std::move(design));
  CoxFit fit;
  if (problem.event_count() == 0) {
    // Flat likelihood: beta = 0 and the Breslow baseline is identically zero.
    fit.coefficients.assign(d.dimension(), 0.0);
    fit.loglik_trace.push_back(0.0);
    fit.hazard = breslow_hazard(d, target, fit.coefficients, s.mean);
    return fit;
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(active.size()));
  PartialLikelihood current = problem.evaluate(beta, true);
  fit.loglik_trace.push_back(current.loglik);
  std::vector<std::string> trace;
  const auto record = [&](int iter, int halvings) {
    std::ostringstream line;
    line << "iter " << iter << ": loglik=" << current.loglik << " halvings=" << halvings
         << " max|beta|=" << (beta.size() ? beta.cwiseAbs().maxCoeff() : 0.0);
    trace.push_back(line.str());
  };
  record(0, 0);

  bool converged = opts.max_iter == 0 || active.empty();
  for (int iter = 1; !converged && iter <= opts.max_iter; ++iter) {
    const Eigen::MatrixXd information = -current.hessian;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(information);
    const double scale = information.diagonal().cwiseAbs().maxCoeff();
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() <= 1e-12 * std::max(scale, 1e-300)) {
      throw FitError("singular information matrix; consider removing collinear or uninformative covariates",
                     trace);
    }
    Eigen::VectorXd step = ldlt.solve(current.gradient);
    Eigen::VectorXd candidate = beta + step;
    double candidate_loglik = problem.loglik(candidate);
    int halvings = 0;
    while (!(candidate_loglik >= current.loglik) && halvings < opts.max_halvings) {
      step *= 0.5;
      candidate = beta + step;
      candidate_loglik = problem.loglik(candidate);
      ++halvings;
    }
    if (!(candidate_loglik >= current.loglik)) {
      // No ascent direction left at machine precision.
      converged = true;
      break;
    }
    if (candidate.cwiseAbs().maxCoeff() > opts.beta_cap) {
      beta = candidate;
      record(iter, halvings);
      throw FitError("coefficients diverge (monotone likelihood); |beta| exceeded the cap", trace);
    }
    const double change = std::abs(candidate_loglik - current.loglik);
    beta = candidate;
    current = problem.evaluate(beta, true);
    fit.loglik_trace.push_back(current.loglik);
    fit.iterations = iter;
    record(iter, halvings);
    if (change <= opts.tol * std::abs(current.loglik) || change == 0.0) converged = true;
  }
  if (!converged) {
    throw FitError("Newton-Raphson did not converge in " + std::to_string(opts.max_iter) + " iterations", trace);
  }

  std::vector<double> coefficients(d.dimension(), 0.0);
  for (std::size_t k = 0; k < active.size(); ++k) {
    coefficients[active[k]] = beta[static_cast<Eigen::Index>(k)] / s.scale[active[k]];
  }
  fit.coefficients = coefficients;
  fit.loglik = current.loglik;
  fit.hazard = breslow_hazard(d, target, std::move(coefficients), s.mean);
  return fit;
}

HazardPtr fit_cox(const Dataset& d, Target target, const CoxOptions& opts) {
  return fit_cox_model(d, target, opts).hazard;
}

}  // namespace jssl
