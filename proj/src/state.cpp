#include "jssl/state.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "jssl/error.hpp"
#include "jssl/quadrature.hpp"
#include "jssl/stats.hpp"

namespace jssl {

State eta(double time, int status, double t) {
  if (t < time) return State::at_risk;
  switch (status) {
    case kCause1: return State::cause1;
    case kCause2: return State::cause2;
    default: return State::censored;
  }
}

StepStateCurve::StepStateCurve(std::vector<double> times, std::vector<StateValues> values, StateValues initial)
    : times_(std::move(times)), values_(std::move(values)), initial_(initial) {
  if (times_.size() != values_.size()) throw InvalidConfiguration("state curve times and values differ in length");
}

StateValues StepStateCurve::at(double t) const {
  const auto k = std::upper_bound(times_.begin(), times_.end(), t) - times_.begin();
  return k == 0 ? initial_ : values_[static_cast<std::size_t>(k - 1)];
}

StepStateCurve compose_paths(const StepPath& cause1, const StepPath& cause2, const StepPath& censoring,
                             const CompositionOptions& options) {
  const std::array<const StepPath*, 3> paths{&cause1, &cause2, &censoring};
  constexpr std::array<std::size_t, 3> target{state_index(State::cause1), state_index(State::cause2),
                                              state_index(State::censored)};
  std::array<std::size_t, 3> next{0, 0, 0};
  std::array<double, 3> level{0.0, 0.0, 0.0};

  std::vector<double> times;
  std::vector<StateValues> values;
  times.reserve(cause1.times.size() + cause2.times.size() + censoring.times.size());
  values.reserve(times.capacity());
  StateValues f{0.0, 1.0, 0.0, 0.0};
  double survival = 1.0;  // at-risk probability just before the current time

  while (true) {
    double s = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < 3; ++c) {
      if (next[c] < paths[c]->times.size()) s = std::min(s, paths[c]->times[next[c]]);
    }
    if (s == std::numeric_limits<double>::infinity()) break;

    std::array<double, 3> delta{0.0, 0.0, 0.0};
    for (std::size_t c = 0; c < 3; ++c) {
      if (next[c] < paths[c]->times.size() && paths[c]->times[next[c]] == s) {
        const double value = paths[c]->cumulative[next[c]];
        delta[c] = value - level[c];
        level[c] = value;
        ++next[c];
      }
    }
    for (std::size_t c = 0; c < 3; ++c) f[target[c]] += survival * delta[c];
    if (options.product_limit) {
      survival = std::max(0.0, survival * (1.0 - (delta[0] + delta[1] + delta[2])));
    } else {
      survival = std::exp(-(level[0] + level[1] + level[2]));
    }
    f[state_index(State::at_risk)] = survival;
    times.push_back(s);
    values.push_back(f);
  }
  return StepStateCurve(std::move(times), std::move(values));
}

namespace {

// Curve for compositions with at least one continuous component. Cumulative occupation
// probabilities are tabulated at nodes (a uniform grid plus all step jumps); between nodes
// the continuous parts are integrated by adaptive Simpson.
class SmoothStateCurve final : public StateCurve {
 public:
  SmoothStateCurve(std::array<const CumulativeHazard*, 3> components, std::span<const double> x, double horizon,
                   double tolerance)
      : components_(components), x_(x.begin(), x.end()), tolerance_(tolerance) {
    horizon = std::max(horizon, 0.0);
    for (std::size_t c = 0; c < 3; ++c) {
      step_[c] = components_[c]->is_step();
      if (step_[c]) {
        paths_[c] = components_[c]->path(x_, horizon);
        jumps_.insert(jumps_.end(), paths_[c].times.begin(), paths_[c].times.end());
      } else {
        profiles_[c] = components_[c]->bind(x_);
        has_continuous_ = true;
      }
    }
    std::sort(jumps_.begin(), jumps_.end());
    jumps_.erase(std::unique(jumps_.begin(), jumps_.end()), jumps_.end());

    nodes_.push_back(0.0);
    if (horizon > 0.0) {
      for (int k = 1; k <= kCells; ++k) nodes_.push_back(horizon * k / kCells);
    }
    nodes_.insert(nodes_.end(), jumps_.begin(), jumps_.end());
    std::sort(nodes_.begin(), nodes_.end());
    nodes_.erase(std::unique(nodes_.begin(), nodes_.end()), nodes_.end());

    cell_tolerance_ = tolerance_ / static_cast<double>(std::max<std::size_t>(nodes_.size(), 1));
    cumulative_.assign(nodes_.size(), {0.0, 0.0, 0.0});
    for (std::size_t k = 1; k < nodes_.size(); ++k) {
      const auto inside = continuous_integral(nodes_[k - 1], nodes_[k], cell_tolerance_);
      const double s = nodes_[k];
      const double survival_before = std::exp(-continuous_level(s) - step_level_before(s));
      for (std::size_t c = 0; c < 3; ++c) {
        double jump = 0.0;
        if (step_[c]) jump = paths_[c].at(s) - paths_[c].before(s);
        cumulative_[k][c] = cumulative_[k - 1][c] + inside[c] + survival_before * jump;
      }
    }
  }

  StateValues at(double t) const override {
    t = std::max(t, 0.0);
    const auto k = static_cast<std::size_t>(std::upper_bound(nodes_.begin(), nodes_.end(), t) - nodes_.begin() - 1);
    const auto inside = continuous_integral(nodes_[k], t, cell_tolerance_);
    StateValues out;
    out[state_index(State::at_risk)] = std::exp(-continuous_level(t) - step_level(t));
    out[state_index(State::cause1)] = cumulative_[k][0] + inside[0];
    out[state_index(State::cause2)] = cumulative_[k][1] + inside[1];
    out[state_index(State::censored)] = cumulative_[k][2] + inside[2];
    return out;
  }

  bool is_step() const override { return false; }
  std::span<const double> breakpoints() const override { return jumps_; }

 private:
  static constexpr int kCells = 64;

  double continuous_level(double t) const {
    double a = 0.0, level = 0.0, rate = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
      if (profiles_[c]) {
        profiles_[c]->evaluate(t, level, rate);
        a += level;
      }
    }
    return a;
  }
  double step_level(double t) const {
    double a = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
      if (step_[c]) a += paths_[c].at(t);
    }
    return a;
  }
  double step_level_before(double t) const {
    double a = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
      if (step_[c]) a += paths_[c].before(t);
    }
    return a;
  }

  // int_a^b exp{-A(u)} dL_c(u) for the continuous components; no step jump lies in (a, b).
  std::array<double, 3> continuous_integral(double a, double b, double tol) const {
    if (!has_continuous_ || !(b > a)) return {0.0, 0.0, 0.0};
    const double step = step_level(a);
    const auto integrand = [&](double u) {
      std::array<double, 3> out{0.0, 0.0, 0.0};
      double total = step, level = 0.0;
      for (std::size_t c = 0; c < 3; ++c) {
        if (profiles_[c]) {
          profiles_[c]->evaluate(u, level, out[c]);
          total += level;
        }
      }
      const double survival = std::exp(-total);
      for (double& v : out) v *= survival;
      return out;
    };
    if (a > 0.0) return adaptive_simpson<3>(integrand, a, b, tol);
    // u = b w^2 removes integrable t^(shape-1) singularities at the origin.
    const auto substituted = [&](double w) {
      if (w <= 0.0) return std::array<double, 3>{0.0, 0.0, 0.0};
      auto v = integrand(b * w * w);
      for (double& e : v) e *= 2.0 * b * w;
      return v;
    };
    return adaptive_simpson<3>(substituted, 0.0, 1.0, tol);
  }

  std::array<const CumulativeHazard*, 3> components_;
  std::vector<double> x_;
  double tolerance_;
  double cell_tolerance_ = 0.0;
  std::array<bool, 3> step_{};
  std::array<StepPath, 3> paths_;
  std::array<std::unique_ptr<HazardProfile>, 3> profiles_;
  bool has_continuous_ = false;
  std::vector<double> jumps_;
  std::vector<double> nodes_;
  std::vector<std::array<double, 3>> cumulative_;
};

}  // namespace

StateOccupationModel::StateOccupationModel(HazardPtr cause1, HazardPtr cause2, HazardPtr censoring,
                                           CompositionOptions options)
    : cause1_(std::move(cause1)), cause2_(std::move(cause2)), censoring_(std::move(censoring)), options_(options) {
  if (!cause1_ || !cause2_ || !censoring_) throw InvalidConfiguration("composition needs three hazards");
}

bool StateOccupationModel::is_step() const {
  return cause1_->is_step() && cause2_->is_step() && censoring_->is_step();
}

std::unique_ptr<StateCurve> StateOccupationModel::curve(std::span<const double> x, double horizon) const {
  if (is_step()) {
    return std::make_unique<StepStateCurve>(compose_paths(cause1_->path(x, horizon), cause2_->path(x, horizon),
                                                          censoring_->path(x, horizon), options_));
  }
  return std::make_unique<SmoothStateCurve>(
      std::array<const CumulativeHazard*, 3>{cause1_.get(), cause2_.get(), censoring_.get()}, x, horizon,
      options_.tolerance);
}

std::vector<double> StateOccupationModel::grid(std::span<const double>) const {
  std::vector<double> out;
  for (const auto* h : {cause1_.get(), cause2_.get(), censoring_.get()}) {
    const auto times = h->jump_times();
    out.insert(out.end(), times.begin(), times.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

StateOccupationModel compose(HazardPtr cause1, HazardPtr cause2, HazardPtr censoring, CompositionOptions options) {
  return StateOccupationModel(std::move(cause1), std::move(cause2), std::move(censoring), options);
}

McEstimate mc_norm_squared(const StateModel& f, const StateModel& reference, const CovariateSampler& sampler,
                           std::size_t m, double tau, Rng& rng, std::size_t grid_size) {
  if (m < 1) throw InvalidConfiguration("Monte Carlo sample size must be at least 1");
  if (!(tau > 0.0) || grid_size < 2) throw InvalidConfiguration("norm needs tau > 0 and at least two grid points");
  const double h = tau / static_cast<double>(grid_size - 1);
  RunningStats stats;
  for (std::size_t i = 0; i < m; ++i) {
    const auto x = sampler(rng);
    const auto cf = f.curve(x, tau);
    const auto cr = reference.curve(x, tau);
    double integral = 0.0;
    for (std::size_t k = 0; k < grid_size; ++k) {
      const double t = k + 1 == grid_size ? tau : h * static_cast<double>(k);
      const auto a = cf->at(t);
      const auto b = cr->at(t);
      double sq = 0.0;
      for (std::size_t l = 0; l < 4; ++l) sq += (a[l] - b[l]) * (a[l] - b[l]);
      integral += (k == 0 || k + 1 == grid_size ? 0.5 : 1.0) * h * sq;
    }
    stats.add(integral);
  }
  return {stats.mean(), stats.standard_error()};
}

void write_state_curves(std::ostream& out, const StateModel& model, const std::vector<std::vector<double>>& xs,
                        double tau, std::size_t grid_size) {
  if (grid_size < 2) throw InvalidConfiguration("grid_size must be at least 2");
  out << "t,l,x_id,F\n" << std::setprecision(10);
  for (std::size_t id = 0; id < xs.size(); ++id) {
    const auto c = model.curve(xs[id], tau);
    for (std::size_t k = 0; k < grid_size; ++k) {
      const double t = tau * static_cast<double>(k) / static_cast<double>(grid_size - 1);
      const auto v = c->at(t);
      for (State s : kStates) out << t << ',' << static_cast<int>(s) << ',' << id << ',' << v[state_index(s)] << '\n';
    }
  }
}

}  // namespace jssl
