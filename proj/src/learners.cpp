#include "jssl/learners.hpp"

#include <set>

#include "jssl/cox.hpp"
#include "jssl/elastic_net.hpp"
#include "jssl/error.hpp"
#include "jssl/forest.hpp"
#include "jssl/nelson_aalen.hpp"

namespace jssl {

std::string to_string(Target t) {
  switch (t) {
    case Target::cause1: return "cause1";
    case Target::cause2: return "cause2";
    case Target::censoring: return "censoring";
  }
  return "unknown";
}

Target target_from_string(const std::string& s) {
  if (s == "cause1") return Target::cause1;
  if (s == "cause2") return Target::cause2;
  if (s == "censoring") return Target::censoring;
  throw InvalidConfiguration("unknown target '" + s + "' (expected cause1, cause2 or censoring)");
}

std::string to_string(LearnerKind k) {
  switch (k) {
    case LearnerKind::nelson_aalen: return "nelson_aalen";
    case LearnerKind::cox: return "cox";
    case LearnerKind::cox_elastic_net: return "cox_elastic_net";
    case LearnerKind::survival_forest: return "survival_forest";
  }
  return "unknown";
}

LearnerKind learner_kind_from_string(const std::string& s) {
  if (s == "nelson_aalen") return LearnerKind::nelson_aalen;
  if (s == "cox") return LearnerKind::cox;
  if (s == "cox_elastic_net") return LearnerKind::cox_elastic_net;
  if (s == "survival_forest") return LearnerKind::survival_forest;
  throw InvalidConfiguration("unknown learner kind '" + s + "'");
}

namespace {

const std::set<std::string>& allowed_keys(LearnerKind kind) {
  static const std::set<std::string> none;
  static const std::set<std::string> cox{"tol", "max_iter", "beta_cap"};
  static const std::set<std::string> net{"alpha", "lambda_grid_size", "lambda_min_ratio", "inner_folds",
                                         "one_standard_error"};
  static const std::set<std::string> forest{"n_trees",       "mtry",      "min_node_size", "min_leaf_size",
                                            "max_cutpoints", "bootstrap", "seed"};
  switch (kind) {
    case LearnerKind::nelson_aalen: return none;
    case LearnerKind::cox: return cox;
    case LearnerKind::cox_elastic_net: return net;
    case LearnerKind::survival_forest: return forest;
  }
  return none;
}

template <typename T>
T get_or(const nlohmann::json& h, const char* key, T fallback) {
  const auto it = h.find(key);
  return it == h.end() ? fallback : it->get<T>();
}

std::string default_name(const LearnerSpec& spec) {
  switch (spec.kind) {
    case LearnerKind::nelson_aalen: return "Nelson-Aalen";
    case LearnerKind::cox: return "Cox";
    case LearnerKind::cox_elastic_net: {
      const double alpha = get_or(spec.hyperparameters, "alpha", 0.5);
      if (alpha == 1.0) return "lasso";
      if (alpha == 0.0) return "ridge";
      return "elastic net";
    }
    case LearnerKind::survival_forest: return "random forest";
  }
  return "learner";
}

CoxOptions cox_options(const nlohmann::json& h) {
  CoxOptions o;
  o.tol = get_or(h, "tol", o.tol);
  o.max_iter = get_or(h, "max_iter", o.max_iter);
  o.beta_cap = get_or(h, "beta_cap", o.beta_cap);
  return o;
}

ElasticNetOptions net_options(const nlohmann::json& h) {
  ElasticNetOptions o;
  o.alpha = get_or(h, "alpha", o.alpha);
  o.lambda_grid_size = get_or(h, "lambda_grid_size", o.lambda_grid_size);
  o.lambda_min_ratio = get_or(h, "lambda_min_ratio", o.lambda_min_ratio);
  o.inner_folds = get_or(h, "inner_folds", o.inner_folds);
  o.one_standard_error = get_or(h, "one_standard_error", o.one_standard_error);
  return o;
}

ForestOptions forest_options(const nlohmann::json& h) {
  ForestOptions o;
  o.n_trees = get_or(h, "n_trees", o.n_trees);
  o.mtry = get_or(h, "mtry", o.mtry);
  o.min_node_size = get_or(h, "min_node_size", o.min_node_size);
  o.min_leaf_size = get_or(h, "min_leaf_size", o.min_leaf_size);
  o.max_cutpoints = get_or(h, "max_cutpoints", o.max_cutpoints);
  o.bootstrap = get_or(h, "bootstrap", o.bootstrap);
  return o;
}

class SpecLearner final : public Learner {
 public:
  explicit SpecLearner(LearnerSpec spec) : spec_(std::move(spec)) {}

  const std::string& name() const override { return spec_.name; }

  HazardPtr fit(const Dataset& d, Target target, std::uint64_t seed) const override {
    const auto& h = spec_.hyperparameters;
    switch (spec_.kind) {
      case LearnerKind::nelson_aalen: return fit_nelson_aalen(d, target);
      case LearnerKind::cox: return fit_cox(d, target, cox_options(h));
      case LearnerKind::cox_elastic_net: {
        auto o = net_options(h);
        o.seed = seed;
        return fit_cox_elastic_net(d, target, o);
      }
      case LearnerKind::survival_forest: {
        auto o = forest_options(h);
        o.seed = h.contains("seed") ? h.at("seed").get<std::uint64_t>() : seed;
        return fit_survival_forest(d, target, o);
      }
    }
    throw InvalidConfiguration("unknown learner kind");
  }

 private:
  LearnerSpec spec_;
};

}  // namespace

void LearnerSpec::validate() const {
  if (!hyperparameters.is_object()) throw InvalidConfiguration("hyperparameters must be a JSON object");
  const auto& allowed = allowed_keys(kind);
  for (const auto& [key, value] : hyperparameters.items()) {
    if (!allowed.count(key)) {
      throw InvalidConfiguration("unknown hyperparameter '" + key + "' for learner kind " + to_string(kind));
    }
  }
  try {
    switch (kind) {
      case LearnerKind::nelson_aalen: break;
      case LearnerKind::cox: {
        const auto o = cox_options(hyperparameters);
        if (!(o.tol > 0.0) || o.max_iter < 0 || !(o.beta_cap > 0.0)) throw InvalidConfiguration("invalid Cox options");
        break;
      }
      case LearnerKind::cox_elastic_net: {
        const auto o = net_options(hyperparameters);
        if (!(o.alpha >= 0.0 && o.alpha <= 1.0)) throw InvalidConfiguration("alpha must lie in [0, 1]");
        if (o.lambda_grid_size < 1 || o.inner_folds < 2 || !(o.lambda_min_ratio > 0.0 && o.lambda_min_ratio < 1.0)) {
          throw InvalidConfiguration("invalid elastic-net path options");
        }
        break;
      }
      case LearnerKind::survival_forest: {
        const auto o = forest_options(hyperparameters);
        if (o.n_trees < 1 || o.mtry < 0 || o.min_node_size < 1 || o.min_leaf_size < 1 || o.max_cutpoints < 1) {
          throw InvalidConfiguration("invalid forest options");
        }
        break;
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidConfiguration("hyperparameter has the wrong type: " + std::string(e.what()));
  }
}

nlohmann::json LearnerSpec::to_json() const {
  return {{"kind", jssl::to_string(kind)}, {"target", jssl::to_string(target)}, {"hyperparameters", hyperparameters},
          {"name", name}};
}

LearnerSpec LearnerSpec::from_json(const nlohmann::json& j) {
  LearnerSpec spec;
  try {
    spec.kind = learner_kind_from_string(j.at("kind").get<std::string>());
    if (j.contains("target")) spec.target = target_from_string(j.at("target").get<std::string>());
    if (j.contains("hyperparameters")) spec.hyperparameters = j.at("hyperparameters");
    spec.name = j.contains("name") ? j.at("name").get<std::string>() : default_name(spec);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidConfiguration("malformed learner spec: " + std::string(e.what()));
  }
  spec.validate();
  return spec;
}

LearnerPtr make_learner(const LearnerSpec& spec) {
  spec.validate();
  LearnerSpec copy = spec;
  if (copy.name.empty()) copy.name = default_name(copy);
  return std::make_shared<SpecLearner>(std::move(copy));
}

}  // namespace jssl
