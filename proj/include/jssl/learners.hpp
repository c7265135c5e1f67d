#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "jssl/data.hpp"
#include "jssl/hazard.hpp"

namespace jssl {

// Which cumulative hazard a learner estimates. Competing events are censored for the
// targeted cause; for `censoring` the roles of censoring and events are exchanged.
enum class Target { cause1, cause2, censoring };

std::string to_string(Target t);
Target target_from_string(const std::string& s);

// True when observation status counts as an event for `target`.
inline bool is_target_event(int status, Target target) {
  switch (target) {
    case Target::cause1: return status == kCause1;
    case Target::cause2: return status == kCause2;
    case Target::censoring: return status == kCensored;
  }
  return false;
}

// A learner maps a training set to a fitted cumulative hazard for the requested target.
// Implementations must be deterministic given (data, target, seed).
class Learner {
 public:
  virtual ~Learner() = default;
  virtual const std::string& name() const = 0;
  virtual HazardPtr fit(const Dataset& d, Target target, std::uint64_t seed) const = 0;
};

using LearnerPtr = std::shared_ptr<const Learner>;

enum class LearnerKind { nelson_aalen, cox, cox_elastic_net, survival_forest };

std::string to_string(LearnerKind k);
LearnerKind learner_kind_from_string(const std::string& s);

// Declarative learner description, as found in benchmark and selection configs:
//   {"kind":"cox_elastic_net","target":"censoring","hyperparameters":{"alpha":1.0},"name":"lasso"}
struct LearnerSpec {
  LearnerKind kind = LearnerKind::nelson_aalen;
  Target target = Target::cause1;
  nlohmann::json hyperparameters = nlohmann::json::object();
  std::string name;

  // Rejects unknown or out-of-range hyperparameters for the kind.
  void validate() const;

  nlohmann::json to_json() const;
  static LearnerSpec from_json(const nlohmann::json& j);
};

LearnerPtr make_learner(const LearnerSpec& spec);

}  // namespace jssl
