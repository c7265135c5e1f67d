#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "jssl/data.hpp"
#include "jssl/hazard.hpp"
#include "jssl/learners.hpp"

namespace jssl {

struct ForestOptions {
  int n_trees = 100;
  int mtry = 0;  // 0 -> ceil(sqrt(p))
  int min_node_size = 15;  // nodes with at most this many observations are not split
  int min_leaf_size = 1;
  int max_cutpoints = 32;
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

// One binary tree stored as flat node arrays. Leaves carry the Nelson-Aalen increments of
// their training sample as (index into the forest grid, increment) pairs.
struct SurvivalTree {
  struct Node {
    int split_variable = -1;  // -1 marks a leaf
    double split_value = 0.0;  // left child takes x <= split_value
    int left = -1;
    int right = -1;
    int leaf = -1;
  };
  struct Leaf {
    std::vector<std::uint32_t> grid_index;
    std::vector<double> increment;
  };
  std::vector<Node> nodes;
  std::vector<Leaf> leaves;

  const Leaf& route(std::span<const double> x) const;
};

// Ensemble cumulative hazard: the average over trees of the terminal-node Nelson-Aalen
// curves reached by x. The jump grid is the union of the training event times.
class ForestHazard final : public CumulativeHazard {
 public:
  ForestHazard(std::vector<double> grid, std::vector<SurvivalTree> trees, std::size_t dimension);

  bool is_step() const override { return true; }
  std::span<const double> jump_times() const override { return grid_; }
  double evaluate(double t, std::span<const double> x) const override;
  double evaluate_before(double t, std::span<const double> x) const override;
  std::vector<double> cumulative_at_jumps(std::span<const double> x) const override;
  nlohmann::json to_json() const override;
  static HazardPtr from_json(const nlohmann::json& j);

  std::size_t tree_count() const { return trees_.size(); }
  const std::vector<SurvivalTree>& trees() const { return trees_; }

 private:
  std::vector<double> grid_;
  std::vector<SurvivalTree> trees_;
  std::size_t dimension_;
};

// Random survival forest with log-rank splitting for the target cause.
HazardPtr fit_survival_forest(const Dataset& d, Target target, const ForestOptions& opts = {});

}  // namespace jssl
