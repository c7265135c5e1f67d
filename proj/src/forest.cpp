#include "jssl/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "jssl/error.hpp"
#include "jssl/random.hpp"

namespace jssl {

const SurvivalTree::Leaf& SurvivalTree::route(std::span<const double> x) const {
  int node = 0;
  while (nodes[static_cast<std::size_t>(node)].split_variable >= 0) {
    const Node& n = nodes[static_cast<std::size_t>(node)];
    node = x[static_cast<std::size_t>(n.split_variable)] <= n.split_value ? n.left : n.right;
  }
  return leaves[static_cast<std::size_t>(nodes[static_cast<std::size_t>(node)].leaf)];
}

ForestHazard::ForestHazard(std::vector<double> grid, std::vector<SurvivalTree> trees, std::size_t dimension)
    : grid_(std::move(grid)), trees_(std::move(trees)), dimension_(dimension) {
  if (trees_.empty()) throw InvalidConfiguration("a forest needs at least one tree");
}

std::vector<double> ForestHazard::cumulative_at_jumps(std::span<const double> x) const {
  if (x.size() != dimension_) throw SchemaError("covariate vector has the wrong dimension");
  std::vector<double> sum(grid_.size(), 0.0);
  for (const auto& tree : trees_) {
    const auto& leaf = tree.route(x);
    for (std::size_t k = 0; k < leaf.grid_index.size(); ++k) sum[leaf.grid_index[k]] += leaf.increment[k];
  }
  const double count = static_cast<double>(trees_.size());
  double running = 0.0;
  for (double& v : sum) {
    running += v;
    v = running / count;
  }
  return sum;
}

double ForestHazard::evaluate(double t, std::span<const double> x) const {
  if (x.size() != dimension_) throw SchemaError("covariate vector has the wrong dimension");
  const auto cutoff = static_cast<std::size_t>(std::upper_bound(grid_.begin(), grid_.end(), t) - grid_.begin());
  double total = 0.0;
  for (const auto& tree : trees_) {
    const auto& leaf = tree.route(x);
    for (std::size_t k = 0; k < leaf.grid_index.size() && leaf.grid_index[k] < cutoff; ++k) total += leaf.increment[k];
  }
  return total / static_cast<double>(trees_.size());
}

double ForestHazard::evaluate_before(double t, std::span<const double> x) const {
  if (x.size() != dimension_) throw SchemaError("covariate vector has the wrong dimension");
  const auto cutoff = static_cast<std::size_t>(std::lower_bound(grid_.begin(), grid_.end(), t) - grid_.begin());
  double total = 0.0;
  for (const auto& tree : trees_) {
    const auto& leaf = tree.route(x);
    for (std::size_t k = 0; k < leaf.grid_index.size() && leaf.grid_index[k] < cutoff; ++k) total += leaf.increment[k];
  }
  return total / static_cast<double>(trees_.size());
}

nlohmann::json ForestHazard::to_json() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& tree : trees_) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : tree.nodes) nodes.push_back({n.split_variable, n.split_value, n.left, n.right, n.leaf});
    nlohmann::json leaves = nlohmann::json::array();
    for (const auto& leaf : tree.leaves) leaves.push_back({{"index", leaf.grid_index}, {"increment", leaf.increment}});
    trees.push_back({{"nodes", std::move(nodes)}, {"leaves", std::move(leaves)}});
  }
  return {{"type", "forest"}, {"grid", grid_}, {"dimension", dimension_}, {"trees", std::move(trees)}};
}

HazardPtr ForestHazard::from_json(const nlohmann::json& j) {
  std::vector<SurvivalTree> trees;
  for (const auto& jt : j.at("trees")) {
    SurvivalTree tree;
    for (const auto& jn : jt.at("nodes")) {
      tree.nodes.push_back({jn.at(0).get<int>(), jn.at(1).get<double>(), jn.at(2).get<int>(), jn.at(3).get<int>(),
                            jn.at(4).get<int>()});
    }
    for (const auto& jl : jt.at("leaves")) {
      tree.leaves.push_back({jl.at("index").get<std::vector<std::uint32_t>>(),
                             jl.at("increment").get<std::vector<double>>()});
    }
    trees.push_back(std::move(tree));
  }
  return std::make_shared<ForestHazard>(j.at("grid").get<std::vector<double>>(), std::move(trees),
                                        j.at("dimension").get<std::size_t>());
}

namespace {

class TreeGrower {
 public:
  TreeGrower(const Dataset& d, const std::vector<char>& is_event, const std::vector<std::uint32_t>& grid_index,
             const ForestOptions& opts, std::size_t mtry)
      : d_(d), is_event_(is_event), grid_index_(grid_index), opts_(opts), mtry_(mtry) {}

  SurvivalTree grow(std::vector<std::size_t> sample, Rng& rng) {
    std::stable_sort(sample.begin(), sample.end(), [&](std::size_t a, std::size_t b) { return d_.time(a) < d_.time(b); });
    sample_ = std::move(sample);
    buffer_.resize(sample_.size());
    SurvivalTree tree;
    tree.nodes.emplace_back();
    struct Pending {
      int node;
      std::size_t begin;
      std::size_t end;
    };
    std::vector<Pending> stack{{0, 0, sample_.size()}};
    while (!stack.empty()) {
      const Pending current = stack.back();
      stack.pop_back();
      Split split;
      if (find_split(current.begin, current.end, rng, split)) {
        const std::size_t middle = partition(current.begin, current.end, split);
        const int left = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        auto& node = tree.nodes[static_cast<std::size_t>(current.node)];
        node.split_variable = static_cast<int>(split.variable);
        node.split_value = split.value;
        node.left = left;
        node.right = left + 1;
        stack.push_back({left + 1, middle, current.end});
        stack.push_back({left, current.begin, middle});
      } else {
        tree.nodes[static_cast<std::size_t>(current.node)].leaf = static_cast<int>(tree.leaves.size());
        tree.leaves.push_back(make_leaf(current.begin, current.end));
      }
    }
    return tree;
  }

 private:
  struct Split {
    std::size_t variable = 0;
    double value = 0.0;
    double score = -1.0;
  };

  SurvivalTree::Leaf make_leaf(std::size_t begin, std::size_t end) const {
    SurvivalTree::Leaf leaf;
    double at_risk = static_cast<double>(end - begin);
    std::size_t pos = begin;
    while (pos < end) {
      const double t = d_.time(sample_[pos]);
      double events = 0.0;
      double count = 0.0;
      std::size_t event_row = 0;
      for (; pos < end && d_.time(sample_[pos]) == t; ++pos) {
        count += 1.0;
        if (is_event_[sample_[pos]]) {
          events += 1.0;
          event_row = sample_[pos];
        }
      }
      if (events > 0.0) {
        leaf.grid_index.push_back(grid_index_[event_row]);
        leaf.increment.push_back(events / at_risk);
      }
      at_risk -= count;
    }
    return leaf;
  }

  // Log-rank statistics |U| / sqrt(V) for every split x <= cuts[c] in one pass over the
  // time-sorted node; -1 when inadmissible. `cut_index[k]` is the first cut with x_k <= cut.
  void log_rank_all(std::size_t begin, std::size_t end, const std::vector<std::uint32_t>& cut_index,
                    std::size_t n_cuts, std::vector<double>& scores) {
    const std::size_t m = end - begin;
    left_total_.assign(n_cuts + 1, 0.0);
    for (std::size_t k = 0; k < m; ++k) left_total_[cut_index[k]] += 1.0;
    for (std::size_t c = 1; c < n_cuts; ++c) left_total_[c] += left_total_[c - 1];
    at_risk_left_.assign(left_total_.begin(), left_total_.begin() + static_cast<std::ptrdiff_t>(n_cuts));
    numerator_.assign(n_cuts, 0.0);
    variance_.assign(n_cuts, 0.0);
    pending_.assign(n_cuts + 1, 0.0);
    group_count_.assign(n_cuts + 1, 0.0);
    group_events_.assign(n_cuts + 1, 0.0);

    double at_risk = static_cast<double>(m);
    std::size_t k = 0;
    for (const auto& group : groups_) {
      const std::size_t stop = group.end - begin;
      if (group.events == 0.0) {
        for (; k < stop; ++k) pending_[cut_index[k]] += 1.0;
        at_risk -= static_cast<double>(group.size);
        continue;
      }
      double shift = 0.0;
      for (std::size_t c = 0; c < n_cuts; ++c) {
        shift += pending_[c];
        at_risk_left_[c] -= shift;
      }
      std::fill(pending_.begin(), pending_.end(), 0.0);
      for (; k < stop; ++k) {
        group_count_[cut_index[k]] += 1.0;
        if (is_event_[sample_[begin + k]]) group_events_[cut_index[k]] += 1.0;
      }
      double count_left = 0.0;
      double events_left = 0.0;
      for (std::size_t c = 0; c < n_cuts; ++c) {
        count_left += group_count_[c];
        events_left += group_events_[c];
        const double share = at_risk_left_[c] / at_risk;
        numerator_[c] += events_left - group.events * share;
        if (at_risk > 1.0) {
          variance_[c] += share * (1.0 - share) * (at_risk - group.events) / (at_risk - 1.0) * group.events;
        }
        at_risk_left_[c] -= count_left;
      }
      std::fill(group_count_.begin(), group_count_.end(), 0.0);
      std::fill(group_events_.begin(), group_events_.end(), 0.0);
      at_risk -= static_cast<double>(group.size);
    }

    const auto min_leaf = static_cast<double>(std::max(opts_.min_leaf_size, 1));
    scores.assign(n_cuts, -1.0);
    for (std::size_t c = 0; c < n_cuts; ++c) {
      const double left_count = left_total_[c];
      if (left_count < min_leaf || static_cast<double>(m) - left_count < min_leaf) continue;
      if (variance_[c] > 0.0) scores[c] = std::abs(numerator_[c]) / std::sqrt(variance_[c]);
    }
  }

  bool find_split(std::size_t begin, std::size_t end, Rng& rng, Split& best) {
    const std::size_t m = end - begin;
    if (m <= static_cast<std::size_t>(std::max(opts_.min_node_size, 1))) return false;
    bool any_event = false;
    for (std::size_t k = begin; k < end && !any_event; ++k) any_event = is_event_[sample_[k]];
    if (!any_event) return false;

    groups_.clear();
    for (std::size_t pos = begin; pos < end;) {
      const double t = d_.time(sample_[pos]);
      Group group;
      for (; pos < end && d_.time(sample_[pos]) == t; ++pos) {
        group.size += 1;
        group.events += is_event_[sample_[pos]];
      }
      group.end = pos;
      groups_.push_back(group);
    }

    const std::size_t p = d_.dimension();
    std::vector<std::size_t> variables(p);
    std::iota(variables.begin(), variables.end(), 0);
    for (std::size_t i = 0; i < mtry_; ++i) std::swap(variables[i], variables[i + rng.uniform_index(p - i)]);

    std::vector<double> values(m);
    std::vector<std::uint32_t> cut_index(m);
    std::vector<double> scores;
    for (std::size_t vi = 0; vi < mtry_; ++vi) {
      const std::size_t v = variables[vi];
      for (std::size_t k = 0; k < m; ++k) values[k] = d_.covariates(sample_[begin + k])[v];
      std::vector<double> distinct = values;
      std::sort(distinct.begin(), distinct.end());
      distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
      if (distinct.size() < 2) continue;
      std::vector<double> cuts(distinct.size() - 1);
      for (std::size_t c = 0; c + 1 < distinct.size(); ++c) cuts[c] = 0.5 * (distinct[c] + distinct[c + 1]);
      const auto cap = static_cast<std::size_t>(std::max(opts_.max_cutpoints, 1));
      if (cuts.size() > cap) {
        for (std::size_t i = 0; i < cap; ++i) std::swap(cuts[i], cuts[i + rng.uniform_index(cuts.size() - i)]);
        cuts.resize(cap);
        std::sort(cuts.begin(), cuts.end());
      }
      for (std::size_t k = 0; k < m; ++k) {
        cut_index[k] = static_cast<std::uint32_t>(std::lower_bound(cuts.begin(), cuts.end(), values[k]) - cuts.begin());
      }
      log_rank_all(begin, end, cut_index, cuts.size(), scores);
      for (std::size_t c = 0; c < cuts.size(); ++c) {
        if (scores[c] > best.score) best = {v, cuts[c], scores[c]};
      }
    }
    return best.score > 0.0;
  }

  // Stable partition keeps both children sorted by time.
  std::size_t partition(std::size_t begin, std::size_t end, const Split& split) {
    std::size_t out = begin;
    for (std::size_t k = begin; k < end; ++k) {
      if (d_.covariates(sample_[k])[split.variable] <= split.value) buffer_[out++] = sample_[k];
    }
    const std::size_t middle = out;
    for (std::size_t k = begin; k < end; ++k) {
      if (!(d_.covariates(sample_[k])[split.variable] <= split.value)) buffer_[out++] = sample_[k];
    }
    std::copy(buffer_.begin() + static_cast<std::ptrdiff_t>(begin), buffer_.begin() + static_cast<std::ptrdiff_t>(end),
              sample_.begin() + static_cast<std::ptrdiff_t>(begin));
    return middle;
  }

  const Dataset& d_;
  const std::vector<char>& is_event_;
  const std::vector<std::uint32_t>& grid_index_;
  const ForestOptions& opts_;
  std::size_t mtry_;
  std::vector<std::size_t> sample_;
  std::vector<std::size_t> buffer_;

  struct Group {
    std::size_t end = 0;  // one past the group's last position in sample_
    std::size_t size = 0;
    double events = 0.0;
  };
  std::vector<Group> groups_;
  std::vector<double> left_total_, at_risk_left_, numerator_, variance_, pending_, group_count_, group_events_;
};

}  // namespace

HazardPtr fit_survival_forest(const Dataset& d, Target target, const ForestOptions& opts) {
  if (d.empty()) throw FitError("cannot grow a forest on an empty dataset");
  if (opts.n_trees < 1) throw InvalidConfiguration("n_trees must be at least 1");
  const std::size_t n = d.size();
  const std::size_t p = d.dimension();
  std::size_t mtry = opts.mtry > 0 ? static_cast<std::size_t>(opts.mtry)
                                   : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(p))));
  mtry = std::min(mtry, p);

  std::vector<char> is_event(n);
  std::vector<double> grid;
  for (std::size_t i = 0; i < n; ++i) {
    is_event[i] = is_target_event(d.status(i), target) ? 1 : 0;
    if (is_event[i]) {
      if (d.time(i) <= 0.0) throw FitError("events at time 0 are not supported");
      grid.push_back(d.time(i));
    }
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  std::vector<std::uint32_t> grid_index(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (is_event[i]) {
      grid_index[i] = static_cast<std::uint32_t>(std::lower_bound(grid.begin(), grid.end(), d.time(i)) - grid.begin());
    }
  }

  TreeGrower grower(d, is_event, grid_index, opts, mtry);
  std::vector<SurvivalTree> trees;
  trees.reserve(static_cast<std::size_t>(opts.n_trees));
  for (int b = 0; b < opts.n_trees; ++b) {
    Rng rng(derive_seed(opts.seed, {static_cast<std::uint64_t>(b)}));
    std::vector<std::size_t> sample(n);
    if (opts.bootstrap) {
      for (auto& s : sample) s = rng.uniform_index(n);
    } else {
      std::iota(sample.begin(), sample.end(), 0);
    }
    trees.push_back(grower.grow(std::move(sample), rng));
  }
  return std::make_shared<ForestHazard>(std::move(grid), std::move(trees), p);
}

}  // namespace jssl
