#pragma once

// Random forest of CART trees over categorical features, with out-of-bag
// accuracy and permutation importance.

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "encoding.hpp"
#include "error.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace lanecheck {

struct ForestParams {
  std::size_t trees = 200;
  std::size_t max_depth = 0;       // 0 = unlimited
  std::size_t feature_subset = 0;  // 0 = ceil(sqrt(features))
  std::size_t min_leaf = 2;
  unsigned jobs = 1;
};

/// Binary tree whose splits test `feature == category`.
struct Tree {
  struct Node {
    int feature = -1;  // -1 for a leaf
    int category = 0;
    int left = -1;     // taken when the test holds
    int right = -1;
    int prediction = 0;
  };

  std::vector<Node> nodes;
  std::vector<std::size_t> oob;     // out-of-bag vector indices
  std::vector<bool> uses_feature;

  int predict(std::span<const int> row) const {
    int i = 0;
    while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
      const auto& n = nodes[static_cast<std::size_t>(i)];
      i = row[static_cast<std::size_t>(n.feature)] == n.category ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(i)].prediction;
  }

  /// Prediction with one feature's value replaced.
  int predict(std::span<const int> row, std::size_t feature, int value) const {
    int i = 0;
    while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
      const auto& n = nodes[static_cast<std::size_t>(i)];
      const int v = static_cast<std::size_t>(n.feature) == feature ? value : row[static_cast<std::size_t>(n.feature)];
      i = v == n.category ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(i)].prediction;
  }
};

struct Forest {
  ForestParams params;
  std::vector<std::size_t> cardinality;
  std::vector<Tree> trees;
  double oob_accuracy = 0.0;
  std::size_t oob_vectors = 0;  // vectors out of bag for at least one tree

  int predict(std::span<const int> row) const {
    std::array<std::size_t, 2> votes{};
    for (const auto& t : trees) ++votes[static_cast<std::size_t>(t.predict(row))];
    return votes[1] > votes[0] ? 1 : 0;
  }
};

namespace detail {

inline double gini(double c0, double c1) {
  const double n = c0 + c1;
  if (n == 0.0) return 0.0;
  const double p = c0 / n;
  return 2.0 * p * (1.0 - p);
}

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& data, const ForestParams& params, std::size_t subset, Rng& rng)
      : data_(data), params_(params), subset_(subset), rng_(rng) {}

  Tree build(std::vector<std::size_t> sample) {
    tree_.uses_feature.assign(data_.features(), false);
    grow(sample, 0);
    return std::move(tree_);
  }

 private:
  int grow(const std::vector<std::size_t>& sample, std::size_t depth) {
    std::array<double, 2> counts{};
    for (std::size_t i : sample) ++counts[static_cast<std::size_t>(data_.y[i])];
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back({});
    tree_.nodes.back().prediction = counts[1] > counts[0] ? 1 : 0;

    const bool pure = counts[0] == 0.0 || counts[1] == 0.0;
    const bool deep = params_.max_depth != 0 && depth >= params_.max_depth;
    if (pure || deep || sample.size() < 2 * params_.min_leaf) return id;

    std::vector<std::size_t> order(data_.features());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t k = 0; k < subset_; ++k) std::swap(order[k], order[k + rng_.index(order.size() - k)]);

    const double n = static_cast<double>(sample.size());
    double best = gini(counts[0], counts[1]) - 1e-12;
    int best_feature = -1;
    int best_category = 0;
    for (std::size_t k = 0; k < subset_; ++k) {
      const std::size_t f = order[k];
      std::vector<std::array<double, 2>> by_category(data_.cardinality[f], {0.0, 0.0});
      for (std::size_t i : sample) ++by_category[static_cast<std::size_t>(data_.x[i][f])][static_cast<std::size_t>(data_.y[i])];
      for (std::size_t c = 0; c < by_category.size(); ++c) {
        const double l0 = by_category[c][0];
        const double l1 = by_category[c][1];
        const double nl = l0 + l1;
        const double nr = n - nl;
        if (nl < static_cast<double>(params_.min_leaf) || nr < static_cast<double>(params_.min_leaf)) continue;
        const double impurity = (nl * gini(l0, l1) + nr * gini(counts[0] - l0, counts[1] - l1)) / n;
        if (impurity < best) {
          best = impurity;
          best_feature = static_cast<int>(f);
          best_category = static_cast<int>(c);
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    for (std::size_t i : sample) {
      (data_.x[i][static_cast<std::size_t>(best_feature)] == best_category ? left : right).push_back(i);
    }
    tree_.uses_feature[static_cast<std::size_t>(best_feature)] = true;
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    auto& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = best_feature;
    node.category = best_category;
    node.left = l;
    node.right = r;
    return id;
  }

  const Dataset& data_;
  const ForestParams& params_;
  std::size_t subset_;
  Rng& rng_;
  Tree tree_;
};

/// Per-vector OOB votes for each class.
inline std::vector<std::array<std::uint32_t, 2>> oob_votes(const Forest& forest, const Dataset& data) {
  std::vector<std::array<std::uint32_t, 2>> votes(data.size(), {0, 0});
  for (const auto& t : forest.trees) {
    for (std::size_t i : t.oob) ++votes[i][static_cast<std::size_t>(t.predict(data.x[i]))];
  }
  return votes;
}

/// Accuracy of the OOB majority vote (ties go to class 0) over vectors with
/// at least one vote.
inline double vote_accuracy(const std::vector<std::array<std::uint32_t, 2>>& votes, const Dataset& data,
                            std::size_t* counted = nullptr) {
  std::size_t n = 0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < votes.size(); ++i) {
    if (votes[i][0] + votes[i][1] == 0) continue;
    ++n;
    correct += (votes[i][1] > votes[i][0] ? 1 : 0) == data.y[i];
  }
  if (counted) *counted = n;
  return n == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(n);
}

inline void check_schema(const Forest& forest, const Dataset& data) {
  if (forest.cardinality != data.cardinality) throw DataError("dataset schema does not match the forest");
}

}  // namespace detail

/// Trains on bootstrap samples (one per tree, seeded per tree index so the
/// result does not depend on `params.jobs`).
inline Forest train_forest(const Dataset& data, ForestParams params, std::uint64_t seed) {
  data.require_trainable();
  if (params.trees == 0) throw ConfigError("forest needs at least one tree");
  if (params.min_leaf == 0) throw ConfigError("min_leaf must be positive");
  const std::size_t k = data.features();
  std::size_t subset = params.feature_subset;
  if (subset == 0) subset = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(k))));
  subset = std::clamp<std::size_t>(subset, 1, k);

  Forest forest;
  forest.params = params;
  forest.cardinality = data.cardinality;
  forest.trees.resize(params.trees);
  parallel_for(params.trees, params.jobs, [&](std::size_t t) {
    Rng rng(mix_seed(seed, hash_tag("tree"), t));
    std::vector<std::size_t> sample(data.size());
    std::vector<bool> in_bag(data.size(), false);
    for (auto& i : sample) {
      i = rng.index(data.size());
      in_bag[i] = true;
    }
    detail::TreeBuilder builder(data, params, subset, rng);
    Tree tree = builder.build(std::move(sample));
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (!in_bag[i]) tree.oob.push_back(i);
    }
    forest.trees[t] = std::move(tree);
  });
  forest.oob_accuracy = detail::vote_accuracy(detail::oob_votes(forest, data), data, &forest.oob_vectors);
  return forest;
}

struct Importance {
  double mean = 0.0;  // mean OOB accuracy drop
  double std = 0.0;   // sample standard deviation over repetitions
  double se = 0.0;    // std / sqrt(repetitions)
};

/// Mean drop in OOB accuracy when one feature column is permuted, over
/// `repetitions` seeded permutations. Trees that never split on the feature
/// keep their votes.
inline std::vector<Importance> permutation_importance(const Forest& forest, const Dataset& data,
                                                      std::size_t repetitions, std::uint64_t seed, unsigned jobs = 1) {
  detail::check_schema(forest, data);
  if (repetitions < 2) throw ConfigError("permutation importance needs at least two repetitions");
  const auto base_votes = detail::oob_votes(forest, data);
  const double baseline = detail::vote_accuracy(base_votes, data);
  std::vector<Importance> out(data.features());
  parallel_for(data.features(), jobs, [&](std::size_t f) {
    std::vector<double> drops;
    for (std::size_t b = 0; b < repetitions; ++b) {
      std::vector<std::size_t> perm(data.size());
      std::iota(perm.begin(), perm.end(), 0);
      Rng rng(mix_seed(seed, hash_tag("permute"), f, b));
      rng.shuffle(perm);
      auto votes = base_votes;
      for (const auto& t : forest.trees) {
        if (!t.uses_feature[f]) continue;
        for (std::size_t i : t.oob) {
          --votes[i][static_cast<std::size_t>(t.predict(data.x[i]))];
          ++votes[i][static_cast<std::size_t>(t.predict(data.x[i], f, data.x[perm[i]][f]))];
        }
      }
      drops.push_back(baseline - detail::vote_accuracy(votes, data));
    }
    Importance imp;
    for (double d : drops) imp.mean += d;
    imp.mean /= static_cast<double>(repetitions);
    double ss = 0.0;
    for (double d : drops) ss += (d - imp.mean) * (d - imp.mean);
    imp.std = std::sqrt(ss / static_cast<double>(repetitions - 1));
    imp.se = imp.std / std::sqrt(static_cast<double>(repetitions));
    out[f] = imp;
  });
  return out;
}

/// True when the forest's OOB accuracy beats always predicting the majority
/// class by more than two binomial standard errors.
inline bool forest_informative(const Forest& forest, const Dataset& data) {
  detail::check_schema(forest, data);
  const double n = static_cast<double>(data.size());
  const double p = static_cast<double>(std::max(data.count(kAgree), data.count(kDisagree))) / n;
  return forest.oob_accuracy > p + 2.0 * std::sqrt(p * (1.0 - p) / n);
}

struct Selection {
  std::vector<std::size_t> features;  // ascending
  bool fallback = false;              // no feature passed the cutoff
};

/// Features whose mean drop exceeds two standard errors and `min_drop`;
/// otherwise, or when the forest is not informative, the two with the
/// largest mean (lower index first on ties).
inline Selection select_attributes(std::span<const Importance> importances, bool informative = true,
                                   double min_drop = 0.01) {
  if (importances.empty()) throw DataError("no importances to select from");
  Selection s;
  for (std::size_t f = 0; informative && f < importances.size(); ++f) {
    const auto& imp = importances[f];
    if (imp.mean > 2.0 * imp.se && imp.mean > min_drop) s.features.push_back(f);
  }
  if (!s.features.empty()) return s;
  s.fallback = true;
  std::vector<std::size_t> order(importances.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return importances[a].mean > importances[b].mean; });
  order.resize(std::min<std::size_t>(2, order.size()));
  std::sort(order.begin(), order.end());
  s.features = order;
  return s;
}

}  // namespace lanecheck
