#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tamakkon/core.hpp"

namespace tamakkon::learners {

// Regression tree node, stored flat. Leaves have feature_index < 0.
struct RfNode {
  int feature_index = -1;   // index into RfModel::features
  double threshold = 0.0;   // go left when x <= threshold
  int left = -1;
  int right = -1;
  double value = 0.0;       // leaf mean

  friend bool operator==(const RfNode&, const RfNode&) = default;
};

struct RfTree {
  std::vector<RfNode> nodes;

  double evaluate(const std::vector<double>& x) const {
    int idx = 0;
    while (nodes[idx].feature_index >= 0) {
      idx = x[nodes[idx].feature_index] <= nodes[idx].threshold ? nodes[idx].left
                                                                : nodes[idx].right;
    }
    return nodes[idx].value;
  }

  friend bool operator==(const RfTree&, const RfTree&) = default;
};

struct RfModel {
  std::size_t ntree = 0;
  std::size_t mtry = 1;
  std::size_t min_leaf = 5;
  std::uint64_t seed = 0;
  std::vector<RfTree> trees;
  std::vector<std::string> features;

  std::vector<double> vectorize(const std::map<std::string, double>& x) const {
    std::vector<double> v(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) {
      auto it = x.find(features[i]);
      if (it == x.end()) throw Error(ErrorCode::MissingFeature, "RF: missing feature " + features[i]);
      v[i] = it->second;
    }
    return v;
  }

  double evaluate(const std::map<std::string, double>& x) const {
    const auto v = vectorize(x);
    double s = 0.0;
    for (const auto& t : trees) s += t.evaluate(v);
    return s / static_cast<double>(trees.size());
  }

  friend bool operator==(const RfModel&, const RfModel&) = default;
};

struct RfConfig {
  std::size_t ntree = 500;
  std::optional<std::size_t> mtry;  // default max(1, floor(p/3))
  std::size_t min_leaf = 5;
};

namespace detail {

// splitmix64-style mix for per-tree seeds
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

struct TreeBuilder {
  const std::vector<std::vector<double>>& x;
  const std::vector<double>& y;
  std::size_t mtry;
  std::size_t min_leaf;
  std::mt19937_64& rng;
  RfTree tree;

  int build(std::vector<std::size_t>& samples) {
    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    double sum = 0.0;
    for (auto i : samples) sum += y[i];
    const double mean = sum / static_cast<double>(samples.size());

    if (samples.size() < 2 * min_leaf) {
      tree.nodes[node_id].value = mean;
      return node_id;
    }
    double sse = 0.0;
    for (auto i : samples) sse += (y[i] - mean) * (y[i] - mean);
    if (sse <= 1e-12) {
      tree.nodes[node_id].value = mean;
      return node_id;
    }

    // Sample mtry candidate features without replacement.
    const std::size_t p = x.front().size();
    std::vector<std::size_t> feat_idx(p);
    std::iota(feat_idx.begin(), feat_idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < std::min(mtry, p); ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, p - 1);
      std::swap(feat_idx[i], feat_idx[pick(rng)]);
    }
    feat_idx.resize(std::min(mtry, p));
    std::sort(feat_idx.begin(), feat_idx.end());

    int best_feature = -1;
    double best_threshold = 0.0;
    double best_score = -1.0;  // weighted child SSE reduction
    for (auto f : feat_idx) {
      std::vector<std::size_t> order = samples;
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (x[a][f] != x[b][f]) return x[a][f] < x[b][f];
        return a < b;
      });
      // Prefix sums over the sorted order; only splits between distinct
      // feature values are valid.
      double left_sum = 0.0, left_sq = 0.0;
      double total_sum = 0.0, total_sq = 0.0;
      for (auto i : order) {
        total_sum += y[i];
        total_sq += y[i] * y[i];
      }
      const std::size_t n = order.size();
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left_sum += y[order[i]];
        left_sq += y[order[i]] * y[order[i]];
        const std::size_t nl = i + 1, nr = n - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        if (x[order[i]][f] == x[order[i + 1]][f]) continue;
        const double right_sum = total_sum - left_sum;
        const double right_sq = total_sq - left_sq;
        const double sse_l = left_sq - left_sum * left_sum / static_cast<double>(nl);
        const double sse_r = right_sq - right_sum * right_sum / static_cast<double>(nr);
        const double score = sse - (sse_l + sse_r);
        if (score > best_score + 1e-12) {
          best_score = score;
          best_feature = static_cast<int>(f);
          best_threshold = (x[order[i]][f] + x[order[i + 1]][f]) / 2.0;
        }
      }
    }

    if (best_feature < 0 || best_score <= 0.0) {
      tree.nodes[node_id].value = mean;
      return node_id;
    }

    std::vector<std::size_t> left, right;
    for (auto i : samples) {
      (x[i][best_feature] <= best_threshold ? left : right).push_back(i);
    }
    tree.nodes[node_id].feature_index = best_feature;
    tree.nodes[node_id].threshold = best_threshold;
    const int l = build(left);
    tree.nodes[node_id].left = l;
    const int r = build(right);
    tree.nodes[node_id].right = r;
    return node_id;
  }
};

}  // namespace detail

inline RfModel fit_rf(const ProfileDataset& ds, const std::vector<std::string>& features,
                      const RfConfig& cfg = {}, std::uint64_t seed = 0) {
  const std::size_t n = ds.records.size();
  if (n < 2 * cfg.min_leaf) throw Error(ErrorCode::TooFewRows, "fit_rf: too few rows");
  const std::size_t p = features.size();
  const std::size_t mtry = cfg.mtry.value_or(std::max<std::size_t>(1, p / 3));
  if (mtry < 1 || mtry > p) throw Error(ErrorCode::MtryOutOfRange, "fit_rf: mtry out of range");

  std::vector<std::vector<double>> x(n, std::vector<double>(p));
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      auto it = ds.records[i].values.find(features[j]);
      if (it == ds.records[i].values.end()) {
        throw Error(ErrorCode::MissingFeature, "fit_rf: missing feature " + features[j]);
      }
      x[i][j] = it->second;
    }
    y[i] = ds.records[i].response;
  }

  RfModel m;
  m.ntree = cfg.ntree;
  m.mtry = mtry;
  m.min_leaf = cfg.min_leaf;
  m.seed = seed;
  m.features = features;
  m.trees.reserve(cfg.ntree);
  for (std::size_t t = 0; t < cfg.ntree; ++t) {
    std::mt19937_64 rng(detail::mix_seed(seed, t));
    std::vector<std::size_t> bootstrap(n);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t i = 0; i < n; ++i) bootstrap[i] = pick(rng);
    std::sort(bootstrap.begin(), bootstrap.end());
    detail::TreeBuilder builder{x, y, mtry, cfg.min_leaf, rng, {}};
    builder.build(bootstrap);
    m.trees.push_back(std::move(builder.tree));
  }
  return m;
}

}  // namespace tamakkon::learners
