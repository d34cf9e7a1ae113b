#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bankforge/common.hpp"

namespace bankforge {

// ---------------------------------------------------------------------------
// Feature schema. Fixed and versioned so trained models stay portable.
// Per-dimension parameters are padded to 4 dimensions.
// ---------------------------------------------------------------------------

inline constexpr std::size_t kRawFeatureCount = 38;

inline const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> names = {
      "n0",        "n1",         "n2",      "n3",       "b0",      "b1",      "b2",
      "b3",        "alpha0",     "alpha1",  "alpha2",   "alpha3",  "p0",      "p1",
      "p2",        "p3",         "delta0",  "delta1",   "delta2",  "delta3",  "n_total",
      "bank_capacity", "ports",  "element_bits", "duplication", "dag_add", "dag_sub",
      "dag_shift", "dag_mux",    "dag_mul", "dag_div",  "dag_mod", "readers", "writers",
      "max_fo",    "max_fi",     "groups",  "controller_depth"};
  return names;
}

inline const std::string& feature_schema_id() {
  static const std::string id = "bankforge-features-v1";
  return id;
}

/// Degree-2 polynomial expansion: raw features followed by every pairwise
/// product x_i*x_j with i <= j, in lexicographic (i, j) order.
inline std::vector<double> poly_expand(const std::vector<double>& f) {
  std::vector<double> out;
  out.reserve(f.size() + f.size() * (f.size() + 1) / 2);
  out.insert(out.end(), f.begin(), f.end());
  for (std::size_t i = 0; i < f.size(); ++i)
    for (std::size_t j = i; j < f.size(); ++j) out.push_back(f[i] * f[j]);
  return out;
}

inline std::size_t expanded_feature_count(std::size_t d) { return d + d * (d + 1) / 2; }

// ---------------------------------------------------------------------------
// Gradient-boosted regression trees, squared-error objective, second-order
// boosting (g = pred - y, h = 1) with L2/L1 regularized leaves and a minimum
// split gain.
// ---------------------------------------------------------------------------

struct GbtParams {
  int n_estimators = 159;
  int max_depth = 3;
  double learning_rate = 0.1;
  double subsample = 0.6;
  double colsample_by_tree = 1.0;
  double lambda = 0.04;
  double alpha = 3.0;
  double gamma = 5.0;
  int min_samples_split = 10;
  u64 random_state = 30;
};

struct GbtTree {
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double weight = 0.0;
  };
  std::vector<Node> nodes;

  double predict(const std::vector<double>& f) const {
    int n = 0;
    while (nodes[static_cast<std::size_t>(n)].feature >= 0) {
      const Node& nd = nodes[static_cast<std::size_t>(n)];
      n = f[static_cast<std::size_t>(nd.feature)] < nd.threshold ? nd.left : nd.right;
    }
    return nodes[static_cast<std::size_t>(n)].weight;
  }
};

struct GbtModel {
  std::string target;
  GbtParams params;
  double base = 0.0;
  bool degenerate = false;
  std::vector<GbtTree> trees;
  std::vector<i64> feature_mask;  // selected expanded-feature indices; empty = all
  std::string schema = feature_schema_id();

  /// base + lr * sum of trees, clamped at zero.
  double predict(const std::vector<double>& expanded) const {
    double p = base;
    for (const GbtTree& t : trees) p += params.learning_rate * t.predict(expanded);
    return p < 0.0 ? 0.0 : p;
  }
};

namespace detail {

struct SplitScratch {
  double gl = 0.0, hl = 0.0;
  i64 nl = 0;
  double prev = 0.0;
  bool prev_set = false;
  double best_gain = 0.0;
  int best_feature = -1;
  double best_threshold = 0.0;
};

struct NodeStats {
  double g = 0.0, h = 0.0;
  i64 count = 0;
  int tree_index = -1;  // index in the emitted tree
  bool active = false;  // still splittable
  int left_child = -1;
  int right_child = -1;
};

class GbtTrainer {
public:
  GbtTrainer(const std::vector<std::vector<double>>& rows, const std::vector<double>& y,
             const GbtParams& params, const std::vector<i64>& allowed)
      : rows_(rows), y_(y), params_(params) {
    n_rows_ = rows.size();
    n_feats_ = rows.empty() ? 0 : rows[0].size();
    if (allowed.empty()) {
      for (std::size_t f = 0; f < n_feats_; ++f) allowed_.push_back(f);
    } else {
      for (i64 f : allowed) allowed_.push_back(static_cast<std::size_t>(f));
    }
    // Per-feature presorted (value, row) columns; sequential scans later.
    sorted_values_.resize(n_feats_);
    sorted_rows_.resize(n_feats_);
    std::vector<std::size_t> order(n_rows_);
    for (std::size_t f : allowed_) {
      for (std::size_t r = 0; r < n_rows_; ++r) order[r] = r;
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return rows[a][f] < rows[b][f];
      });
      sorted_values_[f].resize(n_rows_);
      sorted_rows_[f].resize(n_rows_);
      for (std::size_t i = 0; i < n_rows_; ++i) {
        sorted_values_[f][i] = rows[order[i]][f];
        sorted_rows_[f][i] = static_cast<int>(order[i]);
      }
    }
  }

  GbtModel train(const std::string& target) {
    GbtModel model;
    model.target = target;
    model.params = params_;
    if (n_rows_ == 0) fail(errc::empty_dataset, "cannot train on an empty dataset");

    double mean = 0.0;
    for (double v : y_) mean += v;
    mean /= static_cast<double>(n_rows_);
    model.base = mean;

    bool constant = true;
    for (double v : y_)
      if (v != y_[0]) constant = false;
    if (constant) {
      model.base = y_[0];
      model.degenerate = true;
      return model;
    }

    pred_.assign(n_rows_, model.base);
    std::mt19937_64 rng(params_.random_state);

    for (int t = 0; t < params_.n_estimators; ++t) {
      // Row subsampling per tree from the single seeded stream.
      node_of_.assign(n_rows_, -1);
      double g_root = 0.0, h_root = 0.0;
      i64 c_root = 0;
      for (std::size_t r = 0; r < n_rows_; ++r) {
        bool in = params_.subsample >= 1.0 ||
                  (static_cast<double>(rng() >> 11) * 0x1.0p-53) < params_.subsample;
        if (!in) continue;
        node_of_[r] = 0;
        g_root += pred_[r] - y_[r];
        h_root += 1.0;
        ++c_root;
      }
      GbtTree tree;
      if (c_root == 0) {
        tree.nodes.push_back({});
        model.trees.push_back(std::move(tree));
        continue;
      }
      grow_tree(tree, g_root, h_root, c_root);
      for (std::size_t r = 0; r < n_rows_; ++r)
        pred_[r] += params_.learning_rate * tree.predict(rows_[r]);
      model.trees.push_back(std::move(tree));
    }
    return model;
  }

private:
  double leaf_weight(double g, double h) const {
    double a = params_.alpha;
    double num = g > 0 ? g - a : g + a;
    if ((g > 0 && num < 0) || (g < 0 && num > 0) || g == 0) num = 0;
    return -num / (h + params_.lambda);
  }

  double split_gain(double gl, double hl, double gr, double hr) const {
    double lam = params_.lambda;
    double full = (gl + gr) * (gl + gr) / (hl + hr + lam);
    return 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - full) - params_.gamma;
  }

  void grow_tree(GbtTree& tree, double g_root, double h_root, i64 c_root) {
    std::vector<NodeStats> nodes(1);
    nodes[0].g = g_root;
    nodes[0].h = h_root;
    nodes[0].count = c_root;
    nodes[0].tree_index = 0;
    nodes[0].active = true;
    tree.nodes.push_back({});
    std::vector<int> level = {0};

    for (int depth = 0; depth < params_.max_depth && !level.empty(); ++depth) {
      std::vector<SplitScratch> scratch(nodes.size());
      for (int ni : level) {
        if (nodes[ni].count < params_.min_samples_split) nodes[ni].active = false;
      }

      for (std::size_t f : allowed_) {
        for (int ni : level) {
          scratch[ni].gl = scratch[ni].hl = 0.0;
          scratch[ni].nl = 0;
          scratch[ni].prev_set = false;
        }
        const std::vector<double>& vals = sorted_values_[f];
        const std::vector<int>& rws = sorted_rows_[f];
        for (std::size_t i = 0; i < n_rows_; ++i) {
          int r = rws[i];
          int ni = node_of_[static_cast<std::size_t>(r)];
          if (ni < 0 || !nodes[ni].active) continue;
          SplitScratch& s = scratch[ni];
          double v = vals[i];
          if (s.prev_set && v > s.prev && s.nl > 0 && s.nl < nodes[ni].count) {
            double gain = split_gain(s.gl, s.hl, nodes[ni].g - s.gl, nodes[ni].h - s.hl);
            // Strict improvement keeps the earliest (feature, threshold) on
            // ties; best_gain starts at 0 so only positive gains split.
            if (gain > s.best_gain) {
              s.best_gain = gain;
              s.best_feature = static_cast<int>(f);
              s.best_threshold = 0.5 * (s.prev + v);
            }
          }
          s.gl += pred_[static_cast<std::size_t>(r)] - y_[static_cast<std::size_t>(r)];
          s.hl += 1.0;
          ++s.nl;
          s.prev = v;
          s.prev_set = true;
        }
      }

      // Materialize the accepted splits and partition rows. Indices only:
      // both vectors reallocate while children are appended.
      std::vector<int> next_level;
      for (int ni : level) {
        const SplitScratch& s = scratch[static_cast<std::size_t>(ni)];
        if (!nodes[static_cast<std::size_t>(ni)].active || s.best_feature < 0) {
          nodes[static_cast<std::size_t>(ni)].active = false;
          continue;
        }
        int tree_index = nodes[static_cast<std::size_t>(ni)].tree_index;
        int tleft = static_cast<int>(tree.nodes.size());
        int tright = tleft + 1;
        tree.nodes.push_back({});
        tree.nodes.push_back({});
        tree.nodes[static_cast<std::size_t>(tree_index)].feature = s.best_feature;
        tree.nodes[static_cast<std::size_t>(tree_index)].threshold = s.best_threshold;
        tree.nodes[static_cast<std::size_t>(tree_index)].left = tleft;
        tree.nodes[static_cast<std::size_t>(tree_index)].right = tright;
        int li = static_cast<int>(nodes.size());
        int ri = li + 1;
        NodeStats lnode, rnode;
        lnode.tree_index = tleft;
        lnode.active = true;
        rnode.tree_index = tright;
        rnode.active = true;
        nodes.push_back(lnode);
        nodes.push_back(rnode);
        nodes[static_cast<std::size_t>(ni)].left_child = li;
        nodes[static_cast<std::size_t>(ni)].right_child = ri;
        next_level.push_back(li);
        next_level.push_back(ri);
      }
      for (std::size_t r = 0; r < n_rows_; ++r) {
        int ni = node_of_[r];
        if (ni < 0 || nodes[ni].left_child < 0) continue;
        const GbtTree::Node& tn = tree.nodes[static_cast<std::size_t>(nodes[ni].tree_index)];
        int child = rows_[r][static_cast<std::size_t>(tn.feature)] < tn.threshold
                        ? nodes[ni].left_child
                        : nodes[ni].right_child;
        node_of_[r] = child;
        nodes[child].g += pred_[r] - y_[r];
        nodes[child].h += 1.0;
        ++nodes[child].count;
      }
      level = std::move(next_level);
    }

    // Remaining nodes become leaves.
    for (const NodeStats& ns : nodes)
      if (ns.left_child < 0)
        tree.nodes[static_cast<std::size_t>(ns.tree_index)].weight = leaf_weight(ns.g, ns.h);
  }

  const std::vector<std::vector<double>>& rows_;
  const std::vector<double>& y_;
  GbtParams params_;
  std::size_t n_rows_ = 0;
  std::size_t n_feats_ = 0;
  std::vector<std::size_t> allowed_;
  std::vector<std::vector<double>> sorted_values_;
  std::vector<std::vector<int>> sorted_rows_;
  std::vector<double> pred_;
  std::vector<int> node_of_;
};

}  // namespace detail

inline GbtModel train(const std::vector<std::vector<double>>& expanded_rows,
                      const std::vector<double>& y, const GbtParams& params,
                      const std::string& target, const std::vector<i64>& allowed = {}) {
  if (expanded_rows.empty()) fail(errc::empty_dataset, "cannot train on an empty dataset");
  detail::GbtTrainer trainer(expanded_rows, y, params, allowed);
  GbtModel m = trainer.train(target);
  m.feature_mask = allowed;
  return m;
}

/// Split frequency per feature across the whole ensemble.
inline std::vector<i64> split_importance(const GbtModel& model, std::size_t n_features) {
  std::vector<i64> counts(n_features, 0);
  for (const GbtTree& t : model.trees)
    for (const auto& n : t.nodes)
      if (n.feature >= 0) ++counts[static_cast<std::size_t>(n.feature)];
  return counts;
}

/// Keep the n most frequently used generated features (ties broken by index)
/// and retrain on that mask.
inline GbtModel select_and_retrain(const GbtModel& model,
                                   const std::vector<std::vector<double>>& expanded_rows,
                                   const std::vector<double>& y, std::size_t n = 36) {
  std::size_t d = expanded_rows.empty() ? 0 : expanded_rows[0].size();
  if (n >= d) {
    GbtModel out = model;
    out.feature_mask.clear();
    return out;
  }
  std::vector<i64> counts = split_importance(model, d);
  std::vector<i64> order(d);
  for (std::size_t i = 0; i < d; ++i) order[i] = static_cast<i64>(i);
  std::stable_sort(order.begin(), order.end(), [&](i64 a, i64 b) {
    if (counts[static_cast<std::size_t>(a)] != counts[static_cast<std::size_t>(b)])
      return counts[static_cast<std::size_t>(a)] > counts[static_cast<std::size_t>(b)];
    return a < b;
  });
  std::vector<i64> mask(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n));
  std::sort(mask.begin(), mask.end());
  return train(expanded_rows, y, model.params, model.target, mask);
}

inline double r_squared(const std::vector<double>& truth, const std::vector<double>& pred) {
  double mean = 0.0;
  for (double v : truth) mean += v;
  mean /= static_cast<double>(truth.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ss_res += (truth[i] - pred[i]) * (truth[i] - pred[i]);
    ss_tot += (truth[i] - mean) * (truth[i] - mean);
  }
  if (ss_tot == 0.0) return ss_res == 0.0 ? 1.0 : 0.0;
  return 1.0 - ss_res / ss_tot;
}

// ---------------------------------------------------------------------------
// Dataset container + cross-validation protocol.
// ---------------------------------------------------------------------------

struct Dataset {
  std::vector<std::vector<double>> rows;  // raw features, schema order
  std::vector<double> lut, ff, bram;

  const std::vector<double>& target(const std::string& name) const {
    if (name == "lut") return lut;
    if (name == "ff") return ff;
    if (name == "bram") return bram;
    fail(errc::invalid_input, "unknown target '" + name + "' (expected lut, ff or bram)");
  }
};

struct CurvePoint {
  double fraction = 0.0;
  double mean_train_r2 = 0.0, std_train_r2 = 0.0;
  double mean_test_r2 = 0.0, std_test_r2 = 0.0;
};

/// Full pipeline (degree-2 expansion, GBT, top-36 re-selection) under the
/// 10x random-permutation, 70/30-split protocol, scored with R^2 at
/// increasing training-set fractions.
inline std::vector<CurvePoint> cross_validate(const Dataset& data, const GbtParams& params,
                                              const std::string& target,
                                              const std::vector<double>& fractions = {0.25, 0.5,
                                                                                      0.75, 1.0},
                                              int permutations = 10, std::size_t top_n = 36) {
  if (data.rows.empty()) fail(errc::empty_dataset, "empty dataset");
  const std::vector<double>& y_all = data.target(target);

  std::vector<std::vector<double>> expanded;
  expanded.reserve(data.rows.size());
  for (const auto& r : data.rows) expanded.push_back(poly_expand(r));

  std::size_t n = expanded.size();
  std::size_t n_train_full = (n * 7) / 10;
  std::vector<CurvePoint> curve(fractions.size());
  std::vector<std::vector<double>> train_scores(fractions.size()), test_scores(fractions.size());

  for (int perm = 0; perm < permutations; ++perm) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::mt19937_64 rng(params.random_state + 7919u * static_cast<u64>(perm + 1));
    std::shuffle(order.begin(), order.end(), rng);

    for (std::size_t fi = 0; fi < fractions.size(); ++fi) {
      std::size_t n_train = static_cast<std::size_t>(
          std::max<double>(1.0, fractions[fi] * static_cast<double>(n_train_full)));
      std::vector<std::vector<double>> xt;
      std::vector<double> yt;
      for (std::size_t i = 0; i < n_train; ++i) {
        xt.push_back(expanded[order[i]]);
        yt.push_back(y_all[order[i]]);
      }
      GbtModel m0 = train(xt, yt, params, target);
      GbtModel m = select_and_retrain(m0, xt, yt, top_n);

      std::vector<double> pt, tt;
      for (std::size_t i = 0; i < n_train; ++i) pt.push_back(m.predict(xt[i]));
      train_scores[fi].push_back(r_squared(yt, pt));

      std::vector<double> py, ty;
      for (std::size_t i = n_train_full; i < n; ++i) {
        py.push_back(m.predict(expanded[order[i]]));
        ty.push_back(y_all[order[i]]);
      }
      test_scores[fi].push_back(r_squared(ty, py));
    }
  }

  auto mean_std = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    return std::make_pair(mean, std::sqrt(var / static_cast<double>(v.size())));
  };
  for (std::size_t fi = 0; fi < fractions.size(); ++fi) {
    curve[fi].fraction = fractions[fi];
    auto [mt, st] = mean_std(train_scores[fi]);
    auto [mv, sv] = mean_std(test_scores[fi]);
    curve[fi].mean_train_r2 = mt;
    curve[fi].std_train_r2 = st;
    curve[fi].mean_test_r2 = mv;
    curve[fi].std_test_r2 = sv;
  }
  return curve;
}

inline void write_curves_csv(const std::vector<CurvePoint>& curve, std::ostream& os) {
  os << "fraction,mean_train_r2,std_train_r2,mean_test_r2,std_test_r2\n";
  for (const CurvePoint& p : curve)
    os << p.fraction << ',' << p.mean_train_r2 << ',' << p.std_train_r2 << ','
       << p.mean_test_r2 << ',' << p.std_test_r2 << '\n';
}

// ---------------------------------------------------------------------------
// CSV and model serialization.
// ---------------------------------------------------------------------------

inline void write_dataset_csv(const Dataset& data, std::ostream& os) {
  const auto& names = feature_names();
  for (std::size_t i = 0; i < names.size(); ++i) os << (i ? "," : "") << names[i];
  os << ",lut,ff,bram\n";
  for (std::size_t r = 0; r < data.rows.size(); ++r) {
    for (std::size_t i = 0; i < data.rows[r].size(); ++i) os << (i ? "," : "") << data.rows[r][i];
    os << ',' << data.lut[r] << ',' << data.ff[r] << ',' << data.bram[r] << '\n';
  }
}

inline Dataset read_dataset_csv(std::istream& is) {
  Dataset data;
  std::string line;
  if (!std::getline(is, line)) fail(errc::empty_dataset, "dataset CSV has no header");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  const auto& names = feature_names();
  if (header.size() != names.size() + 3)
    fail(errc::invalid_input, "dataset CSV has " + std::to_string(header.size()) +
                                  " columns, expected " + std::to_string(names.size() + 3));
  for (std::size_t i = 0; i < names.size(); ++i)
    if (header[i] != names[i])
      fail(errc::invalid_input, "dataset column " + std::to_string(i) + " is '" + header[i] +
                                    "', expected '" + names[i] + "'");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ss, cell, ',')) {
      double v = std::strtod(cell.c_str(), nullptr);
      if (!std::isfinite(v)) fail(errc::invalid_input, "non-finite value in dataset: " + cell);
      vals.push_back(v);
    }
    if (vals.size() != names.size() + 3)
      fail(errc::invalid_input, "dataset row has wrong arity");
    data.rows.emplace_back(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(names.size()));
    data.lut.push_back(vals[names.size()]);
    data.ff.push_back(vals[names.size() + 1]);
    data.bram.push_back(vals[names.size() + 2]);
  }
  return data;
}

inline nlohmann::json model_to_json(const GbtModel& m) {
  nlohmann::json j;
  j["schema"] = "bankforge-gbt-v1";
  j["feature_schema"] = m.schema;
  j["target"] = m.target;
  j["base"] = m.base;
  j["degenerate"] = m.degenerate;
  j["params"] = {{"n_estimators", m.params.n_estimators},
                 {"max_depth", m.params.max_depth},
                 {"learning_rate", m.params.learning_rate},
                 {"subsample", m.params.subsample},
                 {"colsample_by_tree", m.params.colsample_by_tree},
                 {"lambda", m.params.lambda},
                 {"alpha", m.params.alpha},
                 {"gamma", m.params.gamma},
                 {"min_samples_split", m.params.min_samples_split},
                 {"random_state", m.params.random_state}};
  j["feature_mask"] = m.feature_mask;
  nlohmann::json trees = nlohmann::json::array();
  for (const GbtTree& t : m.trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : t.nodes) {
      if (n.feature < 0)
        nodes.push_back({{"leaf", n.weight}});
      else
        nodes.push_back(
            {{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}});
    }
    trees.push_back({{"nodes", nodes}});
  }
  j["trees"] = std::move(trees);
  return j;
}

inline GbtModel model_from_json(const nlohmann::json& j) {
  if (!j.contains("schema") || j["schema"] != "bankforge-gbt-v1")
    fail(errc::invalid_input, "not a bankforge model file");
  GbtModel m;
  m.schema = j.value("feature_schema", feature_schema_id());
  m.target = j.value("target", "");
  m.base = j.at("base").get<double>();
  m.degenerate = j.value("degenerate", false);
  const auto& p = j.at("params");
  m.params.n_estimators = p.at("n_estimators").get<int>();
  m.params.max_depth = p.at("max_depth").get<int>();
  m.params.learning_rate = p.at("learning_rate").get<double>();
  m.params.subsample = p.at("subsample").get<double>();
  m.params.colsample_by_tree = p.at("colsample_by_tree").get<double>();
  m.params.lambda = p.at("lambda").get<double>();
  m.params.alpha = p.at("alpha").get<double>();
  m.params.gamma = p.at("gamma").get<double>();
  m.params.min_samples_split = p.at("min_samples_split").get<int>();
  m.params.random_state = p.at("random_state").get<u64>();
  m.feature_mask = j.value("feature_mask", std::vector<i64>{});
  for (const auto& tj : j.at("trees")) {
    GbtTree t;
    for (const auto& nj : tj.at("nodes")) {
      GbtTree::Node n;
      if (nj.contains("leaf")) {
        n.weight = nj.at("leaf").get<double>();
      } else {
        n.feature = nj.at("feature").get<int>();
        n.threshold = nj.at("threshold").get<double>();
        n.left = nj.at("left").get<int>();
        n.right = nj.at("right").get<int>();
      }
      t.nodes.push_back(n);
    }
    m.trees.push_back(std::move(t));
  }
  return m;
}

}  // namespace bankforge
