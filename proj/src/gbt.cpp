#include "noisychannel/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "noisychannel/errors.hpp"

namespace noisychannel {

void FeatureMatrix::append_row(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) cols_ = values.size();
  if (values.size() != cols_) throw DomainError("FeatureMatrix::append_row: width mismatch");
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

double RegressionTree::predict(std::span<const double> x) const {
  std::size_t i = 0;
  while (nodes[i].feature >= 0) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right);
  }
  return nodes[i].value;
}

std::vector<double> GbtEnsemble::raw_scores(std::span<const double> x) const {
  if (x.size() != n_features) throw DomainError("predict: expected " + std::to_string(n_features) + " features, got " +
                                                std::to_string(x.size()));
  std::vector<double> out = base_scores;
  for (const auto& round : trees) {
    for (std::size_t k = 0; k < round.size(); ++k) out[k] += learning_rate * round[k].predict(x);
  }
  return out;
}

namespace {

// Nonzero entries of every column, sorted by value (then row). Zeros are
// implicit, which keeps sparse TFIDF columns cheap to scan.
struct ColumnIndex {
  struct Entry {
    double value;
    std::size_t row;
  };
  std::vector<std::vector<Entry>> columns;
  std::vector<std::size_t> first_positive;  // per column: index of the first value > 0

  explicit ColumnIndex(const FeatureMatrix& X) : columns(X.cols()), first_positive(X.cols()) {
    for (std::size_t r = 0; r < X.rows(); ++r) {
      for (std::size_t c = 0; c < X.cols(); ++c) {
        const double v = X.at(r, c);
        if (v != 0.0) columns[c].push_back({v, r});
      }
    }
    for (std::size_t c = 0; c < X.cols(); ++c) {
      auto& col = columns[c];
      std::sort(col.begin(), col.end(), [](const Entry& a, const Entry& b) {
        return a.value < b.value || (a.value == b.value && a.row < b.row);
      });
      first_positive[c] = static_cast<std::size_t>(
          std::find_if(col.begin(), col.end(), [](const Entry& e) { return e.value > 0.0; }) - col.begin());
    }
  }
};

struct SplitCandidate {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

struct NodeScan {
  double sum = 0.0;
  std::size_t count = 0;
  // per-feature scan state
  double nnz_sum = 0.0;
  std::size_t nnz_count = 0;
  double left_sum = 0.0;
  std::size_t left_count = 0;
  double prev_value = 0.0;
  SplitCandidate best;
};

bool better(double gain, double best) { return gain > best + 1e-12 * (1.0 + std::abs(best)); }

// Grows one tree on gradients g with leaf value sum(g) / sum(h) * leaf_scale.
RegressionTree grow_tree(const FeatureMatrix& X, const ColumnIndex& index, const std::vector<double>& g,
                         const std::vector<double>& h, double leaf_scale, const GbtConfig& cfg) {
  const std::size_t n = X.rows();
  RegressionTree tree;
  tree.nodes.emplace_back();
  std::vector<int> node_of(n, 0);
  std::vector<int> level{0};

  for (std::size_t depth = 0; depth < cfg.max_depth && !level.empty(); ++depth) {
    std::vector<NodeScan> scan(tree.nodes.size());
    for (std::size_t r = 0; r < n; ++r) {
      if (node_of[r] < 0) continue;
      scan[node_of[r]].sum += g[r];
      scan[node_of[r]].count += 1;
    }
    auto active = [&](std::size_t r) { return node_of[r] >= 0 && scan[node_of[r]].count >= 2 * cfg.min_leaf; };
    auto feed = [&](NodeScan& s, int feature, double value, double gsum, std::size_t c) {
      if (s.left_count > 0 && value != s.prev_value) {
        const std::size_t right_count = s.count - s.left_count;
        if (s.left_count >= cfg.min_leaf && right_count >= cfg.min_leaf) {
          const double right_sum = s.sum - s.left_sum;
          const double gain = s.left_sum * s.left_sum / static_cast<double>(s.left_count) +
                              right_sum * right_sum / static_cast<double>(right_count) -
                              s.sum * s.sum / static_cast<double>(s.count);
          if (better(gain, s.best.gain)) s.best = {gain, feature, 0.5 * (s.prev_value + value)};
        }
      }
      s.left_sum += gsum;
      s.left_count += c;
      s.prev_value = value;
    };

    for (std::size_t f = 0; f < X.cols(); ++f) {
      const auto& col = index.columns[f];
      for (int node : level) {
        auto& s = scan[node];
        s.nnz_sum = 0.0;
        s.nnz_count = 0;
        s.left_sum = 0.0;
        s.left_count = 0;
      }
      for (const auto& e : col) {
        if (!active(e.row)) continue;
        auto& s = scan[node_of[e.row]];
        s.nnz_sum += g[e.row];
        s.nnz_count += 1;
      }
      const auto feature = static_cast<int>(f);
      const std::size_t split = index.first_positive[f];
      for (std::size_t k = 0; k < split; ++k) {
        if (active(col[k].row)) feed(scan[node_of[col[k].row]], feature, col[k].value, g[col[k].row], 1);
      }
      for (int node : level) {
        auto& s = scan[node];
        if (s.count < 2 * cfg.min_leaf) continue;
        const std::size_t zeros = s.count - s.nnz_count;
        if (zeros > 0) feed(s, feature, 0.0, s.sum - s.nnz_sum, zeros);
      }
      for (std::size_t k = split; k < col.size(); ++k) {
        if (active(col[k].row)) feed(scan[node_of[col[k].row]], feature, col[k].value, g[col[k].row], 1);
      }
    }

    std::vector<int> next_level;
    for (int node : level) {
      const auto& best = scan[node].best;
      if (best.feature < 0 || !(best.gain > 1e-12)) continue;
      const int left = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      auto& parent = tree.nodes[node];
      parent.feature = best.feature;
      parent.threshold = best.threshold;
      parent.left = left;
      parent.right = left + 1;
      next_level.push_back(left);
      next_level.push_back(left + 1);
    }
    for (std::size_t r = 0; r < n; ++r) {
      const int node = node_of[r];
      if (node < 0) continue;
      const auto& nd = tree.nodes[node];
      if (nd.feature < 0) {
        node_of[r] = -1 - node;  // parked in a finished leaf
      } else {
        node_of[r] = X.at(r, static_cast<std::size_t>(nd.feature)) < nd.threshold ? nd.left : nd.right;
      }
    }
    level = std::move(next_level);
  }

  // Leaf values from final assignments (parked rows encode their leaf as -1 - id).
  std::vector<double> gsum(tree.nodes.size(), 0.0), hsum(tree.nodes.size(), 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const int node = node_of[r] >= 0 ? node_of[r] : -1 - node_of[r];
    gsum[node] += g[r];
    hsum[node] += h[r];
  }
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    auto& nd = tree.nodes[i];
    if (nd.feature >= 0) continue;
    nd.value = hsum[i] > 1e-150 ? leaf_scale * gsum[i] / hsum[i] : 0.0;
  }
  return tree;
}

void check_inputs(const FeatureMatrix& X, std::size_t n_targets, const GbtConfig& cfg) {
  if (X.rows() < 2) throw DomainError("fit: need at least 2 rows");
  if (X.rows() != n_targets) throw DomainError("fit: row count does not match target count");
  if (!(cfg.learning_rate > 0.0 && cfg.learning_rate <= 1.0)) throw DomainError("fit: learning_rate must lie in (0,1]");
  if (cfg.min_leaf == 0) throw DomainError("fit: min_leaf must be positive");
}

double mean_squared_error(std::span<const double> y, const std::vector<double>& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - f[i]) * (y[i] - f[i]);
  return s / static_cast<double>(y.size());
}

void softmax_inplace(std::vector<double>& v) {
  const double mx = *std::max_element(v.begin(), v.end());
  double total = 0.0;
  for (auto& x : v) {
    x = std::exp(x - mx);
    total += x;
  }
  for (auto& x : v) x /= total;
}

}  // namespace

GbtEnsemble fit_regression(const FeatureMatrix& X, std::span<const double> y, const GbtConfig& cfg,
                           std::vector<double>* loss_trace) {
  check_inputs(X, y.size(), cfg);
  const std::size_t n = X.rows();
  GbtEnsemble model;
  model.task = GbtTask::Regression;
  model.n_features = X.cols();
  model.n_classes = 1;
  model.learning_rate = cfg.learning_rate;
  const double base = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  model.base_scores = {base};

  std::vector<double> f(n, base);
  if (loss_trace) loss_trace->assign(1, mean_squared_error(y, f));
  const bool constant = std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; });
  if (constant) {
    model.base_scores = {y[0]};
    return model;
  }

  const ColumnIndex index(X);
  std::vector<double> residual(n), ones(n, 1.0);
  for (std::size_t t = 0; t < cfg.n_trees; ++t) {
    for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - f[i];
    auto tree = grow_tree(X, index, residual, ones, 1.0, cfg);
    for (std::size_t i = 0; i < n; ++i) f[i] += cfg.learning_rate * tree.predict(X.row(i));
    model.trees.push_back({std::move(tree)});
    if (loss_trace) loss_trace->push_back(mean_squared_error(y, f));
  }
  return model;
}

GbtEnsemble fit_classification(const FeatureMatrix& X, std::span<const std::size_t> labels, std::size_t n_classes,
                               const GbtConfig& cfg, std::vector<double>* loss_trace) {
  check_inputs(X, labels.size(), cfg);
  if (n_classes < 1) throw DomainError("fit_classification: need at least one class");
  for (auto l : labels) {
    if (l >= n_classes) throw DomainError("fit_classification: label out of range");
  }
  const std::size_t n = X.rows(), K = n_classes;
  GbtEnsemble model;
  model.task = GbtTask::Classification;
  model.n_features = X.cols();
  model.n_classes = K;
  model.learning_rate = cfg.learning_rate;

  std::vector<double> counts(K, 0.0);
  for (auto l : labels) counts[l] += 1.0;
  model.base_scores.assign(K, 0.0);
  for (std::size_t k = 0; k < K; ++k) model.base_scores[k] = std::log(std::max(counts[k] / static_cast<double>(n), 1e-6));

  std::vector<std::vector<double>> F(n, model.base_scores);
  auto log_loss = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      auto p = F[i];
      softmax_inplace(p);
      s -= std::log(std::max(p[labels[i]], 1e-300));
    }
    return s / static_cast<double>(n);
  };
  if (loss_trace) loss_trace->assign(1, log_loss());

  const std::size_t present = static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0; }));
  if (present <= 1 || K == 1) return model;

  const ColumnIndex index(X);
  const double leaf_scale = static_cast<double>(K - 1) / static_cast<double>(K);
  std::vector<std::vector<double>> residual(K, std::vector<double>(n)), hess(K, std::vector<double>(n));
  for (std::size_t t = 0; t < cfg.n_trees; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      auto p = F[i];
      softmax_inplace(p);
      for (std::size_t k = 0; k < K; ++k) {
        const double r = (labels[i] == k ? 1.0 : 0.0) - p[k];
        residual[k][i] = r;
        hess[k][i] = std::abs(r) * (1.0 - std::abs(r));
      }
    }
    std::vector<RegressionTree> round;
    round.reserve(K);
    for (std::size_t k = 0; k < K; ++k) round.push_back(grow_tree(X, index, residual[k], hess[k], leaf_scale, cfg));
    for (std::size_t i = 0; i < n; ++i) {
      const auto x = X.row(i);
      for (std::size_t k = 0; k < K; ++k) F[i][k] += cfg.learning_rate * round[k].predict(x);
    }
    model.trees.push_back(std::move(round));
    if (loss_trace) loss_trace->push_back(log_loss());
  }
  return model;
}

double predict_value(const GbtEnsemble& model, std::span<const double> x) {
  if (model.task != GbtTask::Regression) throw DomainError("predict_value: model is a classifier");
  return model.raw_scores(x)[0];
}

std::vector<double> predict_proba(const GbtEnsemble& model, std::span<const double> x) {
  if (model.task != GbtTask::Classification) throw DomainError("predict_proba: model is a regressor");
  auto p = model.raw_scores(x);
  softmax_inplace(p);
  return p;
}

std::size_t predict_class(const GbtEnsemble& model, std::span<const double> x) {
  const auto p = predict_proba(model, x);
  return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
}

namespace {
constexpr const char* kFormat = "noisychannel.gbt";
constexpr int kVersion = 1;
}  // namespace

void to_json(nlohmann::json& j, const GbtConfig& c) {
  j = nlohmann::json{{"n_trees", c.n_trees}, {"max_depth", c.max_depth}, {"learning_rate", c.learning_rate},
                     {"min_leaf", c.min_leaf}};
}

void from_json(const nlohmann::json& j, GbtConfig& c) {
  GbtConfig d;
  c.n_trees = j.value("n_trees", d.n_trees);
  c.max_depth = j.value("max_depth", d.max_depth);
  c.learning_rate = j.value("learning_rate", d.learning_rate);
  c.min_leaf = j.value("min_leaf", d.min_leaf);
  if (c.n_trees == 0 || c.max_depth == 0 || c.min_leaf == 0 || !(c.learning_rate > 0.0 && c.learning_rate <= 1.0))
    throw ConfigError("learner config: n_trees, max_depth and min_leaf must be positive, learning_rate in (0,1]");
}

void to_json(nlohmann::json& j, const GbtEnsemble& m) {
  j = nlohmann::json::object();
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["task"] = m.task == GbtTask::Regression ? "regression" : "classification";
  j["n_features"] = m.n_features;
  j["n_classes"] = m.n_classes;
  j["learning_rate"] = m.learning_rate;
  j["base_scores"] = m.base_scores;
  auto& rounds = j["trees"] = nlohmann::json::array();
  for (const auto& round : m.trees) {
    auto jr = nlohmann::json::array();
    for (const auto& tree : round) {
      auto jt = nlohmann::json::array();
      for (const auto& nd : tree.nodes) jt.push_back({nd.feature, nd.threshold, nd.left, nd.right, nd.value});
      jr.push_back(std::move(jt));
    }
    rounds.push_back(std::move(jr));
  }
}

void from_json(const nlohmann::json& j, GbtEnsemble& m) {
  try {
    if (j.at("format").get<std::string>() != kFormat) throw ConfigError("not a gradient-boosting model");
    if (j.at("version").get<int>() != kVersion) throw ConfigError("unsupported gradient-boosting model version");
    m = GbtEnsemble{};
    m.task = j.at("task").get<std::string>() == "regression" ? GbtTask::Regression : GbtTask::Classification;
    m.n_features = j.at("n_features").get<std::size_t>();
    m.n_classes = j.at("n_classes").get<std::size_t>();
    m.learning_rate = j.at("learning_rate").get<double>();
    m.base_scores = j.at("base_scores").get<std::vector<double>>();
    for (const auto& jr : j.at("trees")) {
      std::vector<RegressionTree> round;
      for (const auto& jt : jr) {
        RegressionTree tree;
        for (const auto& jn : jt) {
          tree.nodes.push_back({jn.at(0).get<int>(), jn.at(1).get<double>(), jn.at(2).get<int>(), jn.at(3).get<int>(),
                                jn.at(4).get<double>()});
        }
        round.push_back(std::move(tree));
      }
      m.trees.push_back(std::move(round));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("gradient-boosting model: ") + e.what());
  }
}

}  // namespace noisychannel
