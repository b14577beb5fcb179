#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <json.hpp>

namespace noisychannel {

// Dense row-major feature matrix.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  void append_row(std::span<const double> values);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct GbtConfig {
  std::size_t n_trees = 200;
  std::size_t max_depth = 3;
  double learning_rate = 0.1;
  std::size_t min_leaf = 5;
};

// Binary tree with axis-aligned splits: rows with x[feature] < threshold go left.
struct RegressionTree {
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
  };
  std::vector<Node> nodes;  // nodes[0] is the root

  double predict(std::span<const double> x) const;
};

enum class GbtTask { Regression, Classification };

// Regression: f(x) = base_scores[0] + learning_rate * sum_t tree_t(x).
// Classification: one such score per class, turned into probabilities by a
// softmax. trees[round][k] is the round's tree for class k.
struct GbtEnsemble {
  GbtTask task = GbtTask::Regression;
  std::size_t n_features = 0;
  std::size_t n_classes = 1;
  double learning_rate = 0.1;
  std::vector<double> base_scores{0.0};
  std::vector<std::vector<RegressionTree>> trees;

  std::vector<double> raw_scores(std::span<const double> x) const;
};

// Squared-error gradient boosting. A constant target yields a base-only
// ensemble. `loss_trace`, when given, receives the training MSE before the
// first round and after every round.
GbtEnsemble fit_regression(const FeatureMatrix& X, std::span<const double> y, const GbtConfig& cfg,
                           std::vector<double>* loss_trace = nullptr);

// Multiclass logistic boosting with one score function per class and
// Newton-step leaf values. Labels must be < n_classes. `loss_trace` receives
// the mean training log-loss, as above.
GbtEnsemble fit_classification(const FeatureMatrix& X, std::span<const std::size_t> labels, std::size_t n_classes,
                               const GbtConfig& cfg, std::vector<double>* loss_trace = nullptr);

// All predictors throw DomainError when x has the wrong dimension.
double predict_value(const GbtEnsemble& model, std::span<const double> x);
std::vector<double> predict_proba(const GbtEnsemble& model, std::span<const double> x);
std::size_t predict_class(const GbtEnsemble& model, std::span<const double> x);

void to_json(nlohmann::json& j, const GbtConfig& c);
void from_json(const nlohmann::json& j, GbtConfig& c);
void to_json(nlohmann::json& j, const GbtEnsemble& m);
void from_json(const nlohmann::json& j, GbtEnsemble& m);

}  // namespace noisychannel
