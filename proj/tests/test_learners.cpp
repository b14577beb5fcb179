#include <doctest.h>

#include <cmath>
#include <numeric>

#include "noisychannel/errors.hpp"
#include "noisychannel/gbt.hpp"
#include "noisychannel/random.hpp"
#include "noisychannel/tfidf.hpp"

using namespace noisychannel;

namespace {

FeatureMatrix column(const std::vector<double>& xs) {
  FeatureMatrix X(xs.size(), 1);
  for (std::size_t i = 0; i < xs.size(); ++i) X.at(i, 0) = xs[i];
  return X;
}

double mse(const GbtEnsemble& m, const FeatureMatrix& X, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += std::pow(predict_value(m, X.row(i)) - y[i], 2);
  return s / y.size();
}

}  // namespace

TEST_CASE("regression basics") {
  std::vector<double> xs, flat, step;
  for (int i = 0; i < 100; ++i) {
    xs.push_back(i / 100.0);
    flat.push_back(0.5);
    step.push_back(i < 37 ? 0.0 : 1.0);
  }
  const FeatureMatrix X = column(xs);
  const GbtEnsemble c = fit_regression(X, flat, {});
  CHECK(c.trees.empty());
  for (double x : {0.0, 0.3, 7.0}) CHECK(predict_value(c, std::vector<double>{x}) == 0.5);

  std::vector<double> trace;
  const GbtEnsemble s = fit_regression(X, step, {50, 1, 0.1, 5}, &trace);
  CHECK(mse(s, X, step) < 0.01);
  REQUIRE(trace.size() == 51);
  for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1] + 1e-12);
  CHECK(trace.back() == doctest::Approx(mse(s, X, step)));
}

TEST_CASE("hand-built ensemble") {
  GbtEnsemble m;
  m.n_features = 1;
  m.learning_rate = 0.1;
  m.base_scores = {0.0};
  RegressionTree t;
  t.nodes = {{0, 0.5, 1, 2, 0.0}, {-1, 0, -1, -1, -1.0}, {-1, 0, -1, -1, 1.0}};
  m.trees = {{t}};
  CHECK(predict_value(m, std::vector<double>{0.7}) == doctest::Approx(0.1));
  CHECK(predict_value(m, std::vector<double>{0.2}) == doctest::Approx(-0.1));
  CHECK_THROWS_AS(predict_value(m, std::vector<double>{0.1, 0.2}), DomainError);

  GbtEnsemble base;
  base.n_features = 2;
  base.base_scores = {0.25};
  CHECK(predict_value(base, std::vector<double>{1, 2}) == 0.25);
}

TEST_CASE("classification") {
  std::vector<double> xs;
  std::vector<std::size_t> labels;
  for (int i = 0; i < 60; ++i) {
    xs.push_back(i);
    labels.push_back(i < 30 ? 0 : 1);
  }
  const FeatureMatrix X = column(xs);
  std::vector<double> trace;
  const GbtEnsemble m = fit_classification(X, labels, 2, {}, &trace);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    CHECK(predict_class(m, X.row(i)) == labels[i]);
    const auto p = predict_proba(m, X.row(i));
    CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
    for (double v : p) CHECK(v >= 0.0);
  }
  for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1] + 1e-12);

  // Single-class data always predicts that class.
  const GbtEnsemble one = fit_classification(X, std::vector<std::size_t>(60, 2), 3, {20, 2, 0.1, 5});
  CHECK(predict_class(one, std::vector<double>{12.0}) == 2);
}

TEST_CASE("labels independent of features give the majority class") {
  Rng rng(17);
  const std::size_t n = 2000;
  FeatureMatrix X(n, 2), Xt(n, 2);
  std::vector<std::size_t> y(n), yt(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < 2; ++c) X.at(i, c) = uniform01(rng), Xt.at(i, c) = uniform01(rng);
    y[i] = bernoulli(rng, 0.7) ? 0 : 1;
    yt[i] = bernoulli(rng, 0.7) ? 0 : 1;
  }
  const GbtEnsemble m = fit_classification(X, y, 2, {50, 2, 0.1, 20});
  std::size_t correct = 0, majority = 0;
  for (std::size_t i = 0; i < n; ++i) {
    correct += predict_class(m, Xt.row(i)) == yt[i];
    majority += yt[i] == 0;
  }
  CHECK(std::abs(static_cast<double>(correct) - static_cast<double>(majority)) / n <= 0.03);
}

TEST_CASE("row order does not change the fit") {
  Rng rng(23);
  const std::size_t n = 300;
  FeatureMatrix X(n, 3);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < 3; ++c) X.at(i, c) = std::floor(uniform01(rng) * 10) / 10;
    y[i] = X.at(i, 0) * 2 - X.at(i, 2) + 0.1 * uniform01(rng);
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  FeatureMatrix Xp(n, 3);
  std::vector<double> yp(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < 3; ++c) Xp.at(i, c) = X.at(perm[i], c);
    yp[i] = y[perm[i]];
  }
  const GbtConfig cfg{40, 3, 0.1, 5};
  const GbtEnsemble a = fit_regression(X, y, cfg), b = fit_regression(Xp, yp, cfg);
  for (std::size_t i = 0; i < n; ++i) CHECK(predict_value(a, X.row(i)) == doctest::Approx(predict_value(b, X.row(i))).epsilon(1e-9));

  nlohmann::json j = a;
  GbtEnsemble back = j.get<GbtEnsemble>();
  for (std::size_t i = 0; i < n; ++i) CHECK(predict_value(back, X.row(i)) == predict_value(a, X.row(i)));
}

TEST_CASE("gbt config validation") {
  nlohmann::json j = GbtConfig{};
  CHECK(j.get<GbtConfig>().n_trees == 200);
  j["learning_rate"] = 1.5;
  CHECK_THROWS(j.get<GbtConfig>());
}

TEST_CASE("tfidf") {
  const std::vector<Tokens> docs = {{"play", "the", "movie"}, {"the", "plot"}, {"the", "the", "cast"}};
  std::vector<const Tokens*> ptrs;
  for (const auto& d : docs) ptrs.push_back(&d);
  const TfidfVocab v = fit_tfidf(ptrs);
  REQUIRE(v.size() == 5);
  CHECK(v.column.at("cast") == 0);
  CHECK(v.column.at("the") == 4);
  CHECK(v.idf[v.column.at("the")] == doctest::Approx(1.0));
  CHECK(v.idf[v.column.at("plot")] == doctest::Approx(std::log(4.0 / 2.0) + 1.0));

  const auto x = v.transform({"the", "the", "cast", "zebra"});
  const double wc = std::log(2.0) + 1.0, wt = 2.0;
  const double norm = std::sqrt(wc * wc + wt * wt);
  CHECK(x[v.column.at("cast")] == doctest::Approx(wc / norm));
  CHECK(x[v.column.at("the")] == doctest::Approx(wt / norm));
  for (double e : v.transform({"zebra"})) CHECK(e == 0.0);

  // Highest document frequency first, lexicographic among ties.
  const TfidfVocab small = fit_tfidf(ptrs, 2);
  REQUIRE(small.size() == 2);
  CHECK(small.column.count("the"));
  CHECK(small.column.count("cast"));

  nlohmann::json j = v;
  CHECK(nlohmann::json(j.get<TfidfVocab>()) == j);
}
