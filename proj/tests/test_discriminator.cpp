#include <doctest.h>

#include "noisychannel/confusion.hpp"
#include "noisychannel/corpus.hpp"
#include "noisychannel/discriminator.hpp"
#include "noisychannel/errors.hpp"
#include "noisychannel/synth.hpp"

using namespace noisychannel;

namespace {

Corpus synthetic(std::size_t n, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.n_turns = n;
  return synth_corpus(cfg, seed);
}

}  // namespace

TEST_CASE("dataset construction") {
  const Corpus real = synthetic(100, 1);
  Corpus sim = real;
  for (auto& t : sim.turns) t.hypothesis = t.reference;
  const auto ds = build_dataset(real, sim, false, false);
  CHECK(ds.rows.rows() == 200);
  CHECK(std::count(ds.labels.begin(), ds.labels.end(), kRealLabel) == 100);
  CHECK(std::count(ds.labels.begin(), ds.labels.end(), kSimulatedLabel) == 100);
  CHECK(ds.labels.front() == kRealLabel);
  CHECK(ds.rows.cols() == ds.featurizer.dimension());
  const auto with_score = build_dataset(real, sim, true, false);
  CHECK(with_score.rows.cols() == with_score.featurizer.dimension() + 1);
  CHECK(with_score.rows.at(0, with_score.rows.cols() - 1) == real.turns[0].score);

  Corpus shifted = sim;
  shifted.turns[3].reference = {"something", "else"};
  CHECK_THROWS_AS(build_dataset(real, shifted, false, false), ValidationError);
  Corpus shorter = sim;
  shorter.turns.pop_back();
  CHECK_THROWS_AS(build_dataset(real, shorter, false, false), ValidationError);

  Corpus dup = real;
  dup.turns.push_back(dup.turns[0]);
  Corpus dup_sim = sim;
  dup_sim.turns.push_back(dup_sim.turns[0]);
  const auto deduped = build_dataset(dup, dup_sim, false, true);
  CHECK(deduped.dedup_applied);
  CHECK(deduped.rows.rows() == dedup_pairs(dup).size() + dedup_pairs(dup_sim).size());
}

TEST_CASE("separable data and single-label guard") {
  const Corpus real = synthetic(200, 2);
  Corpus sim = real;
  for (auto& t : sim.turns) t.hypothesis.push_back("zzz");
  const auto ds = build_dataset(real, sim, false, false);
  const Discriminator d = train_discriminator(ds, {50, 3, 0.1, 5});
  const auto report = evaluate_discriminator(d, ds);
  CHECK(report.accuracy == 1.0);
  CHECK(report.f_score == 1.0);

  DiscriminatorDataset one = ds;
  std::fill(one.labels.begin(), one.labels.end(), kRealLabel);
  CHECK_THROWS_AS(train_discriminator(one), DomainError);

  const auto scored = build_dataset(real, sim, true, false, &ds.featurizer);
  CHECK_THROWS_AS(evaluate_discriminator(d, scored), DomainError);
}

TEST_CASE("identical processes are indistinguishable") {
  const Corpus corpus = synthetic(6000, 3);
  auto [train, test] = split_corpus(corpus, 0.5, 4);
  const ConfusionModel channel = build_confusion(train);
  Rng a(10), b(11);
  const Corpus train_a = simulate_corpus(train, channel, a), train_b = simulate_corpus(train, channel, b);
  const Corpus test_a = simulate_corpus(test, channel, a), test_b = simulate_corpus(test, channel, b);
  const auto train_ds = build_dataset(train_a, train_b, false, false);
  const auto test_ds = build_dataset(test_a, test_b, false, false, &train_ds.featurizer);
  const Discriminator d = train_discriminator(train_ds);
  const auto report = evaluate_discriminator(d, test_ds);
  CHECK(report.accuracy == doctest::Approx(0.5).epsilon(0.06));

  const Discriminator again = train_discriminator(train_ds);
  const auto report2 = evaluate_discriminator(again, test_ds);
  CHECK(report2.accuracy == report.accuracy);
  CHECK(report2.f_score == report.f_score);
}

TEST_CASE("classification_report") {
  const std::vector<std::size_t> labels{0, 0, 1, 1};
  const auto perfect = classification_report(labels, labels);
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);
  CHECK(perfect.f_score == 1.0);

  const auto none = classification_report(labels, std::vector<std::size_t>{0, 0, 0, 0});
  CHECK_FALSE(none.precision_defined);
  CHECK(none.precision == 0.0);
  CHECK(none.recall == 0.0);
  CHECK(none.f_score == 0.0);
  CHECK(none.accuracy == 0.5);

  const auto mixed = classification_report(labels, std::vector<std::size_t>{1, 0, 1, 0});
  CHECK(mixed.precision == 0.5);
  CHECK(mixed.recall == 0.5);
  CHECK(mixed.f_score == doctest::Approx(0.5));
}
