#include "noisychannel/discriminator.hpp"

#include "noisychannel/errors.hpp"
#include "noisychannel/text.hpp"

namespace noisychannel {

DiscriminatorDataset build_dataset(const Corpus& real, const Corpus& simulated, bool include_score, bool dedup,
                                   const PairFeaturizer* schema, std::size_t max_terms) {
  if (real.size() != simulated.size())
    throw ValidationError("discriminator: real and simulated corpora differ in size (" + std::to_string(real.size()) +
                          " vs " + std::to_string(simulated.size()) + ")");
  for (std::size_t i = 0; i < real.size(); ++i) {
    if (real.turns[i].reference != simulated.turns[i].reference)
      throw ValidationError("discriminator: reference mismatch at turn " + std::to_string(i + 1) + ": '" +
                            join(real.turns[i].reference) + "' vs '" + join(simulated.turns[i].reference) + "'");
  }

  const Corpus real_side = dedup ? dedup_pairs(real) : real;
  const Corpus sim_side = dedup ? dedup_pairs(simulated) : simulated;

  DiscriminatorDataset ds;
  ds.include_score = include_score;
  ds.dedup_applied = dedup;
  if (schema) {
    ds.featurizer = *schema;
  } else {
    std::vector<const TranscribedTurn*> all;
    for (const auto& t : real_side.turns) all.push_back(&t);
    for (const auto& t : sim_side.turns) all.push_back(&t);
    ds.featurizer = fit_featurizer(all, max_terms);
  }

  const std::size_t base_dim = ds.featurizer.dimension();
  const std::size_t dim = base_dim + (include_score ? 1 : 0);
  ds.rows = FeatureMatrix(real_side.size() + sim_side.size(), dim);
  std::size_t r = 0;
  auto add = [&](const Corpus& side, std::size_t label) {
    for (const auto& t : side.turns) {
      auto row = ds.rows.row(r++);
      ds.featurizer.featurize(t.reference, t.hypothesis, row.data());
      if (include_score) row[base_dim] = t.score;
      ds.labels.push_back(label);
    }
  };
  add(real_side, kRealLabel);
  add(sim_side, kSimulatedLabel);
  return ds;
}

Discriminator train_discriminator(const DiscriminatorDataset& dataset, const GbtConfig& cfg) {
  bool seen[2] = {false, false};
  for (auto l : dataset.labels) {
    if (l > 1) throw DomainError("train_discriminator: labels must be 0 (real) or 1 (simulated)");
    seen[l] = true;
  }
  if (!seen[0] || !seen[1]) throw DomainError("train_discriminator: dataset must contain both real and simulated rows");
  Discriminator d;
  d.featurizer = dataset.featurizer;
  d.include_score = dataset.include_score;
  d.ensemble = fit_classification(dataset.rows, dataset.labels, 2, cfg);
  return d;
}

DiscriminatorReport classification_report(std::span<const std::size_t> labels, std::span<const std::size_t> predicted) {
  if (labels.size() != predicted.size()) throw DomainError("classification_report: length mismatch");
  if (labels.empty()) throw DomainError("classification_report: empty input");
  std::size_t tp = 0, fp = 0, fn = 0, correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool truth = labels[i] == kSimulatedLabel;
    const bool guess = predicted[i] == kSimulatedLabel;
    correct += truth == guess;
    tp += truth && guess;
    fp += !truth && guess;
    fn += truth && !guess;
  }
  DiscriminatorReport r;
  r.n = labels.size();
  r.accuracy = static_cast<double>(correct) / static_cast<double>(r.n);
  r.precision_defined = tp + fp > 0;
  r.recall_defined = tp + fn > 0;
  if (r.precision_defined) r.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (r.recall_defined) r.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (r.precision_defined && r.recall_defined && r.precision + r.recall > 0)
    r.f_score = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

DiscriminatorReport evaluate_discriminator(const Discriminator& model, const DiscriminatorDataset& test) {
  if (test.include_score != model.include_score)
    throw DomainError(std::string("evaluate_discriminator: model was trained ") +
                      (model.include_score ? "with" : "without") + " scores but the test set was built " +
                      (test.include_score ? "with" : "without") + " them");
  if (test.rows.cols() != model.ensemble.n_features)
    throw DomainError("evaluate_discriminator: feature dimension " + std::to_string(test.rows.cols()) +
                      " does not match the model's " + std::to_string(model.ensemble.n_features));
  std::vector<std::size_t> predicted;
  predicted.reserve(test.rows.rows());
  for (std::size_t i = 0; i < test.rows.rows(); ++i) predicted.push_back(predict_class(model.ensemble, test.rows.row(i)));
  return classification_report(test.labels, predicted);
}

void to_json(nlohmann::json& j, const DiscriminatorReport& r) {
  j = nlohmann::json{{"n", r.n},
                     {"accuracy", r.accuracy},
                     {"precision", r.precision},
                     {"recall", r.recall},
                     {"f_score", r.f_score},
                     {"precision_defined", r.precision_defined},
                     {"recall_defined", r.recall_defined}};
}

}  // namespace noisychannel
