#pragma once

#include <span>
#include <vector>

#include <json.hpp>

#include "noisychannel/corpus.hpp"
#include "noisychannel/gbt.hpp"
#include "noisychannel/score_model.hpp"

namespace noisychannel {

inline constexpr std::size_t kRealLabel = 0;
inline constexpr std::size_t kSimulatedLabel = 1;

// Real rows first, then simulated rows, each in corpus order.
struct DiscriminatorDataset {
  FeatureMatrix rows;
  std::vector<std::size_t> labels;
  bool include_score = false;
  bool dedup_applied = false;
  PairFeaturizer featurizer;
};

// Rows are featurize_pair vectors, with the turn's score appended when
// include_score. Without a schema the featurizer is fitted on both corpora;
// pass the training set's featurizer when building a test set. `simulated`
// must hold the same references as `real`, turn for turn (checked before
// dedup; throws ValidationError). With dedup, dedup_pairs runs on each side.
DiscriminatorDataset build_dataset(const Corpus& real, const Corpus& simulated, bool include_score, bool dedup,
                                   const PairFeaturizer* schema = nullptr, std::size_t max_terms = 2000);

struct Discriminator {
  PairFeaturizer featurizer;
  bool include_score = false;
  GbtEnsemble ensemble;
};

// Binary gradient-boosted classifier. Throws DomainError unless both labels
// are present.
Discriminator train_discriminator(const DiscriminatorDataset& dataset, const GbtConfig& cfg = {});

// Simulated is the positive class. Undefined precision or recall is reported
// as 0 with its flag cleared; f_score is then 0 as well.
struct DiscriminatorReport {
  std::size_t n = 0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
  bool precision_defined = true;
  bool recall_defined = true;
};

DiscriminatorReport classification_report(std::span<const std::size_t> labels,
                                          std::span<const std::size_t> predicted);

// Throws DomainError when the dataset's schema (score column, feature
// dimension) differs from the model's, or the dataset is empty.
DiscriminatorReport evaluate_discriminator(const Discriminator& model, const DiscriminatorDataset& test);

void to_json(nlohmann::json& j, const DiscriminatorReport& r);

}  // namespace noisychannel
