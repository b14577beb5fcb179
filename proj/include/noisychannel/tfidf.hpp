#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "noisychannel/text.hpp"

namespace noisychannel {

// Term -> (column, idf). Columns are dense and follow lexicographic term order.
struct TfidfVocab {
  std::map<std::string, std::size_t> column;
  std::vector<double> idf;  // indexed by column
  std::size_t max_terms = 2000;

  std::size_t size() const { return idf.size(); }

  // tf = raw count, weight = tf * idf, then L2-normalized. Unknown terms are
  // dropped; a document with no known terms maps to the zero vector.
  void transform(const Tokens& doc, double* out) const;
  std::vector<double> transform(const Tokens& doc) const;
};

// Keeps the max_terms terms with the highest document frequency (ties broken
// lexicographically); idf = ln((1 + N) / (1 + df)) + 1.
TfidfVocab fit_tfidf(const std::vector<const Tokens*>& docs, std::size_t max_terms = 2000);

void to_json(nlohmann::json& j, const TfidfVocab& v);
void from_json(const nlohmann::json& j, TfidfVocab& v);

}  // namespace noisychannel
