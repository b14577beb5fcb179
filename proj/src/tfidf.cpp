#include "noisychannel/tfidf.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "noisychannel/errors.hpp"

namespace noisychannel {

void TfidfVocab::transform(const Tokens& doc, double* out) const {
  std::fill(out, out + size(), 0.0);
  for (const auto& tok : doc) {
    auto it = column.find(tok);
    if (it != column.end()) out[it->second] += 1.0;
  }
  double norm = 0.0;
  for (std::size_t c = 0; c < size(); ++c) {
    out[c] *= idf[c];
    norm += out[c] * out[c];
  }
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (std::size_t c = 0; c < size(); ++c) out[c] /= norm;
  }
}

std::vector<double> TfidfVocab::transform(const Tokens& doc) const {
  std::vector<double> out(size());
  transform(doc, out.data());
  return out;
}

TfidfVocab fit_tfidf(const std::vector<const Tokens*>& docs, std::size_t max_terms) {
  std::unordered_map<std::string, std::size_t> df;
  for (const auto* doc : docs) {
    std::unordered_set<std::string> seen(doc->begin(), doc->end());
    for (const auto& term : seen) ++df[term];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(df.begin(), df.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second > b.second || (a.second == b.second && a.first < b.first);
  });
  if (ranked.size() > max_terms) ranked.resize(max_terms);
  std::sort(ranked.begin(), ranked.end());

  TfidfVocab vocab;
  vocab.max_terms = max_terms;
  const double n = static_cast<double>(docs.size());
  for (const auto& [term, count] : ranked) {
    vocab.column.emplace(term, vocab.idf.size());
    vocab.idf.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
  }
  return vocab;
}

void to_json(nlohmann::json& j, const TfidfVocab& v) {
  std::vector<std::string> terms(v.size());
  for (const auto& [term, col] : v.column) terms[col] = term;
  j = nlohmann::json{{"max_terms", v.max_terms}, {"terms", terms}, {"idf", v.idf}};
}

void from_json(const nlohmann::json& j, TfidfVocab& v) {
  try {
    v = TfidfVocab{};
    v.max_terms = j.at("max_terms").get<std::size_t>();
    const auto terms = j.at("terms").get<std::vector<std::string>>();
    v.idf = j.at("idf").get<std::vector<double>>();
    if (terms.size() != v.idf.size()) throw ConfigError("tfidf: terms and idf differ in length");
    for (std::size_t c = 0; c < terms.size(); ++c) v.column.emplace(terms[c], c);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("tfidf vocabulary: ") + e.what());
  }
}

}  // namespace noisychannel
