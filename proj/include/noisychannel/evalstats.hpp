#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "noisychannel/catalog.hpp"

namespace noisychannel {

// Counts over ten equal-width bins of [0,1]; the last bin is closed at 1.0.
struct Histogram10 {
  std::array<std::size_t, 10> counts{};
  std::size_t total = 0;

  std::array<double, 10> shares() const;
};

// Decile index of a score in [0,1]; 1.0 falls in bin 9.
std::size_t score_bin(double score);

// Throws DomainError on values outside [0,1].
Histogram10 score_histogram(std::span<const double> scores);

// KL(p || q) in nats after adding `smoothing` to every bin count and
// renormalizing. Throws DomainError on mismatched sizes or a zero total.
double kl_divergence(std::span<const double> p_counts, std::span<const double> q_counts, double smoothing);
double kl_divergence(const Histogram10& p, const Histogram10& q, double smoothing = 1.0);

// Per-bin share of `simulated` minus share of `real`, relative to the real
// share (NaN where the real bin is empty).
std::array<double, 10> relative_bin_changes(const Histogram10& real, const Histogram10& simulated);

struct CorrelationMae {
  double pearson_r = 0.0;
  double mae = 0.0;
  bool degenerate = false;  // a side had zero variance; pearson_r reported as 0
};

// Throws DomainError on empty input or a length mismatch.
CorrelationMae correlation_mae(std::span<const double> predicted, std::span<const double> actual);

// One annotated turn: gold labels, NLU output on the reference text and NLU
// output on the system (real or simulated recognizer) text.
struct SemanticObservation {
  NluResult gold;
  NluResult reference;
  NluResult system;
};

struct SemanticRates {
  double semantic = 0.0;  // (intent, slot) not both exact
  double intent = 0.0;
  double slot = 0.0;
  double out_of_domain = 0.0;  // ood flag disagrees with gold
};

// Relative change (system - reference) / reference of each rate. A rate whose
// reference value is 0 has no relative change unless the system rate is 0 too;
// it is then reported as NaN (null in JSON).
struct SemanticReport {
  std::size_t n = 0;
  SemanticRates reference_rates;
  SemanticRates system_rates;
  SemanticRates relative_change;
};

// Throws DomainError on an empty set.
SemanticReport semantic_error_rates(std::span<const SemanticObservation> annotated);

void to_json(nlohmann::json& j, const Histogram10& h);
void to_json(nlohmann::json& j, const CorrelationMae& c);
void to_json(nlohmann::json& j, const SemanticRates& r);
void to_json(nlohmann::json& j, const SemanticReport& r);

}  // namespace noisychannel
