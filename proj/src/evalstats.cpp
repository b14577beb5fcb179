#include "noisychannel/evalstats.hpp"

#include <cmath>
#include <limits>

#include "noisychannel/errors.hpp"

namespace noisychannel {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

double relative(double system, double reference) {
  if (reference > 0.0) return (system - reference) / reference;
  return system == 0.0 ? 0.0 : kNaN;
}

}  // namespace

std::array<double, 10> Histogram10::shares() const {
  std::array<double, 10> out{};
  if (total == 0) return out;
  for (std::size_t i = 0; i < 10; ++i) out[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
  return out;
}

std::size_t score_bin(double score) {
  const auto bin = static_cast<std::size_t>(std::floor(score * 10.0));
  return bin > 9 ? 9 : bin;
}

Histogram10 score_histogram(std::span<const double> scores) {
  Histogram10 h;
  for (double s : scores) {
    if (!(s >= 0.0 && s <= 1.0)) throw DomainError("score_histogram: value outside [0,1]");
    ++h.counts[score_bin(s)];
    ++h.total;
  }
  return h;
}

double kl_divergence(std::span<const double> p_counts, std::span<const double> q_counts, double smoothing) {
  if (p_counts.size() != q_counts.size() || p_counts.empty()) throw DomainError("kl_divergence: bin count mismatch");
  double p_total = 0.0, q_total = 0.0;
  for (std::size_t i = 0; i < p_counts.size(); ++i) {
    p_total += p_counts[i];
    q_total += q_counts[i];
  }
  if (!(p_total > 0.0 && q_total > 0.0)) throw DomainError("kl_divergence: empty histogram");
  const double bins = static_cast<double>(p_counts.size());
  double kl = 0.0;
  for (std::size_t i = 0; i < p_counts.size(); ++i) {
    const double p = (p_counts[i] + smoothing) / (p_total + bins * smoothing);
    const double q = (q_counts[i] + smoothing) / (q_total + bins * smoothing);
    if (p == 0.0) continue;
    if (q == 0.0) return std::numeric_limits<double>::infinity();
    kl += p * std::log(p / q);
  }
  return kl;
}

double kl_divergence(const Histogram10& p, const Histogram10& q, double smoothing) {
  std::array<double, 10> pc{}, qc{};
  for (std::size_t i = 0; i < 10; ++i) {
    pc[i] = static_cast<double>(p.counts[i]);
    qc[i] = static_cast<double>(q.counts[i]);
  }
  return kl_divergence(pc, qc, smoothing);
}

std::array<double, 10> relative_bin_changes(const Histogram10& real, const Histogram10& simulated) {
  const auto r = real.shares(), s = simulated.shares();
  std::array<double, 10> out{};
  for (std::size_t i = 0; i < 10; ++i) out[i] = r[i] > 0.0 ? (s[i] - r[i]) / r[i] : kNaN;
  return out;
}

CorrelationMae correlation_mae(std::span<const double> predicted, std::span<const double> actual) {
  if (predicted.size() != actual.size()) throw DomainError("correlation_mae: length mismatch");
  if (predicted.empty()) throw DomainError("correlation_mae: no values");
  const double n = static_cast<double>(predicted.size());
  double mp = 0.0, ma = 0.0, mae = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    mp += predicted[i];
    ma += actual[i];
    mae += std::abs(predicted[i] - actual[i]);
  }
  mp /= n;
  ma /= n;
  double cov = 0.0, vp = 0.0, va = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double dp = predicted[i] - mp, da = actual[i] - ma;
    cov += dp * da;
    vp += dp * dp;
    va += da * da;
  }
  CorrelationMae out;
  out.mae = mae / n;
  if (vp <= 0.0 || va <= 0.0) {
    out.degenerate = true;
    out.pearson_r = 0.0;
  } else {
    out.pearson_r = cov / std::sqrt(vp * va);
  }
  return out;
}

SemanticReport semantic_error_rates(std::span<const SemanticObservation> annotated) {
  if (annotated.empty()) throw DomainError("semantic_error_rates: no annotated turns");
  SemanticReport report;
  report.n = annotated.size();
  auto accumulate = [](SemanticRates& r, const NluResult& gold, const NluResult& got) {
    const bool intent_err = got.intent != gold.intent;
    const bool slot_err = got.slot != gold.slot;
    r.intent += intent_err;
    r.slot += slot_err;
    r.semantic += intent_err || slot_err;
    r.out_of_domain += got.ood != gold.ood;
  };
  for (const auto& obs : annotated) {
    accumulate(report.reference_rates, obs.gold, obs.reference);
    accumulate(report.system_rates, obs.gold, obs.system);
  }
  const double n = static_cast<double>(report.n);
  for (auto* r : {&report.reference_rates, &report.system_rates}) {
    r->semantic /= n;
    r->intent /= n;
    r->slot /= n;
    r->out_of_domain /= n;
  }
  const auto& ref = report.reference_rates;
  const auto& sys = report.system_rates;
  report.relative_change = {relative(sys.semantic, ref.semantic), relative(sys.intent, ref.intent),
                            relative(sys.slot, ref.slot), relative(sys.out_of_domain, ref.out_of_domain)};
  return report;
}

void to_json(nlohmann::json& j, const Histogram10& h) {
  j = nlohmann::json{{"counts", h.counts}, {"total", h.total}};
}

void to_json(nlohmann::json& j, const CorrelationMae& c) {
  j = nlohmann::json{{"linear_correlation", c.pearson_r}, {"mean_abs_error", c.mae}, {"degenerate", c.degenerate}};
}

void to_json(nlohmann::json& j, const SemanticRates& r) {
  j = nlohmann::json{{"semantic", number_or_null(r.semantic)},
                     {"intent", number_or_null(r.intent)},
                     {"slot", number_or_null(r.slot)},
                     {"out_of_domain", number_or_null(r.out_of_domain)}};
}

void to_json(nlohmann::json& j, const SemanticReport& r) {
  j = nlohmann::json{{"n", r.n},
                     {"reference_rates", r.reference_rates},
                     {"system_rates", r.system_rates},
                     {"relative_change", r.relative_change}};
}

}  // namespace noisychannel
