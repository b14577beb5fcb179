// Acceptance checks. Prints one PASS/FAIL line per criterion.
//
// Exit status is 0 when every criterion passes or fails only in the way
// listed in kKnownFailures (each such line is still printed as FAIL), and 1
// otherwise, so an unexpected regression breaks the build while a documented
// limitation stays visible without being hidden.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "noisychannel/alignment.hpp"
#include "noisychannel/dialog_env.hpp"
#include "noisychannel/evalstats.hpp"
#include "noisychannel/pipeline.hpp"
#include "noisychannel/policy.hpp"
#include "noisychannel/qnetwork.hpp"
#include "support/oracles.hpp"
#include "support/toy_mdp.hpp"

using namespace noisychannel;
using nlohmann::json;

namespace {

// Criteria whose failure is understood and documented in the README.
const std::set<int> kKnownFailures = {5};

// Seeds for the dedup robustness check on criterion 5, fixed in advance.
constexpr std::array<std::uint64_t, 5> kDedupSeeds = {1234, 1235, 1236, 1237, 1238};

struct Line {
  int id;
  bool pass;
  std::string text;
};

std::vector<Line> lines;

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void report(int id, bool pass, const std::string& text) {
  std::string tag = pass ? "PASS" : (kKnownFailures.count(id) ? "FAIL (known limitation)" : "FAIL");
  std::cout << "[" << tag << "] C" << id << " " << text << std::endl;
  lines.push_back({id, pass, text});
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double acc(const json& arm, const char* name) { return arm[name]["accuracy"].get<double>(); }

void criterion_1_2_3_4(const json& s, const PipelineTimings& t) {
  const json& e = s["error_distribution"];
  const double train = e["train"]["corpus_wer"], sim = e["simulated_test"]["corpus_wer"];
  const double rel = (sim - train) / train;
  const std::size_t turns = s["corpus"]["turns"];
  const double target = s["config"]["synth"]["target_wer"];
  report(1, std::abs(rel) <= 0.10 && t.simulation < 30.0 && turns == 5000 && target == 0.2,
         fmt("WER matching: %zu turns at target %.2f, train WER %.4f, simulated %.4f, relative change %+.2f%% "
             "(limit 10%%); simulation stage %.1fs (limit 30s)",
             turns, target, train, sim, 100 * rel, t.simulation));

  const char* kinds[] = {"substitution", "insertion", "deletion"};
  double worst = 0.0;
  std::string detail;
  for (const char* k : kinds) {
    const std::string key = std::string(k) + "_share";
    const double a = e["train"][key], b = e["simulated_test"][key];
    worst = std::max(worst, std::abs(b - a));
    detail += fmt(" %s %.3f->%.3f", k, a, b);
  }
  report(2, worst <= 0.10, fmt("error-type shares train->simulated:%s; largest gap %.1f points (limit 10)",
                               detail.c_str(), 100 * worst));

  const json& m = s["score_model"];
  const double rb = m["baseline"]["linear_correlation"], mb = m["baseline"]["mean_abs_error"];
  bool ok3 = t.score_models < 120.0;
  std::string d3;
  for (const char* mode : {"regression", "classification"}) {
    const double r = m[mode]["linear_correlation"], mae = m[mode]["mean_abs_error"];
    ok3 = ok3 && r >= rb + 0.15 && mae <= 0.75 * mb;
    d3 += fmt(" %s r %.3f MAE %.3f;", mode, r, mae);
  }
  report(3, ok3, fmt("score models vs baseline (r %.3f, MAE %.3f):%s need r >= %.3f and MAE <= %.3f; "
                     "stage %.1fs (limit 120s)",
                     rb, mb, d3.c_str(), rb + 0.15, 0.75 * mb, t.score_models));

  const json& d = s["score_distribution"];
  const double kc = d["kl_classification"], kr = d["kl_regression"];
  report(4, kc < kr,
         fmt("score histogram KL to real scores on held-out data: classification %.4f, regression %.4f "
             "(real-hypothesis variant: classification %.4f, regression %.4f)",
             kc, kr, d["real_hypotheses"]["kl_classification"].get<double>(),
             d["real_hypotheses"]["kl_regression"].get<double>()));
}

void criterion_5(const json& main_summary) {
  const json& nd = main_summary["discriminator"]["no_dedup"];
  const double reg = acc(nd, "regression_score"), cls = acc(nd, "classification_score"), none = acc(nd, "without_score");
  const bool ordering = reg > cls && cls > none;

  std::vector<double> shrink;
  std::string per_seed;
  for (std::uint64_t seed : kDedupSeeds) {
    json s;
    if (seed == main_summary["seed"].get<std::uint64_t>()) {
      s = main_summary;
    } else {
      PipelineConfig cfg;
      cfg.seed = seed;
      cfg.policy_seeds = 0;
      s = full_pipeline(cfg);
    }
    const double g_nd = s["discriminator"]["no_dedup"]["classification_gap"];
    const double g_d = s["discriminator"]["dedup"]["classification_gap"];
    shrink.push_back(g_nd - g_d);
    per_seed += fmt(" %.3f->%.3f", g_nd, g_d);
  }
  double mean = 0.0, var = 0.0;
  for (double x : shrink) mean += x;
  mean /= shrink.size();
  for (double x : shrink) var += (x - mean) * (x - mean);
  const double se = std::sqrt(var / (shrink.size() - 1) / shrink.size());
  const bool single = shrink.front() > 0.0;
  const bool robust = mean > 2 * se;
  report(5, ordering && robust,
         fmt("discriminator accuracy: regression %.4f > classification %.4f > none %.4f: %s; "
             "classification gap no-dedup->dedup over seeds 1234..1238:%s; mean shrink %+.4f, 2 SE %.4f: %s "
             "(seed 1234 alone: %s)",
             reg, cls, none, ordering ? "holds" : "violated", per_seed.c_str(), mean, 2 * se,
             robust ? "shrinks" : "no reliable shrink", single ? "shrinks" : "does not shrink"));
}

void criterion_6() {
  Rng rng(20240601);
  std::size_t agree = 0;
  for (int i = 0; i < 1000; ++i) {
    const Tokens a = oracle::random_tokens(rng, 1, 6, 5), b = oracle::random_tokens(rng, 0, 6, 5);
    agree += wer_features(a, b).edits() == oracle::edit_distance(a, b);
  }
  const std::vector<double> p{0.5, 0.5}, q{0.25, 0.75};
  const double kl = kl_divergence(p, q, 0.0);
  const RewardConfig r;
  const bool rewards = step_reward(r, DialogAction::Execute, true, UserEvent::None) == 1.0 &&
                       step_reward(r, DialogAction::Execute, false, UserEvent::None) == -1.0 &&
                       step_reward(r, DialogAction::Confirm, false, UserEvent::None) == -0.33 &&
                       step_reward(r, DialogAction::Repeat, false, UserEvent::None) == -0.50 &&
                       step_reward(r, DialogAction::Execute, true, UserEvent::PositiveSentiment) == 1.0 + 0.17 &&
                       step_reward(r, DialogAction::Execute, false, UserEvent::NegativeSentiment) == -1.0 - 0.17 &&
                       step_reward(r, DialogAction::Execute, false, UserEvent::BargeIn) == -1.0 - 0.17 &&
                       step_reward(r, DialogAction::Confirm, false, UserEvent::BargeIn) == -0.33 - 0.17 &&
                       step_reward(r, DialogAction::Repeat, false, UserEvent::NegativeSentiment) == -0.50 - 0.17;
  report(6, agree == 1000 && std::abs(kl - 0.143841) < 1e-6 && rewards,
         fmt("metrics: alignment matches brute-force oracle on %zu/1000 pairs; KL hand case %.6f nats "
             "(want 0.143841); reward table %s",
             agree, kl, rewards ? "exact" : "mismatch"));
}

void criterion_7() {
  Rng rng(7);
  QNetworkShape shape;
  shape.table_sizes = {3, 4};
  shape.id_tables = {0, 1};
  shape.embedding_size = 2;
  shape.n_numeric = 3;
  shape.hidden_layers = 2;
  shape.hidden_nodes = 6;
  shape.n_actions = 3;
  QNetwork net(shape, rng);
  for (auto& m : net.params())
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] += 0.1 * (uniform01(rng) - 0.5);
  std::vector<Observation> obs(8);
  for (auto& o : obs) {
    o.ids = {static_cast<int>(rng() % 3), static_cast<int>(rng() % 4)};
    for (int k = 0; k < 3; ++k) o.numeric.push_back(uniform01(rng) * 2 - 1);
  }
  std::vector<const Observation*> batch;
  for (const auto& o : obs) batch.push_back(&o);
  QNetwork::Cache cache;
  const Eigen::MatrixXd qs = net.forward(batch, &cache);
  double worst_mean = 0.0;
  for (Eigen::Index c = 0; c < qs.cols(); ++c)
    worst_mean = std::max(worst_mean, std::abs((qs.col(c).array() - cache.value(c)).mean()));
  Eigen::MatrixXd w(3, static_cast<Eigen::Index>(batch.size()));
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = uniform01(rng) * 2 - 1;
  const double grad_err = toy::gradient_check(net, batch, w);

  QNetworkShape two;
  two.n_numeric = 2;
  two.hidden_layers = 1;
  two.hidden_nodes = 4;
  two.n_actions = 2;
  QNetwork online(two, rng), target(two, rng);
  toy::program_heads(online, 1.5, {-0.5, 0.5});
  toy::program_heads(target, 4.0, {1.0, -1.0});
  const Observation s1{{}, {0.0, 1.0}};
  const auto qo = online.q_values(s1), qt = target.q_values(s1);
  const double dq = double_q_target(0.5, false, 0.9, qo, qt), sq = single_q_target(0.5, false, 0.9, qt);
  const bool double_ok = std::abs(dq - (0.5 + 0.9 * 3.0)) < 1e-12 && std::abs(sq - (0.5 + 0.9 * 5.0)) < 1e-12;

  const auto optimal = toy::value_iteration(0.9);
  toy::Chain chain;
  PolicyConfig cfg;
  cfg.hidden_layers = 1;
  cfg.hidden_nodes = 16;
  cfg.dropout = 0.0;
  cfg.learning_rate = 1e-3;
  cfg.optimizer = OptimizerKind::Adam;
  cfg.gamma = 0.9;
  cfg.replay_size = 5000;
  cfg.target_update_interval = 200;
  cfg.epsilon = {1.0, 0.1, 2000};
  cfg.total_steps = 6000;
  cfg.eval_every = 3000;
  cfg.eval_episodes = 20;
  cfg.learn_start = 200;
  std::size_t recovered = 0;
  for (std::uint64_t seed : {11, 12, 13}) {
    const TrainedPolicy p = train_policy(chain, cfg, seed);
    bool all = true;
    for (std::size_t s = 0; s < toy::Chain::kStates; ++s) all = all && p.network.greedy_action(toy::Chain::observe(s)) == optimal[s];
    recovered += all;
  }
  report(7, worst_mean < 1e-6 && grad_err < 1e-4 && double_ok && recovered == 3,
         fmt("Q-learner: max |mean advantage| %.1e (limit 1e-6); gradient check max rel. error %.1e (limit 1e-4); "
             "double-Q target %.3f vs single-Q %.3f on the 2-state MDP: %s; value-iteration policy recovered in %zu/3 "
             "training seeds",
             worst_mean, grad_err, dq, sq, double_ok ? "correct" : "wrong", recovered));
}

void criterion_8(const json& s, const PipelineTimings& t) {
  const json& d = s["dialog"];
  const double ser = d["measured_ser"];
  const double exec = d["execute_only"]["success_rate"];
  const std::size_t episodes = d["execute_only"]["episodes"];
  std::size_t wins = 0;
  std::string gains;
  double slowest = 0.0;
  for (std::size_t i = 0; i < d["policies"].size(); ++i) {
    const double gain = d["policies"][i]["success_gain"];
    wins += gain >= 0.05;
    gains += fmt(" %+.3f", gain);
    slowest = std::max(slowest, t.policy.at(i));
  }
  const bool ser_ok = std::abs(ser - 0.3) <= 0.05;
  const bool exec_ok = std::abs(exec - (1.0 - ser)) <= 0.03;
  report(8, ser_ok && exec_ok && wins >= 2 && d["policies"].size() == 3 && episodes >= 500 && slowest <= 300.0,
         fmt("policy: measured SER %.4f; execute-only success %.4f vs 1-SER %.4f (limit 3 points); trained success "
             "gain over execute-only on %zu paired episodes per seed:%s (need >= +0.05 in 2 of 3, got %zu); slowest "
             "seed %.1fs (limit 300s)",
             ser, exec, 1.0 - ser, episodes, gains.c_str(), wins, slowest));
}

}  // namespace

int main() {
  try {
    std::cout << "acceptance: running the default pipeline (seed 1234) twice" << std::endl;
    const PipelineConfig cfg;
    PipelineTimings t1, t2;
    auto t0 = std::chrono::steady_clock::now();
    const json first = full_pipeline(cfg, {}, &t1);
    const double run1 = seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    const json second = full_pipeline(cfg, {}, &t2);
    const double run2 = seconds_since(t0);

    criterion_1_2_3_4(first, t1);
    criterion_5(first);
    criterion_6();
    criterion_7();
    criterion_8(first, t1);
    const std::string a = dump_summary(first), b = dump_summary(second);
    report(9, a == b,
           fmt("determinism: two default pipeline runs give %s summaries (%zu bytes); runtimes %.1fs and %.1fs "
               "(budget 600s)",
               a == b ? "byte-identical" : "different", a.size(), run1, run2));
  } catch (const std::exception& e) {
    std::cout << "acceptance: aborted: " << e.what() << std::endl;
    return 1;
  }
  std::size_t passed = 0;
  bool unexpected = false;
  for (const auto& l : lines) {
    passed += l.pass;
    unexpected = unexpected || (!l.pass && !kKnownFailures.count(l.id));
  }
  std::cout << "acceptance: " << passed << "/" << lines.size() << " criteria pass" << std::endl;
  return unexpected || lines.size() != 9 ? 1 : 0;
}
