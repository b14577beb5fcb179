#include "noisychannel/nlu.hpp"

#include <algorithm>

namespace noisychannel {

namespace {

bool contains_all(const Tokens& text, const Tokens& keywords) {
  return std::all_of(keywords.begin(), keywords.end(),
                     [&](const std::string& k) { return std::find(text.begin(), text.end(), k) != text.end(); });
}

bool contains_run(const Tokens& text, const Tokens& run) {
  if (run.empty()) return false;
  return std::search(text.begin(), text.end(), run.begin(), run.end()) != text.end();
}

}  // namespace

NluResult toy_nlu(const Tokens& text, const Catalog& catalog) {
  const IntentPattern* hit = nullptr;
  for (const auto& p : catalog.patterns) {
    if (contains_all(text, p.keywords)) {
      hit = &p;
      break;
    }
  }
  if (!hit) return {kOodIntent, "", true};

  NluResult out{hit->intent, "", false};
  std::size_t best_len = 0;
  for (const auto& slot : catalog.slots) {
    const Tokens run = tokenize(slot);
    if (run.size() > best_len && contains_run(text, run)) {
      best_len = run.size();
      out.slot = slot;
    }
  }
  return out;
}

}  // namespace noisychannel
