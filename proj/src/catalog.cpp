#include "noisychannel/catalog.hpp"

#include <algorithm>
#include <set>

#include "noisychannel/errors.hpp"

namespace noisychannel {

Tokens Catalog::render(const UtteranceTemplate& tmpl, const std::string& slot) const {
  // Substitute before tokenizing so braces never reach the tokenizer.
  std::string text = tmpl.text;
  const std::string placeholder = "{slot}";
  if (auto pos = text.find(placeholder); pos != std::string::npos) text.replace(pos, placeholder.size(), slot);
  return tokenize(text);
}

std::vector<const UtteranceTemplate*> Catalog::templates_for(const std::string& intent, bool in_grammar_only) const {
  std::vector<const UtteranceTemplate*> out;
  for (const auto& t : templates) {
    if (t.intent == intent && (t.in_grammar || !in_grammar_only)) out.push_back(&t);
  }
  return out;
}

std::vector<std::string> Catalog::vocabulary() const {
  std::set<std::string> words;
  auto add = [&](const std::string& text) {
    for (auto& tok : tokenize(text)) words.insert(std::move(tok));
  };
  for (const auto& t : templates) {
    std::string text = t.text;
    if (auto pos = text.find("{slot}"); pos != std::string::npos) text.erase(pos, 6);
    add(text);
  }
  for (const auto& s : slots) add(s);
  for (const auto& u : ood_utterances) add(u);
  return {words.begin(), words.end()};
}

Catalog default_catalog() {
  Catalog c;
  c.intents = {"get_plot", "get_cast", "get_rating", "get_release", "get_director"};
  c.patterns = {
      {"get_plot", {"plot"}},         {"get_plot", {"happens"}},      {"get_cast", {"stars"}},
      {"get_cast", {"cast"}},         {"get_cast", {"actors"}},       {"get_rating", {"rating"}},
      {"get_rating", {"good"}},       {"get_release", {"released"}},  {"get_release", {"come", "out"}},
      {"get_release", {"year"}},      {"get_director", {"directed"}}, {"get_director", {"director"}},
      {"get_director", {"made"}},
  };
  c.slots = {"inception", "avatar",  "the matrix", "star wars", "titanic",   "jaws",    "alien",
             "up",        "frozen",  "the godfather", "casablanca", "vertigo", "heat", "rocky",
             "gravity",   "memento", "arrival",  "interstellar", "psycho",   "amelie"};
  c.templates = {
      {"get_plot", "tell me the plot of {slot}", true},
      {"get_plot", "what is the plot of {slot}", true},
      {"get_plot", "what happens in {slot}", true},
      {"get_plot", "what is {slot} like", false},
      {"get_cast", "who stars in {slot}", true},
      {"get_cast", "who is in the cast of {slot}", true},
      {"get_cast", "tell me the actors in {slot}", true},
      {"get_cast", "who plays in {slot}", false},
      {"get_rating", "what is the rating of {slot}", true},
      {"get_rating", "how good is {slot}", true},
      {"get_rating", "is {slot} any good", true},
      {"get_rating", "should i watch {slot}", false},
      {"get_release", "when was {slot} released", true},
      {"get_release", "when did {slot} come out", true},
      {"get_release", "what year is {slot} from", true},
      {"get_release", "how old is {slot}", false},
      {"get_director", "who directed {slot}", true},
      {"get_director", "who is the director of {slot}", true},
      {"get_director", "who made {slot}", true},
      {"get_director", "whose film is {slot}", false},
  };
  c.ood_utterances = {"play some music",        "what's the weather today", "set an alarm for seven",
                      "turn off the lights",    "tell me a joke",           "order a pizza",
                      "how tall is mount everest", "call my mom",           "what time is it",
                      "add milk to my shopping list", "how do i get to the airport", "stop"};
  return c;
}

void to_json(nlohmann::json& j, const Catalog& c) {
  j = nlohmann::json::object();
  j["intents"] = c.intents;
  j["slots"] = c.slots;
  j["ood_utterances"] = c.ood_utterances;
  auto& patterns = j["patterns"] = nlohmann::json::array();
  for (const auto& p : c.patterns) patterns.push_back({{"intent", p.intent}, {"keywords", p.keywords}});
  auto& templates = j["templates"] = nlohmann::json::array();
  for (const auto& t : c.templates) templates.push_back({{"intent", t.intent}, {"text", t.text}, {"in_grammar", t.in_grammar}});
}

void from_json(const nlohmann::json& j, Catalog& c) {
  try {
    c = Catalog{};
    c.intents = j.at("intents").get<std::vector<std::string>>();
    c.slots = j.at("slots").get<std::vector<std::string>>();
    c.ood_utterances = j.value("ood_utterances", std::vector<std::string>{});
    for (const auto& p : j.at("patterns")) {
      c.patterns.push_back({p.at("intent").get<std::string>(), p.at("keywords").get<Tokens>()});
    }
    for (const auto& t : j.at("templates")) {
      c.templates.push_back({t.at("intent").get<std::string>(), t.at("text").get<std::string>(), t.value("in_grammar", true)});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("catalog: ") + e.what());
  }
}

}  // namespace noisychannel
