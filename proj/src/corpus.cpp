#include "noisychannel/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "noisychannel/errors.hpp"
#include "noisychannel/random.hpp"

namespace noisychannel {

using nlohmann::json;

CorpusFormat format_for_path(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".csv" ? CorpusFormat::Csv : CorpusFormat::Jsonl;
}

void validate_turn(const TranscribedTurn& turn) {
  if (turn.reference.empty()) throw ValidationError("reference is empty");
  if (!std::isfinite(turn.score) || turn.score < 0.0 || turn.score > 1.0) {
    std::ostringstream os;
    os << "score " << turn.score << " outside [0,1]";
    throw ValidationError(os.str());
  }
}

namespace {

void validate_at(const TranscribedTurn& turn, std::size_t line) {
  try {
    validate_turn(turn);
  } catch (const ValidationError& e) {
    throw ValidationError("line " + std::to_string(line) + ": " + e.what());
  }
}

std::optional<bool> parse_bool_text(const std::string& s) {
  std::string t;
  for (char c : s) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (t.empty()) return std::nullopt;
  if (t == "1" || t == "true" || t == "yes") return true;
  if (t == "0" || t == "false" || t == "no") return false;
  throw std::invalid_argument("not a boolean: " + s);
}

// RFC 4180 style: commas separate fields, double quotes protect commas and
// escape themselves as "".
std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  if (quoted) throw ParseError(line_no, "unterminated quoted field");
  fields.push_back(std::move(field));
  return fields;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string format_score(double score) {
  // Same shortest round-trip representation the JSON writer uses.
  return json(score).dump();
}

}  // namespace

Corpus read_jsonl(std::istream& in, std::string id) {
  Corpus corpus;
  corpus.id = std::move(id);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!record.is_object()) throw ParseError(line_no, "record is not an object");
    TranscribedTurn turn;
    try {
      turn.reference = tokenize(record.at("reference").get<std::string>());
      turn.hypothesis = tokenize(record.at("hypothesis").get<std::string>());
      turn.score = record.at("score").get<double>();
      if (record.contains("intent") && !record["intent"].is_null()) {
        Semantics sem;
        sem.intent = record["intent"].get<std::string>();
        if (record.contains("slot") && !record["slot"].is_null()) sem.slot = record["slot"].get<std::string>();
        turn.semantics = std::move(sem);
      }
      if (record.contains("ood") && !record["ood"].is_null()) turn.out_of_domain = record["ood"].get<bool>();
    } catch (const json::exception& e) {
      throw ParseError(line_no, std::string("bad field: ") + e.what());
    }
    validate_at(turn, line_no);
    corpus.turns.push_back(std::move(turn));
  }
  return corpus;
}

Corpus read_csv(std::istream& in, std::string id) {
  Corpus corpus;
  corpus.id = std::move(id);
  std::string line;
  if (!std::getline(in, line)) return corpus;
  auto header = split_csv_line(line, 1);
  auto column = [&](const std::string& name) -> std::optional<std::size_t> {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };
  auto ref_col = column("reference");
  auto hyp_col = column("hypothesis");
  auto score_col = column("score");
  if (!ref_col || !hyp_col || !score_col) throw ParseError(1, "header must name reference, hypothesis and score");
  auto intent_col = column("intent");
  auto slot_col = column("slot");
  auto ood_col = column("ood");

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = split_csv_line(line, line_no);
    if (fields.size() != header.size()) {
      throw ParseError(line_no, "expected " + std::to_string(header.size()) + " fields, got " +
                                    std::to_string(fields.size()));
    }
    TranscribedTurn turn;
    turn.reference = tokenize(fields[*ref_col]);
    turn.hypothesis = tokenize(fields[*hyp_col]);
    try {
      std::size_t used = 0;
      turn.score = std::stod(fields[*score_col], &used);
      if (used != fields[*score_col].size()) throw std::invalid_argument("trailing characters");
      if (intent_col && !fields[*intent_col].empty()) {
        turn.semantics = Semantics{fields[*intent_col], slot_col ? fields[*slot_col] : std::string()};
      }
      if (ood_col) turn.out_of_domain = parse_bool_text(fields[*ood_col]);
    } catch (const std::logic_error& e) {
      throw ParseError(line_no, std::string("bad field: ") + e.what());
    }
    validate_at(turn, line_no);
    corpus.turns.push_back(std::move(turn));
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open corpus file " + path.string());
  auto id = path.stem().string();
  return format == CorpusFormat::Csv ? read_csv(in, id) : read_jsonl(in, id);
}

Corpus load_corpus(const std::filesystem::path& path) { return load_corpus(path, format_for_path(path)); }

void write_jsonl(std::ostream& out, const Corpus& corpus) {
  for (const auto& turn : corpus.turns) {
    json record;
    record["reference"] = join(turn.reference);
    record["hypothesis"] = join(turn.hypothesis);
    record["score"] = turn.score;
    if (turn.semantics) {
      record["intent"] = turn.semantics->intent;
      record["slot"] = turn.semantics->slot;
    }
    if (turn.out_of_domain) record["ood"] = *turn.out_of_domain;
    out << record.dump() << '\n';
  }
}

void write_csv(std::ostream& out, const Corpus& corpus) {
  out << "reference,hypothesis,score,intent,slot,ood\n";
  for (const auto& turn : corpus.turns) {
    out << csv_quote(join(turn.reference)) << ',' << csv_quote(join(turn.hypothesis)) << ','
        << format_score(turn.score) << ',';
    if (turn.semantics) out << csv_quote(turn.semantics->intent) << ',' << csv_quote(turn.semantics->slot);
    else out << ',';
    out << ',';
    if (turn.out_of_domain) out << (*turn.out_of_domain ? "true" : "false");
    out << '\n';
  }
}

void save_corpus(const std::filesystem::path& path, const Corpus& corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write corpus file " + path.string());
  if (format_for_path(path) == CorpusFormat::Csv) write_csv(out, corpus);
  else write_jsonl(out, corpus);
}

std::pair<Corpus, Corpus> split_corpus(const Corpus& corpus, double train_fraction, std::uint64_t seed) {
  if (corpus.empty()) throw DomainError("split_corpus: corpus is empty");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw DomainError("split_corpus: fraction must lie in (0,1)");
  const std::size_t n = corpus.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(order[i - 1], order[pick(rng)]);
  }
  const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * train_fraction));
  std::vector<char> in_train(n, 0);
  for (std::size_t i = 0; i < n_train; ++i) in_train[order[i]] = 1;

  Corpus train{corpus.id + ".train", {}};
  Corpus test{corpus.id + ".test", {}};
  train.turns.reserve(n_train);
  test.turns.reserve(n - n_train);
  for (std::size_t i = 0; i < n; ++i) (in_train[i] ? train : test).turns.push_back(corpus.turns[i]);
  return {std::move(train), std::move(test)};
}

Corpus dedup_pairs(const Corpus& corpus) {
  Corpus out{corpus.id, {}};
  std::unordered_set<std::string> seen;
  for (const auto& turn : corpus.turns) {
    // '\x1f' cannot appear inside a token, so the key is unambiguous.
    auto key = join(turn.reference) + '\x1f' + join(turn.hypothesis);
    if (seen.insert(std::move(key)).second) out.turns.push_back(turn);
  }
  return out;
}

}  // namespace noisychannel
