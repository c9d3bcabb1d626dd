#include "bodyshape/textlang.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "bodyshape/embedded_lexicon.hpp"

namespace bodyshape {

namespace {

struct Token {
  std::string text;  // lowercase
  std::size_t begin;
  std::size_t end;
  bool glued;  // only whitespace separates it from the previous token
};

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '\'' || c == '-';
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  bool only_space = false;
  std::size_t i = 0;
  while (i < text.size()) {
    if (is_word_char(text[i])) {
      const std::size_t start = i;
      std::string lower;
      while (i < text.size() && is_word_char(text[i])) {
        lower += static_cast<char>(std::tolower(static_cast<unsigned char>(text[i])));
        ++i;
      }
      tokens.push_back({std::move(lower), start, i, !tokens.empty() && only_space});
      only_space = true;
    } else {
      if (!std::isspace(static_cast<unsigned char>(text[i]))) only_space = false;
      ++i;
    }
  }
  return tokens;
}

// Lowercase and single-space a phrase; rejects characters the tokenizer
// would split on.
std::string normalize_phrase(std::string_view phrase) {
  const auto tokens = tokenize(phrase);
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0 && !tokens[i].glued) {
      throw Error(ErrorKind::Lexicon, "phrase contains punctuation: '" + std::string(phrase) + "'");
    }
    if (i) out += ' ';
    out += tokens[i].text;
  }
  if (out.empty()) throw Error(ErrorKind::Lexicon, "empty phrase in lexicon");
  return out;
}

Level shift_outward(Level level) {
  switch (level) {
    case Level::Low: return Level::VeryLow;
    case Level::High: return Level::VeryHigh;
    default: return level;
  }
}

std::string join_list(const std::vector<std::string>& items) {
  if (items.size() == 1) return items[0];
  if (items.size() == 2) return items[0] + " and " + items[1];
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i + 1 == items.size()) out += "and ";
    out += items[i];
    if (i + 1 < items.size()) out += ", ";
  }
  return out;
}

template <typename T>
const T& pick(const std::vector<T>& items, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> dist(0, items.size() - 1);
  return items[dist(rng)];
}

}  // namespace

Lexicon Lexicon::from_json(std::string_view text) {
  using nlohmann::json;
  Lexicon lex;
  try {
    const json doc = json::parse(text);
    auto add = [&](const std::string& phrase, std::vector<Attribute> attrs) {
      const std::string key = normalize_phrase(phrase);
      auto [it, inserted] = lex.table_.emplace(key, attrs);
      if (!inserted && it->second != attrs) {
        throw Error(ErrorKind::Lexicon, "phrase '" + key + "' maps to two different attributes");
      }
      lex.max_tokens_ = std::max(lex.max_tokens_, tokenize(key).size());
    };

    for (const auto& [mname, levels] : doc.at("entries").items()) {
      const auto m = measurement_from_name(mname);
      if (!m) throw Error(ErrorKind::Lexicon, "unknown measurement '" + mname + "'");
      for (const auto& [lname, forms] : levels.items()) {
        const auto l = level_from_name(lname);
        if (!l) throw Error(ErrorKind::Lexicon, "unknown level '" + lname + "'");
        SurfaceForms& sf = lex.forms_[index(*m)][static_cast<std::size_t>(*l)];
        if (forms.contains("phrases")) sf.phrases = forms.at("phrases").get<std::vector<std::string>>();
        if (forms.contains("adjectives")) {
          sf.adjectives = forms.at("adjectives").get<std::vector<std::string>>();
        }
        for (const auto& p : sf.phrases) add(p, {{*m, *l}});
        for (const auto& p : sf.adjectives) add(p, {{*m, *l}});
      }
    }
    for (Measurement m : all_measurements()) {
      for (Level l : kAllLevels) {
        const auto& sf = lex.forms(m, l);
        if (sf.phrases.size() + sf.adjectives.size() < 2) {
          throw Error(ErrorKind::Lexicon, "lexicon needs >= 2 forms for " + std::string(name(m)) +
                                              "/" + std::string(name(l)));
        }
        if (sf.phrases.empty()) {
          throw Error(ErrorKind::Lexicon, "lexicon needs a phrase form for " +
                                              std::string(name(m)) + "/" + std::string(name(l)));
        }
      }
    }

    if (doc.contains("modifiers")) {
      for (const auto& mod : doc.at("modifiers").get<std::vector<std::string>>()) {
        lex.modifiers_.push_back(normalize_phrase(mod));
      }
    }
    if (doc.contains("idioms")) {
      for (const auto& [phrase, meaning] : doc.at("idioms").items()) {
        std::vector<Attribute> attrs;
        for (const auto& [mname, lname] : meaning.items()) {
          const auto m = measurement_from_name(mname);
          const auto l = level_from_name(lname.get<std::string>());
          if (!m || !l) throw Error(ErrorKind::Lexicon, "bad idiom meaning for '" + phrase + "'");
          attrs.push_back({*m, *l});
        }
        const std::string key = normalize_phrase(phrase);
        if (lex.table_.contains(key)) {
          throw Error(ErrorKind::Lexicon, "idiom '" + key + "' collides with a surface form");
        }
        lex.idioms_[key] = attrs;
        add(key, std::move(attrs));
      }
    }
    lex.subjects_ = doc.value("subjects", std::vector<std::string>{"person"});
    lex.connectives_ = doc.value("connectives", std::vector<std::string>{"with"});
    if (lex.subjects_.empty() || lex.connectives_.empty()) {
      throw Error(ErrorKind::Lexicon, "lexicon needs subjects and connectives");
    }
    std::vector<std::string> words = doc.value("fillers", std::vector<std::string>{});
    words.insert(words.end(), lex.subjects_.begin(), lex.subjects_.end());
    words.insert(words.end(), lex.connectives_.begin(), lex.connectives_.end());
    for (const auto& w : words) {
      for (const auto& t : tokenize(w)) lex.fillers_.insert(t.text);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Lexicon, std::string("lexicon: ") + e.what());
  }
  return lex;
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingFile, "cannot open lexicon " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

const Lexicon& Lexicon::builtin() {
  static const Lexicon lex = from_json(embedded::kEmbeddedLexicon);
  return lex;
}

bool Lexicon::is_modifier(std::string_view token) const {
  return std::find(modifiers_.begin(), modifiers_.end(), token) != modifiers_.end();
}

const Constraint* ConstraintSet::find(Measurement m) const {
  for (const auto& c : items) {
    if (c.measurement == m) return &c;
  }
  return nullptr;
}

bool ConstraintSet::set(const Constraint& c) {
  for (auto& existing : items) {
    if (existing.measurement == c.measurement) {
      existing = c;
      return true;
    }
  }
  items.push_back(c);
  return false;
}

bool ConstraintSet::same_as(const ConstraintSet& other) const {
  if (items.size() != other.items.size()) return false;
  for (const auto& c : items) {
    const Constraint* o = other.find(c.measurement);
    if (!o || !(*o == c)) return false;
  }
  return true;
}

ParseResult parse_description(const Lexicon& lexicon, std::string_view text) {
  const auto tokens = tokenize(text);
  const auto& table = lexicon.phrase_table();
  ParseResult result;
  std::vector<bool> consumed(tokens.size(), false);
  std::vector<std::size_t> pending;  // modifier tokens waiting for a phrase

  std::size_t i = 0;
  while (i < tokens.size()) {
    // Longest run of glued tokens starting at i that forms a known phrase.
    std::size_t best_len = 0;
    const std::vector<Attribute>* best = nullptr;
    std::string key;
    for (std::size_t len = 1; len <= lexicon.max_phrase_tokens() && i + len <= tokens.size(); ++len) {
      if (len > 1) {
        if (!tokens[i + len - 1].glued) break;
        key += ' ';
      }
      key += tokens[i + len - 1].text;
      if (auto it = table.find(key); it != table.end()) {
        best_len = len;
        best = &it->second;
      }
    }

    if (best) {
      if (!pending.empty() && !tokens[i].glued) pending.clear();
      PhraseMatch match;
      const std::size_t first = pending.empty() ? i : pending.front();
      match.span.begin = tokens[first].begin;
      match.span.end = tokens[i + best_len - 1].end;
      match.span.text = std::string(text.substr(match.span.begin, match.span.end - match.span.begin));
      for (Attribute a : *best) {
        for (std::size_t k = 0; k < pending.size(); ++k) a.level = shift_outward(a.level);
        match.attributes.push_back(a);
        const Constraint* prev = result.constraints.find(a.measurement);
        if (prev && prev->level != a.level) {
          result.overrides.push_back(std::string(name(a.measurement)) + ": " +
                                     std::string(name(prev->level)) + " replaced by " +
                                     std::string(name(a.level)) + " from '" + match.span.text + "'");
        }
        result.constraints.set({a.measurement, a.level, 1.0});
      }
      for (std::size_t k : pending) consumed[k] = true;
      for (std::size_t k = i; k < i + best_len; ++k) consumed[k] = true;
      result.matches.push_back(std::move(match));
      pending.clear();
      i += best_len;
    } else if (lexicon.is_modifier(tokens[i].text)) {
      if (!pending.empty() && !tokens[i].glued) pending.clear();
      pending.push_back(i);
      ++i;
    } else {
      pending.clear();
      ++i;
    }
  }

  for (std::size_t k = 0; k < tokens.size(); ++k) {
    if (!consumed[k] && lexicon.is_filler(tokens[k].text)) consumed[k] = true;
    if (consumed[k]) continue;
    if (!result.unmatched.empty() && k > 0 && !consumed[k - 1]) {
      TextSpan& span = result.unmatched.back();
      span.end = tokens[k].end;
      span.text = std::string(text.substr(span.begin, span.end - span.begin));
    } else {
      result.unmatched.push_back(
          {tokens[k].begin, tokens[k].end, std::string(text.substr(tokens[k].begin, tokens[k].end - tokens[k].begin))});
    }
  }

  if (result.matches.empty()) {
    throw UnparseableDescription("no known body description phrase in '" + std::string(text) + "'",
                                 std::move(result.unmatched));
  }
  return result;
}

std::string generate_description(const Lexicon& lexicon, const LabelSet& labels,
                                 std::span<const Measurement> mentioned, std::uint64_t seed) {
  if (mentioned.empty()) throw Error(ErrorKind::Input, "nothing to describe");
  std::vector<Measurement> order(mentioned.begin(), mentioned.end());
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      if (order[i] == order[j]) throw Error(ErrorKind::Input, "measurement mentioned twice");
    }
  }
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::string adjective;
  std::vector<std::string> clauses;
  const bool try_adjective = std::bernoulli_distribution(0.5)(rng);
  for (Measurement m : order) {
    const SurfaceForms& sf = lexicon.forms(m, labels[m]);
    if (try_adjective && adjective.empty() && !sf.adjectives.empty()) {
      adjective = pick(sf.adjectives, rng);
    } else {
      if (sf.phrases.empty()) {
        throw Error(ErrorKind::Lexicon, "no phrase for " + std::string(name(m)) + "/" +
                                            std::string(name(labels[m])));
      }
      clauses.push_back(pick(sf.phrases, rng));
    }
  }

  const std::string& subject = pick(lexicon.subjects(), rng);
  std::string sentence;
  if (!adjective.empty()) {
    const bool vowel = std::string_view("aeiou").find(adjective.front()) != std::string_view::npos;
    sentence = (vowel ? "An " : "A ") + adjective + " " + subject;
  } else {
    sentence = std::bernoulli_distribution(0.5)(rng) ? "A " + subject : subject;
  }
  if (!clauses.empty()) {
    sentence += " " + pick(lexicon.connectives(), rng) + " " + join_list(clauses);
  }
  sentence[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(sentence[0])));
  return sentence + ".";
}

}  // namespace bodyshape
