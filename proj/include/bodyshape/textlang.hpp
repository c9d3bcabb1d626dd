#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bodyshape/errors.hpp"
#include "bodyshape/labeling.hpp"
#include "bodyshape/measure.hpp"

namespace bodyshape {

struct Attribute {
  Measurement measurement;
  Level level;
  bool operator==(const Attribute&) const = default;
};

// Surface forms per (measurement, level). "phrases" read as noun phrases
// ("long arms"), "adjectives" can precede the subject ("a tall person").
struct SurfaceForms {
  std::vector<std::string> phrases;
  std::vector<std::string> adjectives;
};

class Lexicon {
 public:
  // Validates: every (measurement, level) has >= 2 forms, and no form maps to
  // two different attributes outside the idiom table (ErrorKind::Lexicon).
  static Lexicon from_json(std::string_view text);
  static Lexicon load(const std::filesystem::path& path);
  static const Lexicon& builtin();

  const SurfaceForms& forms(Measurement m, Level l) const {
    return forms_[index(m)][static_cast<std::size_t>(l)];
  }
  const std::vector<std::string>& modifiers() const { return modifiers_; }
  const std::map<std::string, std::vector<Attribute>>& idioms() const { return idioms_; }
  const std::vector<std::string>& subjects() const { return subjects_; }
  const std::vector<std::string>& connectives() const { return connectives_; }

  // Normalized (lowercase, single-spaced) phrase → attributes it denotes.
  const std::map<std::string, std::vector<Attribute>>& phrase_table() const { return table_; }
  std::size_t max_phrase_tokens() const { return max_tokens_; }
  bool is_modifier(std::string_view token) const;
  // Function words (fillers, subject and connective tokens) that carry no
  // attribute and are not reported as unmatched.
  bool is_filler(std::string_view token) const { return fillers_.contains(std::string(token)); }

 private:
  std::array<std::array<SurfaceForms, kNumLevels>, kNumMeasurements> forms_{};
  std::vector<std::string> modifiers_;
  std::map<std::string, std::vector<Attribute>> idioms_;
  std::vector<std::string> subjects_;
  std::vector<std::string> connectives_;
  std::set<std::string> fillers_;
  std::map<std::string, std::vector<Attribute>> table_;
  std::size_t max_tokens_ = 0;
};

struct Constraint {
  Measurement measurement;
  Level level;
  double weight = 1.0;
  bool operator==(const Constraint&) const = default;
};

// At most one constraint per measurement, kept in first-mention order.
struct ConstraintSet {
  std::vector<Constraint> items;

  const Constraint* find(Measurement m) const;
  // Inserts or replaces; returns true when an existing entry was replaced.
  bool set(const Constraint& c);
  bool empty() const { return items.empty(); }
  std::size_t size() const { return items.size(); }
  // Order-insensitive comparison of (measurement, level, weight).
  bool same_as(const ConstraintSet& other) const;
};

struct TextSpan {
  std::size_t begin = 0;  // byte offsets into the input
  std::size_t end = 0;
  std::string text;
};

struct PhraseMatch {
  TextSpan span;
  std::vector<Attribute> attributes;  // after modifiers
};

struct ParseResult {
  ConstraintSet constraints;
  std::vector<PhraseMatch> matches;
  std::vector<TextSpan> unmatched;
  std::vector<std::string> overrides;  // later mention replaced an earlier one
};

class UnparseableDescription : public Error {
 public:
  UnparseableDescription(const std::string& message, std::vector<TextSpan> unmatched)
      : Error(ErrorKind::UnparseableDescription, message), unmatched_(std::move(unmatched)) {}
  const std::vector<TextSpan>& unmatched() const { return unmatched_; }

 private:
  std::vector<TextSpan> unmatched_;
};

// Case-insensitive longest-match extraction. Each preceding modifier shifts
// a level one step outward, saturating at the extremes. Throws
// UnparseableDescription when nothing matches.
ParseResult parse_description(const Lexicon& lexicon, std::string_view text);

// One sentence mentioning exactly `mentioned` at their levels in `labels`.
// Deterministic given the seed. ErrorKind::Input when `mentioned` is empty.
std::string generate_description(const Lexicon& lexicon, const LabelSet& labels,
                                 std::span<const Measurement> mentioned, std::uint64_t seed);

}  // namespace bodyshape
