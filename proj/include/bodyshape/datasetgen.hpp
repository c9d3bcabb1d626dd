#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bodyshape/bodymodel.hpp"
#include "bodyshape/labeling.hpp"
#include "bodyshape/textlang.hpp"

namespace bodyshape {

struct DatasetEntry {
  std::string description;
  ShapeParams shape_params;
  bool operator==(const DatasetEntry&) const = default;
};

// How many attributes a description mentions and which ones.
struct MentionPolicy {
  std::size_t min_attributes = 2;
  std::size_t max_attributes = 5;
  // Relative selection weight of a non-average attribute versus an average one.
  double non_average_weight = 3.0;
  void validate() const;
};

// Rewrites a description. Returning nullopt means the provider was
// unreachable; the generator then keeps the template text.
class ParaphraseProvider {
 public:
  virtual ~ParaphraseProvider() = default;
  virtual std::optional<std::string> paraphrase(const std::string& text) = 0;
};

struct HttpParaphraseConfig {
  std::string url;  // http://host:port/path, POST {text, instruction} -> {text}
  std::chrono::milliseconds timeout{10000};
  int retries = 2;
  std::string instruction =
      "Rewrite this description of a person's body with different wording and attribute order. "
      "Keep every attribute and its intensity. Reply with the sentence only.";
};

class HttpParaphraseProvider : public ParaphraseProvider {
 public:
  explicit HttpParaphraseProvider(HttpParaphraseConfig config);
  std::optional<std::string> paraphrase(const std::string& text) override;

 private:
  HttpParaphraseConfig config_;
  std::string base_;
  std::string path_;
};

struct GenerationContext {
  const BodyModelAsset& asset;
  const BinTable& bins;
  const Lexicon& lexicon;
};

struct GenerationStats {
  std::size_t emitted = 0;
  std::size_t paraphrased = 0;            // accepted rewrites
  std::size_t paraphrase_rejected = 0;    // rewrite changed the parsed meaning
  std::size_t paraphrase_unreachable = 0; // provider failed after retries
};

// Entry `index` of the stream for `seed`: beta sampled and snapped to the
// three-decimal grid, measured, labeled and described. Pure function of
// (seed, index).
DatasetEntry make_entry(const GenerationContext& ctx, std::uint64_t seed, std::uint64_t index,
                        const MentionPolicy& policy, ConstraintSet* meaning = nullptr);

// Streams entries [first_index, first_index + count) to `sink` in index
// order. With a provider, each description is offered for paraphrase and the
// rewrite is kept only if it parses to the same constraints.
GenerationStats generate_dataset(const GenerationContext& ctx, std::size_t count,
                                 std::uint64_t seed, ParaphraseProvider* paraphrase,
                                 const MentionPolicy& policy,
                                 const std::function<void(const DatasetEntry&)>& sink,
                                 std::uint64_t first_index = 0);

struct SplitSummary {
  std::filesystem::path train_path;
  std::filesystem::path eval_path;
  std::size_t train_count = 0;
  std::size_t eval_count = 0;
  GenerationStats stats;
};

// train.jsonl gets entries [0, train_count), eval.jsonl the next eval_count.
SplitSummary write_dataset_split(const GenerationContext& ctx, std::size_t train_count,
                                 std::size_t eval_count, std::uint64_t seed,
                                 ParaphraseProvider* paraphrase, const MentionPolicy& policy,
                                 const std::filesystem::path& out_dir);

// {"description": "...", "shape_params": "[...]"} with exactly that key order
// and spacing.
std::string to_jsonl_line(const DatasetEntry& entry);
// ErrorKind::Format carrying the line number on malformed lines or
// duplicate keys.
DatasetEntry parse_jsonl_line(std::string_view line, std::size_t line_number);

class JsonlWriter {
 public:
  explicit JsonlWriter(const std::filesystem::path& path);
  void write(const DatasetEntry& entry);
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

void write_jsonl(std::span<const DatasetEntry> entries, const std::filesystem::path& path);
std::vector<DatasetEntry> read_jsonl(const std::filesystem::path& path);

}  // namespace bodyshape
