#include "bodyshape/datasetgen.hpp"

#include <algorithm>
#include <random>
#include <sstream>

#include <json.hpp>

#include "bodyshape/errors.hpp"
#include "bodyshape/measure.hpp"
#include "bodyshape/sampling.hpp"
#include "bodyshape/shape_text.hpp"
#include "jsonl_util.hpp"
#include "parallel.hpp"

namespace bodyshape {

namespace {

constexpr std::uint64_t kMentionStream = 0x6d656e74696f6e73ULL;
constexpr std::uint64_t kWordingStream = 0x776f7264696e6773ULL;
constexpr std::size_t kBatchSize = 512;

std::vector<Measurement> choose_mentions(const LabelSet& labels, const MentionPolicy& policy,
                                         std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> count_dist(policy.min_attributes,
                                                        policy.max_attributes);
  const std::size_t k = count_dist(rng);
  std::vector<Measurement> pool(all_measurements().begin(), all_measurements().end());
  std::vector<Measurement> chosen;
  chosen.reserve(k);
  while (chosen.size() < k && !pool.empty()) {
    std::vector<double> weights;
    weights.reserve(pool.size());
    for (auto m : pool) weights.push_back(labels[m] == Level::Average ? 1.0 : policy.non_average_weight);
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    const std::size_t i = pick(rng);
    chosen.push_back(pool[i]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(i));
  }
  return chosen;
}

}  // namespace

void MentionPolicy::validate() const {
  if (min_attributes < 1 || min_attributes > max_attributes || max_attributes > kNumMeasurements)
    throw Error(ErrorKind::Config, "mention count range must satisfy 1 <= min <= max <= 12");
  if (!(non_average_weight > 0.0))
    throw Error(ErrorKind::Config, "non-average mention weight must be positive");
}

DatasetEntry make_entry(const GenerationContext& ctx, std::uint64_t seed, std::uint64_t index,
                        const MentionPolicy& policy, ConstraintSet* meaning) {
  const ShapeParams beta = round_to_grid(sample_shape(seed, index));
  const auto mesh = evaluate_mesh(ctx.asset, beta);
  const LabelSet labels = assign_labels(ctx.bins, measure_all(ctx.asset, mesh));

  std::mt19937_64 rng(mix_seed(seed ^ kMentionStream, index));
  const auto mentioned = choose_mentions(labels, policy, rng);
  DatasetEntry entry{generate_description(ctx.lexicon, labels, mentioned,
                                          mix_seed(seed ^ kWordingStream, index)),
                     beta};

  ConstraintSet expected;
  for (auto m : mentioned) expected.set({m, labels[m]});
  const auto parsed = parse_description(ctx.lexicon, entry.description);
  if (!parsed.constraints.same_as(expected) || !parsed.unmatched.empty())
    throw Error(ErrorKind::Lexicon,
                "generated description does not round-trip: \"" + entry.description + "\"");
  if (meaning) *meaning = std::move(expected);
  return entry;
}

GenerationStats generate_dataset(const GenerationContext& ctx, std::size_t count,
                                 std::uint64_t seed, ParaphraseProvider* paraphrase,
                                 const MentionPolicy& policy,
                                 const std::function<void(const DatasetEntry&)>& sink,
                                 std::uint64_t first_index) {
  policy.validate();
  GenerationStats stats;
  std::vector<DatasetEntry> batch;
  std::vector<ConstraintSet> meanings;
  for (std::size_t start = 0; start < count; start += kBatchSize) {
    const std::size_t n = std::min(kBatchSize, count - start);
    batch.assign(n, DatasetEntry{{}, ShapeParams::zeros()});
    meanings.assign(n, ConstraintSet{});
    detail::parallel_for(n, [&](std::size_t i) {
      batch[i] = make_entry(ctx, seed, first_index + start + i, policy, &meanings[i]);
    });
    for (std::size_t i = 0; i < n; ++i) {
      if (paraphrase) {
        auto rewritten = paraphrase->paraphrase(batch[i].description);
        if (!rewritten) {
          ++stats.paraphrase_unreachable;
        } else {
          bool accepted = false;
          try {
            const auto parsed = parse_description(ctx.lexicon, *rewritten);
            accepted = parsed.constraints.same_as(meanings[i]);
          } catch (const UnparseableDescription&) {
          }
          if (accepted) {
            batch[i].description = std::move(*rewritten);
            ++stats.paraphrased;
          } else {
            ++stats.paraphrase_rejected;
          }
        }
      }
      sink(batch[i]);
      ++stats.emitted;
    }
  }
  return stats;
}

SplitSummary write_dataset_split(const GenerationContext& ctx, std::size_t train_count,
                                 std::size_t eval_count, std::uint64_t seed,
                                 ParaphraseProvider* paraphrase, const MentionPolicy& policy,
                                 const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + out_dir.string() + ": " + ec.message());
  SplitSummary summary;
  summary.train_path = out_dir / "train.jsonl";
  summary.eval_path = out_dir / "eval.jsonl";
  summary.train_count = train_count;
  summary.eval_count = eval_count;

  auto add = [&](const GenerationStats& s) {
    summary.stats.emitted += s.emitted;
    summary.stats.paraphrased += s.paraphrased;
    summary.stats.paraphrase_rejected += s.paraphrase_rejected;
    summary.stats.paraphrase_unreachable += s.paraphrase_unreachable;
  };
  {
    JsonlWriter train(summary.train_path);
    add(generate_dataset(ctx, train_count, seed, paraphrase, policy,
                         [&](const DatasetEntry& e) { train.write(e); }, 0));
    train.close();
  }
  {
    JsonlWriter eval(summary.eval_path);
    add(generate_dataset(ctx, eval_count, seed, paraphrase, policy,
                         [&](const DatasetEntry& e) { eval.write(e); }, train_count));
    eval.close();
  }
  return summary;
}

std::string to_jsonl_line(const DatasetEntry& entry) {
  return "{\"description\": " + nlohmann::json(entry.description).dump() +
         ", \"shape_params\": \"" + format_shape_params(entry.shape_params) + "\"}";
}

DatasetEntry parse_jsonl_line(std::string_view line, std::size_t line_number) {
  const auto doc = detail::parse_object_line(line, line_number);
  const auto d = doc.find("description");
  const auto s = doc.find("shape_params");
  if (d == doc.end() || !d->is_string())
    throw Error(ErrorKind::Format, "missing string field 'description'", line_number);
  if (s == doc.end() || !s->is_string())
    throw Error(ErrorKind::Format, "missing string field 'shape_params'", line_number);
  try {
    return {d->get<std::string>(), parse_shape_string(s->get<std::string>())};
  } catch (const Error& e) {
    throw Error(ErrorKind::Format, std::string("shape_params: ") + e.what(), line_number);
  }
}

JsonlWriter::JsonlWriter(const std::filesystem::path& path) : path_(path), out_(path) {
  if (!out_) throw Error(ErrorKind::Io, "cannot write " + path.string());
}

void JsonlWriter::write(const DatasetEntry& entry) {
  out_ << to_jsonl_line(entry) << '\n';
  if (!out_) throw Error(ErrorKind::Io, "write failed: " + path_.string());
}

void JsonlWriter::close() {
  out_.close();
  if (out_.fail()) throw Error(ErrorKind::Io, "close failed: " + path_.string());
}

void write_jsonl(std::span<const DatasetEntry> entries, const std::filesystem::path& path) {
  JsonlWriter w(path);
  for (const auto& e : entries) w.write(e);
  w.close();
}

std::vector<DatasetEntry> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::MissingFile, "cannot open " + path.string());
  std::vector<DatasetEntry> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (detail::blank(line)) continue;
    out.push_back(parse_jsonl_line(detail::strip_cr(line), number));
  }
  return out;
}

}  // namespace bodyshape
