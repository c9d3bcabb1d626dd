#include "bodyshape/losseval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "bodyshape/errors.hpp"
#include "bodyshape/shape_text.hpp"
#include "jsonl_util.hpp"
#include "parallel.hpp"

namespace bodyshape {

namespace {

std::array<double, kNumLevels> log_soft_bins(const Thresholds& t, double value, double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw Error(ErrorKind::Config, "temperature must be positive");
  const double floor_width = 1e-12 * (t.cuts[3] - t.cuts[0]);
  std::array<double, kNumLevels + 1> edges{std::min(t.observed_min, t.cuts[0]), t.cuts[0], t.cuts[1],
                                           t.cuts[2], t.cuts[3], std::max(t.observed_max, t.cuts[3])};
  std::array<double, kNumLevels> logits{};
  for (std::size_t k = 0; k < kNumLevels; ++k) {
    const double width = std::max(edges[k + 1] - edges[k], floor_width);
    const double center = 0.5 * (edges[k] + edges[k + 1]);
    double d = std::abs(value - center);
    if (k == 0) d = std::max(0.0, value - center);
    if (k == kNumLevels - 1) d = std::max(0.0, center - value);
    logits[k] = -d / (tau * width);
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double l : logits) sum += std::exp(l - top);
  const double lse = top + std::log(sum);
  for (double& l : logits) l -= lse;
  return logits;
}

struct RecordOutcome {
  enum class Kind { Ok, Malformed, Arity, OutOfRange } kind = Kind::Ok;
  ConstraintSet mentioned;
  LabelSet achieved;
  MeasurementVector values;
  std::optional<double> llm;
  double shape = 0.0;
  double measurements = 0.0;
};

double sorted_sum(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return std::accumulate(v.begin(), v.end(), 0.0);
}

std::optional<double> sorted_mean(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  return sorted_sum(v) / static_cast<double>(v.size());
}

}  // namespace

BetaWeights BetaWeights::from_asset(const BodyModelAsset& asset) {
  const auto& dirs = asset.shape_dirs();
  const std::size_t nv = asset.vertex_count();
  std::array<double, kNumBetas> raw{};
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(kNumBetas); ++i) {
    double sum = 0.0;
    for (std::size_t v = 0; v < nv; ++v) {
      const auto r = static_cast<Eigen::Index>(3 * v);
      sum += std::sqrt(dirs(r, i) * dirs(r, i) + dirs(r + 1, i) * dirs(r + 1, i) +
                       dirs(r + 2, i) * dirs(r + 2, i));
    }
    raw[static_cast<std::size_t>(i)] = sum / static_cast<double>(nv);
  }
  return normalized(raw);
}

BetaWeights BetaWeights::uniform() {
  BetaWeights b;
  b.w.fill(1.0);
  return b;
}

BetaWeights BetaWeights::normalized(std::span<const double> raw) {
  if (raw.size() != kNumBetas) throw Error(ErrorKind::Arity, "expected 10 weights");
  double total = 0.0;
  for (double x : raw) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw Error(ErrorKind::Input, "weights must be finite and >= 0");
    total += x;
  }
  if (!(total > 0.0)) throw Error(ErrorKind::Input, "weights sum to zero");
  BetaWeights b;
  for (std::size_t i = 0; i < kNumBetas; ++i) b.w[i] = raw[i] * (10.0 / total);
  return b;
}

std::optional<double> loss_llm(std::span<const double> token_probs) {
  if (token_probs.empty()) return std::nullopt;
  double sum = 0.0;
  for (double p : token_probs) {
    if (!(p > 0.0 && p <= 1.0)) throw Error(ErrorKind::OutOfRange, "token probability outside (0, 1]");
    sum -= std::log(p);
  }
  return sum / static_cast<double>(token_probs.size());
}

std::optional<double> loss_llm(const PredictionRecord& record) {
  if (!record.token_probs) return std::nullopt;
  return loss_llm(*record.token_probs);
}

double loss_shape(const ShapeParams& pred, const ShapeParams& ref, const BetaWeights& w) {
  double sum = 0.0;
  for (std::size_t i = 0; i < kNumBetas; ++i) sum += w.w[i] * std::abs(pred[i] - ref[i]);
  return sum / 10.0;
}

std::array<double, kNumLevels> soft_bins(const Thresholds& t, double value, double tau) {
  auto p = log_soft_bins(t, value, tau);
  for (double& x : p) x = std::exp(x);
  return p;
}

MeasurementLoss measurement_loss_terms(const MeasurementVector& pred, const MeasurementVector& ref,
                                       const BinTable& bins, double tau) {
  MeasurementLoss out;
  for (auto m : all_measurements()) {
    const auto& t = bins.thresholds(m);
    const auto lp = log_soft_bins(t, pred[m], tau);
    const auto lr = log_soft_bins(t, ref[m], tau);
    double ce = 0.0;
    double kl = 0.0;
    for (std::size_t k = 0; k < kNumLevels; ++k) {
      const double pr = std::exp(lr[k]);
      if (pr == 0.0) continue;
      ce -= pr * lp[k];
      kl += pr * (lr[k] - lp[k]);
    }
    out.cross_entropy += ce;
    out.kl += std::max(0.0, kl);
  }
  out.cross_entropy /= static_cast<double>(kNumMeasurements);
  out.kl /= static_cast<double>(kNumMeasurements);
  return out;
}

double loss_measurements(const BodyModelAsset& asset, const BinTable& bins, const ShapeParams& pred,
                         const ShapeParams& ref, double tau) {
  return measurement_loss_terms(measure_all(asset, evaluate_mesh(asset, pred)),
                                measure_all(asset, evaluate_mesh(asset, ref)), bins, tau)
      .cross_entropy;
}

LossTerms combine_losses(std::optional<double> llm, double shape, double measurements,
                         const LossCoefficients& c) {
  LossTerms t{llm, shape, measurements, 0.0};
  t.total = (llm ? c.llm * *llm : 0.0) + c.shape * shape + c.measurements * measurements;
  return t;
}

AccuracyReport evaluate_predictions(const BodyModelAsset& asset, const BinTable& bins,
                                    const Lexicon& lexicon,
                                    std::span<const PredictionRecord> records,
                                    const EvaluationOptions& options) {
  if (records.empty()) throw Error(ErrorKind::Input, "no prediction records");
  if (!(options.temperature > 0.0)) throw Error(ErrorKind::Config, "temperature must be positive");
  const BetaWeights weights = BetaWeights::from_asset(asset);

  std::vector<RecordOutcome> outcomes(records.size());
  detail::parallel_for(records.size(), [&](std::size_t i) {
    const auto& rec = records[i];
    auto& out = outcomes[i];
    try {
      out.mentioned = parse_description(lexicon, rec.description).constraints;
    } catch (const UnparseableDescription&) {
      throw Error(ErrorKind::Input,
                  "record " + std::to_string(i + 1) + ": reference description does not parse");
    }
    out.llm = loss_llm(rec);
    ShapeParams pred;
    try {
      pred = parse_shape_string(rec.predicted);
    } catch (const Error& e) {
      switch (e.kind()) {
        case ErrorKind::Arity: out.kind = RecordOutcome::Kind::Arity; break;
        case ErrorKind::OutOfRange: out.kind = RecordOutcome::Kind::OutOfRange; break;
        default: out.kind = RecordOutcome::Kind::Malformed; break;
      }
      return;
    }
    out.values = measure_all(asset, evaluate_mesh(asset, pred));
    out.achieved = assign_labels(bins, out.values);
    const auto ref_values = measure_all(asset, evaluate_mesh(asset, rec.reference));
    out.shape = loss_shape(pred, rec.reference, weights);
    out.measurements =
        measurement_loss_terms(out.values, ref_values, bins, options.temperature).cross_entropy;
  });

  AccuracyReport report;
  report.records = records.size();
  report.temperature = options.temperature;
  std::vector<double> llm, shape, meas;
  for (const auto& o : outcomes) {
    if (o.llm) llm.push_back(*o.llm);
    const bool ok = o.kind == RecordOutcome::Kind::Ok;
    switch (o.kind) {
      case RecordOutcome::Kind::Ok: ++report.wellformed; break;
      case RecordOutcome::Kind::Malformed: ++report.malformed; break;
      case RecordOutcome::Kind::Arity: ++report.arity_errors; break;
      case RecordOutcome::Kind::OutOfRange: ++report.out_of_range; break;
    }
    if (ok) {
      shape.push_back(o.shape);
      meas.push_back(o.measurements);
    }
    for (const auto& c : o.mentioned.items) {
      auto& cell = report.cells[index(c.measurement)][static_cast<std::size_t>(c.level)];
      if (!ok) {
        ++cell.malformed;
        continue;
      }
      const Level got = o.achieved[c.measurement];
      if (got == c.level) {
        ++cell.hits;
      } else {
        ++cell.misses;
        if ((c.level == Level::VeryLow && got == Level::VeryHigh) ||
            (c.level == Level::VeryHigh && got == Level::VeryLow))
          ++report.opposite_extreme;
      }
      report.scatter.push_back({c.measurement, c.level, o.values[c.measurement], got});
    }
  }
  std::sort(report.scatter.begin(), report.scatter.end(), [](const ScatterPoint& a, const ScatterPoint& b) {
    return std::tuple(index(a.measurement), a.described, a.value, a.achieved) <
           std::tuple(index(b.measurement), b.described, b.value, b.achieved);
  });
  report.llm_records = llm.size();
  report.mean_loss_llm = sorted_mean(llm);
  report.mean_loss_shape = sorted_mean(shape);
  report.mean_loss_measurements = sorted_mean(meas);
  if (report.mean_loss_llm || report.mean_loss_shape) {
    const auto& c = options.coefficients;
    report.mean_total = (report.mean_loss_llm ? c.llm * *report.mean_loss_llm : 0.0) +
                        (report.mean_loss_shape ? c.shape * *report.mean_loss_shape : 0.0) +
                        (report.mean_loss_measurements
                             ? c.measurements * *report.mean_loss_measurements
                             : 0.0);
  }
  return report;
}

std::string report_json(const AccuracyReport& r) {
  using nlohmann::ordered_json;
  auto opt = [](const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); };
  ordered_json doc;
  doc["records"] = r.records;
  doc["wellformed"] = r.wellformed;
  doc["malformed"] = r.malformed;
  doc["arity_errors"] = r.arity_errors;
  doc["out_of_range"] = r.out_of_range;
  doc["opposite_extreme"] = r.opposite_extreme;
  ordered_json table = ordered_json::array();
  for (auto m : all_measurements()) {
    for (auto l : kAllLevels) {
      const auto& c = r.cell(m, l);
      if (c.total() == 0) continue;
      table.push_back({{"row", std::string(name(m)) + "_" + std::string(name(l))},
                       {"accuracy", c.accuracy()},
                       {"count", c.total()},
                       {"hits", c.hits},
                       {"misses", c.misses},
                       {"malformed", c.malformed}});
    }
  }
  doc["table"] = table;
  doc["losses"] = {{"llm", opt(r.mean_loss_llm)},
                   {"shape", opt(r.mean_loss_shape)},
                   {"measurements", opt(r.mean_loss_measurements)},
                   {"total", opt(r.mean_total)},
                   {"llm_records", r.llm_records},
                   {"temperature", r.temperature}};
  ordered_json scatter = ordered_json::array();
  for (const auto& p : r.scatter)
    scatter.push_back({{"measurement", std::string(name(p.measurement))},
                       {"described", std::string(name(p.described))},
                       {"value", p.value},
                       {"achieved", std::string(name(p.achieved))}});
  doc["scatter"] = scatter;
  return doc.dump(2) + "\n";
}

PredictionRecord parse_prediction_line(std::string_view line, std::size_t line_number) {
  const auto doc = detail::parse_object_line(line, line_number);
  auto string_field = [&](const char* key) {
    const auto it = doc.find(key);
    if (it == doc.end() || !it->is_string())
      throw Error(ErrorKind::Format, std::string("missing string field '") + key + "'", line_number);
    return it->get<std::string>();
  };
  PredictionRecord rec;
  rec.description = string_field("description");
  try {
    rec.reference = parse_shape_string(string_field("shape_params"));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Format) throw;
    throw Error(ErrorKind::Format, std::string("shape_params: ") + e.what(), line_number);
  }
  rec.predicted = string_field("predicted");
  if (const auto it = doc.find("token_probs"); it != doc.end() && !it->is_null()) {
    if (!it->is_array()) throw Error(ErrorKind::Format, "token_probs must be an array", line_number);
    std::vector<double> probs;
    for (const auto& p : *it) {
      if (!p.is_number()) throw Error(ErrorKind::Format, "token_probs must hold numbers", line_number);
      const double v = p.get<double>();
      if (!(v > 0.0 && v <= 1.0))
        throw Error(ErrorKind::Format, "token probability outside (0, 1]", line_number);
      probs.push_back(v);
    }
    rec.token_probs = std::move(probs);
  }
  return rec;
}

std::vector<PredictionRecord> parse_predictions(std::string_view text) {
  std::vector<PredictionRecord> out;
  std::size_t number = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const auto line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++number;
    if (detail::blank(line)) continue;
    out.push_back(parse_prediction_line(detail::strip_cr(line), number));
  }
  if (out.empty()) throw Error(ErrorKind::Input, "prediction file has no records");
  return out;
}

std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingFile, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_predictions(ss.str());
}

std::string prediction_line(const PredictionRecord& r) {
  nlohmann::ordered_json doc;
  doc["description"] = r.description;
  doc["shape_params"] = format_shape_params(r.reference);
  doc["predicted"] = r.predicted;
  if (r.token_probs) doc["token_probs"] = *r.token_probs;
  return doc.dump();
}

}  // namespace bodyshape
