#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bodyshape/bodymodel.hpp"
#include "bodyshape/labeling.hpp"
#include "bodyshape/measure.hpp"
#include "bodyshape/textlang.hpp"

namespace bodyshape {

struct PredictionRecord {
  std::string description;
  ShapeParams reference;
  std::string predicted;                         // raw model output
  std::optional<std::vector<double>> token_probs; // each in (0, 1]
};

// Per-coefficient weights, proportional to the mean per-vertex displacement
// a unit change of that coefficient causes, normalized to sum 10.
struct BetaWeights {
  std::array<double, kNumBetas> w{};

  static BetaWeights from_asset(const BodyModelAsset& asset);
  static BetaWeights uniform();
  // Rescales non-negative weights to sum 10. ErrorKind::Input if all zero.
  static BetaWeights normalized(std::span<const double> raw);
};

// Mean of -log p. nullopt when no probabilities are available (the term is
// skipped, not zero). ErrorKind::OutOfRange for p outside (0, 1].
std::optional<double> loss_llm(std::span<const double> token_probs);
std::optional<double> loss_llm(const PredictionRecord& record);

// Weighted L1: sum_i w_i |pred_i - ref_i| / 10.
double loss_shape(const ShapeParams& pred, const ShapeParams& ref, const BetaWeights& w);

inline constexpr double kDefaultTemperature = 0.25;

// Soft assignment of `value` over the five bins: softmax of
// -distance(value, bin center) / (tau * bin width). The open extreme bins
// count distance only on their inner side.
std::array<double, kNumLevels> soft_bins(const Thresholds& t, double value, double tau);

struct MeasurementLoss {
  double cross_entropy = 0.0;  // mean over measurements of H(ref, pred)
  double kl = 0.0;             // mean over measurements of KL(ref || pred)
};

MeasurementLoss measurement_loss_terms(const MeasurementVector& pred, const MeasurementVector& ref,
                                       const BinTable& bins, double tau = kDefaultTemperature);
// Cross-entropy form.
double loss_measurements(const BodyModelAsset& asset, const BinTable& bins, const ShapeParams& pred,
                         const ShapeParams& ref, double tau = kDefaultTemperature);

struct LossCoefficients {
  double llm = 1.0;
  double shape = 1.0;
  double measurements = 1.0;
};

struct LossTerms {
  std::optional<double> llm;
  double shape = 0.0;
  double measurements = 0.0;
  double total = 0.0;  // weighted sum of the available terms
};

LossTerms combine_losses(std::optional<double> llm, double shape, double measurements,
                         const LossCoefficients& c = {});

struct CellStats {
  std::size_t hits = 0;
  std::size_t misses = 0;
  std::size_t malformed = 0;
  std::size_t total() const { return hits + misses + malformed; }
  double accuracy() const { return total() ? static_cast<double>(hits) / total() : 0.0; }
  bool operator==(const CellStats&) const = default;
};

struct ScatterPoint {
  Measurement measurement;
  Level described;
  double value;   // achieved continuous measurement
  Level achieved;
  bool operator==(const ScatterPoint&) const = default;
};

struct EvaluationOptions {
  double temperature = kDefaultTemperature;
  LossCoefficients coefficients;
};

struct AccuracyReport {
  std::array<std::array<CellStats, kNumLevels>, kNumMeasurements> cells{};
  std::size_t records = 0;
  std::size_t wellformed = 0;
  std::size_t malformed = 0;     // no bracketed list of numbers
  std::size_t arity_errors = 0;  // list with the wrong number of values
  std::size_t out_of_range = 0;  // ten values but not a valid shape
  // Described very_low but achieved very_high, or the reverse.
  std::size_t opposite_extreme = 0;
  std::size_t llm_records = 0;
  std::optional<double> mean_loss_llm;
  std::optional<double> mean_loss_shape;
  std::optional<double> mean_loss_measurements;
  std::optional<double> mean_total;
  std::vector<ScatterPoint> scatter;  // sorted
  double temperature = kDefaultTemperature;

  const CellStats& cell(Measurement m, Level l) const {
    return cells[index(m)][static_cast<std::size_t>(l)];
  }
};

// Scores predictions against the levels their descriptions mention.
// Unusable predictions count as `malformed` for every mentioned cell.
// Order of records does not affect the result. ErrorKind::Input when empty.
AccuracyReport evaluate_predictions(const BodyModelAsset& asset, const BinTable& bins,
                                    const Lexicon& lexicon,
                                    std::span<const PredictionRecord> records,
                                    const EvaluationOptions& options = {});

std::string report_json(const AccuracyReport& report);

PredictionRecord parse_prediction_line(std::string_view line, std::size_t line_number);
std::vector<PredictionRecord> parse_predictions(std::string_view text);
std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path);
std::string prediction_line(const PredictionRecord& record);

}  // namespace bodyshape
