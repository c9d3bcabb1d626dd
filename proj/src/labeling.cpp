#include "bodyshape/labeling.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "bodyshape/embedded_bins.hpp"
#include "bodyshape/errors.hpp"
#include "bodyshape/sampling.hpp"
#include "parallel.hpp"

namespace bodyshape {

namespace {

constexpr std::array<std::string_view, kNumLevels> kLevelNames = {"very_low", "low", "average",
                                                                  "high", "very_high"};

void check_quantiles(const Quantiles& q) {
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (!(q[i] > 0.0 && q[i] < 1.0)) throw Error(ErrorKind::Config, "quantiles must lie in (0, 1)");
    if (i > 0 && !(q[i] > q[i - 1])) {
      throw Error(ErrorKind::Config, "quantiles must be strictly ascending");
    }
  }
}

bool strictly_ascending(const std::array<double, 4>& t) {
  return t[0] < t[1] && t[1] < t[2] && t[2] < t[3];
}

}  // namespace

std::string_view name(Level level) { return kLevelNames[static_cast<std::size_t>(level)]; }

std::optional<Level> level_from_name(std::string_view n) {
  for (std::size_t i = 0; i < kNumLevels; ++i) {
    if (kLevelNames[i] == n) return kAllLevels[i];
  }
  return std::nullopt;
}

BinTable::BinTable(Quantiles quantiles, std::size_t sample_count, std::uint64_t seed)
    : quantiles_(quantiles), sample_count_(sample_count), seed_(seed) {
  check_quantiles(quantiles_);
}

void BinTable::set(Measurement m, const Thresholds& t) {
  if (!strictly_ascending(t.cuts)) {
    throw Error(ErrorKind::Config,
                "thresholds for " + std::string(name(m)) + " are not strictly ascending");
  }
  table_[index(m)] = t;
}

bool BinTable::complete() const {
  return std::all_of(table_.begin(), table_.end(), [](const auto& t) { return t.has_value(); });
}

const Thresholds& BinTable::thresholds(Measurement m) const {
  const auto& t = table_[index(m)];
  if (!t) throw Error(ErrorKind::IncompleteBins, "bin table has no entry for " + std::string(name(m)));
  return *t;
}

Level BinTable::classify(Measurement m, double value) const {
  const auto& cuts = thresholds(m).cuts;
  // Number of cut points at or below the value; a value equal to a cut
  // belongs to the bin above it.
  const auto above = std::upper_bound(cuts.begin(), cuts.end(), value) - cuts.begin();
  return kAllLevels[static_cast<std::size_t>(above)];
}

std::string BinTable::to_json() const {
  nlohmann::ordered_json doc;
  doc["version"] = 1;
  doc["quantiles"] = quantiles_;
  doc["sample_count"] = sample_count_;
  doc["seed"] = seed_;
  doc["levels"] = kLevelNames;
  nlohmann::ordered_json thresholds = nlohmann::ordered_json::object();
  nlohmann::ordered_json observed = nlohmann::ordered_json::object();
  for (Measurement m : all_measurements()) {
    if (const auto& t = table_[index(m)]) {
      thresholds[std::string(name(m))] = t->cuts;
      observed[std::string(name(m))] = {t->observed_min, t->observed_max};
    }
  }
  doc["thresholds"] = std::move(thresholds);
  doc["observed"] = std::move(observed);
  return doc.dump(2) + "\n";
}

BinTable BinTable::from_json(std::string_view text) {
  using nlohmann::json;
  try {
    const json doc = json::parse(text);
    const auto q = doc.at("quantiles").get<std::vector<double>>();
    if (q.size() != 4) throw Error(ErrorKind::Config, "bin table needs exactly 4 quantiles");
    BinTable table({q[0], q[1], q[2], q[3]}, doc.at("sample_count").get<std::size_t>(),
                   doc.at("seed").get<std::uint64_t>());
    if (doc.contains("levels") &&
        doc.at("levels").get<std::vector<std::string>>() !=
            std::vector<std::string>(kLevelNames.begin(), kLevelNames.end())) {
      throw Error(ErrorKind::Format, "bin table levels must be very_low..very_high");
    }
    const json& observed = doc.contains("observed") ? doc.at("observed") : json::object();
    for (const auto& [key, value] : doc.at("thresholds").items()) {
      const auto m = measurement_from_name(key);
      if (!m) throw Error(ErrorKind::Format, "bin table has unknown measurement '" + key + "'");
      const auto cuts = value.get<std::vector<double>>();
      if (cuts.size() != 4) throw Error(ErrorKind::Format, "need 4 thresholds for " + key);
      Thresholds t{{cuts[0], cuts[1], cuts[2], cuts[3]}, cuts[0], cuts[3]};
      if (observed.contains(key)) {
        const auto range = observed.at(key).get<std::vector<double>>();
        if (range.size() != 2) throw Error(ErrorKind::Format, "observed range for " + key);
        t.observed_min = range[0];
        t.observed_max = range[1];
      }
      table.set(*m, t);
    }
    return table;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Format, std::string("bin table: ") + e.what());
  }
}

BinTable BinTable::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingFile, "cannot open bin table " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

void BinTable::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write bin table " + path.string());
  out << to_json();
}

BinTable calibrate_bins(const BodyModelAsset& asset, std::size_t sample_count,
                        const Quantiles& quantiles, std::uint64_t seed) {
  check_quantiles(quantiles);
  if (sample_count < 1000) throw Error(ErrorKind::Config, "calibration needs >= 1000 samples");

  std::vector<MeasurementVector> samples(sample_count);
  detail::parallel_for(sample_count, [&](std::size_t i) {
    samples[i] = measure_all(asset, evaluate_mesh(asset, sample_shape(seed, i)));
  });

  BinTable table(quantiles, sample_count, seed);
  std::vector<double> column(sample_count);
  for (Measurement m : all_measurements()) {
    for (std::size_t i = 0; i < sample_count; ++i) column[i] = samples[i][m];
    std::sort(column.begin(), column.end());
    Thresholds t;
    for (std::size_t k = 0; k < 4; ++k) {
      // Inverse empirical CDF: smallest value with at least q*n samples <= it.
      const auto rank = static_cast<std::size_t>(
          std::ceil(quantiles[k] * static_cast<double>(sample_count)));
      t.cuts[k] = column[std::clamp<std::size_t>(rank, 1, sample_count) - 1];
    }
    t.observed_min = column.front();
    t.observed_max = column.back();
    if (!strictly_ascending(t.cuts)) {
      throw Error(ErrorKind::Numerical, "calibrated thresholds for " + std::string(name(m)) +
                                            " are not strictly ascending");
    }
    table.set(m, t);
  }
  return table;
}

LabelSet assign_labels(const BinTable& bins, const MeasurementVector& m) {
  LabelSet labels;
  for (Measurement k : all_measurements()) labels[k] = bins.classify(k, m[k]);
  return labels;
}

const BinTable& default_bins() {
  static const BinTable table = [] {
    if (!embedded::kEmbeddedBins.empty()) return BinTable::from_json(embedded::kEmbeddedBins);
    return calibrate_bins(builtin_asset(), kDefaultCalibrationSamples, kDefaultQuantiles,
                          kDefaultCalibrationSeed);
  }();
  return table;
}

}  // namespace bodyshape
