#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "bodyshape/bodymodel.hpp"
#include "bodyshape/measure.hpp"

namespace bodyshape {

enum class Level : std::uint8_t { VeryLow, Low, Average, High, VeryHigh };

inline constexpr std::size_t kNumLevels = 5;
inline constexpr std::array<Level, kNumLevels> kAllLevels = {
    Level::VeryLow, Level::Low, Level::Average, Level::High, Level::VeryHigh};

std::string_view name(Level level);
std::optional<Level> level_from_name(std::string_view name);
inline int rank(Level level) { return static_cast<int>(level); }

using Quantiles = std::array<double, 4>;
inline constexpr Quantiles kDefaultQuantiles = {0.05, 0.30, 0.70, 0.95};
inline constexpr std::size_t kDefaultCalibrationSamples = 100000;
inline constexpr std::uint64_t kDefaultCalibrationSeed = 7;

struct Thresholds {
  std::array<double, 4> cuts{};  // strictly ascending
  double observed_min = 0.0;     // calibration population extremes
  double observed_max = 0.0;
  bool operator==(const Thresholds&) const = default;
};

// Per-measurement cut points splitting the real line into the five levels,
// with the half-open convention [t_i, t_{i+1}).
class BinTable {
 public:
  BinTable() = default;
  BinTable(Quantiles quantiles, std::size_t sample_count, std::uint64_t seed);

  const Quantiles& quantiles() const { return quantiles_; }
  std::size_t sample_count() const { return sample_count_; }
  std::uint64_t seed() const { return seed_; }

  void set(Measurement m, const Thresholds& t);
  bool covers(Measurement m) const { return table_[index(m)].has_value(); }
  bool complete() const;
  // ErrorKind::IncompleteBins when the measurement is absent.
  const Thresholds& thresholds(Measurement m) const;

  Level classify(Measurement m, double value) const;

  std::string to_json() const;
  static BinTable from_json(std::string_view text);
  static BinTable load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  bool operator==(const BinTable&) const = default;

 private:
  Quantiles quantiles_ = kDefaultQuantiles;
  std::size_t sample_count_ = 0;
  std::uint64_t seed_ = 0;
  std::array<std::optional<Thresholds>, kNumMeasurements> table_{};
};

struct LabelSet {
  std::array<Level, kNumMeasurements> levels{};
  Level operator[](Measurement m) const { return levels[index(m)]; }
  Level& operator[](Measurement m) { return levels[index(m)]; }
  bool operator==(const LabelSet&) const = default;
};

// Empirical quantiles of every measurement over `sample_count` avatars with
// beta ~ N(0,1)^10 truncated to [-3, 3]. Requires sample_count >= 1000 and
// strictly ascending quantiles in (0, 1) (ErrorKind::Config otherwise).
BinTable calibrate_bins(const BodyModelAsset& asset, std::size_t sample_count,
                        const Quantiles& quantiles, std::uint64_t seed);

LabelSet assign_labels(const BinTable& bins, const MeasurementVector& m);

// Calibration shipped with the library for the builtin asset
// (100000 samples, default quantiles, seed 7).
const BinTable& default_bins();

}  // namespace bodyshape
