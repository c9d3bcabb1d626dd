#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bodyshape/bodymodel.hpp"

namespace bodyshape {

enum class Measurement : std::uint8_t {
  Height,
  NeckLength,
  ArmLength,
  LegsLength,
  ShoulderBreadth,
  ArmsRelation,
  ShouldersRelation,
  WaistThickness,
  HipThickness,
  LegThickness,
  Volume,
  Bmi,
};

inline constexpr std::size_t kNumMeasurements = 12;
// Mass model for BMI: kg per cubic meter of mesh volume.
inline constexpr double kBodyDensity = 1000.0;

const std::array<Measurement, kNumMeasurements>& all_measurements();
std::string_view name(Measurement m);
std::optional<Measurement> measurement_from_name(std::string_view name);
inline std::size_t index(Measurement m) { return static_cast<std::size_t>(m); }

// Units: lengths and perimeters in m, volume in m^3, bmi in kg/m^2, ratios
// dimensionless.
struct MeasurementVector {
  std::array<double, kNumMeasurements> values{};

  double operator[](Measurement m) const { return values[index(m)]; }
  double& operator[](Measurement m) { return values[index(m)]; }
  bool operator==(const MeasurementVector&) const = default;
};

// Signed-volume sum over faces, absolute value. Requires a closed, consistently
// wound mesh (ErrorKind::UndefinedVolume otherwise).
double mesh_volume(const BodyMesh& mesh);

// Sum of edge lengths around the closed loop; < 3 vertices → ErrorKind::InvalidRing.
double ring_perimeter(const Vertices& vertices, std::span<const std::uint32_t> ring);

double landmark_length(const BodyModelAsset& asset, const BodyMesh& mesh, const std::string& from,
                       const std::string& to);

// Vertical (y) extent from the crown to the lower of the two heels.
double height(const BodyModelAsset& asset, const BodyMesh& mesh);

MeasurementVector measure_all(const BodyModelAsset& asset, const BodyMesh& mesh);

// Flat JSON object name -> value with 6 significant digits, canonical order.
std::string measurement_report(const MeasurementVector& m);

// Fast repeated measurement of the same asset: evaluates only the vertices
// that measurements touch and the volume through its exact cubic polynomial
// in the shape coefficients. Agrees with measure_all to rounding error.
class MeasurementProbe {
 public:
  explicit MeasurementProbe(const BodyModelAsset& asset);

  MeasurementVector measure(const BetaVector& beta) const;

 private:
  // Compact index of each needed vertex inside `rows_`.
  struct Indices {
    int crown, heel_left, heel_right, neck_base, skull_base, shoulder_left, shoulder_right,
        wrist_left, crotch;
    std::vector<int> waist, hips, thigh;
  };

  Eigen::VectorXd base_;                                  // 3K template coordinates
  Eigen::Matrix<double, Eigen::Dynamic, 10, Eigen::RowMajor> rows_;  // 3K x 10
  Indices idx_{};
  // Volume = sum_abc coeff(a, b, c) * b'_a b'_b b'_c with b' = (1, beta).
  std::vector<double> volume_coeffs_;
};

}  // namespace bodyshape
