#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace bodyshape {

inline constexpr std::size_t kNumBetas = 10;
// Hard validity bound on every shape coefficient. Sampling uses a tighter box.
inline constexpr double kBetaLimit = 5.0;

using BetaVector = Eigen::Matrix<double, static_cast<int>(kNumBetas), 1>;
// V x 3, row-major so that the storage is the flat [x0 y0 z0 x1 ...] layout.
using Vertices = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
// 3V x 10: row (3 * vertex + axis), column beta index.
using ShapeDirs = Eigen::Matrix<double, Eigen::Dynamic, static_cast<int>(kNumBetas), Eigen::RowMajor>;
using Face = std::array<std::uint32_t, 3>;
using Ring = std::vector<std::uint32_t>;

// The 10 shape coefficients. Always finite and within [-kBetaLimit, kBetaLimit].
class ShapeParams {
 public:
  ShapeParams() = default;
  explicit ShapeParams(std::span<const double> values);
  explicit ShapeParams(const BetaVector& values);

  static ShapeParams zeros() { return {}; }

  double operator[](std::size_t i) const { return values_[i]; }
  const std::array<double, kNumBetas>& values() const { return values_; }
  BetaVector as_vector() const;

  bool operator==(const ShapeParams&) const = default;

 private:
  std::array<double, kNumBetas> values_{};
};

struct Topology {
  std::vector<Face> faces;
  // Every undirected edge is used by exactly two faces with opposite direction.
  bool closed = false;
};

std::shared_ptr<const Topology> make_topology(std::vector<Face> faces);
bool is_closed(std::span<const Face> faces);

struct BodyMesh {
  Vertices vertices;
  std::shared_ptr<const Topology> topology;

  std::size_t vertex_count() const { return static_cast<std::size_t>(vertices.rows()); }
  const std::vector<Face>& faces() const { return topology->faces; }
};

BodyMesh make_mesh(Vertices vertices, std::vector<Face> faces);

// Template mesh plus a linear shape basis, with named landmarks and rings that
// define where measurements are taken. Immutable once constructed.
class BodyModelAsset {
 public:
  // Validates dimensions, index ranges, ring simplicity and closedness.
  BodyModelAsset(Vertices template_vertices, std::vector<Face> faces, ShapeDirs shape_dirs,
                 std::map<std::string, std::uint32_t> landmarks,
                 std::map<std::string, Ring> rings);

  std::size_t vertex_count() const { return static_cast<std::size_t>(template_.rows()); }
  const Vertices& template_vertices() const { return template_; }
  const std::vector<Face>& faces() const { return topology_->faces; }
  const std::shared_ptr<const Topology>& topology() const { return topology_; }
  const ShapeDirs& shape_dirs() const { return shape_dirs_; }
  const std::map<std::string, std::uint32_t>& landmarks() const { return landmarks_; }
  const std::map<std::string, Ring>& rings() const { return rings_; }

  // Throws ErrorKind::IncompleteAsset when the name is absent.
  std::uint32_t landmark(const std::string& name) const;
  const Ring& ring(const std::string& name) const;

  // FNV-1a over the canonical binary layout of all tables.
  std::uint64_t checksum() const;

  bool operator==(const BodyModelAsset& other) const;

 private:
  Vertices template_;
  std::shared_ptr<const Topology> topology_;
  ShapeDirs shape_dirs_;
  std::map<std::string, std::uint32_t> landmarks_;
  std::map<std::string, Ring> rings_;
};

// vertices = template + sum_i beta_i * shape_dirs[:, :, i]
BodyMesh evaluate_mesh(const BodyModelAsset& asset, const ShapeParams& beta);
// Same blend without the ShapeParams bound check; used by optimizers probing
// slightly outside the box.
Vertices evaluate_vertices(const BodyModelAsset& asset, const BetaVector& beta);

// Deterministic procedural humanoid in a canonical A-pose, y up, feet at y = 0,
// left side at +x. Dominant effect per coefficient:
//   0 overall height, 1 girth/weight, 2 leg-to-torso ratio, 3 arm length,
//   4 shoulder breadth, 5 neck length, 6 waist girth, 7 hip girth,
//   8 leg thickness, 9 arm thickness.
const BodyModelAsset& builtin_asset();

// Asset file: JSON with version, vertices, faces, shape_dirs (flattened
// V*3*10, vertex-major then axis then beta), landmarks and rings.
BodyModelAsset load_asset(const std::filesystem::path& path);
BodyModelAsset parse_asset(std::string_view json_text);
void save_asset(const BodyModelAsset& asset, const std::filesystem::path& path);
std::string serialize_asset(const BodyModelAsset& asset);

// Wavefront text mesh: "v x y z" and 1-based "f a b c" lines.
std::string to_obj(const BodyMesh& mesh);

}  // namespace bodyshape
