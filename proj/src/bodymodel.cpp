#include "bodyshape/bodymodel.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <unordered_map>
#include <unordered_set>

#include "bodyshape/errors.hpp"

namespace bodyshape {

namespace {

void check_beta(double value, std::size_t index) {
  if (!std::isfinite(value) || std::abs(value) > kBetaLimit) {
    throw Error(ErrorKind::OutOfRange, "shape coefficient " + std::to_string(index) +
                                           " is outside [-5, 5] or not finite");
  }
}

std::uint64_t edge_key(std::uint32_t a, std::uint32_t b) {
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

class Fnv1a {
 public:
  void update(const void* data, std::size_t size) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
      hash_ ^= bytes[i];
      hash_ *= 0x100000001b3ULL;
    }
  }
  void update(std::string_view s) { update(s.data(), s.size()); }
  std::uint64_t value() const { return hash_; }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

}  // namespace

ShapeParams::ShapeParams(std::span<const double> values) {
  if (values.size() != kNumBetas) {
    throw Error(ErrorKind::Arity, "expected 10 shape coefficients, got " +
                                      std::to_string(values.size()));
  }
  for (std::size_t i = 0; i < kNumBetas; ++i) {
    check_beta(values[i], i);
    values_[i] = values[i];
  }
}

ShapeParams::ShapeParams(const BetaVector& values) {
  for (std::size_t i = 0; i < kNumBetas; ++i) {
    check_beta(values(static_cast<Eigen::Index>(i)), i);
    values_[i] = values(static_cast<Eigen::Index>(i));
  }
}

BetaVector ShapeParams::as_vector() const {
  return Eigen::Map<const BetaVector>(values_.data());
}

bool is_closed(std::span<const Face> faces) {
  if (faces.empty()) return false;
  std::unordered_map<std::uint64_t, int> directed;
  directed.reserve(faces.size() * 3);
  for (const Face& f : faces) {
    if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) return false;
    for (int k = 0; k < 3; ++k) {
      if (++directed[edge_key(f[k], f[(k + 1) % 3])] > 1) return false;
    }
  }
  for (const auto& [key, count] : directed) {
    const auto a = static_cast<std::uint32_t>(key >> 32);
    const auto b = static_cast<std::uint32_t>(key & 0xffffffffu);
    if (!directed.contains(edge_key(b, a))) return false;
  }
  return true;
}

std::shared_ptr<const Topology> make_topology(std::vector<Face> faces) {
  auto topo = std::make_shared<Topology>();
  topo->closed = is_closed(faces);
  topo->faces = std::move(faces);
  return topo;
}

BodyMesh make_mesh(Vertices vertices, std::vector<Face> faces) {
  for (const Face& f : faces) {
    for (std::uint32_t idx : f) {
      if (idx >= static_cast<std::uint32_t>(vertices.rows())) {
        throw Error(ErrorKind::Input, "face index out of range");
      }
    }
  }
  return BodyMesh{std::move(vertices), make_topology(std::move(faces))};
}

BodyModelAsset::BodyModelAsset(Vertices template_vertices, std::vector<Face> faces,
                               ShapeDirs shape_dirs,
                               std::map<std::string, std::uint32_t> landmarks,
                               std::map<std::string, Ring> rings)
    : template_(std::move(template_vertices)),
      shape_dirs_(std::move(shape_dirs)),
      landmarks_(std::move(landmarks)),
      rings_(std::move(rings)) {
  const auto v = static_cast<std::uint32_t>(template_.rows());
  if (v == 0) throw Error(ErrorKind::InvalidAsset, "asset has no vertices");
  if (shape_dirs_.rows() != 3 * template_.rows()) {
    throw Error(ErrorKind::InvalidAsset, "shape_dirs has " + std::to_string(shape_dirs_.rows()) +
                                             " rows, expected 3 x vertex count");
  }
  if (!template_.allFinite() || !shape_dirs_.allFinite()) {
    throw Error(ErrorKind::InvalidAsset, "asset contains non-finite values");
  }
  for (const Face& f : faces) {
    for (std::uint32_t idx : f) {
      if (idx >= v) throw Error(ErrorKind::InvalidAsset, "face index out of range");
    }
  }
  for (const auto& [name, idx] : landmarks_) {
    if (idx >= v) throw Error(ErrorKind::InvalidAsset, "landmark '" + name + "' out of range");
  }
  for (const auto& [name, ring] : rings_) {
    if (ring.size() < 3) throw Error(ErrorKind::InvalidRing, "ring '" + name + "' has < 3 vertices");
    std::unordered_set<std::uint32_t> seen;
    for (std::uint32_t idx : ring) {
      if (idx >= v) throw Error(ErrorKind::InvalidAsset, "ring '" + name + "' out of range");
      if (!seen.insert(idx).second) {
        throw Error(ErrorKind::InvalidRing, "ring '" + name + "' repeats a vertex");
      }
    }
  }
  topology_ = make_topology(std::move(faces));
  if (!topology_->closed) {
    throw Error(ErrorKind::NonClosedMesh, "asset mesh is not closed and consistently wound");
  }
}

std::uint32_t BodyModelAsset::landmark(const std::string& name) const {
  auto it = landmarks_.find(name);
  if (it == landmarks_.end()) {
    throw Error(ErrorKind::IncompleteAsset, "asset has no landmark '" + name + "'");
  }
  return it->second;
}

const Ring& BodyModelAsset::ring(const std::string& name) const {
  auto it = rings_.find(name);
  if (it == rings_.end()) {
    throw Error(ErrorKind::IncompleteAsset, "asset has no ring '" + name + "'");
  }
  return it->second;
}

std::uint64_t BodyModelAsset::checksum() const {
  Fnv1a h;
  h.update(template_.data(), sizeof(double) * static_cast<std::size_t>(template_.size()));
  h.update(faces().data(), sizeof(Face) * faces().size());
  h.update(shape_dirs_.data(), sizeof(double) * static_cast<std::size_t>(shape_dirs_.size()));
  for (const auto& [name, idx] : landmarks_) {
    h.update(name);
    h.update(&idx, sizeof idx);
  }
  for (const auto& [name, ring] : rings_) {
    h.update(name);
    h.update(ring.data(), sizeof(std::uint32_t) * ring.size());
  }
  return h.value();
}

bool BodyModelAsset::operator==(const BodyModelAsset& other) const {
  return template_ == other.template_ && faces() == other.faces() &&
         shape_dirs_ == other.shape_dirs_ && landmarks_ == other.landmarks_ &&
         rings_ == other.rings_;
}

Vertices evaluate_vertices(const BodyModelAsset& asset, const BetaVector& beta) {
  const auto& tmpl = asset.template_vertices();
  Vertices out(tmpl.rows(), 3);
  Eigen::Map<Eigen::VectorXd> flat(out.data(), out.size());
  flat.noalias() = Eigen::Map<const Eigen::VectorXd>(tmpl.data(), tmpl.size());
  flat.noalias() += asset.shape_dirs() * beta;
  return out;
}

BodyMesh evaluate_mesh(const BodyModelAsset& asset, const ShapeParams& beta) {
  return BodyMesh{evaluate_vertices(asset, beta.as_vector()), asset.topology()};
}

std::string to_obj(const BodyMesh& mesh) {
  std::string out;
  out.reserve(mesh.vertex_count() * 40 + mesh.faces().size() * 24);
  char buf[128];
  for (Eigen::Index i = 0; i < mesh.vertices.rows(); ++i) {
    int n = std::snprintf(buf, sizeof buf, "v %.6f %.6f %.6f\n", mesh.vertices(i, 0),
                          mesh.vertices(i, 1), mesh.vertices(i, 2));
    out.append(buf, static_cast<std::size_t>(n));
  }
  for (const Face& f : mesh.faces()) {
    int n = std::snprintf(buf, sizeof buf, "f %u %u %u\n", f[0] + 1, f[1] + 1, f[2] + 1);
    out.append(buf, static_cast<std::size_t>(n));
  }
  return out;
}

}  // namespace bodyshape
