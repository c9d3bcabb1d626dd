#include "bodyshape/measure.hpp"

#include <cmath>
#include <cstdio>

#include "bodyshape/errors.hpp"

namespace bodyshape {

namespace {

constexpr std::array<std::string_view, kNumMeasurements> kNames = {
    "height",          "neck_length",     "arm_length",         "legs_length",
    "shoulder_breadth", "arms_relation",  "shoulders_relation", "waist_thickness",
    "hip_thickness",   "leg_thickness",   "volume",             "bmi",
};

constexpr std::array<Measurement, kNumMeasurements> kAll = {
    Measurement::Height,          Measurement::NeckLength,     Measurement::ArmLength,
    Measurement::LegsLength,      Measurement::ShoulderBreadth, Measurement::ArmsRelation,
    Measurement::ShouldersRelation, Measurement::WaistThickness, Measurement::HipThickness,
    Measurement::LegThickness,    Measurement::Volume,         Measurement::Bmi,
};

// Positions are supplied through `pos(i)`, where i is whatever index space
// the landmark/ring handles live in.
template <typename Pos, typename Handles>
MeasurementVector assemble(const Pos& pos, const Handles& h, double volume) {
  auto dist = [&](auto a, auto b) { return (pos(a) - pos(b)).norm(); };
  auto perimeter = [&](const auto& ring) {
    double total = 0.0;
    for (std::size_t i = 0; i < ring.size(); ++i) {
      total += (pos(ring[(i + 1) % ring.size()]) - pos(ring[i])).norm();
    }
    return total;
  };

  MeasurementVector m;
  const double crown_y = pos(h.crown).y();
  const double hgt = std::max(crown_y - pos(h.heel_left).y(), crown_y - pos(h.heel_right).y());
  m[Measurement::Height] = hgt;
  m[Measurement::NeckLength] = dist(h.neck_base, h.skull_base);
  m[Measurement::ArmLength] = dist(h.shoulder_left, h.wrist_left);
  m[Measurement::LegsLength] = dist(h.crotch, h.heel_left);
  m[Measurement::ShoulderBreadth] = dist(h.shoulder_left, h.shoulder_right);
  m[Measurement::ArmsRelation] = m[Measurement::ArmLength] / hgt;
  m[Measurement::ShouldersRelation] = m[Measurement::ShoulderBreadth] / hgt;
  m[Measurement::WaistThickness] = perimeter(h.waist);
  m[Measurement::HipThickness] = perimeter(h.hips);
  m[Measurement::LegThickness] = perimeter(h.thigh);
  m[Measurement::Volume] = volume;
  m[Measurement::Bmi] = volume * kBodyDensity / (hgt * hgt);
  return m;
}

struct AssetHandles {
  std::uint32_t crown, heel_left, heel_right, neck_base, skull_base, shoulder_left, shoulder_right,
      wrist_left, crotch;
  const Ring& waist;
  const Ring& hips;
  const Ring& thigh;
};

AssetHandles handles(const BodyModelAsset& asset) {
  return AssetHandles{asset.landmark("crown"),
                      asset.landmark("heel_left"),
                      asset.landmark("heel_right"),
                      asset.landmark("neck_base"),
                      asset.landmark("skull_base"),
                      asset.landmark("shoulder_left"),
                      asset.landmark("shoulder_right"),
                      asset.landmark("wrist_left"),
                      asset.landmark("crotch"),
                      asset.ring("waist"),
                      asset.ring("hips"),
                      asset.ring("thigh_left")};
}

}  // namespace

const std::array<Measurement, kNumMeasurements>& all_measurements() { return kAll; }

std::string_view name(Measurement m) { return kNames[index(m)]; }

std::optional<Measurement> measurement_from_name(std::string_view n) {
  for (std::size_t i = 0; i < kNumMeasurements; ++i) {
    if (kNames[i] == n) return kAll[i];
  }
  return std::nullopt;
}

double mesh_volume(const BodyMesh& mesh) {
  if (!mesh.topology || !mesh.topology->closed) {
    throw Error(ErrorKind::UndefinedVolume, "volume is undefined for an open mesh");
  }
  double six_v = 0.0;
  const Vertices& v = mesh.vertices;
  for (const Face& f : mesh.faces()) {
    const Eigen::Vector3d a = v.row(f[0]);
    const Eigen::Vector3d b = v.row(f[1]);
    const Eigen::Vector3d c = v.row(f[2]);
    six_v += a.dot(b.cross(c));
  }
  return std::abs(six_v) / 6.0;
}

double ring_perimeter(const Vertices& vertices, std::span<const std::uint32_t> ring) {
  if (ring.size() < 3) throw Error(ErrorKind::InvalidRing, "ring needs at least 3 vertices");
  double total = 0.0;
  for (std::size_t i = 0; i < ring.size(); ++i) {
    const std::uint32_t a = ring[i], b = ring[(i + 1) % ring.size()];
    if (a >= vertices.rows() || b >= vertices.rows()) {
      throw Error(ErrorKind::InvalidRing, "ring index out of range");
    }
    total += (vertices.row(b) - vertices.row(a)).norm();
  }
  return total;
}

double landmark_length(const BodyModelAsset& asset, const BodyMesh& mesh, const std::string& from,
                       const std::string& to) {
  const auto a = asset.landmark(from), b = asset.landmark(to);
  return (mesh.vertices.row(a) - mesh.vertices.row(b)).norm();
}

double height(const BodyModelAsset& asset, const BodyMesh& mesh) {
  const double crown = mesh.vertices(asset.landmark("crown"), 1);
  return std::max(crown - mesh.vertices(asset.landmark("heel_left"), 1),
                  crown - mesh.vertices(asset.landmark("heel_right"), 1));
}

MeasurementVector measure_all(const BodyModelAsset& asset, const BodyMesh& mesh) {
  if (mesh.vertex_count() != asset.vertex_count()) {
    throw Error(ErrorKind::Input, "mesh vertex count does not match the asset");
  }
  const AssetHandles h = handles(asset);
  auto pos = [&](std::uint32_t i) -> Eigen::Vector3d { return mesh.vertices.row(i); };
  return assemble(pos, h, mesh_volume(mesh));
}

std::string measurement_report(const MeasurementVector& m) {
  std::string out = "{";
  char buf[64];
  for (std::size_t i = 0; i < kNumMeasurements; ++i) {
    std::snprintf(buf, sizeof buf, "%s\"%s\": %.6g", i ? ", " : "", kNames[i].data(), m.values[i]);
    out += buf;
  }
  out += "}";
  return out;
}

MeasurementProbe::MeasurementProbe(const BodyModelAsset& asset) {
  const AssetHandles h = handles(asset);
  std::vector<std::uint32_t> picked;
  auto pick = [&](std::uint32_t v) {
    for (std::size_t i = 0; i < picked.size(); ++i) {
      if (picked[i] == v) return static_cast<int>(i);
    }
    picked.push_back(v);
    return static_cast<int>(picked.size() - 1);
  };
  idx_.crown = pick(h.crown);
  idx_.heel_left = pick(h.heel_left);
  idx_.heel_right = pick(h.heel_right);
  idx_.neck_base = pick(h.neck_base);
  idx_.skull_base = pick(h.skull_base);
  idx_.shoulder_left = pick(h.shoulder_left);
  idx_.shoulder_right = pick(h.shoulder_right);
  idx_.wrist_left = pick(h.wrist_left);
  idx_.crotch = pick(h.crotch);
  for (auto v : h.waist) idx_.waist.push_back(pick(v));
  for (auto v : h.hips) idx_.hips.push_back(pick(v));
  for (auto v : h.thigh) idx_.thigh.push_back(pick(v));

  const auto k = static_cast<Eigen::Index>(picked.size());
  base_.resize(3 * k);
  rows_.resize(3 * k, 10);
  const auto& tmpl = asset.template_vertices();
  const auto& dirs = asset.shape_dirs();
  for (Eigen::Index i = 0; i < k; ++i) {
    for (int a = 0; a < 3; ++a) {
      base_(3 * i + a) = tmpl(picked[static_cast<std::size_t>(i)], a);
      rows_.row(3 * i + a) = dirs.row(3 * static_cast<Eigen::Index>(picked[static_cast<std::size_t>(i)]) + a);
    }
  }

  // Each face contributes det[v0, v1, v2] / 6 with v_k = M_k (1, beta); the
  // determinant is trilinear, so it expands into an 11^3 coefficient cube.
  constexpr int n = static_cast<int>(kNumBetas) + 1;
  volume_coeffs_.assign(static_cast<std::size_t>(n * n * n), 0.0);
  auto column = [&](std::uint32_t v, int c) -> Eigen::Vector3d {
    if (c == 0) return tmpl.row(v);
    const Eigen::Index r = 3 * static_cast<Eigen::Index>(v);
    return {dirs(r, c - 1), dirs(r + 1, c - 1), dirs(r + 2, c - 1)};
  };
  std::array<Eigen::Vector3d, n> m0, m1, m2;
  for (const Face& f : asset.faces()) {
    for (int c = 0; c < n; ++c) {
      m0[c] = column(f[0], c);
      m1[c] = column(f[1], c);
      m2[c] = column(f[2], c);
    }
    for (int b = 0; b < n; ++b) {
      for (int c = 0; c < n; ++c) {
        const Eigen::Vector3d cross = m1[b].cross(m2[c]);
        for (int a = 0; a < n; ++a) {
          volume_coeffs_[static_cast<std::size_t>((a * n + b) * n + c)] += m0[a].dot(cross);
        }
      }
    }
  }
  for (double& c : volume_coeffs_) c /= 6.0;
}

MeasurementVector MeasurementProbe::measure(const BetaVector& beta) const {
  const Eigen::VectorXd flat = base_ + rows_ * beta;
  auto pos = [&](int i) -> Eigen::Vector3d { return flat.segment<3>(3 * i); };

  constexpr int n = static_cast<int>(kNumBetas) + 1;
  std::array<double, n> b{};
  b[0] = 1.0;
  for (int i = 1; i < n; ++i) b[i] = beta(i - 1);
  double signed_volume = 0.0;
  for (int a = 0; a < n; ++a) {
    double sa = 0.0;
    for (int bb = 0; bb < n; ++bb) {
      const double* row = &volume_coeffs_[static_cast<std::size_t>((a * n + bb) * n)];
      double sb = 0.0;
      for (int c = 0; c < n; ++c) sb += row[c] * b[c];
      sa += sb * b[bb];
    }
    signed_volume += sa * b[a];
  }
  return assemble(pos, idx_, std::abs(signed_volume));
}

}  // namespace bodyshape
