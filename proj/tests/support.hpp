#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "bodyshape/bodymodel.hpp"

namespace testsupport {

using namespace bodyshape;

inline BetaVector random_beta(std::mt19937_64& rng, double bound = 3.0) {
  std::uniform_real_distribution<double> u(-bound, bound);
  BetaVector b;
  for (int i = 0; i < b.size(); ++i) b[i] = u(rng);
  return b;
}

inline ShapeParams random_params(std::mt19937_64& rng, double bound = 3.0) {
  return ShapeParams(random_beta(rng, bound));
}

// Axis-aligned unit cube, outward winding.
inline BodyMesh unit_cube(double ox = 0, double oy = 0, double oz = 0) {
  Vertices v(8, 3);
  for (int i = 0; i < 8; ++i) {
    v(i, 0) = ox + (i & 1);
    v(i, 1) = oy + ((i >> 1) & 1);
    v(i, 2) = oz + ((i >> 2) & 1);
  }
  std::vector<Face> f = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
                         {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  return make_mesh(std::move(v), std::move(f));
}

inline BodyMesh tetrahedron(const std::array<Eigen::Vector3d, 4>& p) {
  Vertices v(4, 3);
  for (int i = 0; i < 4; ++i) v.row(i) = p[static_cast<std::size_t>(i)].transpose();
  std::vector<Face> f = {{0, 1, 2}, {0, 3, 1}, {0, 2, 3}, {1, 3, 2}};
  return make_mesh(std::move(v), std::move(f));
}

// Independent volume estimate: rays parallel to x on a regular (y, z) grid
// with the given spacing; each ray contributes the length of its inside
// segments found by sorting crossing points.
inline double voxel_volume(const BodyMesh& mesh, double step) {
  const auto& V = mesh.vertices;
  const auto& F = mesh.faces();
  const double y0 = V.col(1).minCoeff(), y1 = V.col(1).maxCoeff();
  const double z0 = V.col(2).minCoeff(), z1 = V.col(2).maxCoeff();
  // Irrational offsets keep ray centers off mesh edges.
  const double oy = step * 0.5 * std::sqrt(2.0) / 1.5;
  const double oz = step * 0.5 * std::sqrt(3.0) / 1.8;
  const auto ny = static_cast<std::size_t>((y1 - y0) / step) + 2;
  const auto nz = static_cast<std::size_t>((z1 - z0) / step) + 2;

  std::vector<std::vector<std::size_t>> rows(ny);
  for (std::size_t t = 0; t < F.size(); ++t) {
    double lo = 1e300, hi = -1e300;
    for (auto idx : F[t]) {
      lo = std::min(lo, V(idx, 1));
      hi = std::max(hi, V(idx, 1));
    }
    const auto a = static_cast<std::size_t>(std::max(0.0, std::floor((lo - y0 - oy) / step)));
    const auto b = std::min(ny - 1, static_cast<std::size_t>(std::max(0.0, std::ceil((hi - y0 - oy) / step))));
    for (std::size_t r = a; r <= b; ++r) rows[r].push_back(t);
  }

  double total = 0.0;
  std::vector<double> xs;
  for (std::size_t r = 0; r < ny; ++r) {
    const double y = y0 + oy + step * static_cast<double>(r);
    for (std::size_t c = 0; c < nz; ++c) {
      const double z = z0 + oz + step * static_cast<double>(c);
      xs.clear();
      for (auto t : rows[r]) {
        const auto& f = F[t];
        const double ay = V(f[0], 1), az = V(f[0], 2);
        const double by = V(f[1], 1), bz = V(f[1], 2);
        const double cy = V(f[2], 1), cz = V(f[2], 2);
        const double det = (by - ay) * (cz - az) - (cy - ay) * (bz - az);
        if (det == 0.0) continue;
        const double u = ((y - ay) * (cz - az) - (cy - ay) * (z - az)) / det;
        const double w = ((by - ay) * (z - az) - (y - ay) * (bz - az)) / det;
        if (u < 0 || w < 0 || u + w > 1) continue;
        xs.push_back(V(f[0], 0) + u * (V(f[1], 0) - V(f[0], 0)) + w * (V(f[2], 0) - V(f[0], 0)));
      }
      std::sort(xs.begin(), xs.end());
      for (std::size_t k = 0; k + 1 < xs.size(); k += 2) total += xs[k + 1] - xs[k];
    }
  }
  return total * step * step;
}

// Same asset with every coordinate multiplied by s.
inline BodyModelAsset scaled_asset(const BodyModelAsset& a, double s) {
  return BodyModelAsset(a.template_vertices() * s, a.faces(), a.shape_dirs() * s, a.landmarks(), a.rings());
}

// Inverse empirical CDF: sorted[ceil(q n) - 1].
inline double empirical_quantile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  auto k = static_cast<std::size_t>(std::ceil(q * n));
  if (k == 0) k = 1;
  return values[k - 1];
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("bodyshape_test_" + name + "_" +
                                                      std::to_string(std::random_device{}()));
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testsupport
