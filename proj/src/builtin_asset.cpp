#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>

#include "bodyshape/bodymodel.hpp"

namespace bodyshape {

namespace {

constexpr int kTorsoAround = 24;
constexpr int kLegAround = 20;
constexpr int kArmAround = 16;
constexpr double kArmAngle = 28.0 * std::numbers::pi / 180.0;  // A-pose, from vertical
constexpr double kReferenceArm = 0.52;                          // arm root to wrist at the template
constexpr double kReferenceTorso = 0.67;                        // crotch to neck base at the template

// Interpretable body dimensions; the template is the default value and every
// shape direction is a fixed linear change of these.
struct BodyParams {
  double uniform = 1.0;
  double leg_length = 0.80;
  double torso_scale = 1.0;
  double neck_length = 0.09;
  double head_height = 0.14;
  double shoulder_half = 0.19;
  double arm_length = kReferenceArm;
  double girth = 1.0;
  double waist = 1.0;
  double hips = 1.0;
  double leg_girth = 1.0;
  double arm_girth = 1.0;
};

BodyParams perturbed(int axis, double t) {
  BodyParams p;
  switch (axis) {
    case 0: p.uniform += 0.041 * t; break;
    case 1:
      p.girth += 0.07 * t;
      p.leg_girth += 0.05 * t;
      p.arm_girth += 0.05 * t;
      p.shoulder_half += 0.0076 * t;
      break;
    case 2:
      // Longer legs, proportionally shorter torso; arms follow the torso.
      p.leg_length += 0.045 * t;
      p.torso_scale -= 0.045 / kReferenceTorso * t;
      p.arm_length -= 0.012 * t;
      break;
    case 3: p.arm_length += 0.022 * t; break;
    case 4: p.shoulder_half += 0.018 * t; break;
    case 5: p.neck_length += 0.014 * t; break;
    case 6: p.waist += 0.09 * t; break;
    case 7: p.hips += 0.08 * t; break;
    case 8: p.leg_girth += 0.09 * t; break;
    case 9: p.arm_girth += 0.10 * t; break;
    default: break;
  }
  return p;
}

struct Section {
  double along;
  double rx;
  double rz;
};

struct Tube {
  std::uint32_t start_pole = 0;
  std::uint32_t first = 0;
  int around = 0;
  std::uint32_t end_pole = 0;

  std::uint32_t at(int section, int j) const {
    return first + static_cast<std::uint32_t>(section * around + j);
  }
  Ring ring(int section) const {
    Ring r;
    for (int j = 0; j < around; ++j) r.push_back(at(section, j));
    return r;
  }
};

class MeshBuilder {
 public:
  // Closed generalized cylinder: poles at the two ends, elliptical sections
  // perpendicular to `axis`. Outward winding given e2 = e1 x axis.
  Tube add_tube(const Eigen::Vector3d& origin, const Eigen::Vector3d& axis,
                const Eigen::Vector3d& e1, const std::vector<Section>& sections,
                double start_along, double end_along, int around) {
    const Eigen::Vector3d e2 = e1.cross(axis);
    Tube tube;
    tube.around = around;
    tube.start_pole = push(origin + start_along * axis);
    tube.first = static_cast<std::uint32_t>(points_.size());
    for (const Section& s : sections) {
      for (int j = 0; j < around; ++j) {
        const double theta = 2.0 * std::numbers::pi * j / around;
        push(origin + s.along * axis + s.rx * std::cos(theta) * e1 + s.rz * std::sin(theta) * e2);
      }
    }
    tube.end_pole = push(origin + end_along * axis);

    const int count = static_cast<int>(sections.size());
    for (int j = 0; j < around; ++j) {
      const int jn = (j + 1) % around;
      faces_.push_back({tube.start_pole, tube.at(0, j), tube.at(0, jn)});
      for (int i = 0; i + 1 < count; ++i) {
        const auto a = tube.at(i, j), b = tube.at(i, jn), c = tube.at(i + 1, jn),
                   d = tube.at(i + 1, j);
        faces_.push_back({a, c, b});
        faces_.push_back({a, d, c});
      }
      faces_.push_back({tube.end_pole, tube.at(count - 1, jn), tube.at(count - 1, j)});
    }
    return tube;
  }

  std::vector<Eigen::Vector3d>& points() { return points_; }
  std::vector<Face>& faces() { return faces_; }

 private:
  std::uint32_t push(const Eigen::Vector3d& p) {
    points_.push_back(p);
    return static_cast<std::uint32_t>(points_.size() - 1);
  }

  std::vector<Eigen::Vector3d> points_;
  std::vector<Face> faces_;
};

struct BuiltBody {
  Vertices vertices;
  std::vector<Face> faces;
  std::map<std::string, std::uint32_t> landmarks;
  std::map<std::string, Ring> rings;
};

BuiltBody build(const BodyParams& p) {
  MeshBuilder mb;
  const Eigen::Vector3d up = Eigen::Vector3d::UnitY();
  const Eigen::Vector3d ex = Eigen::Vector3d::UnitX();
  const double crotch = p.leg_length;
  const double ts = p.torso_scale;

  // Torso, neck and head as one tube from the crotch to the crown.
  struct TorsoRow {
    double dy, rx, rz, waist_w, hip_w;
  };
  constexpr TorsoRow kTorso[] = {
      {0.02, 0.120, 0.090, 0.0, 0.5},  {0.08, 0.175, 0.115, 0.0, 1.0},
      {0.16, 0.160, 0.105, 0.4, 0.4},  {0.25, 0.140, 0.095, 1.0, 0.0},
      {0.35, 0.152, 0.100, 0.4, 0.0},  {0.45, 0.168, 0.110, 0.0, 0.0},
      {0.55, 0.178, 0.100, 0.0, 0.0},
  };
  constexpr int kHipsSection = 1, kWaistSection = 3, kShoulderSection = 7,
                kNeckBaseSection = 9, kNeckSection = 10, kSkullSection = 11;

  std::vector<Section> torso;
  for (const TorsoRow& r : kTorso) {
    const double f = p.girth * (1.0 + (p.waist - 1.0) * r.waist_w + (p.hips - 1.0) * r.hip_w);
    torso.push_back({r.dy * ts, r.rx * f, r.rz * f});
  }
  const double neck_f = 1.0 + 0.5 * (p.girth - 1.0);
  const double neck_base = kReferenceTorso * ts;
  torso.push_back({0.62 * ts, p.shoulder_half, 0.080 * p.girth});
  torso.push_back({0.65 * ts, 0.100 * p.girth, 0.065 * p.girth});
  torso.push_back({neck_base, 0.062 * neck_f, 0.058 * neck_f});
  torso.push_back({neck_base + 0.5 * p.neck_length, 0.055 * neck_f, 0.052 * neck_f});
  const double skull = neck_base + p.neck_length;
  torso.push_back({skull, 0.058 * neck_f, 0.058 * neck_f});
  constexpr Section kHead[] = {
      {0.030, 0.075, 0.090}, {0.065, 0.085, 0.100}, {0.100, 0.078, 0.092}, {0.125, 0.050, 0.060}};
  for (const Section& s : kHead) {
    torso.push_back({skull + s.along * p.head_height / 0.14, s.rx, s.rz});
  }
  const Tube body = mb.add_tube({0.0, crotch, 0.0}, up, ex, torso, 0.0,
                                skull + p.head_height, kTorsoAround);

  // Legs: vertical tubes from heel to crotch, touching at the midline.
  constexpr Section kLeg[] = {
      {0.025, 0.045, 0.045}, {0.10, 0.042, 0.042}, {0.22, 0.052, 0.052}, {0.32, 0.058, 0.058},
      {0.45, 0.050, 0.050},  {0.56, 0.054, 0.054}, {0.70, 0.070, 0.070}, {0.80, 0.078, 0.078},
      {0.92, 0.085, 0.085},  {0.985, 0.065, 0.065}};
  constexpr int kThighSection = 7;
  const double thigh_r = 0.085 * p.leg_girth;
  Tube legs[2];
  for (int side = 0; side < 2; ++side) {
    const double sign = side == 0 ? 1.0 : -1.0;
    std::vector<Section> sections;
    for (const Section& s : kLeg) {
      sections.push_back({s.along * p.leg_length, s.rx * p.leg_girth, s.rz * p.leg_girth});
    }
    legs[side] = mb.add_tube({sign * (0.01 + thigh_r), 0.0, 0.0}, up, ex, sections, 0.0,
                             p.leg_length, kLegAround);
  }

  // Arms: A-pose tubes hanging down and outward from just outside the shoulder.
  constexpr Section kArm[] = {
      {0.015, 0.040, 0.040}, {0.06, 0.048, 0.048}, {0.13, 0.047, 0.047}, {0.22, 0.040, 0.040},
      {0.28, 0.036, 0.036},  {0.38, 0.035, 0.035}, {0.47, 0.030, 0.030}, {0.52, 0.026, 0.026}};
  constexpr Section kHand[] = {{0.04, 0.034, 0.034}, {0.10, 0.030, 0.030}, {0.15, 0.018, 0.018}};
  constexpr int kUpperArmSection = 2, kWristSection = 7;
  const double arm_scale = p.arm_length / kReferenceArm;
  Tube arms[2];
  for (int side = 0; side < 2; ++side) {
    const double sign = side == 0 ? 1.0 : -1.0;
    const Eigen::Vector3d axis(sign * std::sin(kArmAngle), -std::cos(kArmAngle), 0.0);
    const Eigen::Vector3d e1(std::cos(kArmAngle), sign * std::sin(kArmAngle), 0.0);
    const Eigen::Vector3d root(sign * (p.shoulder_half + 0.055 * p.arm_girth), crotch + 0.595 * ts,
                               0.0);
    std::vector<Section> sections;
    for (const Section& s : kArm) {
      sections.push_back({s.along * arm_scale, s.rx * p.arm_girth, s.rz * p.arm_girth});
    }
    const double wrist = p.arm_length;
    for (const Section& s : kHand) {
      sections.push_back({wrist + s.along, s.rx * p.arm_girth, s.rz * p.arm_girth});
    }
    arms[side] = mb.add_tube(root, axis, e1, sections, 0.0, wrist + 0.17, kArmAround);
  }

  BuiltBody out;
  out.vertices.resize(static_cast<Eigen::Index>(mb.points().size()), 3);
  for (std::size_t i = 0; i < mb.points().size(); ++i) {
    out.vertices.row(static_cast<Eigen::Index>(i)) = p.uniform * mb.points()[i].transpose();
  }
  out.faces = std::move(mb.faces());

  const int back = 3 * kTorsoAround / 4;
  out.landmarks = {
      {"crown", body.end_pole},
      {"crotch", body.start_pole},
      {"hip_center", body.at(kHipsSection, kTorsoAround / 4)},
      {"neck_base", body.at(kNeckBaseSection, back)},
      {"skull_base", body.at(kSkullSection, back)},
      {"shoulder_left", body.at(kShoulderSection, 0)},
      {"shoulder_right", body.at(kShoulderSection, kTorsoAround / 2)},
      {"heel_left", legs[0].start_pole},
      {"heel_right", legs[1].start_pole},
      {"wrist_left", arms[0].at(kWristSection, 0)},
  };
  out.rings = {
      {"neck", body.ring(kNeckSection)},
      {"waist", body.ring(kWaistSection)},
      {"hips", body.ring(kHipsSection)},
      {"thigh_left", legs[0].ring(kThighSection)},
      {"upper_arm_left", arms[0].ring(kUpperArmSection)},
  };
  return out;
}

// Quantize to what the asset file format stores so that save/load is exact.
double round_significant(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return std::strtod(buf, nullptr);
}

BodyModelAsset make_builtin() {
  BuiltBody base = build(BodyParams{});
  const Eigen::Index rows = base.vertices.size();
  ShapeDirs dirs(rows, static_cast<Eigen::Index>(kNumBetas));
  // Parameters enter the geometry polynomially with low degree, so a central
  // difference recovers the linearization essentially exactly.
  constexpr double h = 1e-3;
  for (int k = 0; k < static_cast<int>(kNumBetas); ++k) {
    const Vertices plus = build(perturbed(k, h)).vertices;
    const Vertices minus = build(perturbed(k, -h)).vertices;
    dirs.col(k) = (Eigen::Map<const Eigen::VectorXd>(plus.data(), rows) -
                   Eigen::Map<const Eigen::VectorXd>(minus.data(), rows)) /
                  (2.0 * h);
  }
  Vertices tmpl = base.vertices.unaryExpr(&round_significant);
  dirs = dirs.unaryExpr(&round_significant);
  return BodyModelAsset(std::move(tmpl), std::move(base.faces), std::move(dirs),
                        std::move(base.landmarks), std::move(base.rings));
}

}  // namespace

const BodyModelAsset& builtin_asset() {
  static const BodyModelAsset asset = make_builtin();
  return asset;
}

}  // namespace bodyshape
