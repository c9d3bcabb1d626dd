#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bodyshape/bodymodel.hpp"
#include "bodyshape/errors.hpp"

namespace bodyshape {

namespace {

using nlohmann::json;

constexpr int kAssetFormatVersion = 1;

[[noreturn]] void schema_error(const std::string& what) {
  throw Error(ErrorKind::SchemaViolation, "asset file: " + what);
}

const json& require(const json& doc, const char* key, json::value_t type) {
  auto it = doc.find(key);
  if (it == doc.end()) schema_error(std::string("missing field '") + key + "'");
  const bool ok = it->type() == type ||
                  (type == json::value_t::number_float && it->is_number());
  if (!ok) schema_error(std::string("field '") + key + "' has the wrong type");
  return *it;
}

std::uint32_t as_index(const json& v, const char* what) {
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0 ||
      v.get<std::int64_t>() > std::numeric_limits<std::uint32_t>::max()) {
    schema_error(std::string("invalid index in ") + what);
  }
  return v.get<std::uint32_t>();
}

void append_number(std::string& out, double v) {
  char buf[32];
  int n = std::snprintf(buf, sizeof buf, "%.9g", v);
  out.append(buf, static_cast<std::size_t>(n));
}

}  // namespace

BodyModelAsset parse_asset(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    schema_error(e.what());
  }
  if (!doc.is_object()) schema_error("top level is not an object");
  const json& version = require(doc, "version", json::value_t::number_unsigned);
  if (version.get<int>() != kAssetFormatVersion) schema_error("unsupported version");

  const json& verts = require(doc, "vertices", json::value_t::array);
  Vertices tmpl(static_cast<Eigen::Index>(verts.size()), 3);
  for (std::size_t i = 0; i < verts.size(); ++i) {
    const json& v = verts[i];
    if (!v.is_array() || v.size() != 3) schema_error("vertex is not an [x, y, z] triple");
    for (int k = 0; k < 3; ++k) {
      if (!v[static_cast<std::size_t>(k)].is_number()) schema_error("vertex coordinate not numeric");
      tmpl(static_cast<Eigen::Index>(i), k) = v[static_cast<std::size_t>(k)].get<double>();
    }
  }

  const json& fs = require(doc, "faces", json::value_t::array);
  std::vector<Face> faces;
  faces.reserve(fs.size());
  for (const json& f : fs) {
    if (!f.is_array() || f.size() != 3) schema_error("face is not a vertex-index triple");
    faces.push_back({as_index(f[0], "faces"), as_index(f[1], "faces"), as_index(f[2], "faces")});
  }

  const json& sd = require(doc, "shape_dirs", json::value_t::array);
  if (sd.size() != static_cast<std::size_t>(tmpl.rows()) * 3 * kNumBetas) {
    schema_error("shape_dirs length is not V*3*10");
  }
  ShapeDirs dirs(tmpl.rows() * 3, static_cast<Eigen::Index>(kNumBetas));
  for (std::size_t i = 0; i < sd.size(); ++i) {
    if (!sd[i].is_number()) schema_error("shape_dirs entry not numeric");
    dirs.data()[i] = sd[i].get<double>();
  }

  std::map<std::string, std::uint32_t> landmarks;
  for (const auto& [name, idx] : require(doc, "landmarks", json::value_t::object).items()) {
    landmarks[name] = as_index(idx, "landmarks");
  }
  std::map<std::string, Ring> rings;
  for (const auto& [name, arr] : require(doc, "rings", json::value_t::object).items()) {
    if (!arr.is_array()) schema_error("ring '" + name + "' is not an array");
    Ring r;
    for (const json& idx : arr) r.push_back(as_index(idx, "rings"));
    rings[name] = std::move(r);
  }

  try {
    return BodyModelAsset(std::move(tmpl), std::move(faces), std::move(dirs), std::move(landmarks),
                          std::move(rings));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::InvalidAsset) schema_error(e.what());
    throw;
  }
}

BodyModelAsset load_asset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingFile, "cannot open asset file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_asset(ss.str());
}

std::string serialize_asset(const BodyModelAsset& asset) {
  std::string out;
  out.reserve(asset.vertex_count() * 400);
  out += "{\n\"version\": " + std::to_string(kAssetFormatVersion) + ",\n\"vertices\": [";
  const Vertices& v = asset.template_vertices();
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    out += i ? ",[" : "[";
    for (int k = 0; k < 3; ++k) {
      if (k) out += ',';
      append_number(out, v(i, k));
    }
    out += ']';
  }
  out += "],\n\"faces\": [";
  for (std::size_t i = 0; i < asset.faces().size(); ++i) {
    const Face& f = asset.faces()[i];
    out += (i ? ",[" : "[") + std::to_string(f[0]) + ',' + std::to_string(f[1]) + ',' +
           std::to_string(f[2]) + ']';
  }
  out += "],\n\"shape_dirs\": [";
  const ShapeDirs& sd = asset.shape_dirs();
  for (Eigen::Index i = 0; i < sd.size(); ++i) {
    if (i) out += ',';
    append_number(out, sd.data()[i]);
  }
  out += "],\n\"landmarks\": " + json(asset.landmarks()).dump() + ",\n\"rings\": " +
         json(asset.rings()).dump() + "\n}\n";
  return out;
}

void save_asset(const BodyModelAsset& asset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write asset file " + path.string());
  out << serialize_asset(asset);
  if (!out) throw Error(ErrorKind::Io, "failed writing asset file " + path.string());
}

}  // namespace bodyshape
