// Copyright 2026 The LidarForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "lidarforge/core/bytes.hpp"
#include "lidarforge/core/error.hpp"
#include "lidarforge/geometry/mesh.hpp"

namespace lidarforge {

enum class MeshFormat { kPly, kObj, kStl };

struct MeshLoadOptions {
  bool weld = false;
  double weld_tolerance = 1e-6;
};

inline std::optional<MeshFormat> mesh_format_from_name(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (!s.empty() && s.front() == '.') s.erase(0, 1);
  if (s == "ply") return MeshFormat::kPly;
  if (s == "obj") return MeshFormat::kObj;
  if (s == "stl") return MeshFormat::kStl;
  return std::nullopt;
}

inline MeshFormat mesh_format_from_path(const std::filesystem::path& path) {
  if (auto f = mesh_format_from_name(path.extension().string())) return *f;
  throw Error("cannot infer mesh format from extension of " + path.string());
}

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

/// Splits text into lines, tolerating CRLF.
class LineCursor {
 public:
  explicit LineCursor(std::string_view text) : text_(text) {}

  bool next(std::string_view& line) {
    if (pos_ >= text_.size()) return false;
    const std::size_t end = text_.find('\n', pos_);
    const std::size_t stop = end == std::string_view::npos ? text_.size() : end;
    line = text_.substr(pos_, stop - pos_);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos_ = end == std::string_view::npos ? text_.size() : end + 1;
    ++line_no_;
    return true;
  }

  std::size_t line_number() const { return line_no_; }
  std::size_t byte_offset() const { return pos_; }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_no_ = 0;
};

inline void append_polygon(TriangleMesh& mesh, const std::vector<std::uint32_t>& poly) {
  for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
    mesh.triangles.push_back({poly[0], poly[k], poly[k + 1]});
  }
}

// ---- PLY ----------------------------------------------------------------

enum class PlyType { kInt8, kUint8, kInt16, kUint16, kInt32, kUint32, kFloat32, kFloat64 };

inline std::optional<PlyType> ply_type(std::string_view s) {
  if (s == "char" || s == "int8") return PlyType::kInt8;
  if (s == "uchar" || s == "uint8") return PlyType::kUint8;
  if (s == "short" || s == "int16") return PlyType::kInt16;
  if (s == "ushort" || s == "uint16") return PlyType::kUint16;
  if (s == "int" || s == "int32") return PlyType::kInt32;
  if (s == "uint" || s == "uint32") return PlyType::kUint32;
  if (s == "float" || s == "float32") return PlyType::kFloat32;
  if (s == "double" || s == "float64") return PlyType::kFloat64;
  return std::nullopt;
}

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::kFloat32;
  bool is_list = false;
  PlyType count_type = PlyType::kUint8;
};

struct PlyElement {
  std::string name;
  std::uint64_t count = 0;
  std::vector<PlyProperty> properties;
};

inline double ply_read_binary(ByteReader& r, PlyType t) {
  switch (t) {
    case PlyType::kInt8:
      return r.read<std::int8_t>("ply value");
    case PlyType::kUint8:
      return r.read<std::uint8_t>("ply value");
    case PlyType::kInt16:
      return r.read<std::int16_t>("ply value");
    case PlyType::kUint16:
      return r.read<std::uint16_t>("ply value");
    case PlyType::kInt32:
      return r.read<std::int32_t>("ply value");
    case PlyType::kUint32:
      return r.read<std::uint32_t>("ply value");
    case PlyType::kFloat32:
      return r.read<float>("ply value");
    case PlyType::kFloat64:
      return r.read<double>("ply value");
  }
  return 0.0;
}

inline bool is_face_index_list(const PlyProperty& p) {
  return p.is_list && (p.name == "vertex_indices" || p.name == "vertex_index");
}

inline std::uint32_t checked_index(double v, const std::string& path, ParseError::Unit unit,
                                   std::uint64_t where) {
  if (!(v >= 0.0) || v != static_cast<double>(static_cast<std::uint64_t>(v)) || v > 4294967295.0) {
    throw ParseError(path, unit, where, "invalid vertex index");
  }
  return static_cast<std::uint32_t>(v);
}

inline TriangleMesh parse_ply(std::span<const unsigned char> bytes, const std::string& path) {
  const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  LineCursor lines(text);
  std::string_view line;
  if (!lines.next(line) || line != "ply") {
    throw ParseError(path, ParseError::Unit::kLine, 1, "missing 'ply' magic");
  }

  enum class Encoding { kAscii, kBinaryLe, kBinaryBe } encoding = Encoding::kAscii;
  bool have_format = false;
  std::vector<PlyElement> elements;
  bool ended = false;
  while (lines.next(line)) {
    const auto tok = split_ws(line);
    const auto here = lines.line_number();
    if (tok.empty() || tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "end_header") {
      ended = true;
      break;
    }
    if (tok[0] == "format") {
      if (tok.size() != 3) throw ParseError(path, ParseError::Unit::kLine, here, "bad format line");
      if (tok[1] == "ascii") {
        encoding = Encoding::kAscii;
      } else if (tok[1] == "binary_little_endian") {
        encoding = Encoding::kBinaryLe;
      } else if (tok[1] == "binary_big_endian") {
        encoding = Encoding::kBinaryBe;
      } else {
        throw ParseError(path, ParseError::Unit::kLine, here,
                         "unknown format '" + std::string(tok[1]) + "'");
      }
      have_format = true;
    } else if (tok[0] == "element") {
      PlyElement e;
      if (tok.size() != 3 || !parse_number(tok[2], e.count)) {
        throw ParseError(path, ParseError::Unit::kLine, here, "bad element line");
      }
      e.name = std::string(tok[1]);
      elements.push_back(std::move(e));
    } else if (tok[0] == "property") {
      if (elements.empty()) {
        throw ParseError(path, ParseError::Unit::kLine, here, "property before element");
      }
      PlyProperty p;
      if (tok.size() == 5 && tok[1] == "list") {
        auto ct = ply_type(tok[2]);
        auto it = ply_type(tok[3]);
        if (!ct || !it) throw ParseError(path, ParseError::Unit::kLine, here, "bad list type");
        p.is_list = true;
        p.count_type = *ct;
        p.type = *it;
        p.name = std::string(tok[4]);
      } else if (tok.size() == 3) {
        auto t = ply_type(tok[1]);
        if (!t) throw ParseError(path, ParseError::Unit::kLine, here, "bad property type");
        p.type = *t;
        p.name = std::string(tok[2]);
      } else {
        throw ParseError(path, ParseError::Unit::kLine, here, "bad property line");
      }
      elements.back().properties.push_back(std::move(p));
    } else {
      throw ParseError(path, ParseError::Unit::kLine, here,
                       "unknown header keyword '" + std::string(tok[0]) + "'");
    }
  }
  if (!ended) throw ParseError(path, ParseError::Unit::kLine, lines.line_number(), "missing end_header");
  if (!have_format) throw ParseError(path, ParseError::Unit::kLine, 2, "missing format line");

  TriangleMesh mesh;
  std::uint64_t vertex_count = 0;
  for (const auto& e : elements) {
    if (e.name == "vertex") vertex_count = e.count;
  }

  auto check_face = [&](std::vector<std::uint32_t>& poly, ParseError::Unit unit, std::uint64_t where) {
    if (poly.size() < 3) throw ParseError(path, unit, where, "face with fewer than 3 vertices");
    for (std::uint32_t idx : poly) {
      if (idx >= vertex_count) throw ParseError(path, unit, where, "vertex index out of range");
    }
    append_polygon(mesh, poly);
  };

  if (encoding == Encoding::kAscii) {
    for (const auto& e : elements) {
      int ix = -1, iy = -1, iz = -1;
      for (int k = 0; k < static_cast<int>(e.properties.size()); ++k) {
        if (e.properties[k].name == "x") ix = k;
        if (e.properties[k].name == "y") iy = k;
        if (e.properties[k].name == "z") iz = k;
      }
      const bool is_vertex = e.name == "vertex";
      const bool is_face = e.name == "face";
      if (is_vertex && (ix < 0 || iy < 0 || iz < 0)) {
        throw ParseError(path, ParseError::Unit::kLine, lines.line_number(),
                         "vertex element lacks x/y/z");
      }
      for (std::uint64_t n = 0; n < e.count; ++n) {
        do {
          if (!lines.next(line)) {
            throw ParseError(path, ParseError::Unit::kLine, lines.line_number() + 1,
                             "unexpected end of file in element '" + e.name + "'");
          }
        } while (split_ws(line).empty());
        const auto tok = split_ws(line);
        const auto here = lines.line_number();
        std::size_t t = 0;
        Vec3 v;
        std::vector<std::uint32_t> poly;
        for (int k = 0; k < static_cast<int>(e.properties.size()); ++k) {
          const auto& p = e.properties[k];
          auto take = [&]() -> double {
            double value = 0.0;
            if (t >= tok.size() || !parse_number(tok[t], value)) {
              throw ParseError(path, ParseError::Unit::kLine, here,
                               "malformed value for property '" + p.name + "'");
            }
            ++t;
            return value;
          };
          if (p.is_list) {
            const double cnt = take();
            if (cnt < 0) throw ParseError(path, ParseError::Unit::kLine, here, "negative list count");
            for (std::uint64_t j = 0; j < static_cast<std::uint64_t>(cnt); ++j) {
              const double idx = take();
              if (is_face && is_face_index_list(p)) {
                poly.push_back(checked_index(idx, path, ParseError::Unit::kLine, here));
              }
            }
          } else {
            const double value = take();
            if (k == ix) v.x = value;
            if (k == iy) v.y = value;
            if (k == iz) v.z = value;
          }
        }
        if (t != tok.size()) {
          throw ParseError(path, ParseError::Unit::kLine, here, "trailing values on line");
        }
        if (is_vertex) mesh.vertices.push_back(v);
        if (is_face) check_face(poly, ParseError::Unit::kLine, here);
      }
    }
  } else {
    const std::endian order =
        encoding == Encoding::kBinaryLe ? std::endian::little : std::endian::big;
    ByteReader r(bytes, path, order);
    r.skip(lines.byte_offset(), "header");
    for (const auto& e : elements) {
      const bool is_vertex = e.name == "vertex";
      const bool is_face = e.name == "face";
      for (std::uint64_t n = 0; n < e.count; ++n) {
        const std::size_t start = r.offset();
        Vec3 v;
        std::vector<std::uint32_t> poly;
        bool got_x = false, got_y = false, got_z = false;
        for (const auto& p : e.properties) {
          if (p.is_list) {
            const double cnt = ply_read_binary(r, p.count_type);
            if (cnt < 0) r.fail_at(start, "negative list count");
            for (std::uint64_t j = 0; j < static_cast<std::uint64_t>(cnt); ++j) {
              const double idx = ply_read_binary(r, p.type);
              if (is_face && is_face_index_list(p)) {
                poly.push_back(checked_index(idx, path, ParseError::Unit::kByte, start));
              }
            }
          } else {
            const double value = ply_read_binary(r, p.type);
            if (p.name == "x") v.x = value, got_x = true;
            if (p.name == "y") v.y = value, got_y = true;
            if (p.name == "z") v.z = value, got_z = true;
          }
        }
        if (is_vertex) {
          if (!got_x || !got_y || !got_z) r.fail_at(start, "vertex element lacks x/y/z");
          mesh.vertices.push_back(v);
        }
        if (is_face) check_face(poly, ParseError::Unit::kByte, start);
      }
    }
  }
  return mesh;
}

// ---- OBJ ----------------------------------------------------------------

inline TriangleMesh parse_obj(std::string_view text, const std::string& path) {
  TriangleMesh mesh;
  LineCursor lines(text);
  std::string_view line;
  while (lines.next(line)) {
    const auto here = lines.line_number();
    const auto tok = split_ws(line);
    if (tok.empty() || tok[0].front() == '#') continue;
    if (tok[0] == "v") {
      Vec3 v;
      if (tok.size() < 4 || tok.size() > 5 || !parse_number(tok[1], v.x) ||
          !parse_number(tok[2], v.y) || !parse_number(tok[3], v.z)) {
        throw ParseError(path, ParseError::Unit::kLine, here, "malformed vertex record");
      }
      mesh.vertices.push_back(v);
    } else if (tok[0] == "f") {
      if (tok.size() < 4) throw ParseError(path, ParseError::Unit::kLine, here, "face needs 3+ vertices");
      std::vector<std::uint32_t> poly;
      for (std::size_t k = 1; k < tok.size(); ++k) {
        const std::string_view ref = tok[k].substr(0, tok[k].find('/'));
        long long idx = 0;
        if (!parse_number(ref, idx) || idx == 0) {
          throw ParseError(path, ParseError::Unit::kLine, here,
                           "malformed face index '" + std::string(tok[k]) + "'");
        }
        const auto n = static_cast<long long>(mesh.vertices.size());
        const long long zero_based = idx > 0 ? idx - 1 : n + idx;
        if (zero_based < 0 || zero_based >= n) {
          throw ParseError(path, ParseError::Unit::kLine, here, "face index out of range");
        }
        poly.push_back(static_cast<std::uint32_t>(zero_based));
      }
      append_polygon(mesh, poly);
    }
    // vn, vt, g, o, s, usemtl, mtllib and friends carry nothing we need.
  }
  return mesh;
}

// ---- STL ----------------------------------------------------------------

inline constexpr std::size_t kStlHeaderBytes = 80;
inline constexpr std::size_t kStlFacetBytes = 50;

inline TriangleMesh parse_stl(std::span<const unsigned char> bytes, const std::string& path) {
  ByteReader r(bytes, path);
  r.skip(kStlHeaderBytes, "STL header");
  const auto count = r.read<std::uint32_t>("STL facet count");
  const std::uint64_t expected = kStlHeaderBytes + 4 + std::uint64_t{count} * kStlFacetBytes;
  if (bytes.size() < expected) {
    r.fail_at(kStlHeaderBytes + 4 + (bytes.size() - kStlHeaderBytes - 4) / kStlFacetBytes * kStlFacetBytes,
              "truncated facet record (header declares " + std::to_string(count) + " facets)");
  }
  if (bytes.size() > expected) {
    r.fail_at(expected, "trailing bytes after " + std::to_string(count) +
                            " facets (ASCII STL is not supported)");
  }
  TriangleMesh mesh;
  mesh.vertices.reserve(std::size_t{count} * 3);
  mesh.triangles.reserve(count);
  for (std::uint32_t f = 0; f < count; ++f) {
    r.skip(12, "facet normal");
    for (int k = 0; k < 3; ++k) {
      const float x = r.read<float>("facet vertex");
      const float y = r.read<float>("facet vertex");
      const float z = r.read<float>("facet vertex");
      mesh.vertices.push_back({x, y, z});
    }
    r.skip(2, "facet attribute");
    mesh.triangles.push_back({3 * f, 3 * f + 1, 3 * f + 2});
  }
  return mesh;
}

}  // namespace detail

/// Reads a mesh, preserving vertex order from the file. Polygons are fan-triangulated.
inline TriangleMesh load_mesh(const std::filesystem::path& path, MeshFormat format,
                              const MeshLoadOptions& options = {}) {
  if (!std::filesystem::is_regular_file(path)) throw Error("cannot read mesh file " + path.string());
  const auto bytes = read_file_bytes(path);
  const std::string name = path.string();
  TriangleMesh mesh;
  switch (format) {
    case MeshFormat::kPly:
      mesh = detail::parse_ply(bytes, name);
      break;
    case MeshFormat::kObj:
      mesh = detail::parse_obj(
          std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()), name);
      break;
    case MeshFormat::kStl:
      mesh = detail::parse_stl(bytes, name);
      break;
  }
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    if (!is_finite(mesh.vertices[i])) throw Error(name + ": vertex " + std::to_string(i) + " is not finite");
  }
  if (options.weld) mesh = weld_vertices(mesh, options.weld_tolerance);
  if (mesh.triangles.empty()) throw Error(name + ": mesh has zero triangles");
  mesh.update_bounds();
  return mesh;
}

inline TriangleMesh load_mesh(const std::filesystem::path& path, const MeshLoadOptions& options = {}) {
  return load_mesh(path, mesh_format_from_path(path), options);
}

/// ASCII PLY with double vertices written in shortest round-trip form.
inline void write_ply(const TriangleMesh& mesh, const std::filesystem::path& path) {
  std::string out;
  out += "ply\nformat ascii 1.0\nelement vertex " + std::to_string(mesh.vertices.size()) +
         "\nproperty double x\nproperty double y\nproperty double z\nelement face " +
         std::to_string(mesh.triangles.size()) + "\nproperty list uchar uint vertex_indices\nend_header\n";
  char buf[32];
  for (const Vec3& v : mesh.vertices) {
    for (int k = 0; k < 3; ++k) {
      const auto res = std::to_chars(buf, buf + sizeof(buf), v[k]);
      out.append(buf, res.ptr);
      out += k == 2 ? '\n' : ' ';
    }
  }
  for (const Triangle& t : mesh.triangles) {
    out += "3 " + std::to_string(t[0]) + ' ' + std::to_string(t[1]) + ' ' + std::to_string(t[2]) + '\n';
  }
  write_file_text(path, out);
}

inline void write_obj(const TriangleMesh& mesh, const std::filesystem::path& path) {
  std::string out;
  char buf[32];
  for (const Vec3& v : mesh.vertices) {
    out += 'v';
    for (int k = 0; k < 3; ++k) {
      const auto res = std::to_chars(buf, buf + sizeof(buf), v[k]);
      out += ' ';
      out.append(buf, res.ptr);
    }
    out += '\n';
  }
  for (const Triangle& t : mesh.triangles) {
    out += "f " + std::to_string(t[0] + 1) + ' ' + std::to_string(t[1] + 1) + ' ' +
           std::to_string(t[2] + 1) + '\n';
  }
  write_file_text(path, out);
}

/// Binary STL (float32 coordinates, zero normals).
inline void write_stl(const TriangleMesh& mesh, const std::filesystem::path& path) {
  std::vector<unsigned char> out(detail::kStlHeaderBytes, 0);
  put_le(out, static_cast<std::uint32_t>(mesh.triangles.size()));
  for (const Triangle& t : mesh.triangles) {
    for (int k = 0; k < 3; ++k) put_le(out, 0.0f);
    for (int c = 0; c < 3; ++c) {
      const Vec3& v = mesh.vertices[t[c]];
      put_le(out, static_cast<float>(v.x));
      put_le(out, static_cast<float>(v.y));
      put_le(out, static_cast<float>(v.z));
    }
    put_le(out, std::uint16_t{0});
  }
  write_file_bytes(path, out);
}

inline void save_mesh(const TriangleMesh& mesh, const std::filesystem::path& path) {
  switch (mesh_format_from_path(path)) {
    case MeshFormat::kPly:
      write_ply(mesh, path);
      break;
    case MeshFormat::kObj:
      write_obj(mesh, path);
      break;
    case MeshFormat::kStl:
      write_stl(mesh, path);
      break;
  }
}

}  // namespace lidarforge
