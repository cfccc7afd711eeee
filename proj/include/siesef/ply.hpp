// Copyright 2026 The siesef Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "siesef/binary.hpp"
#include "siesef/error.hpp"
#include "siesef/point_cloud.hpp"

// A PLY subset: ascii 1.0 and binary_little_endian 1.0. The vertex element
// must carry x, y, z; a scalar label property is picked up when present.
// Other vertex properties and other elements are skipped, with a warning for
// each skipped vertex property.
namespace siesef::io {

enum class PlyEncoding { kAscii, kBinaryLittleEndian };
enum class PlyType { kInt8, kUInt8, kInt16, kUInt16, kInt32, kUInt32, kFloat32, kFloat64 };

inline std::size_t ply_type_size(PlyType t) {
  switch (t) {
    case PlyType::kInt8:
    case PlyType::kUInt8: return 1;
    case PlyType::kInt16:
    case PlyType::kUInt16: return 2;
    case PlyType::kInt32:
    case PlyType::kUInt32:
    case PlyType::kFloat32: return 4;
    case PlyType::kFloat64: return 8;
  }
  return 0;
}

inline std::optional<PlyType> parse_ply_type(std::string_view s) {
  if (s == "char" || s == "int8") return PlyType::kInt8;
  if (s == "uchar" || s == "uint8") return PlyType::kUInt8;
  if (s == "short" || s == "int16") return PlyType::kInt16;
  if (s == "ushort" || s == "uint16") return PlyType::kUInt16;
  if (s == "int" || s == "int32") return PlyType::kInt32;
  if (s == "uint" || s == "uint32") return PlyType::kUInt32;
  if (s == "float" || s == "float32") return PlyType::kFloat32;
  if (s == "double" || s == "float64") return PlyType::kFloat64;
  return std::nullopt;
}

inline std::string_view ply_type_name(PlyType t) {
  switch (t) {
    case PlyType::kInt8: return "char";
    case PlyType::kUInt8: return "uchar";
    case PlyType::kInt16: return "short";
    case PlyType::kUInt16: return "ushort";
    case PlyType::kInt32: return "int";
    case PlyType::kUInt32: return "uint";
    case PlyType::kFloat32: return "float";
    case PlyType::kFloat64: return "double";
  }
  return "?";
}

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::kFloat32;
  bool is_list = false;
  PlyType count_type = PlyType::kUInt8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

struct PlyHeader {
  PlyEncoding encoding = PlyEncoding::kAscii;
  std::vector<PlyElement> elements;
  std::size_t body_offset = 0;
};

// Vertex data as read. Coordinates stay in double so georeferenced files can
// be re-centered before narrowing to float.
struct PlyCloud {
  std::vector<std::array<double, 3>> positions;
  std::vector<std::int32_t> labels;  // empty when the file has no label
  PlyType coordinate_type = PlyType::kFloat32;
  std::vector<std::string> warnings;

  std::size_t size() const noexcept { return positions.size(); }
};

inline bool is_label_property(std::string_view name) {
  return name == "label" || name == "scalar_Label" || name == "scalar_label" || name == "class";
}

namespace detail {

inline std::vector<std::string_view> split_words(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

inline std::size_t parse_count(std::string_view s, std::string_view what) {
  std::size_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw FormatError("PLY header: bad count '" + std::string(s) + "' for " + std::string(what));
  }
  return v;
}

inline double read_binary_scalar(ByteReader& in, PlyType t, const std::string& what) {
  switch (t) {
    case PlyType::kInt8: return static_cast<std::int8_t>(in.u8(what));
    case PlyType::kUInt8: return in.u8(what);
    case PlyType::kInt16: {
      in.require(2, what);
      const std::uint16_t lo = in.u8(what), hi = in.u8(what);
      return static_cast<std::int16_t>(static_cast<std::uint16_t>(lo | (hi << 8)));
    }
    case PlyType::kUInt16: {
      in.require(2, what);
      const std::uint16_t lo = in.u8(what), hi = in.u8(what);
      return static_cast<std::uint16_t>(lo | (hi << 8));
    }
    case PlyType::kInt32: return static_cast<std::int32_t>(in.u32(what));
    case PlyType::kUInt32: return in.u32(what);
    case PlyType::kFloat32: return in.f32(what);
    case PlyType::kFloat64: return in.f64(what);
  }
  return 0.0;
}

// Sequential token source over the ascii body, one line per element row.
class AsciiRows {
 public:
  AsciiRows(std::string_view body) : body_(body) {}

  // Returns the tokens of the next non-empty line, or nullopt at end.
  std::optional<std::vector<std::string_view>> next() {
    while (pos_ < body_.size()) {
      const std::size_t end = std::min(body_.find('\n', pos_), body_.size());
      auto words = split_words(body_.substr(pos_, end - pos_));
      pos_ = end + 1;
      if (!words.empty()) return words;
    }
    return std::nullopt;
  }

 private:
  std::string_view body_;
  std::size_t pos_ = 0;
};

inline double parse_ascii_number(std::string_view s, const std::string& what) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw FormatError("PLY body: '" + std::string(s) + "' is not a number in " + what);
  }
  return v;
}

}  // namespace detail

inline PlyHeader parse_ply_header(std::span<const std::uint8_t> bytes) {
  const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  PlyHeader h;
  std::size_t pos = 0;
  bool saw_format = false;
  int line_no = 0;
  for (;;) {
    const std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) throw FormatError("PLY header is not terminated by end_header");
    const std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    const auto w = detail::split_words(line);
    if (line_no == 1) {
      if (w.size() != 1 || w[0] != "ply") throw FormatError("missing PLY magic line");
      continue;
    }
    if (w.empty() || w[0] == "comment" || w[0] == "obj_info") continue;
    if (w[0] == "end_header") break;
    if (w[0] == "format") {
      if (w.size() != 3) throw FormatError("PLY header line " + std::to_string(line_no) + ": malformed format");
      if (w[2] != "1.0") throw FormatError("unsupported PLY version " + std::string(w[2]));
      if (w[1] == "ascii") {
        h.encoding = PlyEncoding::kAscii;
      } else if (w[1] == "binary_little_endian") {
        h.encoding = PlyEncoding::kBinaryLittleEndian;
      } else {
        throw FormatError("unsupported PLY encoding '" + std::string(w[1]) + "'");
      }
      saw_format = true;
    } else if (w[0] == "element") {
      if (w.size() != 3) throw FormatError("PLY header line " + std::to_string(line_no) + ": malformed element");
      h.elements.push_back({std::string(w[1]), detail::parse_count(w[2], w[1]), {}});
    } else if (w[0] == "property") {
      if (h.elements.empty()) {
        throw FormatError("PLY header line " + std::to_string(line_no) + ": property before any element");
      }
      PlyProperty p;
      if (w.size() == 5 && w[1] == "list") {
        const auto ct = parse_ply_type(w[2]);
        const auto vt = parse_ply_type(w[3]);
        if (!ct || !vt) throw FormatError("PLY header: unknown list types for property " + std::string(w[4]));
        p = {std::string(w[4]), *vt, true, *ct};
      } else if (w.size() == 3) {
        const auto t = parse_ply_type(w[1]);
        if (!t) throw FormatError("PLY header: unknown type '" + std::string(w[1]) + "' for property " + std::string(w[2]));
        p = {std::string(w[2]), *t, false, PlyType::kUInt8};
      } else {
        throw FormatError("PLY header line " + std::to_string(line_no) + ": malformed property");
      }
      h.elements.back().properties.push_back(std::move(p));
    } else {
      throw FormatError("PLY header line " + std::to_string(line_no) + ": unknown keyword '" +
                        std::string(w[0]) + "'");
    }
  }
  if (!saw_format) throw FormatError("PLY header has no format line");
  h.body_offset = pos;
  return h;
}

inline PlyCloud read_ply(std::span<const std::uint8_t> bytes) {
  const PlyHeader h = parse_ply_header(bytes);
  PlyCloud out;
  bool have_vertex = false;

  for (const PlyElement& el : h.elements) {
    if (el.name == "vertex") {
      have_vertex = true;
      int ix = -1, iy = -1, iz = -1, il = -1;
      for (std::size_t i = 0; i < el.properties.size(); ++i) {
        const PlyProperty& p = el.properties[i];
        const int idx = static_cast<int>(i);
        if (p.is_list) {
          out.warnings.push_back("skipping list property vertex." + p.name);
        } else if (p.name == "x") {
          ix = idx;
        } else if (p.name == "y") {
          iy = idx;
        } else if (p.name == "z") {
          iz = idx;
        } else if (il < 0 && is_label_property(p.name)) {
          il = idx;
        } else {
          out.warnings.push_back("skipping vertex property '" + p.name + "'");
        }
      }
      if (ix < 0 || iy < 0 || iz < 0) throw FormatError("PLY vertex element lacks x, y or z");
      for (int i : {ix, iy, iz}) {
        const PlyType t = el.properties[static_cast<std::size_t>(i)].type;
        if (t != PlyType::kFloat32 && t != PlyType::kFloat64) {
          throw FormatError("PLY vertex." + el.properties[static_cast<std::size_t>(i)].name +
                            " must be float or double");
        }
      }
      out.coordinate_type = el.properties[static_cast<std::size_t>(ix)].type;
      out.positions.resize(el.count);
      if (il >= 0) out.labels.resize(el.count);
    }
  }
  if (!have_vertex) throw FormatError("PLY file has no vertex element");

  auto store = [&](const PlyElement& el, std::size_t row, std::size_t prop, double v) {
    if (el.name != "vertex") return;
    const std::string& name = el.properties[prop].name;
    if (name == "x") out.positions[row][0] = v;
    else if (name == "y") out.positions[row][1] = v;
    else if (name == "z") out.positions[row][2] = v;
    else if (!out.labels.empty() && is_label_property(name)) {
      if (!std::isfinite(v) || v != std::floor(v) || v < INT32_MIN || v > INT32_MAX) {
        throw FormatError("PLY vertex " + std::to_string(row) + ": label " + std::to_string(v) +
                          " is not an integer");
      }
      out.labels[row] = static_cast<std::int32_t>(v);
    }
  };
  // Only the first label-like property is used.
  std::string label_name;
  for (const auto& el : h.elements) {
    if (el.name != "vertex") continue;
    for (const auto& p : el.properties) {
      if (!p.is_list && is_label_property(p.name)) { label_name = p.name; break; }
    }
  }
  auto store_checked = [&](const PlyElement& el, std::size_t row, std::size_t prop, double v) {
    const std::string& name = el.properties[prop].name;
    if (is_label_property(name) && name != label_name) return;
    store(el, row, prop, v);
  };

  auto where = [](const PlyElement& el, std::size_t row, const PlyProperty& p) {
    return "element '" + el.name + "' row " + std::to_string(row) + " property '" + p.name + "'";
  };

  if (h.encoding == PlyEncoding::kBinaryLittleEndian) {
    ByteReader in(bytes.subspan(h.body_offset));
    for (const PlyElement& el : h.elements) {
      for (std::size_t row = 0; row < el.count; ++row) {
        for (std::size_t k = 0; k < el.properties.size(); ++k) {
          const PlyProperty& p = el.properties[k];
          const std::string what = where(el, row, p);
          if (p.is_list) {
            const double n = detail::read_binary_scalar(in, p.count_type, what);
            if (n < 0) throw FormatError("negative list length in " + what);
            in.skip(static_cast<std::size_t>(n) * ply_type_size(p.type), what);
          } else {
            store_checked(el, row, k, detail::read_binary_scalar(in, p.type, what));
          }
        }
      }
    }
  } else {
    const std::string_view body(reinterpret_cast<const char*>(bytes.data()) + h.body_offset,
                                bytes.size() - h.body_offset);
    detail::AsciiRows rows(body);
    for (const PlyElement& el : h.elements) {
      for (std::size_t row = 0; row < el.count; ++row) {
        const auto words = rows.next();
        if (!words) {
          throw FormatError("truncated PLY body: element '" + el.name + "' declares " +
                            std::to_string(el.count) + " rows, found " + std::to_string(row));
        }
        std::size_t t = 0;
        for (std::size_t k = 0; k < el.properties.size(); ++k) {
          const PlyProperty& p = el.properties[k];
          const std::string what = where(el, row, p);
          if (t >= words->size()) throw FormatError("truncated PLY row: missing " + what);
          if (p.is_list) {
            const double n = detail::parse_ascii_number((*words)[t++], what);
            if (n < 0 || n != std::floor(n)) throw FormatError("bad list length in " + what);
            if (t + static_cast<std::size_t>(n) > words->size()) {
              throw FormatError("truncated PLY row: list too short in " + what);
            }
            t += static_cast<std::size_t>(n);
          } else {
            double v = detail::parse_ascii_number((*words)[t++], what);
            if (p.type == PlyType::kFloat32) v = static_cast<float>(v);
            store_checked(el, row, k, v);
          }
        }
      }
    }
  }
  return out;
}

// Narrows to a float cloud. With `recenter`, subtracts the centroid in double
// first; `centroid_out` receives it.
inline PointCloud to_point_cloud(const PlyCloud& ply, bool recenter,
                                 std::array<double, 3>* centroid_out = nullptr) {
  if (recenter) return recentered_cloud(ply.positions, ply.labels, centroid_out);
  std::vector<std::array<float, 3>> pts(ply.size());
  for (std::size_t i = 0; i < ply.size(); ++i) {
    for (int a = 0; a < 3; ++a) pts[i][a] = static_cast<float>(ply.positions[i][a]);
  }
  if (centroid_out) *centroid_out = {0.0, 0.0, 0.0};
  return make_cloud(pts, ply.labels);
}

// Writes x, y, z (float or double) and, when labels are present, an int
// label property.
inline Bytes write_ply(const PlyCloud& cloud, PlyEncoding encoding) {
  if (cloud.coordinate_type != PlyType::kFloat32 && cloud.coordinate_type != PlyType::kFloat64) {
    throw ConfigError("PLY coordinates must be written as float or double");
  }
  if (!cloud.labels.empty() && cloud.labels.size() != cloud.size()) {
    throw DataError("label count does not match vertex count");
  }
  const bool f64 = cloud.coordinate_type == PlyType::kFloat64;
  std::ostringstream head;
  head << "ply\nformat " << (encoding == PlyEncoding::kAscii ? "ascii" : "binary_little_endian")
       << " 1.0\nelement vertex " << cloud.size() << "\n";
  for (const char* axis : {"x", "y", "z"}) {
    head << "property " << ply_type_name(cloud.coordinate_type) << ' ' << axis << "\n";
  }
  if (!cloud.labels.empty()) head << "property int label\n";
  head << "end_header\n";
  Bytes out;
  put_bytes(out, head.str());

  if (encoding == PlyEncoding::kBinaryLittleEndian) {
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      for (int a = 0; a < 3; ++a) {
        if (f64) put_f64(out, cloud.positions[i][a]);
        else put_f32(out, static_cast<float>(cloud.positions[i][a]));
      }
      if (!cloud.labels.empty()) put_u32(out, static_cast<std::uint32_t>(cloud.labels[i]));
    }
    return out;
  }
  // Shortest round-trip formatting keeps ascii output exact as well.
  char buf[64];
  auto number = [&](double v) {
    const auto r = f64 ? std::to_chars(buf, buf + sizeof buf, v)
                       : std::to_chars(buf, buf + sizeof buf, static_cast<float>(v));
    out.insert(out.end(), buf, r.ptr);
  };
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (int a = 0; a < 3; ++a) {
      number(cloud.positions[i][a]);
      out.push_back(a == 2 && cloud.labels.empty() ? '\n' : ' ');
    }
    if (!cloud.labels.empty()) {
      put_bytes(out, std::to_string(cloud.labels[i]));
      out.push_back('\n');
    }
  }
  return out;
}

inline PlyCloud ply_from_cloud(const PointCloud& cloud, PlyType coordinate_type = PlyType::kFloat32) {
  PlyCloud p;
  p.coordinate_type = coordinate_type;
  p.positions.resize(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto q = cloud.point(i);
    p.positions[i] = {q[0], q[1], q[2]};
  }
  p.labels = cloud.labels;
  return p;
}

}  // namespace siesef::io
