#include "gcreg/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <vector>

#include "gcreg/error.hpp"

namespace gcreg {

CloudFormat cloud_format_from_string(const std::string& s) {
  if (s == "auto") return CloudFormat::kAuto;
  if (s == "ply") return CloudFormat::kPly;
  if (s == "ply-ascii") return CloudFormat::kPlyAscii;
  if (s == "ply-binary") return CloudFormat::kPlyBinary;
  if (s == "xyz") return CloudFormat::kXyz;
  throw Error(ErrorCode::kParameter,
              "unknown cloud format '" + s + "' (auto | ply | ply-ascii | ply-binary | xyz)");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::kIo, "read failure on '" + path + "'");
  return std::move(ss).str();
}

void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failure on '" + path + "'");
}

namespace {

bool has_ply_extension(const std::string& path) {
  if (path.size() < 4) return false;
  std::string ext = path.substr(path.size() - 4);
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".ply";
}

// ---------------------------------------------------------------------------
// PLY

enum class ScalarType { kInt8, kUint8, kInt16, kUint16, kInt32, kUint32, kFloat32, kFloat64 };

std::optional<ScalarType> scalar_type(std::string_view name) {
  if (name == "char" || name == "int8") return ScalarType::kInt8;
  if (name == "uchar" || name == "uint8") return ScalarType::kUint8;
  if (name == "short" || name == "int16") return ScalarType::kInt16;
  if (name == "ushort" || name == "uint16") return ScalarType::kUint16;
  if (name == "int" || name == "int32") return ScalarType::kInt32;
  if (name == "uint" || name == "uint32") return ScalarType::kUint32;
  if (name == "float" || name == "float32") return ScalarType::kFloat32;
  if (name == "double" || name == "float64") return ScalarType::kFloat64;
  return std::nullopt;
}

std::size_t scalar_size(ScalarType t) {
  switch (t) {
    case ScalarType::kInt8:
    case ScalarType::kUint8: return 1;
    case ScalarType::kInt16:
    case ScalarType::kUint16: return 2;
    case ScalarType::kInt32:
    case ScalarType::kUint32:
    case ScalarType::kFloat32: return 4;
    case ScalarType::kFloat64: return 8;
  }
  return 0;
}

struct Property {
  std::string name;
  ScalarType type;
  bool is_list = false;
  ScalarType count_type = ScalarType::kUint8;
};

struct Element {
  std::string name;
  std::uint64_t count = 0;
  std::vector<Property> properties;
};

template <class T>
T load_le(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    auto* b = reinterpret_cast<unsigned char*>(&v);
    std::reverse(b, b + sizeof(T));
  }
  return v;
}

double load_scalar(const char* p, ScalarType t) {
  switch (t) {
    case ScalarType::kInt8: return load_le<std::int8_t>(p);
    case ScalarType::kUint8: return load_le<std::uint8_t>(p);
    case ScalarType::kInt16: return load_le<std::int16_t>(p);
    case ScalarType::kUint16: return load_le<std::uint16_t>(p);
    case ScalarType::kInt32: return load_le<std::int32_t>(p);
    case ScalarType::kUint32: return load_le<std::uint32_t>(p);
    case ScalarType::kFloat32: return load_le<float>(p);
    case ScalarType::kFloat64: return load_le<double>(p);
  }
  return 0.0;
}

std::vector<std::string_view> split_ws(std::string_view line) {
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

bool parse_double(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

bool parse_u64(std::string_view tok, std::uint64_t& out) {
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

/// Line cursor over a byte buffer that remembers offsets and line numbers.
class LineReader {
 public:
  explicit LineReader(std::string_view bytes) : bytes_(bytes) {}

  bool next(std::string_view& line) {
    if (pos_ >= bytes_.size()) return false;
    line_start_ = pos_;
    ++line_no_;
    const std::size_t nl = bytes_.find('\n', pos_);
    const std::size_t end = nl == std::string_view::npos ? bytes_.size() : nl;
    line = bytes_.substr(pos_, end - pos_);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos_ = nl == std::string_view::npos ? bytes_.size() : nl + 1;
    return true;
  }

  std::size_t pos() const { return pos_; }
  std::size_t line_start() const { return line_start_; }
  std::size_t line_no() const { return line_no_; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
  std::size_t line_start_ = 0;
  std::size_t line_no_ = 0;
};

struct VertexSlots {
  int x = -1, y = -1, z = -1, nx = -1, ny = -1, nz = -1;
  bool has_normals() const { return nx >= 0 && ny >= 0 && nz >= 0; }
};

VertexSlots locate_vertex_slots(const Element& vertex) {
  VertexSlots s;
  for (std::size_t k = 0; k < vertex.properties.size(); ++k) {
    const Property& p = vertex.properties[k];
    if (p.is_list) continue;
    const int idx = static_cast<int>(k);
    if (p.name == "x") s.x = idx;
    else if (p.name == "y") s.y = idx;
    else if (p.name == "z") s.z = idx;
    else if (p.name == "nx") s.nx = idx;
    else if (p.name == "ny") s.ny = idx;
    else if (p.name == "nz") s.nz = idx;
  }
  return s;
}

void push_vertex(PointCloud& cloud, const std::vector<double>& values, const VertexSlots& slots,
                 std::size_t offset, std::size_t line) {
  const Vec3 p(values[slots.x], values[slots.y], values[slots.z]);
  if (!p.allFinite()) throw ParseError("non-finite vertex coordinate", offset, line);
  cloud.points.push_back(p);
  if (slots.has_normals()) cloud.normals.emplace_back(values[slots.nx], values[slots.ny], values[slots.nz]);
}

/// Normals that cannot be made unit length invalidate the whole normal set.
void normalize_or_drop_normals(PointCloud& cloud) {
  for (auto& n : cloud.normals) {
    const double len = n.norm();
    if (!std::isfinite(len) || len < 1e-12) {
      cloud.normals.clear();
      return;
    }
    n /= len;
  }
}

}  // namespace

PointCloud parse_ply(std::string_view bytes) {
  LineReader reader(bytes);
  std::string_view line;
  if (!reader.next(line) || line != "ply") throw ParseError("missing 'ply' magic", 0, 1);

  bool binary = false;
  bool saw_format = false;
  std::vector<Element> elements;
  bool ended = false;
  while (reader.next(line)) {
    const auto tok = split_ws(line);
    const std::size_t at = reader.line_start();
    const std::size_t ln = reader.line_no();
    if (tok.empty()) continue;
    if (tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "end_header") {
      if (tok.size() != 1) throw ParseError("trailing tokens after end_header", at, ln);
      ended = true;
      break;
    }
    if (tok[0] == "format") {
      if (tok.size() != 3) throw ParseError("malformed format line", at, ln);
      if (tok[2] != "1.0") throw ParseError("unsupported PLY version", at, ln);
      if (tok[1] == "ascii") binary = false;
      else if (tok[1] == "binary_little_endian") binary = true;
      else throw ParseError("unsupported PLY encoding '" + std::string(tok[1]) + "'", at, ln);
      saw_format = true;
    } else if (tok[0] == "element") {
      if (!saw_format) throw ParseError("element before format line", at, ln);
      std::uint64_t count = 0;
      if (tok.size() != 3 || !parse_u64(tok[2], count))
        throw ParseError("malformed element line", at, ln);
      elements.push_back({std::string(tok[1]), count, {}});
    } else if (tok[0] == "property") {
      if (elements.empty()) throw ParseError("property outside of an element", at, ln);
      Property prop;
      if (tok.size() == 5 && tok[1] == "list") {
        const auto ct = scalar_type(tok[2]);
        const auto vt = scalar_type(tok[3]);
        if (!ct || !vt) throw ParseError("unknown list property type", at, ln);
        if (*ct == ScalarType::kFloat32 || *ct == ScalarType::kFloat64)
          throw ParseError("list count type must be integral", at, ln);
        prop = {std::string(tok[4]), *vt, true, *ct};
      } else if (tok.size() == 3) {
        const auto t = scalar_type(tok[1]);
        if (!t) throw ParseError("unknown property type '" + std::string(tok[1]) + "'", at, ln);
        prop = {std::string(tok[2]), *t};
      } else {
        throw ParseError("malformed property line", at, ln);
      }
      elements.back().properties.push_back(std::move(prop));
    } else {
      throw ParseError("unexpected header keyword '" + std::string(tok[0]) + "'", at, ln);
    }
  }
  if (!ended) throw ParseError("header is not terminated by end_header", bytes.size(), reader.line_no());
  if (!saw_format) throw ParseError("missing format line", bytes.size(), reader.line_no());

  std::size_t vertex_idx = elements.size();
  for (std::size_t e = 0; e < elements.size(); ++e)
    if (elements[e].name == "vertex") {
      vertex_idx = e;
      break;
    }
  if (vertex_idx == elements.size()) throw ParseError("no vertex element", reader.pos(), reader.line_no());
  const VertexSlots slots = locate_vertex_slots(elements[vertex_idx]);
  if (slots.x < 0 || slots.y < 0 || slots.z < 0)
    throw ParseError("vertex element lacks x, y or z", reader.pos(), reader.line_no());

  PointCloud cloud;
  std::vector<double> values;

  if (!binary) {
    for (std::size_t e = 0; e <= vertex_idx; ++e) {
      const Element& el = elements[e];
      const bool is_vertex = e == vertex_idx;
      if (is_vertex) {
        cloud.points.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(el.count, 1u << 20)));
      }
      for (std::uint64_t k = 0; k < el.count; ++k) {
        if (!reader.next(line))
          throw ParseError("truncated ASCII payload in element '" + el.name + "'", bytes.size(),
                           reader.line_no() + 1);
        const auto tok = split_ws(line);
        const std::size_t at = reader.line_start();
        const std::size_t ln = reader.line_no();
        std::size_t t = 0;
        values.assign(el.properties.size(), 0.0);
        for (std::size_t p = 0; p < el.properties.size(); ++p) {
          const Property& prop = el.properties[p];
          if (prop.is_list) {
            std::uint64_t n = 0;
            if (t >= tok.size() || !parse_u64(tok[t], n))
              throw ParseError("bad list count", at, ln);
            ++t;
            if (n > tok.size() - t) throw ParseError("list runs past end of line", at, ln);
            t += static_cast<std::size_t>(n);
            continue;
          }
          if (t >= tok.size()) throw ParseError("too few values on line", at, ln);
          if (!parse_double(tok[t], values[p]))
            throw ParseError("bad number '" + std::string(tok[t].substr(0, 32)) + "'", at, ln);
          ++t;
        }
        if (t != tok.size()) throw ParseError("too many values on line", at, ln);
        if (is_vertex) push_vertex(cloud, values, slots, at, ln);
      }
    }
  } else {
    std::size_t pos = reader.pos();
    const auto need = [&](std::size_t n, const std::string& what) {
      if (n > bytes.size() - pos) throw ParseError("truncated binary payload in " + what, pos, 0);
    };
    for (std::size_t e = 0; e <= vertex_idx; ++e) {
      const Element& el = elements[e];
      const bool is_vertex = e == vertex_idx;
      bool fixed = true;
      std::size_t stride = 0;
      for (const auto& p : el.properties) {
        if (p.is_list) fixed = false;
        else stride += scalar_size(p.type);
      }
      if (fixed && stride > 0 && el.count > (bytes.size() - pos) / stride)
        throw ParseError("truncated binary payload in element '" + el.name + "'", pos, 0);
      if (is_vertex) cloud.points.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(el.count, 1u << 24)));
      for (std::uint64_t k = 0; k < el.count; ++k) {
        const std::size_t record = pos;
        values.assign(el.properties.size(), 0.0);
        for (std::size_t p = 0; p < el.properties.size(); ++p) {
          const Property& prop = el.properties[p];
          if (prop.is_list) {
            need(scalar_size(prop.count_type), "list count");
            const double c = load_scalar(bytes.data() + pos, prop.count_type);
            pos += scalar_size(prop.count_type);
            if (c < 0) throw ParseError("negative list count", record, 0);
            const auto n = static_cast<std::uint64_t>(c);
            const std::size_t sz = scalar_size(prop.type);
            if (n > (bytes.size() - pos) / sz) throw ParseError("truncated list payload", pos, 0);
            pos += static_cast<std::size_t>(n) * sz;
            continue;
          }
          need(scalar_size(prop.type), "element '" + el.name + "'");
          values[p] = load_scalar(bytes.data() + pos, prop.type);
          pos += scalar_size(prop.type);
        }
        if (is_vertex) push_vertex(cloud, values, slots, record, 0);
      }
    }
  }
  normalize_or_drop_normals(cloud);
  return cloud;
}

PointCloud parse_xyz(std::string_view text) {
  LineReader reader(text);
  std::string_view line;
  PointCloud cloud;
  std::optional<bool> with_normals;
  while (reader.next(line)) {
    const std::size_t hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    const std::size_t at = reader.line_start();
    const std::size_t ln = reader.line_no();
    if (tok.size() != 3 && tok.size() != 6)
      throw ParseError("expected 3 or 6 values, got " + std::to_string(tok.size()), at, ln);
    if (with_normals && *with_normals != (tok.size() == 6))
      throw ParseError("inconsistent column count", at, ln);
    with_normals = tok.size() == 6;
    double v[6];
    for (std::size_t k = 0; k < tok.size(); ++k)
      if (!parse_double(tok[k], v[k]) || !std::isfinite(v[k]))
        throw ParseError("bad number '" + std::string(tok[k].substr(0, 32)) + "'", at, ln);
    cloud.points.emplace_back(v[0], v[1], v[2]);
    if (tok.size() == 6) cloud.normals.emplace_back(v[3], v[4], v[5]);
  }
  normalize_or_drop_normals(cloud);
  return cloud;
}

namespace {

void append_number(std::string& out, double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  out.append(buf, static_cast<std::size_t>(n));
}

void append_le(std::string& out, double v) {
  char b[8];
  std::memcpy(b, &v, 8);
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + 8);
  out.append(b, 8);
}

}  // namespace

std::string serialize_ply(const PointCloud& cloud, bool binary) {
  const bool normals = cloud.has_normals();
  std::string out = "ply\nformat ";
  out += binary ? "binary_little_endian" : "ascii";
  out += " 1.0\nelement vertex " + std::to_string(cloud.size()) + "\n";
  out += "property double x\nproperty double y\nproperty double z\n";
  if (normals) out += "property double nx\nproperty double ny\nproperty double nz\n";
  out += "end_header\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    if (binary) {
      for (int k = 0; k < 3; ++k) append_le(out, p[k]);
      if (normals)
        for (int k = 0; k < 3; ++k) append_le(out, cloud.normals[i][k]);
    } else {
      for (int k = 0; k < 3; ++k) {
        if (k) out += ' ';
        append_number(out, p[k]);
      }
      if (normals)
        for (int k = 0; k < 3; ++k) {
          out += ' ';
          append_number(out, cloud.normals[i][k]);
        }
      out += '\n';
    }
  }
  return out;
}

std::string serialize_xyz(const PointCloud& cloud) {
  std::string out;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (int k = 0; k < 3; ++k) {
      if (k) out += ' ';
      append_number(out, cloud.points[i][k]);
    }
    if (cloud.has_normals())
      for (int k = 0; k < 3; ++k) {
        out += ' ';
        append_number(out, cloud.normals[i][k]);
      }
    out += '\n';
  }
  return out;
}

PointCloud read_cloud(const std::string& path, CloudFormat format) {
  const std::string bytes = read_file(path);
  const bool ply = format == CloudFormat::kAuto ? has_ply_extension(path) : format != CloudFormat::kXyz;
  try {
    return ply ? parse_ply(bytes) : parse_xyz(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.detail(), e.byte_offset(), e.line());
  }
}

void write_cloud(const PointCloud& cloud, const std::string& path, CloudFormat format) {
  if (format == CloudFormat::kAuto)
    format = has_ply_extension(path) ? CloudFormat::kPlyBinary : CloudFormat::kXyz;
  switch (format) {
    case CloudFormat::kXyz: write_file(path, serialize_xyz(cloud)); break;
    case CloudFormat::kPlyAscii: write_file(path, serialize_ply(cloud, false)); break;
    default: write_file(path, serialize_ply(cloud, true)); break;
  }
}

}  // namespace gcreg
