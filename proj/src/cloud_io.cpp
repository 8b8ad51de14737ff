#include "rubblevoid/cloud_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "rubblevoid/error.hpp"

namespace rubblevoid {

static_assert(std::endian::native == std::endian::little, "binary PLY reader assumes a little-endian host");

namespace {

// Splits off the next line (without terminator) and advances `pos`.
std::string_view next_line(std::string_view text, std::size_t& pos) {
  if (pos >= text.size()) return {};
  std::size_t end = text.find('\n', pos);
  if (end == std::string_view::npos) end = text.size();
  std::string_view line = text.substr(pos, end - pos);
  pos = end + 1;
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool parse_double(std::string_view tok, double& out) {
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  if (ec == std::errc::result_out_of_range) {
    out = tok.front() == '-' ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
    return true;
  }
  return ec == std::errc{} && ptr == tok.data() + tok.size();
}

bool parse_u8(std::string_view tok, std::uint8_t& out) {
  unsigned v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size() || v > 255) return false;
  out = static_cast<std::uint8_t>(v);
  return true;
}

std::string trim_metadata(std::string_view s) {
  std::string out(s);
  std::replace(out.begin(), out.end(), '\n', ' ');
  std::replace(out.begin(), out.end(), '\r', ' ');
  return out;
}

void apply_metadata_comment(std::string_view body, PointCloud& cloud, std::vector<std::string>* warnings) {
  auto tokens = split_ws(body);
  if (tokens.size() >= 2 && tokens[0] == "epoch") {
    try {
      cloud.epoch = parse_epoch(tokens[1]);
    } catch (const Error&) {
      if (warnings) warnings->push_back("ignoring unparseable epoch comment '" + std::string(tokens[1]) + "'");
    }
  } else if (tokens.size() >= 1 && tokens[0] == "source") {
    auto start = body.find("source") + 6;
    while (start < body.size() && (body[start] == ' ' || body[start] == '\t')) ++start;
    cloud.source_label = std::string(body.substr(start));
  }
}

void check_finite(const Point3& p, std::uint64_t record) {
  if (!is_finite(p)) fail(Errc::NonFiniteValue, "non-finite coordinate in record " + std::to_string(record), record);
}

// ---------------------------------------------------------------- PLY

enum class PlyType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

std::optional<PlyType> ply_type(std::string_view name) {
  if (name == "char" || name == "int8") return PlyType::Int8;
  if (name == "uchar" || name == "uint8") return PlyType::UInt8;
  if (name == "short" || name == "int16") return PlyType::Int16;
  if (name == "ushort" || name == "uint16") return PlyType::UInt16;
  if (name == "int" || name == "int32") return PlyType::Int32;
  if (name == "uint" || name == "uint32") return PlyType::UInt32;
  if (name == "float" || name == "float32") return PlyType::Float32;
  if (name == "double" || name == "float64") return PlyType::Float64;
  return std::nullopt;
}

std::size_t ply_size(PlyType t) {
  switch (t) {
    case PlyType::Int8:
    case PlyType::UInt8: return 1;
    case PlyType::Int16:
    case PlyType::UInt16: return 2;
    case PlyType::Int32:
    case PlyType::UInt32:
    case PlyType::Float32: return 4;
    case PlyType::Float64: return 8;
  }
  return 0;
}

double read_binary(const char* p, PlyType t) {
  auto get = [p]<typename T>(T) {
    T v;
    std::memcpy(&v, p, sizeof v);
    return static_cast<double>(v);
  };
  switch (t) {
    case PlyType::Int8: return get(std::int8_t{});
    case PlyType::UInt8: return get(std::uint8_t{});
    case PlyType::Int16: return get(std::int16_t{});
    case PlyType::UInt16: return get(std::uint16_t{});
    case PlyType::Int32: return get(std::int32_t{});
    case PlyType::UInt32: return get(std::uint32_t{});
    case PlyType::Float32: return get(float{});
    case PlyType::Float64: return get(double{});
  }
  return 0.0;
}

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::Float32;
  bool is_list = false;
  PlyType count_type = PlyType::UInt8;
};

struct PlyElement {
  std::string name;
  std::uint64_t count = 0;
  std::vector<PlyProperty> properties;
};

struct PlyHeader {
  bool binary = false;
  std::vector<PlyElement> elements;
  std::size_t data_offset = 0;
};

PlyHeader read_ply_header(std::string_view bytes, PointCloud& cloud, std::vector<std::string>* warnings) {
  PlyHeader header;
  std::size_t pos = 0;
  if (next_line(bytes, pos) != "ply") fail(Errc::MalformedHeader, "missing 'ply' magic");
  bool have_format = false;
  bool ended = false;
  while (pos < bytes.size()) {
    std::string_view line = next_line(bytes, pos);
    auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok[0] == "end_header") {
      ended = true;
      break;
    }
    if (tok[0] == "comment") {
      auto body = line.substr(std::min(line.size(), line.find("comment") + 7));
      apply_metadata_comment(body, cloud, warnings);
    } else if (tok[0] == "obj_info") {
      continue;
    } else if (tok[0] == "format") {
      if (tok.size() < 3) fail(Errc::MalformedHeader, "incomplete format line");
      if (tok[1] == "ascii") {
        header.binary = false;
      } else if (tok[1] == "binary_little_endian") {
        header.binary = true;
      } else {
        fail(Errc::MalformedHeader, "unsupported PLY format '" + std::string(tok[1]) + "'");
      }
      have_format = true;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) fail(Errc::MalformedHeader, "bad element line '" + std::string(line) + "'");
      PlyElement el;
      el.name = std::string(tok[1]);
      auto [ptr, ec] = std::from_chars(tok[2].data(), tok[2].data() + tok[2].size(), el.count);
      if (ec != std::errc{} || ptr != tok[2].data() + tok[2].size())
        fail(Errc::MalformedHeader, "bad element count '" + std::string(tok[2]) + "'");
      header.elements.push_back(std::move(el));
    } else if (tok[0] == "property") {
      if (header.elements.empty()) fail(Errc::MalformedHeader, "property before any element");
      PlyProperty prop;
      if (tok.size() == 5 && tok[1] == "list") {
        auto ct = ply_type(tok[2]);
        auto it = ply_type(tok[3]);
        if (!ct || !it) fail(Errc::MalformedHeader, "unknown list type in '" + std::string(line) + "'");
        prop.is_list = true;
        prop.count_type = *ct;
        prop.type = *it;
        prop.name = std::string(tok[4]);
      } else if (tok.size() == 3) {
        auto t = ply_type(tok[1]);
        if (!t) fail(Errc::MalformedHeader, "unknown property type '" + std::string(tok[1]) + "'");
        prop.type = *t;
        prop.name = std::string(tok[2]);
      } else {
        fail(Errc::MalformedHeader, "bad property line '" + std::string(line) + "'");
      }
      header.elements.back().properties.push_back(std::move(prop));
    } else {
      fail(Errc::MalformedHeader, "unexpected header line '" + std::string(line) + "'");
    }
  }
  if (!have_format) fail(Errc::MalformedHeader, "missing format line");
  if (!ended) fail(Errc::MalformedHeader, "missing end_header");
  header.data_offset = pos;
  return header;
}

// Column roles inside the vertex element.
struct VertexLayout {
  int x = -1, y = -1, z = -1;
  int r = -1, g = -1, b = -1;
  bool colors() const { return r >= 0 && g >= 0 && b >= 0; }
};

VertexLayout vertex_layout(const PlyElement& el, std::vector<std::string>* warnings) {
  VertexLayout layout;
  for (int i = 0; i < static_cast<int>(el.properties.size()); ++i) {
    const auto& p = el.properties[static_cast<std::size_t>(i)];
    const bool is_float = !p.is_list && (p.type == PlyType::Float32 || p.type == PlyType::Float64);
    const bool is_uchar = !p.is_list && p.type == PlyType::UInt8;
    int* slot = nullptr;
    if (p.name == "x") slot = &layout.x;
    if (p.name == "y") slot = &layout.y;
    if (p.name == "z") slot = &layout.z;
    if (slot) {
      if (!is_float) fail(Errc::MalformedHeader, "coordinate property '" + p.name + "' must be float or double");
      *slot = i;
      continue;
    }
    if (p.name == "red" || p.name == "green" || p.name == "blue") {
      if (is_uchar) {
        (p.name == "red" ? layout.r : p.name == "green" ? layout.g : layout.b) = i;
        continue;
      }
    }
    if (warnings) warnings->push_back("skipping vertex property '" + p.name + "'");
  }
  if (layout.x < 0 || layout.y < 0 || layout.z < 0) fail(Errc::MalformedHeader, "vertex element lacks x/y/z");
  const int color_slots = (layout.r >= 0) + (layout.g >= 0) + (layout.b >= 0);
  if (color_slots != 0 && color_slots != 3 && warnings) {
    warnings->push_back("incomplete red/green/blue properties; colors dropped");
  }
  if (!layout.colors()) layout.r = layout.g = layout.b = -1;
  return layout;
}

void parse_ply_ascii(std::string_view bytes, const PlyHeader& header, PointCloud& cloud) {
  std::size_t pos = header.data_offset;
  for (const auto& el : header.elements) {
    const bool is_vertex = el.name == "vertex";
    VertexLayout layout;
    if (is_vertex) {
      layout = vertex_layout(el, nullptr);
      cloud.points.reserve(el.count);
      if (layout.colors()) cloud.colors.reserve(el.count);
    }
    for (std::uint64_t rec = 1; rec <= el.count; ++rec) {
      std::string_view line;
      do {
        if (pos >= bytes.size()) {
          fail(Errc::MalformedHeader,
               "element '" + el.name + "' declares " + std::to_string(el.count) + " records but data ends after " +
                   std::to_string(rec - 1),
               rec);
        }
        line = next_line(bytes, pos);
      } while (split_ws(line).empty());
      if (!is_vertex) continue;
      auto tok = split_ws(line);
      // Walk properties to map list entries onto token positions.
      std::vector<std::size_t> start(el.properties.size());
      std::size_t t = 0;
      for (std::size_t i = 0; i < el.properties.size(); ++i) {
        start[i] = t;
        if (t >= tok.size()) fail(Errc::MalformedHeader, "vertex record has too few values", rec);
        if (el.properties[i].is_list) {
          double n = 0;
          if (!parse_double(tok[t], n) || n < 0) fail(Errc::MalformedHeader, "bad list length", rec);
          t += 1 + static_cast<std::size_t>(n);
        } else {
          t += 1;
        }
      }
      if (t > tok.size()) fail(Errc::MalformedHeader, "vertex record has too few values", rec);
      Point3 p;
      if (!parse_double(tok[start[static_cast<std::size_t>(layout.x)]], p.x) ||
          !parse_double(tok[start[static_cast<std::size_t>(layout.y)]], p.y) ||
          !parse_double(tok[start[static_cast<std::size_t>(layout.z)]], p.z)) {
        fail(Errc::MalformedHeader, "unparseable coordinate", rec);
      }
      check_finite(p, rec);
      cloud.points.push_back(p);
      if (layout.colors()) {
        Rgb c;
        if (!parse_u8(tok[start[static_cast<std::size_t>(layout.r)]], c.r) ||
            !parse_u8(tok[start[static_cast<std::size_t>(layout.g)]], c.g) ||
            !parse_u8(tok[start[static_cast<std::size_t>(layout.b)]], c.b)) {
          fail(Errc::MalformedHeader, "unparseable color", rec);
        }
        cloud.colors.push_back(c);
      }
    }
    if (is_vertex) return;
  }
}

void parse_ply_binary(std::string_view bytes, const PlyHeader& header, PointCloud& cloud) {
  std::size_t pos = header.data_offset;
  const char* data = bytes.data();
  auto need = [&](std::size_t n, const std::string& el, std::uint64_t rec, std::uint64_t count) {
    if (pos + n > bytes.size()) {
      fail(Errc::MalformedHeader,
           "element '" + el + "' declares " + std::to_string(count) + " records but data ends in record " +
               std::to_string(rec),
           rec);
    }
  };
  for (const auto& el : header.elements) {
    const bool is_vertex = el.name == "vertex";
    VertexLayout layout;
    if (is_vertex) {
      layout = vertex_layout(el, nullptr);
      cloud.points.reserve(el.count);
      if (layout.colors()) cloud.colors.reserve(el.count);
    }
    std::vector<double> values(el.properties.size());
    for (std::uint64_t rec = 1; rec <= el.count; ++rec) {
      for (std::size_t i = 0; i < el.properties.size(); ++i) {
        const auto& prop = el.properties[i];
        if (prop.is_list) {
          need(ply_size(prop.count_type), el.name, rec, el.count);
          const double n = read_binary(data + pos, prop.count_type);
          pos += ply_size(prop.count_type);
          if (n < 0) fail(Errc::MalformedHeader, "negative list length", rec);
          const std::size_t skip = static_cast<std::size_t>(n) * ply_size(prop.type);
          need(skip, el.name, rec, el.count);
          pos += skip;
        } else {
          need(ply_size(prop.type), el.name, rec, el.count);
          values[i] = read_binary(data + pos, prop.type);
          pos += ply_size(prop.type);
        }
      }
      if (!is_vertex) continue;
      Point3 p{values[static_cast<std::size_t>(layout.x)], values[static_cast<std::size_t>(layout.y)],
               values[static_cast<std::size_t>(layout.z)]};
      check_finite(p, rec);
      cloud.points.push_back(p);
      if (layout.colors()) {
        cloud.colors.push_back(Rgb{static_cast<std::uint8_t>(values[static_cast<std::size_t>(layout.r)]),
                                   static_cast<std::uint8_t>(values[static_cast<std::size_t>(layout.g)]),
                                   static_cast<std::uint8_t>(values[static_cast<std::size_t>(layout.b)])});
      }
    }
    if (is_vertex) return;
  }
}

PointCloud parse_ply(std::string_view bytes, CloudFormat format, std::vector<std::string>* warnings) {
  PointCloud cloud;
  PlyHeader header = read_ply_header(bytes, cloud, warnings);
  if ((format == CloudFormat::PlyBinaryLe) != header.binary) {
    fail(Errc::MalformedHeader, std::string("header format does not match requested ") + std::string(to_string(format)));
  }
  auto vertex = std::find_if(header.elements.begin(), header.elements.end(),
                             [](const PlyElement& e) { return e.name == "vertex"; });
  if (vertex == header.elements.end()) fail(Errc::EmptyCloud, "no vertex element");
  vertex_layout(*vertex, warnings);
  for (const auto& el : header.elements) {
    if (el.name == "vertex") break;
    if (warnings) warnings->push_back("skipping element '" + el.name + "'");
  }
  if (vertex->count == 0) fail(Errc::EmptyCloud, "vertex element declares zero points");
  if (header.binary) {
    parse_ply_binary(bytes, header, cloud);
  } else {
    parse_ply_ascii(bytes, header, cloud);
  }
  return cloud;
}

// ---------------------------------------------------------------- XYZ

PointCloud parse_xyz(std::string_view bytes, std::vector<std::string>* warnings) {
  PointCloud cloud;
  std::size_t pos = 0;
  std::uint64_t rec = 0;
  int columns = 0;
  while (pos < bytes.size()) {
    std::string_view line = next_line(bytes, pos);
    auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok[0].front() == '#') {
      auto body = line.substr(line.find('#') + 1);
      apply_metadata_comment(body, cloud, warnings);
      continue;
    }
    ++rec;
    if (columns == 0) {
      if (tok.size() != 3 && tok.size() != 6) {
        fail(Errc::MalformedHeader, "XYZ record must have 3 or 6 columns", rec);
      }
      columns = static_cast<int>(tok.size());
    } else if (static_cast<int>(tok.size()) != columns) {
      fail(Errc::MalformedHeader, "XYZ record column count differs from first record", rec);
    }
    Point3 p;
    if (!parse_double(tok[0], p.x) || !parse_double(tok[1], p.y) || !parse_double(tok[2], p.z)) {
      fail(Errc::MalformedHeader, "unparseable coordinate", rec);
    }
    check_finite(p, rec);
    cloud.points.push_back(p);
    if (columns == 6) {
      Rgb c;
      if (!parse_u8(tok[3], c.r) || !parse_u8(tok[4], c.g) || !parse_u8(tok[5], c.b)) {
        fail(Errc::MalformedHeader, "unparseable color", rec);
      }
      cloud.colors.push_back(c);
    }
  }
  if (cloud.points.empty()) fail(Errc::EmptyCloud, "no points in XYZ text");
  return cloud;
}

void append_number(std::string& out, double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

void append_u8(std::string& out, std::uint8_t v) {
  char buf[4];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, static_cast<unsigned>(v));
  out.append(buf, ptr);
}

template <typename T>
void append_raw(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

}  // namespace

std::string_view to_string(CloudFormat f) {
  switch (f) {
    case CloudFormat::PlyAscii: return "ply_ascii";
    case CloudFormat::PlyBinaryLe: return "ply_binary_le";
    case CloudFormat::XyzText: return "xyz";
  }
  return "unknown";
}

CloudFormat cloud_format_from_string(std::string_view name) {
  if (name == "ply_ascii") return CloudFormat::PlyAscii;
  if (name == "ply_binary_le" || name == "ply_binary" || name == "ply") return CloudFormat::PlyBinaryLe;
  if (name == "xyz") return CloudFormat::XyzText;
  fail(Errc::InvalidArgument, "unknown cloud format '" + std::string(name) + "'");
}

CloudFormat detect_format(std::string_view bytes) {
  std::size_t pos = 0;
  if (next_line(bytes, pos) != "ply") return CloudFormat::XyzText;
  while (pos < bytes.size()) {
    auto tok = split_ws(next_line(bytes, pos));
    if (tok.empty()) continue;
    if (tok[0] == "format" && tok.size() >= 2) {
      return tok[1] == "ascii" ? CloudFormat::PlyAscii : CloudFormat::PlyBinaryLe;
    }
    if (tok[0] == "end_header") break;
  }
  fail(Errc::MalformedHeader, "PLY header without format line");
}

PointCloud parse_cloud(std::string_view bytes, CloudFormat format, std::vector<std::string>* warnings) {
  if (format == CloudFormat::XyzText) return parse_xyz(bytes, warnings);
  return parse_ply(bytes, format, warnings);
}

PointCloud parse_cloud(std::string_view bytes, std::vector<std::string>* warnings) {
  return parse_cloud(bytes, detect_format(bytes), warnings);
}

std::string serialize_cloud(const PointCloud& cloud, CloudFormat format) {
  std::string out;
  const bool colors = cloud.has_colors();
  const std::string epoch = format_epoch(cloud.epoch);
  const std::string label = trim_metadata(cloud.source_label);
  if (format == CloudFormat::XyzText) {
    out += "# epoch " + epoch + "\n";
    if (!label.empty()) out += "# source " + label + "\n";
    out.reserve(out.size() + cloud.size() * 40);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const auto& p = cloud.points[i];
      append_number(out, p.x);
      out += ' ';
      append_number(out, p.y);
      out += ' ';
      append_number(out, p.z);
      if (colors) {
        for (std::uint8_t c : {cloud.colors[i].r, cloud.colors[i].g, cloud.colors[i].b}) {
          out += ' ';
          append_u8(out, c);
        }
      }
      out += '\n';
    }
    return out;
  }

  const bool binary = format == CloudFormat::PlyBinaryLe;
  out += "ply\n";
  out += binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n";
  out += "comment epoch " + epoch + "\n";
  if (!label.empty()) out += "comment source " + label + "\n";
  out += "element vertex " + std::to_string(cloud.size()) + "\n";
  out += "property double x\nproperty double y\nproperty double z\n";
  if (colors) out += "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out += "end_header\n";
  out.reserve(out.size() + cloud.size() * (binary ? 27 : 40));
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    if (binary) {
      append_raw(out, p.x);
      append_raw(out, p.y);
      append_raw(out, p.z);
      if (colors) {
        append_raw(out, cloud.colors[i].r);
        append_raw(out, cloud.colors[i].g);
        append_raw(out, cloud.colors[i].b);
      }
    } else {
      append_number(out, p.x);
      out += ' ';
      append_number(out, p.y);
      out += ' ';
      append_number(out, p.z);
      if (colors) {
        for (std::uint8_t c : {cloud.colors[i].r, cloud.colors[i].g, cloud.colors[i].b}) {
          out += ' ';
          append_u8(out, c);
        }
      }
      out += '\n';
    }
  }
  return out;
}

PointCloud load_cloud(const std::string& path, std::optional<CloudFormat> format, std::vector<std::string>* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::Io, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string bytes = buf.str();
  try {
    return format ? parse_cloud(bytes, *format, warnings) : parse_cloud(bytes, warnings);
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what(), e.record());
  }
}

void save_cloud(const std::string& path, const PointCloud& cloud, CloudFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::Io, "cannot write '" + path + "'");
  const std::string bytes = serialize_cloud(cloud, format);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(Errc::Io, "short write to '" + path + "'");
}

Aabb bounding_box(std::span<const Point3> points) {
  if (points.empty()) fail(Errc::EmptyCloud, "bounding box of empty cloud");
  Aabb box{points.front(), points.front()};
  for (const auto& p : points) {
    box.min.x = std::min(box.min.x, p.x);
    box.min.y = std::min(box.min.y, p.y);
    box.min.z = std::min(box.min.z, p.z);
    box.max.x = std::max(box.max.x, p.x);
    box.max.y = std::max(box.max.y, p.y);
    box.max.z = std::max(box.max.z, p.z);
  }
  return box;
}

Aabb bounding_box(const PointCloud& cloud) { return bounding_box(std::span<const Point3>(cloud.points)); }

CropResult crop(const PointCloud& cloud, const Aabb& region) {
  if (!region.valid()) fail(Errc::InvalidArgument, "crop region has min > max");
  CropResult result;
  result.cloud.epoch = cloud.epoch;
  result.cloud.source_label = cloud.source_label;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!region.contains(cloud.points[i])) continue;
    result.cloud.points.push_back(cloud.points[i]);
    if (cloud.has_colors()) result.cloud.colors.push_back(cloud.colors[i]);
  }
  result.empty = result.cloud.empty();
  return result;
}

}  // namespace rubblevoid
