#include "sparsefuse/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <vector>

#include "sparsefuse/error.hpp"

namespace sparsefuse::io {
namespace {

constexpr std::size_t kMaxPixels = std::size_t{1} << 28;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path, "cannot open file");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void spill(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) throw Error("failed writing " + path);
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

// Header scanner shared by the Netpbm family and PFM.
class HeaderReader {
 public:
  HeaderReader(const std::string& path, const std::string& bytes, bool comments)
      : path_(path), bytes_(bytes), comments_(comments) {}

  std::string token(const char* what) {
    skip();
    const auto start = pos_;
    while (pos_ < bytes_.size() && !is_space(bytes_[pos_]) && !(comments_ && bytes_[pos_] == '#')) ++pos_;
    if (start == pos_) throw FormatError(path_, std::string("missing ") + what + " in header");
    return bytes_.substr(start, pos_ - start);
  }

  long integer(const char* what, long lo, long hi) {
    const auto t = token(what);
    long v = 0;
    const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || end != t.data() + t.size()) {
      throw FormatError(path_, std::string("bad ") + what + " '" + t + "'");
    }
    if (v < lo || v > hi) throw FormatError(path_, std::string(what) + " " + t + " out of range");
    return v;
  }

  double real(const char* what) {
    const auto t = token(what);
    double v = 0;
    const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || end != t.data() + t.size() || !std::isfinite(v)) {
      throw FormatError(path_, std::string("bad ") + what + " '" + t + "'");
    }
    return v;
  }

  // The single whitespace byte separating header and payload.
  std::size_t payload_offset() {
    if (pos_ >= bytes_.size() || !is_space(bytes_[pos_])) {
      throw FormatError(path_, "header not terminated by whitespace");
    }
    return pos_ + 1;
  }

 private:
  void skip() {
    while (pos_ < bytes_.size()) {
      if (is_space(bytes_[pos_])) {
        ++pos_;
      } else if (comments_ && bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::string& path_;
  const std::string& bytes_;
  bool comments_;
  std::size_t pos_ = 0;
};

void check_payload(const std::string& path, std::size_t available, std::size_t expected) {
  if (available < expected) {
    throw FormatError(path, "truncated payload: expected " + std::to_string(expected) + " bytes, found " +
                                std::to_string(available));
  }
  if (available > expected) {
    throw FormatError(path, std::to_string(available - expected) + " trailing bytes after payload");
  }
}

void check_dims(const std::string& path, long w, long h) {
  if (static_cast<std::size_t>(w) * static_cast<std::size_t>(h) > kMaxPixels) {
    throw FormatError(path, "image dimensions too large");
  }
}

std::uint32_t load_u32(const char* p, bool little) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    const auto byte = static_cast<std::uint32_t>(static_cast<unsigned char>(p[little ? i : 3 - i]));
    v |= byte << (8 * i);
  }
  return v;
}

void store_u32_le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

struct PfmData {
  int width, height, channels;
  std::vector<float> values;  // top-to-bottom rows, interleaved channels
};

PfmData parse_pfm(const std::string& path) {
  const std::string bytes = slurp(path);
  HeaderReader hdr(path, bytes, false);
  const auto magic = hdr.token("magic");
  int channels;
  if (magic == "Pf") {
    channels = 1;
  } else if (magic == "PF") {
    channels = 3;
  } else {
    throw FormatError(path, "not a PFM file (magic '" + magic.substr(0, 8) + "')");
  }
  const long w = hdr.integer("width", 1, 1 << 20);
  const long h = hdr.integer("height", 1, 1 << 20);
  check_dims(path, w, h);
  const double scale = hdr.real("scale");
  if (scale == 0) throw FormatError(path, "PFM scale must be nonzero");
  const bool little = scale < 0;
  const auto offset = hdr.payload_offset();
  const std::size_t count = static_cast<std::size_t>(w) * h * channels;
  check_payload(path, bytes.size() - offset, count * 4);

  PfmData d{static_cast<int>(w), static_cast<int>(h), channels, std::vector<float>(count)};
  const char* src = bytes.data() + offset;
  const std::size_t row = static_cast<std::size_t>(w) * channels;
  for (long y = 0; y < h; ++y) {
    const std::size_t dst_row = static_cast<std::size_t>(h - 1 - y) * row;  // bottom-to-top on disk
    for (std::size_t i = 0; i < row; ++i) {
      d.values[dst_row + i] = std::bit_cast<float>(load_u32(src + (y * row + i) * 4, little));
    }
  }
  return d;
}

std::string pfm_bytes(int width, int height, int channels, const std::vector<float>& values) {
  std::ostringstream hdr;
  hdr << (channels == 1 ? "Pf" : "PF") << '\n' << width << ' ' << height << '\n' << "-1.0" << '\n';
  std::string out = hdr.str();
  const std::size_t row = static_cast<std::size_t>(width) * channels;
  out.reserve(out.size() + values.size() * 4);
  for (int y = height - 1; y >= 0; --y) {
    for (std::size_t i = 0; i < row; ++i) store_u32_le(out, std::bit_cast<std::uint32_t>(values[y * row + i]));
  }
  return out;
}

struct NetpbmData {
  int width, height, channels;
  long maxval;
  std::vector<std::uint16_t> values;
};

NetpbmData parse_netpbm(const std::string& path, const char* want) {
  const std::string bytes = slurp(path);
  HeaderReader hdr(path, bytes, true);
  const auto magic = hdr.token("magic");
  if (magic != want) throw FormatError(path, std::string("expected ") + want + " but found magic '" + magic.substr(0, 8) + "'");
  const int channels = magic == "P6" ? 3 : 1;
  const long w = hdr.integer("width", 1, 1 << 20);
  const long h = hdr.integer("height", 1, 1 << 20);
  check_dims(path, w, h);
  const long maxval = hdr.integer("maxval", 1, 65535);
  const auto offset = hdr.payload_offset();
  const std::size_t count = static_cast<std::size_t>(w) * h * channels;
  const std::size_t bytes_per = maxval > 255 ? 2 : 1;
  check_payload(path, bytes.size() - offset, count * bytes_per);

  NetpbmData d{static_cast<int>(w), static_cast<int>(h), channels, maxval, std::vector<std::uint16_t>(count)};
  const auto* src = reinterpret_cast<const unsigned char*>(bytes.data() + offset);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint16_t v = bytes_per == 2 ? static_cast<std::uint16_t>((src[2 * i] << 8) | src[2 * i + 1]) : src[i];
    if (v > maxval) throw FormatError(path, "sample " + std::to_string(v) + " exceeds maxval");
    d.values[i] = v;
  }
  return d;
}

}  // namespace

DepthRaster read_pfm(const std::string& path) {
  auto d = parse_pfm(path);
  if (d.channels != 1) throw FormatError(path, "depth PFM must have one channel");
  DepthRaster r;
  r.width = d.width;
  r.height = d.height;
  r.data = std::move(d.values);
  return r;
}

void write_pfm(const std::string& path, const DepthRaster& raster) {
  spill(path, pfm_bytes(raster.width, raster.height, 1, raster.data));
}

void write_pfm_rgb(const std::string& path, const std::array<Raster<float>, 3>& ch) {
  for (const auto& c : ch) {
    if (!c.same_shape(ch[0].width, ch[0].height)) throw InvalidInput("PFM channels differ in shape");
  }
  std::vector<float> values;
  values.reserve(ch[0].size() * 3);
  for (std::size_t i = 0; i < ch[0].size(); ++i) {
    for (const auto& c : ch) values.push_back(c.data[i]);
  }
  spill(path, pfm_bytes(ch[0].width, ch[0].height, 3, values));
}

std::array<Raster<float>, 3> read_pfm_rgb(const std::string& path) {
  const auto d = parse_pfm(path);
  if (d.channels != 3) throw FormatError(path, "expected a three-channel PFM");
  std::array<Raster<float>, 3> out;
  for (auto& c : out) c = Raster<float>(d.width, d.height);
  for (std::size_t i = 0; i < out[0].size(); ++i) {
    for (int c = 0; c < 3; ++c) out[c].data[i] = d.values[3 * i + c];
  }
  return out;
}

Raster<std::uint16_t> read_pgm(const std::string& path) {
  auto d = parse_netpbm(path, "P5");
  Raster<std::uint16_t> r;
  r.width = d.width;
  r.height = d.height;
  r.data = std::move(d.values);
  return r;
}

void write_pgm16(const std::string& path, const Raster<std::uint16_t>& raster) {
  std::string out = "P5\n" + std::to_string(raster.width) + " " + std::to_string(raster.height) + "\n65535\n";
  for (auto v : raster.data) {
    out.push_back(static_cast<char>(v >> 8));
    out.push_back(static_cast<char>(v & 0xff));
  }
  spill(path, out);
}

ColorRaster read_ppm(const std::string& path) {
  const auto d = parse_netpbm(path, "P6");
  ColorRaster r(d.width, d.height);
  const double scale = 1.0 / static_cast<double>(d.maxval);
  for (std::size_t i = 0; i < r.size(); ++i) {
    r.data[i] = Eigen::Vector3f(static_cast<float>(d.values[3 * i] * scale), static_cast<float>(d.values[3 * i + 1] * scale),
                                static_cast<float>(d.values[3 * i + 2] * scale));
  }
  return r;
}

void write_ppm(const std::string& path, const ColorRaster& raster) {
  std::string out = "P6\n" + std::to_string(raster.width) + " " + std::to_string(raster.height) + "\n255\n";
  for (const auto& c : raster.data) {
    for (int k = 0; k < 3; ++k) {
      out.push_back(static_cast<char>(std::lround(std::clamp(static_cast<double>(c[k]), 0.0, 1.0) * 255.0)));
    }
  }
  spill(path, out);
}

DepthRaster read_depth(const std::string& path, std::optional<double> depth_scale) {
  std::string magic;
  {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(path, "cannot open file");
    char buf[2] = {0, 0};
    in.read(buf, 2);
    magic.assign(buf, static_cast<std::size_t>(in.gcount()));
  }
  if (magic == "Pf" || magic == "PF") return read_pfm(path);
  if (magic == "P5") {
    if (!depth_scale) throw FormatError(path, "integer depth requires a depth scale (units per meter)");
    if (!(*depth_scale > 0) || !std::isfinite(*depth_scale)) throw FormatError(path, "depth scale must be positive");
    const auto pgm = read_pgm(path);
    DepthRaster r(pgm.width, pgm.height);
    for (std::size_t i = 0; i < r.size(); ++i) r.data[i] = static_cast<float>(pgm.data[i] / *depth_scale);
    return r;
  }
  throw FormatError(path, "unrecognized depth format (expected PFM or 16-bit PGM)");
}

LabelRaster read_labels(const std::string& path) { return read_pgm(path); }

View read_rasters(const RasterPaths& paths, const Intrinsics& intrinsics, std::optional<double> depth_scale) {
  View v;
  v.intrinsics = intrinsics;
  v.color = read_ppm(paths.color);
  v.depth = read_depth(paths.depth, depth_scale);
  v.labels = read_labels(paths.labels);
  v.validate();
  return v;
}

// ---------------------------------------------------------------------------
// PLY

namespace {

enum class PlyType { kInt8, kUint8, kInt16, kUint16, kInt32, kUint32, kFloat32, kFloat64 };

std::optional<PlyType> ply_type(const std::string& name) {
  if (name == "char" || name == "int8") return PlyType::kInt8;
  if (name == "uchar" || name == "uint8") return PlyType::kUint8;
  if (name == "short" || name == "int16") return PlyType::kInt16;
  if (name == "ushort" || name == "uint16") return PlyType::kUint16;
  if (name == "int" || name == "int32") return PlyType::kInt32;
  if (name == "uint" || name == "uint32") return PlyType::kUint32;
  if (name == "float" || name == "float32") return PlyType::kFloat32;
  if (name == "double" || name == "float64") return PlyType::kFloat64;
  return std::nullopt;
}

std::size_t ply_size(PlyType t) {
  switch (t) {
    case PlyType::kInt8:
    case PlyType::kUint8:
      return 1;
    case PlyType::kInt16:
    case PlyType::kUint16:
      return 2;
    case PlyType::kInt32:
    case PlyType::kUint32:
    case PlyType::kFloat32:
      return 4;
    case PlyType::kFloat64:
      return 8;
  }
  return 0;
}

double ply_load(PlyType t, const unsigned char* p) {
  std::uint64_t raw = 0;
  const auto n = ply_size(t);
  for (std::size_t i = 0; i < n; ++i) raw |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  switch (t) {
    case PlyType::kInt8:
      return static_cast<std::int8_t>(raw);
    case PlyType::kUint8:
      return static_cast<std::uint8_t>(raw);
    case PlyType::kInt16:
      return static_cast<std::int16_t>(raw);
    case PlyType::kUint16:
      return static_cast<std::uint16_t>(raw);
    case PlyType::kInt32:
      return static_cast<std::int32_t>(raw);
    case PlyType::kUint32:
      return static_cast<std::uint32_t>(raw);
    case PlyType::kFloat32:
      return std::bit_cast<float>(static_cast<std::uint32_t>(raw));
    case PlyType::kFloat64:
      return std::bit_cast<double>(raw);
  }
  return 0;
}

bool ply_is_integer(PlyType t) { return t != PlyType::kFloat32 && t != PlyType::kFloat64; }

struct PlyProperty {
  std::string name;
  PlyType type;  // item type for lists
  std::optional<PlyType> list_count;
};

struct PlyElement {
  std::string name;
  std::size_t count;
  std::vector<PlyProperty> props;
};

std::vector<std::string> split_words(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> out;
  for (std::string w; is >> w;) out.push_back(w);
  return out;
}

}  // namespace

std::string encode_cloud(const LabeledCloud& cloud) {
  std::ostringstream hdr;
  hdr << "ply\n"
      << "format binary_little_endian 1.0\n"
      << "element vertex " << cloud.size() << "\n"
      << "property float x\n"
      << "property float y\n"
      << "property float z\n"
      << "property uchar red\n"
      << "property uchar green\n"
      << "property uchar blue\n"
      << "property ushort label\n"
      << "end_header\n";
  std::string out = hdr.str();
  out.reserve(out.size() + cloud.size() * 17);
  for (const auto& p : cloud) {
    for (int k = 0; k < 3; ++k) store_u32_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(p.position[k])));
    for (int k = 0; k < 3; ++k) {
      out.push_back(static_cast<char>(std::lround(std::clamp(p.color[k], 0.0, 1.0) * 255.0)));
    }
    out.push_back(static_cast<char>(p.label & 0xff));
    out.push_back(static_cast<char>(p.label >> 8));
  }
  return out;
}

void write_cloud(const LabeledCloud& cloud, const std::string& path) {
  for (const auto& p : cloud) {
    if (!p.position.allFinite()) throw InvalidInput("cloud contains a non-finite position");
  }
  spill(path, encode_cloud(cloud));
}

LabeledCloud read_cloud(const std::string& path) {
  const std::string bytes = slurp(path);
  std::size_t pos = 0;
  auto next_line = [&]() -> std::optional<std::string> {
    if (pos >= bytes.size()) return std::nullopt;
    const auto nl = bytes.find('\n', pos);
    if (nl == std::string::npos) return std::nullopt;  // header lines must end in '\n'
    std::string line = bytes.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pos = nl + 1;
    return line;
  };

  if (next_line() != std::optional<std::string>("ply")) throw FormatError(path, "missing 'ply' magic");
  std::string format;
  std::vector<PlyElement> elements;
  bool ended = false;
  while (auto line = next_line()) {
    const auto w = split_words(*line);
    if (w.empty()) continue;
    if (w[0] == "comment" || w[0] == "obj_info") continue;
    if (w[0] == "end_header") {
      ended = true;
      break;
    }
    if (w[0] == "format") {
      if (w.size() != 3 || w[2] != "1.0") throw FormatError(path, "bad format line '" + *line + "'");
      format = w[1];
    } else if (w[0] == "element") {
      if (w.size() != 3) throw FormatError(path, "bad element line '" + *line + "'");
      std::size_t count = 0;
      const auto [end, ec] = std::from_chars(w[2].data(), w[2].data() + w[2].size(), count);
      if (ec != std::errc() || end != w[2].data() + w[2].size()) throw FormatError(path, "bad element count '" + w[2] + "'");
      elements.push_back({w[1], count, {}});
    } else if (w[0] == "property") {
      if (elements.empty()) throw FormatError(path, "property before any element");
      if (w.size() == 5 && w[1] == "list") {
        const auto ct = ply_type(w[2]), it = ply_type(w[3]);
        if (!ct || !it || !ply_is_integer(*ct)) throw FormatError(path, "bad list property '" + *line + "'");
        elements.back().props.push_back({w[4], *it, ct});
        continue;
      }
      if (w.size() != 3) throw FormatError(path, "bad property line '" + *line + "'");
      const auto t = ply_type(w[1]);
      if (!t) throw FormatError(path, "unknown property type '" + w[1] + "'");
      elements.back().props.push_back({w[2], *t, std::nullopt});
    } else {
      throw FormatError(path, "unexpected header line '" + *line + "'");
    }
  }
  if (!ended) throw FormatError(path, "header has no end_header");
  if (format != "binary_little_endian" && format != "ascii") {
    throw FormatError(path, "unsupported PLY format '" + format + "'");
  }
  const auto vertex_it = std::find_if(elements.begin(), elements.end(), [](const auto& e) { return e.name == "vertex"; });
  if (vertex_it == elements.end()) throw FormatError(path, "no vertex element");
  for (const auto& p : vertex_it->props) {
    if (p.list_count) throw FormatError(path, "list property '" + p.name + "' on vertex element is not supported");
  }

  struct Slots {
    int x = -1, y = -1, z = -1, r = -1, g = -1, b = -1, label = -1;
  } slot;
  for (std::size_t i = 0; i < vertex_it->props.size(); ++i) {
    const auto& n = vertex_it->props[i].name;
    const int idx = static_cast<int>(i);
    if (n == "x") slot.x = idx;
    else if (n == "y") slot.y = idx;
    else if (n == "z") slot.z = idx;
    else if (n == "red") slot.r = idx;
    else if (n == "green") slot.g = idx;
    else if (n == "blue") slot.b = idx;
    else if (n == "label") slot.label = idx;
  }
  if (slot.x < 0 || slot.y < 0 || slot.z < 0) throw FormatError(path, "vertex element lacks x, y or z");
  if (slot.label >= 0 && !ply_is_integer(vertex_it->props[slot.label].type)) {
    throw FormatError(path, "label property must be an integer type");
  }

  // Bound the allocation by what the payload could possibly hold.
  std::size_t min_record = 0;
  for (const auto& p : vertex_it->props) min_record += format == "ascii" ? 2 : ply_size(p.type);
  if (min_record > 0 && vertex_it->count > (bytes.size() - pos) / min_record + 1) {
    throw FormatError(path, "truncated payload: header declares " + std::to_string(vertex_it->count) + " vertices");
  }

  auto color_of = [&](int s, const std::vector<double>& v) {
    if (s < 0) return 0.0;
    const auto t = vertex_it->props[s].type;
    if (t == PlyType::kUint8) return v[s] / 255.0;
    if (t == PlyType::kUint16) return v[s] / 65535.0;
    return v[s];
  };
  auto to_point = [&](const std::vector<double>& v) {
    LabeledPoint p;
    p.position = {v[slot.x], v[slot.y], v[slot.z]};
    if (!p.position.allFinite()) throw FormatError(path, "non-finite vertex position");
    p.color = {color_of(slot.r, v), color_of(slot.g, v), color_of(slot.b, v)};
    if (slot.label >= 0) {
      const double l = v[slot.label];
      if (l < 0 || l > 65535) throw FormatError(path, "label out of range");
      p.label = static_cast<Label>(l);
    }
    return p;
  };

  LabeledCloud cloud;
  cloud.reserve(vertex_it->count);
  if (format == "binary_little_endian") {
    const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
    for (const auto& e : elements) {
      const bool has_list = std::any_of(e.props.begin(), e.props.end(), [](const auto& p) { return p.list_count.has_value(); });
      if (has_list) {
        // Variable-length records: walk them to find where the element ends.
        for (std::size_t i = 0; i < e.count; ++i) {
          for (const auto& p : e.props) {
            std::size_t n = 1;
            if (p.list_count) {
              const auto cs = ply_size(*p.list_count);
              if (bytes.size() - pos < cs) throw FormatError(path, "truncated payload in element '" + e.name + "'");
              const double c = ply_load(*p.list_count, data + pos);
              if (c < 0) throw FormatError(path, "negative list length in element '" + e.name + "'");
              n = static_cast<std::size_t>(c);
              pos += cs;
            }
            if (n > (bytes.size() - pos) / ply_size(p.type)) {
              throw FormatError(path, "truncated payload in element '" + e.name + "'");
            }
            pos += n * ply_size(p.type);
          }
        }
        continue;
      }
      std::size_t record = 0;
      for (const auto& p : e.props) record += ply_size(p.type);
      if (record != 0 && e.count > (bytes.size() - pos) / record) {
        throw FormatError(path, "truncated payload in element '" + e.name + "'");
      }
      if (&e != &*vertex_it) {
        pos += record * e.count;
        continue;
      }
      std::vector<double> v(e.props.size());
      for (std::size_t i = 0; i < e.count; ++i) {
        for (std::size_t k = 0; k < e.props.size(); ++k) {
          v[k] = ply_load(e.props[k].type, data + pos);
          pos += ply_size(e.props[k].type);
        }
        cloud.push_back(to_point(v));
      }
    }
    if (pos != bytes.size()) throw FormatError(path, std::to_string(bytes.size() - pos) + " trailing bytes after payload");
  } else {
    std::istringstream body(bytes.substr(pos));
    body.imbue(std::locale::classic());
    auto number = [&](const PlyElement& e) {
      std::string tok;
      if (!(body >> tok)) throw FormatError(path, "truncated ascii payload in element '" + e.name + "'");
      double x = 0;
      const auto [end, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), x);
      if (ec != std::errc() || end != tok.data() + tok.size()) throw FormatError(path, "bad ascii value '" + tok + "'");
      return x;
    };
    for (const auto& e : elements) {
      std::vector<double> v(e.props.size());
      for (std::size_t i = 0; i < e.count; ++i) {
        for (std::size_t k = 0; k < e.props.size(); ++k) {
          v[k] = number(e);
          if (!e.props[k].list_count) continue;
          if (v[k] < 0 || v[k] != std::floor(v[k])) throw FormatError(path, "bad list length in element '" + e.name + "'");
          for (double n = v[k]; n > 0; --n) number(e);
        }
        if (&e == &*vertex_it) cloud.push_back(to_point(v));
      }
    }
    std::string extra;
    if (body >> extra) throw FormatError(path, "trailing data after ascii payload");
  }
  return cloud;
}

}  // namespace sparsefuse::io
