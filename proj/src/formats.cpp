#include "vgr/priors.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <regex>
#include <sstream>

namespace vgr {

namespace fs = std::filesystem;

namespace {

std::string read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

/// Writes through a temporary file and renames it into place.
void write_atomic(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + tmp.string());
    out.write(bytes.data(), std::streamsize(bytes.size()));
    if (!out) throw FormatError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xffu));
}
void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

class Reader {
 public:
  Reader(const std::string& bytes, const fs::path& path) : bytes_(bytes), path_(path) {}

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(std::uint8_t(bytes_[pos_ + std::size_t(i)])) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
  std::string tag(std::size_t n, const char* what) {
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw FormatError(path_.string() + ": truncated " + what + " at byte offset " + std::to_string(pos_) +
                        " (need " + std::to_string(n) + " bytes, " + std::to_string(bytes_.size() - pos_) +
                        " left)");
    }
  }
  std::size_t pos() const { return pos_; }
  void expect_end() const {
    if (pos_ != bytes_.size()) {
      throw FormatError(path_.string() + ": " + std::to_string(bytes_.size() - pos_) +
                        " trailing bytes at byte offset " + std::to_string(pos_));
    }
  }
  [[noreturn]] void fail(const std::string& msg, std::size_t offset) const {
    throw FormatError(path_.string() + ": " + msg + " at byte offset " + std::to_string(offset));
  }

 private:
  const std::string& bytes_;
  fs::path path_;
  std::size_t pos_ = 0;
};

void check_dims(const Reader& r, std::int64_t w, std::int64_t h, std::size_t offset) {
  if (w <= 0 || h <= 0 || w > (1 << 16) || h > (1 << 16)) {
    r.fail("invalid dimensions " + std::to_string(w) + "x" + std::to_string(h), offset);
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// .flo

ImagePlanef read_flo(const fs::path& path) {
  const std::string bytes = read_all(path);
  Reader r(bytes, path);
  if (r.tag(4, "magic") != "PIEH") r.fail("bad .flo magic", 0);
  const auto w = std::int32_t(r.u32("width"));
  const auto h = std::int32_t(r.u32("height"));
  check_dims(r, w, h, 4);
  ImagePlanef flow(w, h, 2);
  r.need(std::size_t(w) * std::size_t(h) * 8, "flow payload");
  for (Index p = 0; p < flow.pixel_count(); ++p) {
    flow.values(p, 0) = r.f32("u");
    flow.values(p, 1) = r.f32("v");
  }
  r.expect_end();
  return flow;
}

void write_flo(const fs::path& path, const ImagePlanef& flow) {
  if (flow.channels() != 2) throw ContractError("write_flo: flow planes have 2 channels");
  std::string out = "PIEH";
  put_u32(out, std::uint32_t(flow.width));
  put_u32(out, std::uint32_t(flow.height));
  out.reserve(out.size() + std::size_t(flow.pixel_count()) * 8);
  for (Index p = 0; p < flow.pixel_count(); ++p) {
    put_f32(out, flow.values(p, 0));
    put_f32(out, flow.values(p, 1));
  }
  write_atomic(path, out);
}

// ---------------------------------------------------------------------------
// PFM

ImagePlanef read_pfm(const fs::path& path) {
  const std::string bytes = read_all(path);
  Reader r(bytes, path);
  std::size_t pos = 0;
  auto token = [&](const char* what) {
    while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    const std::size_t begin = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (begin == pos) r.fail(std::string("missing PFM ") + what, begin);
    return std::pair{bytes.substr(begin, pos - begin), begin};
  };
  const auto [magic, magic_at] = token("magic");
  if (magic == "PF") r.fail("colour PFM (PF) is not supported", magic_at);
  if (magic != "Pf") r.fail("bad PFM magic", magic_at);
  const auto [ws, w_at] = token("width");
  const auto [hs, h_at] = token("height");
  const auto [ss, s_at] = token("scale");
  long w = 0, h = 0;
  double scale = 0;
  try {
    w = std::stol(ws);
    h = std::stol(hs);
    scale = std::stod(ss);
  } catch (const std::exception&) {
    r.fail("malformed PFM header", w_at);
  }
  check_dims(r, w, h, w_at);
  if (scale == 0) r.fail("PFM scale must be non-zero", s_at);
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    r.fail("missing PFM header terminator", pos);
  }
  ++pos;
  const bool little = scale < 0;
  const std::size_t need = std::size_t(w) * std::size_t(h) * 4;
  if (bytes.size() - pos < need) {
    r.fail("truncated PFM payload (need " + std::to_string(need) + " bytes, " +
               std::to_string(bytes.size() - pos) + " left)",
           pos);
  }
  if (bytes.size() - pos > need) r.fail("trailing bytes after PFM payload", pos + need);
  ImagePlanef plane(int(w), int(h), 1);
  for (long fy = 0; fy < h; ++fy) {
    const long y = h - 1 - fy;
    for (long x = 0; x < w; ++x) {
      std::uint32_t v = 0;
      for (int i = 0; i < 4; ++i) {
        const auto b = std::uint32_t(std::uint8_t(bytes[pos + std::size_t(i)]));
        v |= little ? b << (8 * i) : b << (8 * (3 - i));
      }
      pos += 4;
      plane(int(x), int(y)) = std::bit_cast<float>(v);
    }
  }
  return plane;
}

void write_pfm(const fs::path& path, const ImagePlanef& plane) {
  if (plane.channels() != 1) throw ContractError("write_pfm: single-channel planes only");
  std::string out = "Pf\n" + std::to_string(plane.width) + " " + std::to_string(plane.height) + "\n-1.0\n";
  out.reserve(out.size() + std::size_t(plane.pixel_count()) * 4);
  for (int y = plane.height - 1; y >= 0; --y) {
    for (int x = 0; x < plane.width; ++x) put_f32(out, plane(x, y));
  }
  write_atomic(path, out);
}

// ---------------------------------------------------------------------------
// VGRF feature maps

ImagePlanef read_feature(const fs::path& path) {
  const std::string bytes = read_all(path);
  Reader r(bytes, path);
  if (r.tag(4, "magic") != "VGRF") r.fail("bad feature-map magic", 0);
  const std::uint32_t version = r.u32("version");
  if (version != kFeatureVersion) {
    r.fail("unsupported feature-map version " + std::to_string(version), 4);
  }
  const std::uint32_t w = r.u32("width"), h = r.u32("height"), d = r.u32("channels");
  check_dims(r, w, h, 8);
  if (d == 0 || d > std::uint32_t(kMaxFeatureDim)) {
    throw FormatError(path.string() + ": feature dimensionality " + std::to_string(d) +
                      " outside 1..64 (reduce features upstream)");
  }
  r.need(std::size_t(w) * h * d * 4, "feature payload");
  ImagePlanef plane(static_cast<int>(w), static_cast<int>(h), static_cast<int>(d));
  for (Index p = 0; p < plane.pixel_count(); ++p) {
    for (Index c = 0; c < Index(d); ++c) plane.values(p, c) = r.f32("feature");
  }
  r.expect_end();
  return plane;
}

void write_feature(const fs::path& path, const ImagePlanef& plane) {
  if (plane.channels() < 1 || plane.channels() > kMaxFeatureDim) {
    throw ContractError("write_feature: feature dimensionality must be 1..64");
  }
  std::string out = "VGRF";
  put_u32(out, kFeatureVersion);
  put_u32(out, std::uint32_t(plane.width));
  put_u32(out, std::uint32_t(plane.height));
  put_u32(out, std::uint32_t(plane.channels()));
  for (Index p = 0; p < plane.pixel_count(); ++p) {
    for (Index c = 0; c < plane.channels(); ++c) put_f32(out, plane.values(p, c));
  }
  write_atomic(path, out);
}

// ---------------------------------------------------------------------------
// Directory conventions

std::vector<fs::path> numbered_files(const fs::path& dir, const std::string& extension) {
  if (!fs::is_directory(dir)) throw FormatError("not a directory: " + dir.string());
  static const std::regex digits(R"((\d+))");
  std::vector<std::pair<long long, fs::path>> found;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != extension) continue;
    const std::string stem = entry.path().stem().string();
    std::smatch m;
    if (!std::regex_search(stem, m, digits)) continue;
    found.emplace_back(std::stoll(m.str(1)), entry.path());
  }
  std::sort(found.begin(), found.end());
  std::vector<fs::path> out;
  for (auto& [_, p] : found) out.push_back(p);
  return out;
}

std::vector<ImagePlanef> load_frames(const fs::path& dir) {
  const auto files = numbered_files(dir, ".png");
  if (files.size() < 2) throw FormatError(dir.string() + ": need at least 2 numbered PNG frames");
  std::vector<ImagePlanef> frames;
  for (const auto& f : files) {
    ImagePlanef img = read_png(f);
    if (img.channels() == 1) {
      ImagePlanef rgb(img.width, img.height, 3);
      for (int c = 0; c < 3; ++c) rgb.values.col(c) = img.values.col(0);
      img = std::move(rgb);
    }
    if (!frames.empty() && (img.width != frames[0].width || img.height != frames[0].height)) {
      throw FormatError(f.string() + ": dimensions " + std::to_string(img.width) + "x" +
                        std::to_string(img.height) + " differ from " + std::to_string(frames[0].width) +
                        "x" + std::to_string(frames[0].height));
    }
    frames.push_back(std::move(img));
  }
  return frames;
}

void save_frames(const fs::path& dir, const std::vector<ImagePlanef>& frames) {
  fs::create_directories(dir);
  char name[32];
  for (std::size_t i = 0; i < frames.size(); ++i) {
    std::snprintf(name, sizeof name, "%04zu.png", i);
    write_png(dir / name, frames[i]);
  }
}

std::string flow_file_name(int frame1, int frame2) {
  char name[64];
  std::snprintf(name, sizeof name, "flow_%04d_%04d.flo", frame1, frame2);
  return name;
}

std::optional<std::pair<int, int>> parse_flow_file_name(const std::string& name) {
  static const std::regex pattern(R"(flow_(\d+)_(\d+)\.flo)");
  std::smatch m;
  if (!std::regex_match(name, m, pattern)) return std::nullopt;
  return std::pair{std::stoi(m.str(1)), std::stoi(m.str(2))};
}

void PriorBundle::validate() const {
  if (frames.size() < 2) throw ContractError("at least 2 frames are required");
  const int w = width(), h = height();
  const int n = int(frames.size());
  auto check = [&](const ImagePlanef& p, int channels, const std::string& what) {
    if (p.width != w || p.height != h) {
      throw ContractError(what + ": size " + std::to_string(p.width) + "x" + std::to_string(p.height) +
                          " differs from the frames (" + std::to_string(w) + "x" + std::to_string(h) + ")");
    }
    if (channels > 0 && p.channels() != channels) {
      throw ContractError(what + ": expected " + std::to_string(channels) + " channels");
    }
  };
  auto check_frame = [&](int k, const std::string& what) {
    if (k < 0 || k >= n) throw ContractError(what + ": frame index " + std::to_string(k) + " out of range");
  };
  for (std::size_t i = 0; i < frames.size(); ++i) check(frames[i], 3, "frame " + std::to_string(i));
  for (const auto& [key, p] : flows) {
    check_frame(key.first, "flow");
    check_frame(key.second, "flow");
    check(p, 2, "flow " + std::to_string(key.first) + "->" + std::to_string(key.second));
  }
  for (const auto& [k, p] : depths) {
    check_frame(k, "depth");
    check(p, 1, "depth " + std::to_string(k));
  }
  for (const auto& [k, p] : masks) {
    check_frame(k, "mask");
    check(p, 1, "mask " + std::to_string(k));
  }
  for (const auto& [k, p] : features) {
    check_frame(k, "feature");
    check(p, feature_dim(), "feature " + std::to_string(k));
  }
}

PriorBundle load_priors(const PriorPaths& paths) {
  PriorBundle b;
  b.frames = load_frames(paths.frames);
  auto index_of = [](const fs::path& p) {
    static const std::regex digits(R"((\d+))");
    std::smatch m;
    const std::string stem = p.stem().string();
    std::regex_search(stem, m, digits);
    return std::stoi(m.str(1));
  };
  if (!paths.flow.empty()) {
    if (!fs::is_directory(paths.flow)) throw FormatError("not a directory: " + paths.flow.string());
    for (const auto& entry : fs::directory_iterator(paths.flow)) {
      if (auto key = parse_flow_file_name(entry.path().filename().string())) {
        b.flows.emplace(*key, read_flo(entry.path()));
      }
    }
  }
  if (!paths.depth.empty()) {
    for (const auto& f : numbered_files(paths.depth, ".pfm")) b.depths.emplace(index_of(f), read_pfm(f));
  }
  if (!paths.masks.empty()) {
    for (const auto& f : numbered_files(paths.masks, ".png")) {
      ImagePlanef m = read_png(f);
      ImagePlanef bin(m.width, m.height, 1);
      for (Index p = 0; p < m.pixel_count(); ++p) bin.values(p, 0) = m.values(p, 0) > 0.5f ? 1.0f : 0.0f;
      b.masks.emplace(index_of(f), std::move(bin));
    }
  }
  if (!paths.features.empty()) {
    for (const auto& f : numbered_files(paths.features, ".vgrf")) b.features.emplace(index_of(f), read_feature(f));
  }
  b.validate();
  return b;
}

}  // namespace vgr
