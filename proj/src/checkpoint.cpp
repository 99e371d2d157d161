#include "vgr/checkpoint.hpp"

#include "vgr/config.hpp"

#include <bit>
#include <fstream>
#include <sstream>

namespace vgr {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const std::string& b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(std::uint8_t(b[at + std::size_t(i)])) << (8 * i);
  return v;
}

constexpr std::size_t kHeaderBytes = 4 + 7 * 4;

}  // namespace

std::string encode_checkpoint(const GaussianSetf& set, const FitConfig& config) {
  set.check_shapes();
  const SetLayout& l = set.layout;
  std::string out = "VGRC";
  put_u32(out, kCheckpointVersion);
  put_u32(out, std::uint32_t(set.count()));
  put_u32(out, std::uint32_t(l.poly_order));
  put_u32(out, std::uint32_t(l.fourier_order));
  put_u32(out, std::uint32_t(l.feature_dim));
  put_u32(out, std::uint32_t(l.sh_degree));
  put_u32(out, (l.rotation_dynamics ? 1u : 0u) | (l.fourier_mode == FourierMode::kLiteral ? 2u : 0u));
  visit_blocks(
      [&](Block, const auto& m) {
        for (Index r = 0; r < m.rows(); ++r) {
          for (Index c = 0; c < m.cols(); ++c) put_u32(out, std::bit_cast<std::uint32_t>(float(m(r, c))));
        }
      },
      set);
  FitConfig stored = config;
  stored.layout = l;
  const std::string text = fit_config_to_text(stored);
  put_u32(out, std::uint32_t(text.size()));
  out += text;
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes, const std::string& origin) {
  auto short_file = [&](std::size_t expected) {
    return FormatError(origin + ": truncated checkpoint, expected at least " + std::to_string(expected) +
                       " bytes, got " + std::to_string(bytes.size()));
  };
  if (bytes.size() < 8) throw short_file(kHeaderBytes);
  if (bytes.compare(0, 4, "VGRC") != 0) throw FormatError(origin + ": bad checkpoint magic at byte offset 0");
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != kCheckpointVersion) {
    throw FormatError(origin + ": checkpoint version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  }
  if (bytes.size() < kHeaderBytes) throw short_file(kHeaderBytes);
  const std::uint32_t count = get_u32(bytes, 8);
  SetLayout layout;
  layout.poly_order = int(get_u32(bytes, 12));
  layout.fourier_order = int(get_u32(bytes, 16));
  layout.feature_dim = int(get_u32(bytes, 20));
  layout.sh_degree = int(get_u32(bytes, 24));
  const std::uint32_t flags = get_u32(bytes, 28);
  if (layout.sh_degree > 3 || layout.poly_order > 64 || layout.fourier_order > 64 ||
      layout.feature_dim > kMaxFeatureDim || (flags & ~3u) != 0) {
    throw FormatError(origin + ": implausible checkpoint header");
  }
  layout.rotation_dynamics = (flags & 1u) != 0;
  layout.fourier_mode = (flags & 2u) ? FourierMode::kLiteral : FourierMode::kFullPeriod;

  std::size_t floats = 0;
  for (int b = 0; b <= int(Block::kFeature); ++b) floats += std::size_t(block_cols(Block(b), layout));
  const std::size_t payload_end = kHeaderBytes + floats * count * 4;
  if (bytes.size() < payload_end + 4) throw short_file(payload_end + 4);
  const std::uint32_t text_len = get_u32(bytes, payload_end);
  const std::size_t total = payload_end + 4 + text_len;
  if (bytes.size() < total) throw short_file(total);
  if (bytes.size() > total) {
    throw FormatError(origin + ": checkpoint has " + std::to_string(bytes.size() - total) +
                      " trailing bytes (expected " + std::to_string(total) + " bytes, got " +
                      std::to_string(bytes.size()) + ")");
  }

  Checkpoint ck;
  ck.set = GaussianSetf::zeros(Index(count), layout);
  std::size_t at = kHeaderBytes;
  visit_blocks(
      [&](Block, auto& m) {
        for (Index r = 0; r < m.rows(); ++r) {
          for (Index c = 0; c < m.cols(); ++c) {
            m(r, c) = std::bit_cast<float>(get_u32(bytes, at));
            at += 4;
          }
        }
      },
      ck.set);
  ck.config_text = bytes.substr(payload_end + 4, text_len);
  ck.config = fit_config_from_text(ck.config_text);
  ck.config.layout = layout;
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const GaussianSetf& set, const FitConfig& config) {
  const std::string bytes = encode_checkpoint(set, config);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + tmp.string());
    out.write(bytes.data(), std::streamsize(bytes.size()));
    if (!out) throw FormatError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_checkpoint(ss.str(), path.string());
}

}  // namespace vgr
