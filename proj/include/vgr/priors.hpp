#pragma once

// External artifacts: frame sequences, flow (.flo), depth (PFM), feature maps
// (VGRF), and the in-memory bundle of per-frame supervision.
//
// All multi-byte values are little-endian.

#include "vgr/core.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <utility>

namespace vgr {

struct PriorBundle {
  std::vector<ImagePlanef> frames;
  std::map<std::pair<int, int>, ImagePlanef> flows;  // (frame1, frame2) -> 2-channel, pixels
  std::map<int, ImagePlanef> depths;
  std::map<int, ImagePlanef> masks;
  std::map<int, ImagePlanef> features;

  int width() const { return frames.empty() ? 0 : frames.front().width; }
  int height() const { return frames.empty() ? 0 : frames.front().height; }
  int feature_dim() const { return features.empty() ? 0 : features.begin()->second.channels(); }
  void validate() const;
};

// .flo: "PIEH", int32 W, int32 H, then interleaved (u, v) float32, row-major.
ImagePlanef read_flo(const std::filesystem::path& path);
void write_flo(const std::filesystem::path& path, const ImagePlanef& flow);

// PFM greyscale ("Pf"), negative scale (little-endian), rows bottom-to-top on disk.
ImagePlanef read_pfm(const std::filesystem::path& path);
void write_pfm(const std::filesystem::path& path, const ImagePlanef& plane);

// VGRF: "VGRF", u32 version, u32 W, H, D, then W*H*D float32, channel-fastest.
inline constexpr std::uint32_t kFeatureVersion = 1;
inline constexpr int kMaxFeatureDim = 64;
ImagePlanef read_feature(const std::filesystem::path& path);
void write_feature(const std::filesystem::path& path, const ImagePlanef& plane);

// 8-bit PNG. Grey images load as one channel, RGB(A) as three.
ImagePlanef read_png(const std::filesystem::path& path);
/// Values are clamped to [0, 1] and rounded to 8 bits. 1- or 3-channel planes.
void write_png(const std::filesystem::path& path, const ImagePlanef& plane);

/// Image files of a directory ordered by the number in their stem.
std::vector<std::filesystem::path> numbered_files(const std::filesystem::path& dir,
                                                  const std::string& extension);
/// All PNG frames of a directory as RGB planes in numeric order (at least 2).
std::vector<ImagePlanef> load_frames(const std::filesystem::path& dir);
void save_frames(const std::filesystem::path& dir, const std::vector<ImagePlanef>& frames);

std::string flow_file_name(int frame1, int frame2);  // flow_%04d_%04d.flo
std::optional<std::pair<int, int>> parse_flow_file_name(const std::string& name);

/// Directory layout used by `synth` and consumed by `fit`; empty paths are skipped.
struct PriorPaths {
  std::filesystem::path frames;
  std::filesystem::path flow;      // flow_%04d_%04d.flo
  std::filesystem::path depth;     // %04d.pfm
  std::filesystem::path masks;     // %04d.png
  std::filesystem::path features;  // %04d.vgrf
};
PriorBundle load_priors(const PriorPaths& paths);

}  // namespace vgr
