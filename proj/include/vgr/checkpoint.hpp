#pragma once

// VGRC checkpoints. Layout (little-endian):
//   "VGRC", u32 version, u32 count, u32 N, u32 L, u32 D, u32 sh_degree, u32 flags,
//   every parameter block as float32 in Block order (row-major),
//   u32 byte length + the FitConfig as key = value text.
// flags: bit 0 rotation dynamics, bit 1 literal Fourier argument.

#include "vgr/training.hpp"

#include <filesystem>

namespace vgr {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  GaussianSetf set;
  FitConfig config;
  std::string config_text;
};

std::string encode_checkpoint(const GaussianSetf& set, const FitConfig& config);
Checkpoint decode_checkpoint(const std::string& bytes, const std::string& origin = "checkpoint");

/// Atomic: writes a temporary file next to `path` and renames it.
void save_checkpoint(const std::filesystem::path& path, const GaussianSetf& set, const FitConfig& config);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace vgr
