#pragma once

// Synthetic fixtures with known closed-form motion, rendered by this
// library's own rasterizer. They provide frames plus exact flow, depth and
// mask priors and double as ground truth in tests.
//
//   rigid_translate  textured disk translating over a textured background
//   rotator          textured disk spinning about z (one turn per `turns`)
//   articulated      two adjoining bars moving with different translations
//   occluder         bar sweeping in front of a bright background blob

#include "vgr/priors.hpp"

#include <filesystem>
#include <string>

namespace vgr {

struct SceneSpec {
  std::string fixture = "rigid_translate";
  int width = 64;
  int height = 64;
  int frames = 16;
  Eigen::Vector3d velocity = Eigen::Vector3d(0.3, 0.15, 0.0);  // camera units per unit time
  int turns = 1;                                              // rotator
  int feature_dim = 0;
  std::uint64_t seed = 0;
};

const std::vector<std::string>& fixture_names();

/// Closed-form motion of one Gaussian group.
struct GroupMotion {
  enum class Kind { kStatic, kTranslate, kRotate };
  Kind kind = Kind::kStatic;
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  int turns = 0;

  /// Camera-space point at t2 of the group point that is at x at time t1.
  Eigen::Vector3d advance(const Eigen::Vector3d& x, double t1, double t2) const;
};

struct SynthScene {
  SceneSpec spec;
  GaussianSetf gt;
  std::vector<int> group;             // per Gaussian; 0 is the static background
  std::vector<GroupMotion> motions;   // per group
  PriorBundle priors;                 // frames, flows for gaps 1,2,4,8 both ways, depths, masks
  std::vector<std::vector<int>> pixel_group;  // per frame, alpha-majority group per pixel

  Camera camera() const { return {spec.width, spec.height}; }
  double time(int frame) const;
};

/// Throws ContractError for unknown fixtures or invalid sizes.
SynthScene synth(const SceneSpec& spec);

/// Dense flow from frame f1 to f2: each pixel moves with its alpha-majority group.
ImagePlanef ground_truth_flow(const SynthScene& scene, int f1, int f2);

/// frames/, flow/, depth/, masks/, [features/], gt.vgrc
void write_scene(const SynthScene& scene, const std::filesystem::path& dir);

}  // namespace vgr
