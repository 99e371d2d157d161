#pragma once

// Geometry edit scripts. One directive per line, '#' comments:
//
//   select all | select label (>|>=|<|<=) v | select box x0 y0 z0 x1 y1 z1 [at t]
//   select id NAME                    reuse a saved selection
//   ... as NAME                       (suffix on any select) save the selection
//   delete
//   duplicate dx dy dz                copies become the current selection
//   translate dx dy dz
//   rotate w x y z                    about the selection centroid
//   rescale f                         about the selection centroid
//   set_opacity_mul f
//   retime linear r | retime ease     mu(t) <- mu(r t) or mu(3t^2 - 2t^3)
//   global_transform qw qx qy qz tx ty tz   whole set, selection ignored
//   stereo_baseline b [toe_in_degrees]      render-stage setting
//
// A script is validated and applied to a copy; the input set is returned
// untouched when any directive fails.

#include "vgr/core.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace vgr {

struct Directive {
  enum class Kind {
    kSelect,
    kDelete,
    kDuplicate,
    kTranslate,
    kRotate,
    kRescale,
    kOpacityMul,
    kRetime,
    kGlobalTransform,
    kStereoBaseline,
  };
  enum class Selector { kAll, kLabel, kBox, kId };
  enum class Retime { kLinear, kEase };

  Kind kind = Kind::kSelect;
  int line = 0;

  Selector selector = Selector::kAll;
  std::string compare;  // label comparison operator
  double value = 0;     // label threshold, factor, rate, or baseline
  Eigen::Vector3d box_min = Eigen::Vector3d::Zero();
  Eigen::Vector3d box_max = Eigen::Vector3d::Zero();
  double at_time = 0;
  std::string id;       // select id NAME
  std::string save_as;  // ... as NAME

  Eigen::Vector3d vec = Eigen::Vector3d::Zero();
  Eigen::Vector4d quat = Eigen::Vector4d(1, 0, 0, 0);
  Retime retime = Retime::kLinear;
  double toe_in_deg = 0;
};

struct EditScript {
  std::vector<Directive> directives;
};

/// Throws ContractError naming the line for syntax and value errors.
EditScript parse_edit_script(const std::string& text, const std::string& origin = "edit script");
EditScript load_edit_script(const std::filesystem::path& path);

struct StereoSettings {
  double baseline = 0;
  double toe_in_deg = 0;
};

struct EditResult {
  GaussianSetf set;
  std::vector<std::string> warnings;
  std::optional<StereoSettings> stereo;
};

EditResult edit_geometry(const GaussianSetf& set, const EditScript& script);

/// Least-squares refit of every trajectory so that mu_new(t) ~ mu(remap(t)) on [0, 1].
void retime_set(GaussianSetf& set, std::span<const Index> rows, Directive::Retime mode, double rate);

}  // namespace vgr
