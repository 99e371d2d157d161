#pragma once

// Downstream uses of a fitted set: dense tracking, depth / feature maps,
// appearance editing, frame interpolation, rigidly transformed and stereo views.

#include "vgr/scene_render.hpp"
#include "vgr/training.hpp"

#include <Eigen/Geometry>

#include <functional>

namespace vgr {

ImagePlanef render_color(const GaussianSetf& set, double t, const Camera& cam, const RenderOptions& options = {});

struct TrackResult {
  ImagePlanef flow;   // 2 channels, pixels, t1 geometry
  ImagePlanef alpha;  // accumulated alpha at t1
};

/// Rasterized displacement pi(mu(t2)) - pi(mu(t1)).
TrackResult track(const GaussianSetf& set, double t1, double t2, const Camera& cam,
                  const RenderOptions& options = {});

struct TrackedPoint {
  Vec2<double> position;
  bool occluded = false;  // accumulated alpha below 0.5 at the query
};

/// Query pixel + bilinear sample of the flow plane at the query (pixel
/// centres at +0.5).
std::vector<TrackedPoint> track_points(const TrackResult& tracked, std::span<const Vec2<double>> queries);
std::vector<TrackedPoint> track_points(const GaussianSetf& set, std::span<const Vec2<double>> queries,
                                       double t1, double t2, const Camera& cam, const RenderOptions& options = {});

/// Bilinear sample with clamping at the borders.
double sample_bilinear(const ImagePlanef& plane, double x, double y, int channel);

ImagePlanef render_depth(const GaussianSetf& set, double t, const Camera& cam, const RenderOptions& options = {});
/// Throws ContractError when the set carries no features.
ImagePlanef render_feature(const GaussianSetf& set, double t, const Camera& cam,
                           const RenderOptions& options = {});

struct AppearanceEditOptions {
  long max_steps = 2000;
  long plateau_window = 200;
  double plateau_tolerance = 1e-5;  // minimum loss improvement per window
  double lr_sh_dc = 2.5e-3;
  double lr_sh_rest = 1.25e-4;
  RenderOptions render;
};

struct AppearanceEditResult {
  GaussianSetf set;
  long steps = 0;
  double initial_loss = 0;
  double final_loss = 0;
  bool aborted = false;
};

/// Fits only the SH block to `edited` at time t with the L1 render loss.
/// On divergence the input set is returned with `aborted` set.
AppearanceEditResult edit_appearance(const GaussianSetf& set, double t, const ImagePlanef& edited,
                                     const AppearanceEditOptions& options = {});

/// Frames at times remap(k / (count - 1)), k = 0..count-1.
std::vector<ImagePlanef> interpolate(const GaussianSetf& set, const std::function<double(double)>& remap,
                                     int count, const Camera& cam, const RenderOptions& options = {});

/// Applies the transforms in order to the positions and rotations at time t.
/// Composition happens in double precision, so T followed by T^-1 reproduces
/// the untransformed inputs exactly.
SplatInputs<float> transformed_inputs(const GaussianSetf& set, std::span<const Eigen::Isometry3d> chain,
                                      double t, const Camera& cam, AttributeMask attributes);
ImagePlanef render_transformed(const GaussianSetf& set, std::span<const Eigen::Isometry3d> chain, double t,
                               const Camera& cam, const RenderOptions& options = {});
ImagePlanef render_transformed(const GaussianSetf& set, const Eigen::Isometry3d& transform, double t,
                               const Camera& cam, const RenderOptions& options = {});

struct StereoFrames {
  ImagePlanef left;
  ImagePlanef right;
};

/// Views translated by +b/2 (left) and -b/2 (right) along x. A non-zero toe-in
/// additionally rotates each view by -/+ toe_in/2 about the y-axis through (0, 0, 0.5).
StereoFrames stereo_pair(const GaussianSetf& set, double t, const Camera& cam, double baseline,
                         double toe_in_deg = 0.0, const RenderOptions& options = {});
Eigen::Isometry3d stereo_view_transform(double baseline, double toe_in_deg, bool left);

double psnr(const ImagePlanef& a, const ImagePlanef& b);
/// PSNR after quantizing both images to 8 bits.
double psnr_8bit(const ImagePlanef& a, const ImagePlanef& b);

}  // namespace vgr
