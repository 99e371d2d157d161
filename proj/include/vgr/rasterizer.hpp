#pragma once

// Differentiable orthographic EWA splatting. Gaussians are projected with the
// constant Jacobian J = [[W/2, 0, 0], [0, H/2, 0]], binned into 16x16 tiles,
// sorted front to back by z and alpha-composited:
//
//   out(u) = sum_i T_i sigma_i x_i,   T_i = prod_{j<i} (1 - sigma_j),
//   sigma_i = alpha_i exp(-1/2 (u - mu'_i)^T Sigma'^-1_i (u - mu'_i)),
//
// where the kernel is truncated outside its `kernel_extent`-sigma ellipse.
// The forward pass records a per-pixel tape of (gaussian, sigma, T) used by
// the backward pass.

#include "vgr/core.hpp"

#include <cstdint>
#include <map>
#include <vector>

namespace vgr {

enum Attribute : unsigned {
  kColor = 1u << 0,
  kDepth = 1u << 1,
  kFlow = 1u << 2,
  kLabel = 1u << 3,
  kFeature = 1u << 4,
  kAlpha = 1u << 5,  // accumulated alpha, always produced
};
using AttributeMask = unsigned;

const char* attribute_name(Attribute a);

/// Per-Gaussian inputs at one instant. Rotations may be unnormalized.
/// Optional attributes (flow, label, feature) may be left empty when not rendered.
template <typename Scalar>
struct SplatInputs {
  Points3<Scalar> positions;
  Quats<Scalar> rotations;
  Points3<Scalar> log_scales;
  Column<Scalar> opacity_logits;
  Points3<Scalar> colors;
  RowMatrix<Scalar> flow;  // N x 2, pixels
  Column<Scalar> label;
  RowMatrix<Scalar> feature;

  Index count() const { return positions.rows(); }
};

struct RenderOptions {
  double kernel_extent = 3.0;  // truncation radius in standard deviations
  double dilation = 0.3;       // px^2 added to the 2D covariance diagonal
  double min_transmittance = 1e-4;
  int max_contributors = 1024;
  int tile_size = 16;
  bool keep_tape = true;
  int threads = 0;  // 0: default_thread_count()
};

template <typename Scalar>
struct Projected2D {
  Vec2<Scalar> mu2d = Vec2<Scalar>::Zero();
  Mat2<Scalar> cov2d = Mat2<Scalar>::Identity();
  Mat2<Scalar> inv_cov2d = Mat2<Scalar>::Identity();
  Scalar depth_key = 0;
  Scalar radius = 0;
  bool valid = false;
};

/// Sigma' = J Sigma J^T + dilation * I, radius = extent * sqrt(max eigenvalue).
template <typename Scalar>
Projected2D<Scalar> project_gaussian(const Vec3<Scalar>& position, const Vec4<Scalar>& rotation,
                                     const Vec3<Scalar>& log_scale, const Camera& cam,
                                     const RenderOptions& options = {});

/// Channel offsets of the composited attribute vector.
struct ChannelLayout {
  int color = -1;
  int depth = -1;
  int flow = -1;
  int label = -1;
  int feature = -1;
  int feature_dim = 0;
  int total = 0;

  static ChannelLayout make(AttributeMask attributes, int feature_dim);
};

template <typename Scalar>
struct TapeEntry {
  std::int32_t gaussian;
  Scalar sigma;
  Scalar transmittance;
};

template <typename Scalar>
struct RenderOutput {
  Camera camera;
  AttributeMask attributes = 0;
  RenderOptions options;
  ChannelLayout channels;
  std::map<Attribute, ImagePlane<Scalar>> planes;  // includes kAlpha

  // Saved state for the backward pass.
  SplatInputs<Scalar> inputs;
  std::vector<Projected2D<Scalar>> projected;
  RowMatrix<Scalar> values;  // N x channels.total
  bool has_tape = false;
  int tiles_x = 0;
  int tiles_y = 0;
  std::vector<std::vector<TapeEntry<Scalar>>> tile_tape;
  std::vector<std::uint32_t> pixel_begin;  // offset into the pixel's tile tape
  std::vector<std::uint32_t> pixel_count;

  Index skipped_nonfinite = 0;

  const ImagePlane<Scalar>& plane(Attribute a) const;
  const ImagePlane<Scalar>& accum_alpha() const { return plane(kAlpha); }
  std::span<const TapeEntry<Scalar>> tape(int x, int y) const;
};

/// Gradients of a scalar loss with respect to every rasterizer input.
template <typename Scalar>
struct SplatGrads {
  RowMatrix<Scalar> mu2d;   // N x 2
  RowMatrix<Scalar> conic;  // N x 3: (a, b, c) of the inverse 2D covariance
  RowMatrix<Scalar> cov2d;  // N x 3: (xx, xy, yy)
  Column<Scalar> opacity;   // decoded alpha
  Points3<Scalar> positions;
  Quats<Scalar> rotations;
  Points3<Scalar> log_scales;
  Column<Scalar> opacity_logits;
  Points3<Scalar> colors;
  RowMatrix<Scalar> flow;
  Column<Scalar> label;
  RowMatrix<Scalar> feature;
  /// |dL/d(mu_x, mu_y)| in camera units through the 2D mean, for density control.
  Column<Scalar> screen_grad_norm;
  std::vector<char> visible;
};

template <typename Scalar>
using PlaneMap = std::map<Attribute, ImagePlane<Scalar>>;

template <typename Scalar>
RenderOutput<Scalar> rasterize(const SplatInputs<Scalar>& inputs, const Camera& cam,
                               AttributeMask attributes, const RenderOptions& options = {});

/// `grad_planes` may hold any subset of the rendered planes (including kAlpha).
template <typename Scalar>
SplatGrads<Scalar> rasterize_backward(const RenderOutput<Scalar>& out,
                                      const PlaneMap<Scalar>& grad_planes);

}  // namespace vgr
