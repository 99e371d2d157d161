#pragma once

// Training objectives. Plane losses return the scalar and its gradient with
// respect to the rendered plane; set-level losses (flow, ARAP) return
// gradients with respect to GaussianSet parameters.

#include "vgr/motion.hpp"
#include "vgr/scene_render.hpp"

#include <optional>
#include <random>

namespace vgr {

template <typename Scalar>
struct PlaneLoss {
  double value = 0;
  ImagePlane<Scalar> grad;
};

/// Mean L1 over pixels and channels.
template <typename Scalar>
PlaneLoss<Scalar> render_loss(const ImagePlane<Scalar>& rendered, const ImagePlane<Scalar>& target);

/// Mean over valid pixels of |du| + |dv|. `valid` is a 1-channel plane (> 0.5 valid).
template <typename Scalar>
PlaneLoss<Scalar> flow_plane_loss(const ImagePlane<Scalar>& rendered, const ImagePlane<Scalar>& gt,
                                  const ImagePlane<Scalar>* valid = nullptr);

/// Renders the flow attribute at t1 and compares it with gt_flow.
template <typename Scalar>
struct SetLoss {
  double value = 0;
  GaussianSet<Scalar> grads;
};

template <typename Scalar>
SetLoss<Scalar> flow_loss(const GaussianSet<Scalar>& set, double t1, double t2, const Camera& cam,
                          const ImagePlane<Scalar>& gt_flow, const ImagePlane<Scalar>* valid = nullptr,
                          const RenderOptions& options = {});

/// Median / mean-absolute-deviation statistics of a depth plane.
struct DepthStats {
  double median = 0;
  double scale = 1;  // max(mean |D - median|, 1e-6)
  Index valid = 0;
};

template <typename Scalar>
DepthStats depth_stats(const ImagePlane<Scalar>& depth, const ImagePlane<Scalar>* valid = nullptr);

/// tau(D) = (D - median) / mean|D - median|; invalid pixels map to 0.
template <typename Scalar>
ImagePlane<Scalar> depth_tau(const ImagePlane<Scalar>& depth, const ImagePlane<Scalar>* valid = nullptr);

/// Mean squared difference of tau-normalized planes. `trim_ratio` > 0 drops
/// that fraction of the largest residuals. Median and scale of the rendered
/// plane are held constant in the gradient.
template <typename Scalar>
PlaneLoss<Scalar> depth_loss(const ImagePlane<Scalar>& rendered, const ImagePlane<Scalar>& prior,
                             const ImagePlane<Scalar>* valid = nullptr, double trim_ratio = 0.0);

/// Rigidity residual of a neighbourhood graph between two position snapshots.
template <typename Scalar>
struct ArapTerm {
  double value = 0;
  Points3<Scalar> d_pos1;
  Points3<Scalar> d_pos2;
  Index degenerate = 0;
};

/// Mean over sampled i and their neighbours k of
/// ||e_ik(t1) - R_i e_ik(t2)||^2 with e_ik = mu_i - mu_k and R_i from Kabsch (held fixed).
template <typename Scalar>
ArapTerm<Scalar> arap_positions(const Points3<Scalar>& pos1, const Points3<Scalar>& pos2,
                                const NeighborGraph& graph, std::span<const Index> sample);

template <typename Scalar>
SetLoss<Scalar> arap_loss(const GaussianSet<Scalar>& set, double t1, double t2,
                          const NeighborGraph& graph, std::span<const Index> sample);

/// Up to `count` distinct indices in [0, n), sorted; all of them when n <= count.
std::vector<Index> sample_indices(Index n, Index count, std::mt19937_64& rng);

/// Mean squared error (label and feature planes).
template <typename Scalar>
PlaneLoss<Scalar> label_loss(const ImagePlane<Scalar>& rendered, const ImagePlane<Scalar>& mask);
template <typename Scalar>
PlaneLoss<Scalar> feature_loss(const ImagePlane<Scalar>& rendered, const ImagePlane<Scalar>& gt);

struct LossWeights {
  double render = 1.0;
  double flow = 0.5;
  double depth = 0.5;
  double arap = 0.5;
  double label = 1.0;
  double feature = 0.5;

  void validate() const;
};

struct LossReport {
  long step = 0;
  double t1 = 0;
  double t2 = 0;
  double render = 0;
  double flow = 0;
  double depth = 0;
  double arap = 0;
  double label = 0;
  double feature = 0;
  double total = 0;
};

/// Weighted sum of the per-term values in `terms` (its total is ignored).
LossReport total_loss(const LossReport& terms, const LossWeights& weights);

}  // namespace vgr
