#pragma once

// Renders a GaussianSet at a normalized time: advances trajectories, evaluates
// SH colours along the fixed view direction, builds the per-Gaussian flow
// attribute pi(mu(t2)) - pi(mu(t)), and chains rasterizer gradients back to
// the stored parameters.

#include "vgr/motion.hpp"
#include "vgr/rasterizer.hpp"

#include <optional>

namespace vgr {

template <typename Scalar>
SplatInputs<Scalar> splat_inputs(const GaussianSet<Scalar>& set, double t, const Camera& cam,
                                 AttributeMask attributes, std::optional<double> flow_to = {});

/// Per-Gaussian pixel displacement pi(mu(t2)) - pi(mu(t1)).
template <typename Scalar>
RowMatrix<Scalar> projected_displacement(const Points3<Scalar>& at_t1, const Points3<Scalar>& at_t2,
                                         const Camera& cam);

/// kFlow requires `flow_to`; kLabel and kFeature use the stored attributes.
template <typename Scalar>
RenderOutput<Scalar> render_set(const GaussianSet<Scalar>& set, double t, const Camera& cam,
                                AttributeMask attributes, const RenderOptions& options = {},
                                std::optional<double> flow_to = {});

/// Accumulates the parameter gradients of a loss on the planes of `out`
/// (produced by render_set with the same t / flow_to) into `set_grads`.
/// Returns the raw rasterizer gradients (screen-space norms, visibility).
template <typename Scalar>
SplatGrads<Scalar> render_set_backward(const GaussianSet<Scalar>& set, const RenderOutput<Scalar>& out,
                                       double t, std::optional<double> flow_to,
                                       const PlaneMap<Scalar>& grad_planes,
                                       GaussianSet<Scalar>& set_grads);

}  // namespace vgr
