#include "vgr/scene_render.hpp"

namespace vgr {

namespace {

template <typename Scalar>
Points3<Scalar> eval_colors(const GaussianSet<Scalar>& set, Points3<Scalar>* pre_clamp = nullptr) {
  const int terms = sh_coeff_count(set.layout.sh_degree);
  const Column<Scalar> basis = sh_basis(view_direction<Scalar>(), set.layout.sh_degree);
  Points3<Scalar> raw = Points3<Scalar>::Constant(set.count(), 3, Scalar(0.5));
  for (int k = 0; k < terms; ++k) raw += basis[k] * set.sh.middleCols(3 * k, 3);
  if (pre_clamp) *pre_clamp = raw;
  return raw.cwiseMax(Scalar(0));
}

}  // namespace

template <typename Scalar>
RowMatrix<Scalar> projected_displacement(const Points3<Scalar>& at_t1, const Points3<Scalar>& at_t2,
                                         const Camera& cam) {
  RowMatrix<Scalar> d(at_t1.rows(), 2);
  d.col(0) = (at_t2.col(0) - at_t1.col(0)) * (Scalar(cam.width) / 2);
  d.col(1) = (at_t2.col(1) - at_t1.col(1)) * (Scalar(cam.height) / 2);
  return d;
}

template <typename Scalar>
SplatInputs<Scalar> splat_inputs(const GaussianSet<Scalar>& set, double t, const Camera& cam,
                                 AttributeMask attributes, std::optional<double> flow_to) {
  SplatInputs<Scalar> in;
  in.positions = eval_position(set, t);
  in.rotations = eval_rotation_raw(set, t);
  in.log_scales = set.log_scale;
  in.opacity_logits = set.opacity_logit;
  if (attributes & kColor) in.colors = eval_colors(set);
  if (attributes & kFlow) {
    if (!flow_to) throw ContractError("flow rendering needs a target time");
    in.flow = projected_displacement(in.positions, eval_position(set, *flow_to), cam);
  }
  if (attributes & kLabel) in.label = set.label;
  if (attributes & kFeature) {
    if (set.layout.feature_dim <= 0) throw ContractError("set carries no features");
    in.feature = set.feature;
  }
  return in;
}

template <typename Scalar>
RenderOutput<Scalar> render_set(const GaussianSet<Scalar>& set, double t, const Camera& cam,
                                AttributeMask attributes, const RenderOptions& options,
                                std::optional<double> flow_to) {
  return rasterize(splat_inputs(set, t, cam, attributes, flow_to), cam, attributes, options);
}

template <typename Scalar>
SplatGrads<Scalar> render_set_backward(const GaussianSet<Scalar>& set, const RenderOutput<Scalar>& out,
                                       double t, std::optional<double> flow_to,
                                       const PlaneMap<Scalar>& grad_planes,
                                       GaussianSet<Scalar>& set_grads) {
  SplatGrads<Scalar> g = rasterize_backward(out, grad_planes);
  const SetLayout& layout = set.layout;
  const Camera& cam = out.camera;

  Points3<Scalar> d_pos = g.positions;
  if (out.channels.flow >= 0) {
    if (!flow_to) throw ContractError("flow gradient needs the target time");
    Points3<Scalar> d_pos2 = Points3<Scalar>::Zero(set.count(), 3);
    d_pos2.col(0) = g.flow.col(0) * (Scalar(cam.width) / 2);
    d_pos2.col(1) = g.flow.col(1) * (Scalar(cam.height) / 2);
    d_pos.leftCols(2) -= d_pos2.leftCols(2);
    eval_position_backward(layout, *flow_to, d_pos2, set_grads);
  }
  eval_position_backward(layout, t, d_pos, set_grads);
  eval_rotation_backward(layout, t, Quats<Scalar>(g.rotations), set_grads);
  set_grads.log_scale += g.log_scales;
  set_grads.opacity_logit += g.opacity_logits;

  if (out.channels.color >= 0) {
    Points3<Scalar> raw;
    eval_colors(set, &raw);
    const Points3<Scalar> d_raw = (raw.array() > Scalar(0)).select(g.colors, Scalar(0));
    const Column<Scalar> basis = sh_basis(view_direction<Scalar>(), layout.sh_degree);
    for (int k = 0; k < sh_coeff_count(layout.sh_degree); ++k) {
      set_grads.sh.middleCols(3 * k, 3) += basis[k] * d_raw;
    }
  }
  if (out.channels.label >= 0) set_grads.label += g.label;
  if (out.channels.feature >= 0) set_grads.feature += g.feature;
  return g;
}

#define VGR_INSTANTIATE(S)                                                                        \
  template SplatInputs<S> splat_inputs<S>(const GaussianSet<S>&, double, const Camera&,           \
                                          AttributeMask, std::optional<double>);                  \
  template RowMatrix<S> projected_displacement<S>(const Points3<S>&, const Points3<S>&,           \
                                                  const Camera&);                                 \
  template RenderOutput<S> render_set<S>(const GaussianSet<S>&, double, const Camera&,            \
                                         AttributeMask, const RenderOptions&,                     \
                                         std::optional<double>);                                  \
  template SplatGrads<S> render_set_backward<S>(const GaussianSet<S>&, const RenderOutput<S>&,    \
                                                double, std::optional<double>,                    \
                                                const PlaneMap<S>&, GaussianSet<S>&);

VGR_INSTANTIATE(float)
VGR_INSTANTIATE(double)
#undef VGR_INSTANTIATE

}  // namespace vgr
