#include "vgr/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vgr {

namespace {

template <typename Scalar>
bool is_valid(const ImagePlane<Scalar>* valid, Index p) {
  return valid == nullptr || valid->values(p, 0) > Scalar(0.5);
}

template <typename Scalar>
void check_mask(const ImagePlane<Scalar>& plane, const ImagePlane<Scalar>* valid, const char* what) {
  if (valid && (valid->width != plane.width || valid->height != plane.height || valid->channels() != 1)) {
    throw ContractError(std::string(what) + ": validity mask shape mismatch");
  }
}

template <typename Scalar>
PlaneLoss<Scalar> mse(const ImagePlane<Scalar>& rendered, const ImagePlane<Scalar>& target,
                      const char* what) {
  require_same_shape(rendered, target, what);
  PlaneLoss<Scalar> out;
  const auto diff = (rendered.values - target.values).eval();
  const double count = double(diff.size());
  out.value = diff.template cast<double>().squaredNorm() / count;
  out.grad = ImagePlane<Scalar>(rendered.width, rendered.height, rendered.channels());
  out.grad.values = diff * Scalar(2.0 / count);
  return out;
}

}  // namespace

template <typename Scalar>
PlaneLoss<Scalar> render_loss(const ImagePlane<Scalar>& rendered, const ImagePlane<Scalar>& target) {
  require_same_shape(rendered, target, "render_loss");
  PlaneLoss<Scalar> out;
  const auto diff = (rendered.values - target.values).eval();
  const double count = double(diff.size());
  out.value = diff.template cast<double>().cwiseAbs().sum() / count;
  out.grad = ImagePlane<Scalar>(rendered.width, rendered.height, rendered.channels());
  out.grad.values = diff.array().sign() * Scalar(1.0 / count);
  return out;
}

template <typename Scalar>
PlaneLoss<Scalar> flow_plane_loss(const ImagePlane<Scalar>& rendered, const ImagePlane<Scalar>& gt,
                                  const ImagePlane<Scalar>* valid) {
  require_same_shape(rendered, gt, "flow_loss");
  if (rendered.channels() != 2) throw ContractError("flow_loss: flow planes need 2 channels");
  check_mask(rendered, valid, "flow_loss");
  PlaneLoss<Scalar> out;
  out.grad = ImagePlane<Scalar>(rendered.width, rendered.height, 2);
  Index count = 0;
  for (Index p = 0; p < rendered.pixel_count(); ++p) count += is_valid(valid, p);
  if (count == 0) return out;
  double sum = 0;
  const Scalar inv = Scalar(1.0 / double(count));
  for (Index p = 0; p < rendered.pixel_count(); ++p) {
    if (!is_valid(valid, p)) continue;
    for (int c = 0; c < 2; ++c) {
      const Scalar d = rendered.values(p, c) - gt.values(p, c);
      sum += std::abs(double(d));
      out.grad.values(p, c) = d > 0 ? inv : (d < 0 ? -inv : Scalar(0));
    }
  }
  out.value = sum / double(count);
  return out;
}

template <typename Scalar>
SetLoss<Scalar> flow_loss(const GaussianSet<Scalar>& set, double t1, double t2, const Camera& cam,
                          const ImagePlane<Scalar>& gt_flow, const ImagePlane<Scalar>* valid,
                          const RenderOptions& options) {
  const RenderOutput<Scalar> out = render_set(set, t1, cam, kFlow, options, t2);
  PlaneLoss<Scalar> plane = flow_plane_loss(out.plane(kFlow), gt_flow, valid);
  SetLoss<Scalar> result;
  result.value = plane.value;
  result.grads = set.zeros_like();
  PlaneMap<Scalar> g;
  g.emplace(kFlow, std::move(plane.grad));
  render_set_backward(set, out, t1, t2, g, result.grads);
  return result;
}

template <typename Scalar>
DepthStats depth_stats(const ImagePlane<Scalar>& depth, const ImagePlane<Scalar>* valid) {
  if (depth.channels() != 1) throw ContractError("depth planes have one channel");
  check_mask(depth, valid, "depth_tau");
  std::vector<double> v;
  v.reserve(std::size_t(depth.pixel_count()));
  for (Index p = 0; p < depth.pixel_count(); ++p) {
    if (is_valid(valid, p)) v.push_back(double(depth.values(p, 0)));
  }
  if (v.empty()) throw ContractError("depth_tau: no valid pixels");
  DepthStats s;
  s.valid = Index(v.size());
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + std::ptrdiff_t(mid), v.end());
  s.median = v[mid];
  if (v.size() % 2 == 0) {
    s.median = 0.5 * (s.median + *std::max_element(v.begin(), v.begin() + std::ptrdiff_t(mid)));
  }
  double mad = 0;
  for (double x : v) mad += std::abs(x - s.median);
  s.scale = std::max(mad / double(v.size()), 1e-6);
  return s;
}

template <typename Scalar>
ImagePlane<Scalar> depth_tau(const ImagePlane<Scalar>& depth, const ImagePlane<Scalar>* valid) {
  const DepthStats s = depth_stats(depth, valid);
  ImagePlane<Scalar> out(depth.width, depth.height, 1);
  for (Index p = 0; p < depth.pixel_count(); ++p) {
    if (is_valid(valid, p)) {
      out.values(p, 0) = Scalar((double(depth.values(p, 0)) - s.median) / s.scale);
    }
  }
  return out;
}

template <typename Scalar>
PlaneLoss<Scalar> depth_loss(const ImagePlane<Scalar>& rendered, const ImagePlane<Scalar>& prior,
                             const ImagePlane<Scalar>* valid, double trim_ratio) {
  require_same_shape(rendered, prior, "depth_loss");
  if (trim_ratio < 0 || trim_ratio >= 1) throw ContractError("depth_loss: trim ratio in [0, 1)");
  const DepthStats rs = depth_stats(rendered, valid);
  const DepthStats ps = depth_stats(prior, valid);

  std::vector<Index> pixels;
  std::vector<double> residual(std::size_t(rendered.pixel_count()), 0.0);
  for (Index p = 0; p < rendered.pixel_count(); ++p) {
    if (!is_valid(valid, p)) continue;
    const double tr = (double(rendered.values(p, 0)) - rs.median) / rs.scale;
    const double tp = (double(prior.values(p, 0)) - ps.median) / ps.scale;
    residual[std::size_t(p)] = tr - tp;
    pixels.push_back(p);
  }
  if (trim_ratio > 0) {
    const std::size_t keep = pixels.size() - std::size_t(std::floor(trim_ratio * double(pixels.size())));
    std::stable_sort(pixels.begin(), pixels.end(), [&](Index a, Index b) {
      return std::abs(residual[std::size_t(a)]) < std::abs(residual[std::size_t(b)]);
    });
    pixels.resize(std::max<std::size_t>(keep, 1));
  }
  PlaneLoss<Scalar> out;
  out.grad = ImagePlane<Scalar>(rendered.width, rendered.height, 1);
  double sum = 0;
  const double n = double(pixels.size());
  for (Index p : pixels) {
    const double r = residual[std::size_t(p)];
    sum += r * r;
    out.grad.values(p, 0) = Scalar(2.0 * r / (n * rs.scale));
  }
  out.value = sum / n;
  return out;
}

template <typename Scalar>
ArapTerm<Scalar> arap_positions(const Points3<Scalar>& pos1, const Points3<Scalar>& pos2,
                                const NeighborGraph& graph, std::span<const Index> sample) {
  if (pos1.rows() != graph.count() || pos2.rows() != graph.count()) {
    throw ContractError("arap: neighbour graph does not match the set");
  }
  ArapTerm<Scalar> term;
  term.d_pos1.setZero(pos1.rows(), 3);
  term.d_pos2.setZero(pos2.rows(), 3);
  Index edges = 0;
  for (Index i : sample) {
    for (int k = 0; k < graph.k(); ++k) edges += graph.neighbors(i, k) >= 0;
  }
  if (edges == 0) return term;
  const double norm = 1.0 / double(edges);

  std::vector<Vec3<double>> e1, e2;
  double sum = 0;
  for (Index i : sample) {
    e1.clear();
    e2.clear();
    std::vector<int> nbrs;
    for (int k = 0; k < graph.k(); ++k) {
      const int j = graph.neighbors(i, k);
      if (j < 0) continue;
      nbrs.push_back(j);
      e1.push_back((pos1.row(i) - pos1.row(j)).transpose().template cast<double>());
      e2.push_back((pos2.row(i) - pos2.row(j)).transpose().template cast<double>());
    }
    if (nbrs.empty()) continue;
    const KabschResult kabsch = kabsch_rotation(e1, e2);
    term.degenerate += kabsch.degenerate;
    const Mat3<double>& r = kabsch.rotation;
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      const Vec3<double> res = e1[k] - r * e2[k];
      sum += res.squaredNorm();
      const Vec3<Scalar> g1 = (2.0 * norm * res).template cast<Scalar>();
      const Vec3<Scalar> g2 = (-2.0 * norm * (r.transpose() * res)).template cast<Scalar>();
      term.d_pos1.row(i) += g1.transpose();
      term.d_pos1.row(nbrs[k]) -= g1.transpose();
      term.d_pos2.row(i) += g2.transpose();
      term.d_pos2.row(nbrs[k]) -= g2.transpose();
    }
  }
  term.value = sum * norm;
  return term;
}

template <typename Scalar>
SetLoss<Scalar> arap_loss(const GaussianSet<Scalar>& set, double t1, double t2,
                          const NeighborGraph& graph, std::span<const Index> sample) {
  const ArapTerm<Scalar> term =
      arap_positions(eval_position(set, t1), eval_position(set, t2), graph, sample);
  SetLoss<Scalar> out;
  out.value = term.value;
  out.grads = set.zeros_like();
  eval_position_backward(set.layout, t1, term.d_pos1, out.grads);
  eval_position_backward(set.layout, t2, term.d_pos2, out.grads);
  return out;
}

std::vector<Index> sample_indices(Index n, Index count, std::mt19937_64& rng) {
  std::vector<Index> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), Index(0));
  if (n <= count) return all;
  // Partial Fisher-Yates.
  for (Index i = 0; i < count; ++i) {
    std::uniform_int_distribution<Index> pick(i, n - 1);
    std::swap(all[std::size_t(i)], all[std::size_t(pick(rng))]);
  }
  all.resize(std::size_t(count));
  std::sort(all.begin(), all.end());
  return all;
}

template <typename Scalar>
PlaneLoss<Scalar> label_loss(const ImagePlane<Scalar>& rendered, const ImagePlane<Scalar>& mask) {
  return mse(rendered, mask, "label_loss");
}

template <typename Scalar>
PlaneLoss<Scalar> feature_loss(const ImagePlane<Scalar>& rendered, const ImagePlane<Scalar>& gt) {
  if (rendered.channels() != gt.channels()) {
    throw ContractError("feature_loss: feature dimensionality mismatch (" +
                        std::to_string(rendered.channels()) + " vs " + std::to_string(gt.channels()) + ")");
  }
  return mse(rendered, gt, "feature_loss");
}

void LossWeights::validate() const {
  for (double w : {render, flow, depth, arap, label, feature}) {
    if (!(w >= 0)) throw ContractError("loss weights must be non-negative");
  }
  if (!(render > 0)) throw ContractError("lambda_render must be positive");
}

LossReport total_loss(const LossReport& terms, const LossWeights& w) {
  LossReport r = terms;
  r.total = w.render * terms.render + w.flow * terms.flow + w.depth * terms.depth +
            w.arap * terms.arap + w.label * terms.label + w.feature * terms.feature;
  return r;
}

#define VGR_INSTANTIATE(S)                                                                         \
  template PlaneLoss<S> render_loss<S>(const ImagePlane<S>&, const ImagePlane<S>&);                \
  template PlaneLoss<S> flow_plane_loss<S>(const ImagePlane<S>&, const ImagePlane<S>&,             \
                                           const ImagePlane<S>*);                                  \
  template SetLoss<S> flow_loss<S>(const GaussianSet<S>&, double, double, const Camera&,           \
                                   const ImagePlane<S>&, const ImagePlane<S>*, const RenderOptions&); \
  template DepthStats depth_stats<S>(const ImagePlane<S>&, const ImagePlane<S>*);                  \
  template ImagePlane<S> depth_tau<S>(const ImagePlane<S>&, const ImagePlane<S>*);                 \
  template PlaneLoss<S> depth_loss<S>(const ImagePlane<S>&, const ImagePlane<S>&,                  \
                                      const ImagePlane<S>*, double);                               \
  template ArapTerm<S> arap_positions<S>(const Points3<S>&, const Points3<S>&,                     \
                                         const NeighborGraph&, std::span<const Index>);            \
  template SetLoss<S> arap_loss<S>(const GaussianSet<S>&, double, double, const NeighborGraph&,    \
                                   std::span<const Index>);                                        \
  template PlaneLoss<S> label_loss<S>(const ImagePlane<S>&, const ImagePlane<S>&);                 \
  template PlaneLoss<S> feature_loss<S>(const ImagePlane<S>&, const ImagePlane<S>&);

VGR_INSTANTIATE(float)
VGR_INSTANTIATE(double)
#undef VGR_INSTANTIATE

}  // namespace vgr
