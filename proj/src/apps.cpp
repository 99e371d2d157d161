#include "vgr/apps.hpp"

#include <cmath>
#include <limits>

namespace vgr {

ImagePlanef render_color(const GaussianSetf& set, double t, const Camera& cam, const RenderOptions& options) {
  RenderOptions o = options;
  o.keep_tape = false;
  return render_set(set, t, cam, kColor, o).plane(kColor);
}

TrackResult track(const GaussianSetf& set, double t1, double t2, const Camera& cam, const RenderOptions& options) {
  RenderOptions o = options;
  o.keep_tape = false;
  const RenderOutput<float> out = render_set(set, t1, cam, kFlow, o, t2);
  return {out.plane(kFlow), out.accum_alpha()};
}

double sample_bilinear(const ImagePlanef& plane, double x, double y, int channel) {
  // Pixel (i, j) holds the value at (i + 0.5, j + 0.5).
  const double fx = std::clamp(x - 0.5, 0.0, double(plane.width - 1));
  const double fy = std::clamp(y - 0.5, 0.0, double(plane.height - 1));
  const int x0 = int(std::floor(fx)), y0 = int(std::floor(fy));
  const int x1 = std::min(x0 + 1, plane.width - 1), y1 = std::min(y0 + 1, plane.height - 1);
  const double ax = fx - x0, ay = fy - y0;
  const double top = (1 - ax) * plane(x0, y0, channel) + ax * plane(x1, y0, channel);
  const double bottom = (1 - ax) * plane(x0, y1, channel) + ax * plane(x1, y1, channel);
  return (1 - ay) * top + ay * bottom;
}

std::vector<TrackedPoint> track_points(const TrackResult& tracked, std::span<const Vec2<double>> queries) {
  std::vector<TrackedPoint> out;
  out.reserve(queries.size());
  for (const auto& q : queries) {
    TrackedPoint p;
    p.position = q + Vec2<double>(sample_bilinear(tracked.flow, q.x(), q.y(), 0),
                                  sample_bilinear(tracked.flow, q.x(), q.y(), 1));
    p.occluded = sample_bilinear(tracked.alpha, q.x(), q.y(), 0) < 0.5;
    out.push_back(p);
  }
  return out;
}

std::vector<TrackedPoint> track_points(const GaussianSetf& set, std::span<const Vec2<double>> queries, double t1,
                                       double t2, const Camera& cam, const RenderOptions& options) {
  return track_points(track(set, t1, t2, cam, options), queries);
}

ImagePlanef render_depth(const GaussianSetf& set, double t, const Camera& cam, const RenderOptions& options) {
  RenderOptions o = options;
  o.keep_tape = false;
  return render_set(set, t, cam, kDepth, o).plane(kDepth);
}

ImagePlanef render_feature(const GaussianSetf& set, double t, const Camera& cam, const RenderOptions& options) {
  if (set.layout.feature_dim <= 0) throw ContractError("render_feature: the set carries no features");
  RenderOptions o = options;
  o.keep_tape = false;
  return render_set(set, t, cam, kFeature, o).plane(kFeature);
}

// ---------------------------------------------------------------------------

AppearanceEditResult edit_appearance(const GaussianSetf& input, double t, const ImagePlanef& edited,
                                     const AppearanceEditOptions& options) {
  if (edited.channels() != 3) throw ContractError("edit_appearance: edited image must be RGB");
  const Camera cam(edited.width, edited.height);
  AppearanceEditResult result;
  GaussianSetf set = input;
  OptimizerState state = OptimizerState::for_set(set);
  GroupRates rates{};
  rates[std::size_t(ParamGroup::kShDc)] = options.lr_sh_dc;
  rates[std::size_t(ParamGroup::kShRest)] = options.lr_sh_rest;

  double best = std::numeric_limits<double>::infinity();
  double window_start_best = best;
  for (long step = 0; step < options.max_steps; ++step) {
    const RenderOutput<float> out = render_set(set, t, cam, kColor, options.render);
    PlaneLoss<float> loss = render_loss(out.plane(kColor), edited);
    if (step == 0) result.initial_loss = loss.value;
    if (!std::isfinite(loss.value)) {
      result.set = input;
      result.aborted = true;
      result.steps = step;
      return result;
    }
    result.final_loss = loss.value;
    best = std::min(best, loss.value);
    if (step > 0 && step % options.plateau_window == 0) {
      if (window_start_best - best < options.plateau_tolerance) break;
      window_start_best = best;
    }
    if (step == 0) window_start_best = best;
    GaussianSetf grads = set.zeros_like();
    PlaneMap<float> gp;
    gp.emplace(kColor, std::move(loss.grad));
    render_set_backward(set, out, t, {}, gp, grads);
    adam_step(set, grads, state, rates);
    result.steps = step + 1;
    if (!set.sh.allFinite()) {
      result.set = input;
      result.aborted = true;
      return result;
    }
  }
  result.set = std::move(set);
  return result;
}

std::vector<ImagePlanef> interpolate(const GaussianSetf& set, const std::function<double(double)>& remap,
                                     int count, const Camera& cam, const RenderOptions& options) {
  if (count < 2) throw ContractError("interpolate: need at least 2 output frames");
  const TimeMap times(count);
  std::vector<ImagePlanef> frames;
  frames.reserve(std::size_t(count));
  for (int k = 0; k < count; ++k) frames.push_back(render_color(set, remap(times.time(k)), cam, options));
  return frames;
}

// ---------------------------------------------------------------------------

SplatInputs<float> transformed_inputs(const GaussianSetf& set, std::span<const Eigen::Isometry3d> chain,
                                      double t, const Camera& cam, AttributeMask attributes) {
  SplatInputs<float> in = splat_inputs(set, t, cam, attributes);
  Eigen::Isometry3d total = Eigen::Isometry3d::Identity();
  for (const auto& tr : chain) total = tr * total;
  if (total.matrix() == Eigen::Matrix4d::Identity()) return in;

  Eigen::Quaterniond qt(total.rotation());
  if (qt.w() < 0) qt.coeffs() = -qt.coeffs();
  const Vec4<double> q_total(qt.w(), qt.x(), qt.y(), qt.z());
  for (Index i = 0; i < in.count(); ++i) {
    const Vec3<double> p = in.positions.row(i).transpose().cast<double>();
    in.positions.row(i) = (total * p).cast<float>().transpose();
    const Vec4<double> q = in.rotations.row(i).transpose().cast<double>();
    in.rotations.row(i) = quat_multiply(q_total, q).cast<float>().transpose();
  }
  return in;
}

ImagePlanef render_transformed(const GaussianSetf& set, std::span<const Eigen::Isometry3d> chain, double t,
                               const Camera& cam, const RenderOptions& options) {
  RenderOptions o = options;
  o.keep_tape = false;
  return rasterize(transformed_inputs(set, chain, t, cam, kColor), cam, kColor, o).plane(kColor);
}

ImagePlanef render_transformed(const GaussianSetf& set, const Eigen::Isometry3d& transform, double t,
                               const Camera& cam, const RenderOptions& options) {
  return render_transformed(set, std::span<const Eigen::Isometry3d>(&transform, 1), t, cam, options);
}

Eigen::Isometry3d stereo_view_transform(double baseline, double toe_in_deg, bool left) {
  const double sign = left ? 1.0 : -1.0;
  Eigen::Isometry3d tr = Eigen::Isometry3d::Identity();
  tr.translation() = Eigen::Vector3d(sign * baseline / 2, 0, 0);
  if (toe_in_deg != 0.0) {
    const Eigen::Vector3d pivot(0, 0, 0.5);
    const double angle = -sign * toe_in_deg / 2 * M_PI / 180.0;
    Eigen::Isometry3d rot = Eigen::Isometry3d::Identity();
    rot.rotate(Eigen::AngleAxisd(angle, Eigen::Vector3d::UnitY()));
    Eigen::Isometry3d about = Eigen::Isometry3d::Identity();
    about.translate(pivot);
    about = about * rot;
    about.translate(-pivot);
    tr = tr * about;
  }
  return tr;
}

StereoFrames stereo_pair(const GaussianSetf& set, double t, const Camera& cam, double baseline, double toe_in_deg,
                         const RenderOptions& options) {
  if (baseline < 0) throw ContractError("stereo_pair: baseline must be non-negative");
  return {render_transformed(set, stereo_view_transform(baseline, toe_in_deg, true), t, cam, options),
          render_transformed(set, stereo_view_transform(baseline, toe_in_deg, false), t, cam, options)};
}

double psnr(const ImagePlanef& a, const ImagePlanef& b) {
  require_same_shape(a, b, "psnr");
  const double mse = (a.values - b.values).cast<double>().squaredNorm() / double(a.values.size());
  if (mse == 0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

double psnr_8bit(const ImagePlanef& a, const ImagePlanef& b) {
  auto quantize = [](const ImagePlanef& p) {
    ImagePlanef q = p;
    q.values = (p.values.array().max(0.0f).min(1.0f) * 255.0f).round() / 255.0f;
    return q;
  };
  return psnr(quantize(a), quantize(b));
}

}  // namespace vgr
