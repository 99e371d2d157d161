#include "vgr/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <set>

namespace vgr {

void FitConfig::validate() const {
  if (steps < 0) throw ContractError("steps must be non-negative");
  if (init_count < 1) throw ContractError("init_count must be positive");
  if (neighbors_k < 1) throw ContractError("neighbors_k must be positive");
  if (density_interval <= 0 || opacity_reset_interval <= 0 || neighbor_rebuild <= 0 || log_every <= 0) {
    throw ContractError("intervals must be positive");
  }
  if (warmup < 0) throw ContractError("warmup must be non-negative");
  if (max_count < 1 || arap_samples < 1) throw ContractError("max_count and arap_samples must be positive");
  if (!(opacity_reset_value > 0 && opacity_reset_value < 1)) throw ContractError("opacity reset value in (0, 1)");
  if (!(split_factor > 0) || !(scene_extent > 0)) throw ContractError("split factor and extent must be positive");
  if (layout.sh_degree < 0 || layout.sh_degree > 3) throw ContractError("sh_degree must be 0..3");
  if (layout.poly_order < 0 || layout.fourier_order < 0 || layout.feature_dim < 0) {
    throw ContractError("basis orders and feature_dim must be non-negative");
  }
  if (layout.feature_dim > kMaxFeatureDim) throw ContractError("feature_dim exceeds 64");
  for (double r : {rates.position, rates.position_end, rates.poly, rates.poly_end, rates.fourier,
                   rates.fourier_end, rates.rotation, rates.scaling, rates.opacity, rates.sh_dc,
                   rates.sh_rest, rates.label, rates.feature}) {
    if (!(r >= 0)) throw ContractError("learning rates must be non-negative");
  }
  if (depth_trim < 0 || depth_trim >= 1) throw ContractError("depth_trim must be in [0, 1)");
  weights.validate();
}

GaussianSetf initialize(const FitConfig& config, const ImagePlanef* first_frame) {
  config.validate();
  const Index n = config.init_count;
  GaussianSetf set = GaussianSetf::zeros(n, config.layout);
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (Index i = 0; i < n; ++i) {
    set.mu0(i, 0) = float(2.0 * unit(rng) - 1.0);
    set.mu0(i, 1) = float(2.0 * unit(rng) - 1.0);
    set.mu0(i, 2) = float(unit(rng));
  }
  set.q0.col(0).setOnes();
  set.opacity_logit.setConstant(logit(0.1f));
  set.label.setConstant(0.5f);

  Column<float> scale = Column<float>::Constant(n, 0.01f);
  if (n > 1) {
    const int k = int(std::min<Index>(3, n - 1));
    const NeighborGraph g = build_neighbors(set.mu0, k);
    for (Index i = 0; i < n; ++i) {
      double sum = 0;
      int found = 0;
      for (int j = 0; j < k; ++j) {
        const int nb = g.neighbors(i, j);
        if (nb < 0) continue;
        sum += (set.mu0.row(i) - set.mu0.row(nb)).template cast<double>().norm();
        ++found;
      }
      if (found > 0 && sum > 0) scale[i] = float(sum / found);
    }
  }
  for (Index i = 0; i < n; ++i) set.log_scale.row(i).setConstant(std::log(scale[i]));

  if (first_frame) {
    if (first_frame->channels() != 3) throw ContractError("initialize: first frame must be RGB");
    const Camera cam(first_frame->width, first_frame->height);
    for (Index i = 0; i < n; ++i) {
      const Vec2<float> uv = project_point<float>(set.mu0.row(i).transpose(), cam);
      const int x = std::clamp(int(std::floor(uv.x())), 0, cam.width - 1);
      const int y = std::clamp(int(std::floor(uv.y())), 0, cam.height - 1);
      for (int c = 0; c < 3; ++c) {
        set.sh(i, c) = float(((*first_frame)(x, y, c) - 0.5) / kShC0);
      }
    }
  }
  return set;
}

// ---------------------------------------------------------------------------
// Density control

void DensityStats::reset(Index count) {
  grad_sum.setZero(count);
  visible_count.setZero(count);
}

void DensityStats::add(const SplatGrads<float>& grads) {
  if (grads.screen_grad_norm.rows() != grad_sum.rows()) {
    throw ContractError("density statistics out of sync with the set");
  }
  for (Index i = 0; i < grad_sum.rows(); ++i) {
    if (!grads.visible[std::size_t(i)]) continue;
    grad_sum[i] += grads.screen_grad_norm[i];
    visible_count[i] += 1.0f;
  }
}

DensityEvent density_control(GaussianSetf& set, OptimizerState& state, DensityStats& stats,
                             long step, const FitConfig& config, std::mt19937_64& rng) {
  state.check_matches(set);
  const Index n = set.count();
  if (stats.grad_sum.rows() != n) stats.reset(n);
  DensityEvent ev;

  std::vector<Index> clone, split;
  if (step % config.density_interval == 0 && step >= config.warmup) {
    const float scale_limit = float(config.split_scale_fraction * config.scene_extent);
    for (Index i = 0; i < n; ++i) {
      if (stats.visible_count[i] <= 0) continue;
      if (stats.grad_sum[i] / stats.visible_count[i] <= float(config.densify_grad_threshold)) continue;
      if (set.log_scale.row(i).maxCoeff() <= std::log(scale_limit)) {
        clone.push_back(i);
      } else {
        split.push_back(i);
      }
    }
    if (n + Index(clone.size()) + Index(split.size()) > config.max_count) {
      ev.densify_skipped = true;
      clone.clear();
      split.clear();
    }
  }

  std::vector<char> remove(std::size_t(n), 0);
  GaussianSetf added = set.gather(clone);
  if (!split.empty()) {
    std::normal_distribution<float> normal(0.0f, 1.0f);
    const float shrink = std::log(float(config.split_factor));
    for (int copy = 0; copy < 2; ++copy) {
      GaussianSetf child = set.gather(split);
      for (Index r = 0; r < child.count(); ++r) {
        const Vec3<float> s = child.log_scale.row(r).transpose().array().exp();
        const Mat3<float> rot = quat_to_rot<float>(child.q0.row(r).transpose());
        Vec3<float> z;
        for (int a = 0; a < 3; ++a) z[a] = normal(rng);
        child.mu0.row(r) += (rot * s.cwiseProduct(z)).transpose();
        child.log_scale.row(r).array() -= shrink;
      }
      added.append(child);
    }
    for (Index i : split) remove[std::size_t(i)] = 1;
  }
  ev.cloned = Index(clone.size());
  ev.split = Index(split.size());

  if (added.count() > 0) {
    set.append(added);
    state.m.append(added.zeros_like());
    state.v.append(added.zeros_like());
    remove.resize(std::size_t(set.count()), 0);
  }

  const float prune_logit = logit(float(config.prune_opacity));
  std::vector<Index> keep;
  keep.reserve(std::size_t(set.count()));
  for (Index i = 0; i < set.count(); ++i) {
    if (remove[std::size_t(i)]) continue;
    if (set.opacity_logit[i] < prune_logit) {
      ++ev.pruned;
      continue;
    }
    keep.push_back(i);
  }
  if (Index(keep.size()) != set.count()) {
    set = set.gather(keep);
    state.m = state.m.gather(keep);
    state.v = state.v.gather(keep);
  }

  if (step > 0 && step % config.opacity_reset_interval == 0) {
    set.opacity_logit.setConstant(logit(float(config.opacity_reset_value)));
    state.m.opacity_logit.setZero();
    state.v.opacity_logit.setZero();
    ev.reset = true;
  }
  state.check_matches(set);
  stats.reset(set.count());
  return ev;
}

// ---------------------------------------------------------------------------
// Fit loop

namespace {

constexpr int kFlowGaps[] = {1, 2, 4, 8};

std::pair<int, int> sample_pair(int frames, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> frame(0, frames - 1);
  std::uniform_int_distribution<int> coin(0, 1);
  const int f1 = frame(rng);
  const int room_fwd = frames - 1 - f1, room_back = f1;
  // Only gaps that fit in at least one direction.
  int usable = 0;
  while (usable < 4 && kFlowGaps[usable] <= std::max(room_fwd, room_back)) ++usable;
  const int gap = kFlowGaps[std::uniform_int_distribution<int>(0, usable - 1)(rng)];
  const bool forward = coin(rng) == 1;
  if (forward) return {f1, gap <= room_fwd ? f1 + gap : f1 - gap};
  return {f1, gap <= room_back ? f1 - gap : f1 + gap};
}

void scale_plane(ImagePlanef& p, double w) { p.values *= float(w); }

std::string log_line(const LossReport& r, Index count, double lr_pos) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%ld,%.8g,%.8g,%.8g,%.8g,%.8g,%.8g,%.8g,%ld,%.8g", r.step, r.total,
                r.render, r.flow, r.depth, r.arap, r.label, r.feature, long(count), lr_pos);
  return buf;
}

}  // namespace

FitResult fit(const PriorBundle& priors, const FitConfig& config, const FitHooks& hooks) {
  priors.validate();
  return fit_from(initialize(config, &priors.frames.front()), priors, config, hooks);
}

FitResult fit_from(GaussianSetf set, const PriorBundle& priors, const FitConfig& config,
                   const FitHooks& hooks) {
  config.validate();
  priors.validate();
  set.check_shapes();
  const int frame_count = int(priors.frames.size());
  const Camera cam(priors.width(), priors.height());
  const TimeMap times(frame_count);
  const LossWeights& w = config.weights;
  auto warn = [&](const std::string& msg) {
    if (hooks.warn) hooks.warn(msg);
  };

  const bool use_flow = w.flow > 0 && !priors.flows.empty();
  const bool use_depth = w.depth > 0 && !priors.depths.empty();
  const bool use_label = w.label > 0 && !priors.masks.empty();
  const bool use_feature = w.feature > 0 && !priors.features.empty();
  if (use_feature && priors.feature_dim() != set.layout.feature_dim) {
    throw ContractError("feature_dim " + std::to_string(set.layout.feature_dim) +
                        " does not match the feature priors (" + std::to_string(priors.feature_dim()) + ")");
  }

  FitResult result;
  OptimizerState state = OptimizerState::for_set(set);
  DensityStats stats;
  stats.reset(set.count());
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  NeighborGraph graph;
  bool graph_dirty = true;
  std::set<std::pair<int, int>> warned_pairs;

  if (hooks.log) *hooks.log << kLogHeader << '\n';

  for (long step = 1; step <= config.steps; ++step) {
    const GroupRates rates = rates_at(step - 1, config.steps, config.rates);
    const auto [f1, f2] = sample_pair(frame_count, rng);
    const double t1 = times.time(f1), t2 = times.time(f2);
    GaussianSetf grads = set.zeros_like();
    LossReport terms;
    terms.step = step;
    terms.t1 = t1;
    terms.t2 = t2;

    const ImagePlanef* depth_prior = nullptr;
    const ImagePlanef* mask = nullptr;
    const ImagePlanef* feature = nullptr;
    if (use_depth) {
      if (auto it = priors.depths.find(f1); it != priors.depths.end()) depth_prior = &it->second;
    }
    if (use_label) {
      if (auto it = priors.masks.find(f1); it != priors.masks.end()) mask = &it->second;
    }
    if (use_feature) {
      if (auto it = priors.features.find(f1); it != priors.features.end()) feature = &it->second;
    }

    AttributeMask attributes = kColor;
    if (depth_prior) attributes |= kDepth;
    if (mask) attributes |= kLabel;
    if (feature) attributes |= kFeature;
    // The flow plane shares the t1 geometry, so it is composited in the same pass.
    const ImagePlanef* flow_prior = nullptr;
    if (use_flow && f1 != f2) {
      if (auto it = priors.flows.find({f1, f2}); it != priors.flows.end()) {
        flow_prior = &it->second;
        attributes |= kFlow;
      } else if (warned_pairs.insert({f1, f2}).second) {
        warn("missing flow for frame pair " + std::to_string(f1) + " -> " + std::to_string(f2) + ", skipped");
      }
    }
    const std::optional<double> flow_to = flow_prior ? std::optional<double>(t2) : std::nullopt;
    const RenderOutput<float> out = render_set(set, t1, cam, attributes, config.render, flow_to);
    PlaneMap<float> gp;
    {
      PlaneLoss<float> l = render_loss(out.plane(kColor), priors.frames[std::size_t(f1)]);
      terms.render = l.value;
      scale_plane(l.grad, w.render);
      gp.emplace(kColor, std::move(l.grad));
    }
    if (depth_prior) {
      PlaneLoss<float> l = depth_loss<float>(out.plane(kDepth), *depth_prior, nullptr, config.depth_trim);
      terms.depth = l.value;
      scale_plane(l.grad, w.depth);
      gp.emplace(kDepth, std::move(l.grad));
    }
    if (mask) {
      PlaneLoss<float> l = label_loss(out.plane(kLabel), *mask);
      terms.label = l.value;
      scale_plane(l.grad, w.label);
      gp.emplace(kLabel, std::move(l.grad));
    }
    if (feature) {
      PlaneLoss<float> l = feature_loss(out.plane(kFeature), *feature);
      terms.feature = l.value;
      scale_plane(l.grad, w.feature);
      gp.emplace(kFeature, std::move(l.grad));
    }
    if (flow_prior) {
      PlaneLoss<float> l = flow_plane_loss(out.plane(kFlow), *flow_prior);
      terms.flow = l.value;
      scale_plane(l.grad, w.flow);
      gp.emplace(kFlow, std::move(l.grad));
    }
    stats.add(render_set_backward(set, out, t1, flow_to, gp, grads));

    if (w.arap > 0 && set.count() > config.neighbors_k && f1 != f2) {
      const Points3<float> p1 = eval_position(set, t1);
      if (graph_dirty || (step - 1) % config.neighbor_rebuild == 0) {
        const bool by_label = config.arap_label_mask && use_label;
        graph = build_neighbors(p1, config.neighbors_k, by_label ? &set.label : nullptr, t1);
        graph_dirty = false;
      }
      const std::vector<Index> sample = sample_indices(set.count(), config.arap_samples, rng);
      const ArapTerm<float> a = arap_positions(p1, eval_position(set, t2), graph, sample);
      terms.arap = a.value;
      eval_position_backward(set.layout, t1, Points3<float>(a.d_pos1 * float(w.arap)), grads);
      eval_position_backward(set.layout, t2, Points3<float>(a.d_pos2 * float(w.arap)), grads);
    }

    const LossReport report = total_loss(terms, w);
    if (!std::isfinite(report.total)) {
      result.aborted = true;
      result.abort_reason = "non-finite loss at step " + std::to_string(step);
      break;
    }

    adam_step(set, grads, state, rates);
    set.label = set.label.cwiseMax(0.0f).cwiseMin(1.0f);

    const bool densify_step = step >= config.warmup && step % config.density_interval == 0;
    const bool reset_step = step % config.opacity_reset_interval == 0;
    if ((densify_step || reset_step) && step <= config.densify_end()) {
      DensityEvent ev = density_control(set, state, stats, step, config, rng);
      if (ev.densify_skipped) warn("densification skipped at step " + std::to_string(step) + ": max count reached");
      result.events.push_back(ev);
      graph_dirty = true;
    }

    result.steps_done = step;
    if (step % config.log_every == 0 || step == config.steps) {
      result.log.push_back(report);
      if (hooks.log) *hooks.log << log_line(report, set.count(), rates[0]) << '\n' << std::flush;
    }
    if (hooks.after_step) hooks.after_step(step, set);
  }

  result.skipped_nonfinite = state.skipped_nonfinite;
  result.set = std::move(set);
  return result;
}

}  // namespace vgr
