#include "vgr/training.hpp"

#include <cmath>

namespace vgr {

const char* group_name(ParamGroup g) {
  switch (g) {
    case ParamGroup::kPosition: return "position";
    case ParamGroup::kPoly: return "polynomial";
    case ParamGroup::kFourier: return "fourier";
    case ParamGroup::kRotation: return "rotation";
    case ParamGroup::kScaling: return "scaling";
    case ParamGroup::kOpacity: return "opacity";
    case ParamGroup::kShDc: return "sh_dc";
    case ParamGroup::kShRest: return "sh_rest";
    case ParamGroup::kLabel: return "label";
    case ParamGroup::kFeature: return "feature";
  }
  return "?";
}

ParamGroup group_of(Block block, Index col) {
  switch (block) {
    case Block::kMu0: return ParamGroup::kPosition;
    case Block::kQ0: return ParamGroup::kRotation;
    case Block::kLogScale: return ParamGroup::kScaling;
    case Block::kOpacity: return ParamGroup::kOpacity;
    case Block::kSh: return col < 3 ? ParamGroup::kShDc : ParamGroup::kShRest;
    case Block::kPoly:
    case Block::kRotPoly: return ParamGroup::kPoly;
    case Block::kFourCos:
    case Block::kFourSin:
    case Block::kRotCos:
    case Block::kRotSin: return ParamGroup::kFourier;
    case Block::kLabel: return ParamGroup::kLabel;
    case Block::kFeature: return ParamGroup::kFeature;
  }
  return ParamGroup::kPosition;
}

namespace {

double anneal(double lr0, double lr_end, long step, long steps) {
  if (steps <= 0 || step <= 0) return lr0;
  if (step >= steps) return lr_end;
  return lr0 * std::pow(lr_end / lr0, double(step) / double(steps));
}

}  // namespace

double lr_schedule(ParamGroup group, long step, long steps, const LearningRates& r) {
  switch (group) {
    case ParamGroup::kPosition: return anneal(r.position, r.position_end, step, steps);
    case ParamGroup::kPoly: return anneal(r.poly, r.poly_end, step, steps);
    case ParamGroup::kFourier: return anneal(r.fourier, r.fourier_end, step, steps);
    case ParamGroup::kRotation: return r.rotation;
    case ParamGroup::kScaling: return r.scaling;
    case ParamGroup::kOpacity: return r.opacity;
    case ParamGroup::kShDc: return r.sh_dc;
    case ParamGroup::kShRest: return r.sh_rest;
    case ParamGroup::kLabel: return r.label;
    case ParamGroup::kFeature: return r.feature;
  }
  return 0.0;
}

GroupRates rates_at(long step, long steps, const LearningRates& rates) {
  GroupRates out{};
  for (int g = 0; g < kParamGroupCount; ++g) out[std::size_t(g)] = lr_schedule(ParamGroup(g), step, steps, rates);
  return out;
}

OptimizerState OptimizerState::for_set(const GaussianSetf& set) {
  OptimizerState s;
  s.m = set.zeros_like();
  s.v = set.zeros_like();
  return s;
}

void OptimizerState::check_matches(const GaussianSetf& set) const {
  visit_blocks(
      [&](Block b, const auto& p, const auto& mm, const auto& vv) {
        if (p.rows() != mm.rows() || p.cols() != mm.cols() || p.rows() != vv.rows() ||
            p.cols() != vv.cols()) {
          throw ContractError(std::string("optimizer moments out of sync for block ") + block_name(b));
        }
      },
      set, m, v);
}

void adam_step(GaussianSetf& set, const GaussianSetf& grads, OptimizerState& state,
               const GroupRates& rates, const AdamOptions& opt) {
  state.check_matches(set);
  visit_blocks(
      [&](Block b, const auto& p, const auto& g) {
        if (p.rows() != g.rows() || p.cols() != g.cols()) {
          throw ContractError(std::string("gradient shape mismatch for block ") + block_name(b));
        }
      },
      set, grads);

  ++state.step;
  const double bc1 = 1.0 - std::pow(opt.beta1, double(state.step));
  const double bc2 = 1.0 - std::pow(opt.beta2, double(state.step));
  const float b1 = float(opt.beta1), b2 = float(opt.beta2);
  Index skipped = 0;

  visit_blocks(
      [&](Block b, auto& p, const auto& g, auto& m, auto& v) {
        const Index cols = p.cols();
        if (cols == 0) return;
        std::vector<float> step_size(static_cast<std::size_t>(cols));
        bool any = false;
        for (Index c = 0; c < cols; ++c) {
          const double lr = rates[std::size_t(group_of(b, c))];
          step_size[std::size_t(c)] = float(lr / bc1);
          any = any || lr != 0.0;
        }
        if (!any) return;
        const float inv_bc2 = float(1.0 / std::sqrt(bc2));
        // Blocks are row-major, so walk rows outermost.
        for (Index r = 0; r < p.rows(); ++r) {
          for (Index c = 0; c < cols; ++c) {
            const float lr = step_size[std::size_t(c)];
            if (lr == 0.0f) continue;
            const float gi = g(r, c);
            if (!std::isfinite(gi)) {
              ++skipped;
              continue;
            }
            float& mi = m(r, c);
            float& vi = v(r, c);
            mi = b1 * mi + (1.0f - b1) * gi;
            vi = b2 * vi + (1.0f - b2) * gi * gi;
            p(r, c) -= lr * mi / (std::sqrt(vi) * inv_bc2 + float(opt.eps));
          }
        }
      },
      set, grads, state.m, state.v);

  for (Index i = 0; i < set.count(); ++i) {
    const float n = set.q0.row(i).norm();
    if (n > 0.0f) set.q0.row(i) /= n;
  }
  state.skipped_nonfinite += skipped;
}

}  // namespace vgr
