#pragma once

// Fitting loop: initialization, per-group Adam with annealed learning rates,
// loss orchestration over sampled frame pairs, and adaptive density control.

#include "vgr/losses.hpp"
#include "vgr/priors.hpp"

#include <array>
#include <functional>
#include <iosfwd>
#include <string>

namespace vgr {

enum class ParamGroup {
  kPosition,
  kPoly,
  kFourier,
  kRotation,
  kScaling,
  kOpacity,
  kShDc,
  kShRest,
  kLabel,
  kFeature,
};
inline constexpr int kParamGroupCount = 10;
const char* group_name(ParamGroup g);

/// Group of column `col` in `block` (SH columns 0..2 are DC, the rest "rest";
/// rotation-dynamics coefficients share the position-basis groups).
ParamGroup group_of(Block block, Index col);

struct LearningRates {
  double position = 6e-5;
  double position_end = 1.6e-6;
  double poly = 1e-3;
  double poly_end = 1e-5;
  double fourier = 1e-3;
  double fourier_end = 1e-5;
  double rotation = 1e-3;
  double scaling = 5e-3;
  double opacity = 0.05;
  double sh_dc = 2.5e-3;
  double sh_rest = 1.25e-4;
  double label = 1e-3;
  double feature = 1e-3;
};

/// lr0 * (lr_end / lr0)^(step / steps) for annealed groups, constant otherwise.
double lr_schedule(ParamGroup group, long step, long steps, const LearningRates& rates);

using GroupRates = std::array<double, kParamGroupCount>;
GroupRates rates_at(long step, long steps, const LearningRates& rates);

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-15;
};

/// Moments mirror the parameter set row for row.
struct OptimizerState {
  GaussianSetf m;
  GaussianSetf v;
  long step = 0;
  Index skipped_nonfinite = 0;

  static OptimizerState for_set(const GaussianSetf& set);
  void check_matches(const GaussianSetf& set) const;
};

/// One bias-corrected Adam update. Groups with a zero rate are left untouched
/// (parameters and moments). Non-finite gradient entries are skipped and
/// counted. q0 rows are renormalized afterwards.
void adam_step(GaussianSetf& set, const GaussianSetf& grads, OptimizerState& state,
               const GroupRates& rates, const AdamOptions& options = {});

// ---------------------------------------------------------------------------

struct FitConfig {
  long steps = 20000;
  long init_count = 100000;
  std::uint64_t seed = 0;
  SetLayout layout;
  int neighbors_k = 8;
  LearningRates rates;
  LossWeights weights;

  long density_interval = 100;
  long warmup = 500;
  long densify_until = -1;  // negative: steps / 2
  long opacity_reset_interval = 3000;
  double opacity_reset_value = 0.01;
  double densify_grad_threshold = 2e-4;
  double prune_opacity = 5e-3;
  double split_scale_fraction = 0.01;
  double scene_extent = 2.0;
  double split_factor = 1.6;
  long max_count = 1000000;

  long arap_samples = 4096;
  long neighbor_rebuild = 500;
  bool arap_label_mask = true;
  double depth_trim = 0.0;
  long log_every = 50;
  RenderOptions render;

  // Recorded by `fit` so checkpoints know their video; 0 when unknown.
  int width = 0;
  int height = 0;
  int frame_count = 0;

  long densify_end() const { return densify_until >= 0 ? densify_until : steps / 2; }
  void validate() const;
};

/// init_count Gaussians uniform in [-1,1]x[-1,1]x[0,1]; isotropic scale equal
/// to the mean distance to the 3 nearest neighbours; opacity 0.1; SH DC from
/// `first_frame` under pi when given, mid-grey otherwise; label 0.5.
GaussianSetf initialize(const FitConfig& config, const ImagePlanef* first_frame = nullptr);

/// Running screen-space gradient statistics between density events.
struct DensityStats {
  Column<float> grad_sum;
  Column<float> visible_count;

  void reset(Index count);
  void add(const SplatGrads<float>& grads);
};

struct DensityEvent {
  Index cloned = 0;
  Index split = 0;
  Index pruned = 0;
  bool reset = false;
  bool densify_skipped = false;
};

/// Clone / split / prune, then an opacity reset when `step` is a multiple of
/// the reset interval. Keeps optimizer moments aligned and clears `stats`.
DensityEvent density_control(GaussianSetf& set, OptimizerState& state, DensityStats& stats,
                             long step, const FitConfig& config, std::mt19937_64& rng);

struct FitResult {
  GaussianSetf set;
  std::vector<LossReport> log;
  std::vector<DensityEvent> events;
  Index skipped_nonfinite = 0;
  long steps_done = 0;
  bool aborted = false;
  std::string abort_reason;
};

struct FitHooks {
  /// Training log lines (CSV with header) are written here when set.
  std::ostream* log = nullptr;
  /// Warnings (missing flow pairs, skipped densification).
  std::function<void(const std::string&)> warn;
  /// Called after every completed step, after density control.
  std::function<void(long step, const GaussianSetf& set)> after_step;
};

inline constexpr const char* kLogHeader = "step,total,render,flow,depth,arap,label,feature,count,lr_pos";

/// Runs the optimization. A non-finite total loss stops training and returns
/// the last parameters with finite loss (`aborted` set).
FitResult fit(const PriorBundle& priors, const FitConfig& config, const FitHooks& hooks = {});
/// Continues from an existing set (zero-step fits return it unchanged).
FitResult fit_from(GaussianSetf set, const PriorBundle& priors, const FitConfig& config,
                   const FitHooks& hooks = {});

}  // namespace vgr
