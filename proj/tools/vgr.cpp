// vgr: command-line front end.
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 numerical failure.

#include "vgr/apps.hpp"
#include "vgr/checkpoint.hpp"
#include "vgr/config.hpp"
#include "vgr/edit_script.hpp"
#include "vgr/synth.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

namespace fs = std::filesystem;
using namespace vgr;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

struct Failure {
  int code;
  std::string message;
};

[[noreturn]] void usage_error(const std::string& message) { throw Failure{kExitUsage, message}; }

void note(const std::string& message) { std::cerr << "vgr: " << message << "\n"; }

// --- options shared by the consumers of a checkpoint ------------------------

struct SceneArgs {
  std::string checkpoint;
  int width = 0;
  int height = 0;
  int threads = 0;
};

void add_scene_args(CLI::App* cmd, SceneArgs& a) {
  cmd->add_option("--checkpoint", a.checkpoint, "fitted checkpoint (.vgrc)")->required();
  cmd->add_option("--width", a.width, "output width (default: the fitted video's)");
  cmd->add_option("--height", a.height, "output height (default: the fitted video's)");
  cmd->add_option("--threads", a.threads, "worker threads (0: automatic)");
}

struct LoadedScene {
  Checkpoint ckpt;
  Camera cam;
  RenderOptions render;
};

LoadedScene load_scene(const SceneArgs& a) {
  LoadedScene s{load_checkpoint(a.checkpoint), {}, {}};
  const int w = a.width > 0 ? a.width : s.ckpt.config.width;
  const int h = a.height > 0 ? a.height : s.ckpt.config.height;
  if (w <= 0 || h <= 0) usage_error("checkpoint does not record the frame size; pass --width and --height");
  s.cam = Camera(w, h);
  s.render = s.ckpt.config.render;
  CliConfig env;
  env.fit.render.threads = a.threads > 0 ? a.threads : s.render.threads;
  apply_environment(env);
  s.render.threads = env.fit.render.threads;
  return s;
}

struct TimeArg {
  double t = 0;
  int frame = -1;
  CLI::Option* t_opt = nullptr;
  CLI::Option* frame_opt = nullptr;
};

void add_time_arg(CLI::App* cmd, TimeArg& a, const std::string& suffix = "") {
  a.t_opt = cmd->add_option("--t" + suffix, a.t, "normalized time in [0, 1]");
  a.frame_opt = cmd->add_option("--frame" + suffix, a.frame, "frame index (needs the fitted frame count)");
  a.t_opt->excludes(a.frame_opt);
}

double resolve_time(const TimeArg& a, const LoadedScene& s) {
  if (a.frame_opt->count() > 0) {
    const int n = s.ckpt.config.frame_count;
    if (n < 2) usage_error("checkpoint does not record the frame count; use --t");
    if (a.frame < 0 || a.frame >= n) usage_error("--frame out of range [0, " + std::to_string(n - 1) + "]");
    return TimeMap(n).time(a.frame);
  }
  if (!(a.t >= 0.0 && a.t <= 1.0)) usage_error("--t must lie in [0, 1]");
  return a.t;
}

bool time_given(const TimeArg& a) { return a.t_opt->count() > 0 || a.frame_opt->count() > 0; }

int frame_count_of(const LoadedScene& s) {
  const int n = s.ckpt.config.frame_count;
  if (n < 2) usage_error("checkpoint does not record the frame count");
  return n;
}

std::string numbered(const char* prefix, int k, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%04d%s", prefix, k, ext);
  return buf;
}

Eigen::Isometry3d pose_from(const std::vector<double>& rotate_deg, const std::vector<double>& translate) {
  const double d = M_PI / 180.0;
  Eigen::Isometry3d T = Eigen::Isometry3d::Identity();
  // Rotate about the scene centre (0, 0, 0.5).
  const Eigen::Vector3d c(0, 0, 0.5);
  const Eigen::Matrix3d R = (Eigen::AngleAxisd(rotate_deg[2] * d, Eigen::Vector3d::UnitZ()) *
                             Eigen::AngleAxisd(rotate_deg[1] * d, Eigen::Vector3d::UnitY()) *
                             Eigen::AngleAxisd(rotate_deg[0] * d, Eigen::Vector3d::UnitX()))
                                .toRotationMatrix();
  T.linear() = R;
  T.translation() = c - R * c + Eigen::Vector3d(translate[0], translate[1], translate[2]);
  return T;
}

std::function<double(double)> parse_remap(const std::string& spec) {
  if (spec == "identity") return [](double s) { return s; };
  if (spec == "ease") return [](double s) { return s * s * (3 - 2 * s); };
  if (spec.rfind("reverse", 0) == 0) return [](double s) { return 1 - s; };
  usage_error("unknown --remap '" + spec + "' (identity, ease, reverse)");
}

// --- eval helpers -----------------------------------------------------------

struct EpeStats {
  double mean = 0;
  double median = 0;
  long pixels = 0;
};

EpeStats epe_stats(std::vector<double>& errors) {
  EpeStats s;
  s.pixels = long(errors.size());
  if (errors.empty()) return s;
  double sum = 0;
  for (double e : errors) sum += e;
  s.mean = sum / double(errors.size());
  const auto mid = errors.begin() + std::ptrdiff_t(errors.size() / 2);
  std::nth_element(errors.begin(), mid, errors.end());
  s.median = *mid;
  if (errors.size() % 2 == 0) {
    s.median = 0.5 * (s.median + *std::max_element(errors.begin(), mid));
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fit and use dynamic 3D Gaussian representations of monocular video"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "show help for every subcommand");

  // fit ---------------------------------------------------------------------
  auto* fit_cmd = app.add_subcommand("fit", "optimize a Gaussian set against frames and priors");
  std::string config_path;
  fit_cmd->add_option("--config", config_path, "config file (key = value, [section] headers)");
  std::map<std::string, std::string> overrides;
  std::map<std::string, CLI::Option*> override_opts;
  for (const auto& k : config_keys()) {
    override_opts[k.key] = fit_cmd->add_option("--" + k.key, overrides[k.key], "[" + k.section + "] " + k.help);
  }

  // render / depth / feature / track ------------------------------------------
  SceneArgs render_scene;
  TimeArg render_time;
  std::string render_out, render_dir;
  auto* render_cmd = app.add_subcommand("render", "render color frames");
  add_scene_args(render_cmd, render_scene);
  add_time_arg(render_cmd, render_time);
  render_cmd->add_option("--out", render_out, "PNG for a single time");
  render_cmd->add_option("--out-dir", render_dir, "render every fitted frame into this directory");

  SceneArgs depth_scene;
  TimeArg depth_time;
  std::string depth_out;
  auto* depth_cmd = app.add_subcommand("depth", "render a depth map (PFM)");
  add_scene_args(depth_cmd, depth_scene);
  add_time_arg(depth_cmd, depth_time);
  depth_cmd->add_option("--out", depth_out, "output .pfm")->required();

  SceneArgs feature_scene;
  TimeArg feature_time;
  std::string feature_out;
  auto* feature_cmd = app.add_subcommand("feature", "render a feature map (VGRF)");
  add_scene_args(feature_cmd, feature_scene);
  add_time_arg(feature_cmd, feature_time);
  feature_cmd->add_option("--out", feature_out, "output .vgrf")->required();

  SceneArgs track_scene;
  TimeArg track_from, track_to;
  std::string track_out, track_alpha;
  auto* track_cmd = app.add_subcommand("track", "dense correspondences between two times (.flo)");
  add_scene_args(track_cmd, track_scene);
  add_time_arg(track_cmd, track_from, "1");
  add_time_arg(track_cmd, track_to, "2");
  track_cmd->add_option("--out", track_out, "output .flo")->required();
  track_cmd->add_option("--alpha-out", track_alpha, "accumulated alpha at the first time (.pfm)");

  // editing -------------------------------------------------------------------
  std::string geom_ckpt, geom_script, geom_out;
  auto* geom_cmd = app.add_subcommand("edit-geom", "apply a geometry edit script");
  geom_cmd->add_option("--checkpoint", geom_ckpt, "input checkpoint")->required();
  geom_cmd->add_option("--script", geom_script, "edit script")->required();
  geom_cmd->add_option("--out", geom_out, "output checkpoint")->required();

  SceneArgs app_scene;
  TimeArg app_time;
  std::string app_image, app_out;
  AppearanceEditOptions app_opts;
  auto* app_cmd = app.add_subcommand("edit-appearance", "propagate an edited frame to the color coefficients");
  add_scene_args(app_cmd, app_scene);
  add_time_arg(app_cmd, app_time);
  app_cmd->add_option("--image", app_image, "edited frame (PNG)")->required();
  app_cmd->add_option("--out", app_out, "output checkpoint")->required();
  app_cmd->add_option("--max-steps", app_opts.max_steps, "optimizer step limit");

  // interpolation / novel views / stereo ----------------------------------------
  SceneArgs interp_scene;
  int interp_count = 0;
  int interp_factor = 2;
  std::string interp_remap = "identity", interp_dir;
  auto* interp_cmd = app.add_subcommand("interp", "render at a denser or remapped time grid");
  add_scene_args(interp_cmd, interp_scene);
  interp_cmd->add_option("--count", interp_count, "number of output frames");
  interp_cmd->add_option("--factor", interp_factor, "temporal upsampling factor when --count is absent");
  interp_cmd->add_option("--remap", interp_remap, "identity, ease or reverse");
  interp_cmd->add_option("--out-dir", interp_dir, "output directory")->required();

  SceneArgs nvs_scene;
  TimeArg nvs_time;
  std::vector<double> nvs_rotate{0, 0, 0}, nvs_translate{0, 0, 0};
  std::string nvs_out, nvs_dir;
  auto* nvs_cmd = app.add_subcommand("nvs", "render under a rigid scene transform");
  add_scene_args(nvs_cmd, nvs_scene);
  add_time_arg(nvs_cmd, nvs_time);
  nvs_cmd->add_option("--rotate", nvs_rotate, "rotation about x y z in degrees")->expected(3);
  nvs_cmd->add_option("--translate", nvs_translate, "translation x y z")->expected(3);
  nvs_cmd->add_option("--out", nvs_out, "PNG for a single time");
  nvs_cmd->add_option("--out-dir", nvs_dir, "render every fitted frame into this directory");

  SceneArgs stereo_scene;
  TimeArg stereo_time;
  double stereo_baseline = 0.05, stereo_toe = 0.0;
  std::string stereo_left, stereo_right, stereo_dir;
  auto* stereo_cmd = app.add_subcommand("stereo", "render left/right views");
  add_scene_args(stereo_cmd, stereo_scene);
  add_time_arg(stereo_cmd, stereo_time);
  stereo_cmd->add_option("--baseline", stereo_baseline, "baseline in camera units");
  stereo_cmd->add_option("--toe-in", stereo_toe, "total toe-in angle in degrees");
  stereo_cmd->add_option("--left", stereo_left, "left PNG for a single time");
  stereo_cmd->add_option("--right", stereo_right, "right PNG for a single time");
  stereo_cmd->add_option("--out-dir", stereo_dir, "left_%04d.png / right_%04d.png for every frame");

  // synth / eval ----------------------------------------------------------------
  SceneSpec synth_spec;
  std::vector<double> synth_velocity{synth_spec.velocity.x(), synth_spec.velocity.y(), synth_spec.velocity.z()};
  std::string synth_out;
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic fixture with exact priors");
  synth_cmd->add_option("--fixture", synth_spec.fixture, "fixture name")->check(CLI::IsMember(fixture_names()));
  synth_cmd->add_option("--out", synth_out, "output directory")->required();
  synth_cmd->add_option("--width", synth_spec.width, "frame width");
  synth_cmd->add_option("--height", synth_spec.height, "frame height");
  synth_cmd->add_option("--frames", synth_spec.frames, "frame count");
  synth_cmd->add_option("--velocity", synth_velocity, "foreground velocity x y z")->expected(3);
  synth_cmd->add_option("--turns", synth_spec.turns, "rotator turns over the clip");
  synth_cmd->add_option("--feature-dim", synth_spec.feature_dim, "feature channels (0: none)");
  synth_cmd->add_option("--seed", synth_spec.seed, "random seed");

  std::string eval_frames, eval_reference, eval_flow_pred, eval_flow_gt, eval_masks;
  SceneArgs eval_scene;
  auto* eval_cmd = app.add_subcommand("eval", "PSNR between frame sets and flow end-point error");
  eval_cmd->add_option("--frames", eval_frames, "frames to score (PNG directory)");
  eval_cmd->add_option("--reference", eval_reference, "reference frames (PNG directory)");
  eval_cmd->add_option("--flow-pred", eval_flow_pred, "predicted flow directory");
  eval_cmd->add_option("--flow-gt", eval_flow_gt, "ground-truth flow directory");
  eval_cmd->add_option("--masks", eval_masks, "restrict EPE to mask > 0.5 at the source frame");
  eval_cmd->add_option("--checkpoint", eval_scene.checkpoint,
                       "render frames / tracks from this checkpoint instead of --frames / --flow-pred");
  eval_cmd->add_option("--threads", eval_scene.threads, "worker threads (0: automatic)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "vgr: usage error: " << e.what() << " (see --help)\n";
    return kExitUsage;
  }

  try {
    if (fit_cmd->parsed()) {
      CliConfig cfg;
      if (!config_path.empty()) load_config_file(cfg, config_path);
      for (const auto& k : config_keys()) {
        if (override_opts[k.key]->count() > 0) set_config_value(cfg, k.key, overrides[k.key]);
      }
      apply_environment(cfg);
      if (cfg.paths.frames.empty()) usage_error("fit: --frames is required");
      if (!fs::is_directory(cfg.paths.frames)) usage_error("fit: frames directory not found: " + cfg.paths.frames.string());
      for (const fs::path* p : {&cfg.paths.flow, &cfg.paths.depth, &cfg.paths.masks, &cfg.paths.features}) {
        if (!p->empty() && !fs::is_directory(*p)) usage_error("fit: prior directory not found: " + p->string());
      }
      if (cfg.out.empty()) cfg.out = "checkpoint.vgrc";
      cfg.fit.validate();

      const PriorBundle priors = load_priors(cfg.paths);
      cfg.fit.width = priors.width();
      cfg.fit.height = priors.height();
      cfg.fit.frame_count = int(priors.frames.size());
      if (priors.feature_dim() > 0 && cfg.fit.layout.feature_dim == 0) cfg.fit.layout.feature_dim = priors.feature_dim();
      std::cerr << "# effective configuration\n" << config_to_text(cfg) << "\n";

      std::ofstream log_file;
      if (!cfg.log.empty()) {
        log_file.open(cfg.log);
        if (!log_file) throw Failure{kExitData, "cannot write log file " + cfg.log};
      }
      FitHooks hooks;
      hooks.log = cfg.log.empty() ? &std::cerr : &log_file;
      hooks.warn = [](const std::string& w) { note("warning: " + w); };
      const FitResult result = fit(priors, cfg.fit, hooks);
      save_checkpoint(cfg.out, result.set, cfg.fit);
      if (result.skipped_nonfinite > 0) {
        note("skipped " + std::to_string(result.skipped_nonfinite) + " non-finite gradient entries");
      }
      if (result.aborted) {
        note("numerical failure at step " + std::to_string(result.steps_done) + ": " + result.abort_reason +
             "; last good parameters written to " + cfg.out);
        return kExitNumerical;
      }
      note("wrote " + cfg.out + " (" + std::to_string(result.set.count()) + " Gaussians)");
    } else if (render_cmd->parsed()) {
      const LoadedScene s = load_scene(render_scene);
      if (!render_dir.empty()) {
        if (time_given(render_time)) usage_error("render: --out-dir renders every frame; drop --t/--frame");
        std::vector<ImagePlanef> frames;
        const TimeMap tm(frame_count_of(s));
        for (int k = 0; k < tm.frame_count(); ++k) frames.push_back(render_color(s.ckpt.set, tm.time(k), s.cam, s.render));
        save_frames(render_dir, frames);
      } else {
        if (render_out.empty()) usage_error("render: pass --out or --out-dir");
        write_png(render_out, render_color(s.ckpt.set, resolve_time(render_time, s), s.cam, s.render));
      }
    } else if (depth_cmd->parsed()) {
      const LoadedScene s = load_scene(depth_scene);
      write_pfm(depth_out, render_depth(s.ckpt.set, resolve_time(depth_time, s), s.cam, s.render));
    } else if (feature_cmd->parsed()) {
      const LoadedScene s = load_scene(feature_scene);
      if (s.ckpt.set.layout.feature_dim == 0) usage_error("feature: checkpoint has no feature channels");
      write_feature(feature_out, render_feature(s.ckpt.set, resolve_time(feature_time, s), s.cam, s.render));
    } else if (track_cmd->parsed()) {
      const LoadedScene s = load_scene(track_scene);
      if (!time_given(track_from) || !time_given(track_to)) usage_error("track: pass --t1/--frame1 and --t2/--frame2");
      const TrackResult r = track(s.ckpt.set, resolve_time(track_from, s), resolve_time(track_to, s), s.cam, s.render);
      write_flo(track_out, r.flow);
      if (!track_alpha.empty()) write_pfm(track_alpha, r.alpha);
    } else if (geom_cmd->parsed()) {
      const Checkpoint ckpt = load_checkpoint(geom_ckpt);
      const EditResult r = edit_geometry(ckpt.set, load_edit_script(geom_script));
      for (const auto& w : r.warnings) note("warning: " + w);
      if (r.stereo) {
        note("script sets stereo_baseline " + std::to_string(r.stereo->baseline) +
             "; render it with `vgr stereo --baseline`");
      }
      save_checkpoint(geom_out, r.set, ckpt.config);
    } else if (app_cmd->parsed()) {
      const LoadedScene s = load_scene(app_scene);
      const ImagePlanef edited = read_png(app_image);
      if (edited.width != s.cam.width || edited.height != s.cam.height) {
        throw Failure{kExitData, "edit-appearance: image size differs from the render size"};
      }
      app_opts.render = s.render;
      const AppearanceEditResult r = edit_appearance(s.ckpt.set, resolve_time(app_time, s), edited, app_opts);
      if (r.aborted) {
        note("numerical failure after " + std::to_string(r.steps) + " steps; checkpoint not written");
        return kExitNumerical;
      }
      note("loss " + std::to_string(r.initial_loss) + " -> " + std::to_string(r.final_loss) + " in " +
           std::to_string(r.steps) + " steps");
      save_checkpoint(app_out, r.set, s.ckpt.config);
    } else if (interp_cmd->parsed()) {
      const LoadedScene s = load_scene(interp_scene);
      int count = interp_count;
      if (count <= 0) {
        if (interp_factor < 1) usage_error("interp: --factor must be >= 1");
        count = (frame_count_of(s) - 1) * interp_factor + 1;
      }
      if (count < 2) usage_error("interp: need at least two output frames");
      save_frames(interp_dir, interpolate(s.ckpt.set, parse_remap(interp_remap), count, s.cam, s.render));
    } else if (nvs_cmd->parsed()) {
      const LoadedScene s = load_scene(nvs_scene);
      const Eigen::Isometry3d T = pose_from(nvs_rotate, nvs_translate);
      if (!nvs_dir.empty()) {
        std::vector<ImagePlanef> frames;
        const TimeMap tm(frame_count_of(s));
        for (int k = 0; k < tm.frame_count(); ++k) {
          frames.push_back(render_transformed(s.ckpt.set, T, tm.time(k), s.cam, s.render));
        }
        save_frames(nvs_dir, frames);
      } else {
        if (nvs_out.empty()) usage_error("nvs: pass --out or --out-dir");
        write_png(nvs_out, render_transformed(s.ckpt.set, T, resolve_time(nvs_time, s), s.cam, s.render));
      }
    } else if (stereo_cmd->parsed()) {
      const LoadedScene s = load_scene(stereo_scene);
      if (!stereo_dir.empty()) {
        fs::create_directories(stereo_dir);
        const TimeMap tm(frame_count_of(s));
        for (int k = 0; k < tm.frame_count(); ++k) {
          const StereoFrames p = stereo_pair(s.ckpt.set, tm.time(k), s.cam, stereo_baseline, stereo_toe, s.render);
          write_png(fs::path(stereo_dir) / numbered("left_", k, ".png"), p.left);
          write_png(fs::path(stereo_dir) / numbered("right_", k, ".png"), p.right);
        }
      } else {
        if (stereo_left.empty() || stereo_right.empty()) usage_error("stereo: pass --left and --right, or --out-dir");
        const StereoFrames p =
            stereo_pair(s.ckpt.set, resolve_time(stereo_time, s), s.cam, stereo_baseline, stereo_toe, s.render);
        write_png(stereo_left, p.left);
        write_png(stereo_right, p.right);
      }
    } else if (synth_cmd->parsed()) {
      synth_spec.velocity = Eigen::Vector3d(synth_velocity[0], synth_velocity[1], synth_velocity[2]);
      write_scene(synth(synth_spec), synth_out);
      note("wrote fixture " + synth_spec.fixture + " to " + synth_out);
    } else if (eval_cmd->parsed()) {
      const bool use_ckpt = !eval_scene.checkpoint.empty();
      const bool want_psnr = !eval_reference.empty();
      const bool want_epe = !eval_flow_gt.empty();
      if (!want_psnr && !want_epe) usage_error("eval: pass --reference and/or --flow-gt");
      if (want_psnr && !use_ckpt && eval_frames.empty()) usage_error("eval: --reference needs --frames or --checkpoint");
      if (want_epe && !use_ckpt && eval_flow_pred.empty()) usage_error("eval: --flow-gt needs --flow-pred or --checkpoint");

      std::optional<LoadedScene> scene;
      std::vector<ImagePlanef> reference;
      if (want_psnr) reference = load_frames(eval_reference);
      if (use_ckpt) {
        SceneArgs a = eval_scene;
        scene = load_scene(a);
      }

      std::string summary;
      char buf[128];
      if (want_psnr) {
        std::vector<ImagePlanef> scored;
        if (use_ckpt) {
          const TimeMap tm(int(reference.size()));
          for (int k = 0; k < tm.frame_count(); ++k) {
            scored.push_back(render_color(scene->ckpt.set, tm.time(k), scene->cam, scene->render));
          }
        } else {
          scored = load_frames(eval_frames);
        }
        if (scored.size() != reference.size()) throw Failure{kExitData, "eval: frame counts differ"};
        double sum = 0;
        for (std::size_t k = 0; k < scored.size(); ++k) sum += psnr_8bit(scored[k], reference[k]);
        std::snprintf(buf, sizeof buf, "psnr_db=%.4f frames=%zu", sum / double(scored.size()), scored.size());
        summary += buf;
      }
      if (want_epe) {
        std::vector<double> errors;
        long flows = 0;
        std::map<int, ImagePlanef> masks;
        for (const auto& entry : fs::directory_iterator(eval_flow_gt)) {
          const auto pair = parse_flow_file_name(entry.path().filename().string());
          if (!pair) continue;
          const ImagePlanef gt = read_flo(entry.path());
          ImagePlanef pred;
          if (use_ckpt) {
            const int n = scene->ckpt.config.frame_count;
            if (n < 2) usage_error("eval: checkpoint does not record the frame count");
            const TimeMap tm(n);
            pred = track(scene->ckpt.set, tm.time(pair->first), tm.time(pair->second), scene->cam, scene->render).flow;
          } else {
            pred = read_flo(fs::path(eval_flow_pred) / entry.path().filename());
          }
          require_same_shape(pred, gt, "eval flow");
          const ImagePlanef* mask = nullptr;
          if (!eval_masks.empty()) {
            auto it = masks.find(pair->first);
            if (it == masks.end()) {
              it = masks.emplace(pair->first, read_png(fs::path(eval_masks) / numbered("", pair->first, ".png"))).first;
            }
            mask = &it->second;
          }
          for (int y = 0; y < gt.height; ++y) {
            for (int x = 0; x < gt.width; ++x) {
              if (mask && (*mask)(x, y, 0) <= 0.5f) continue;
              const double du = double(pred(x, y, 0)) - gt(x, y, 0);
              const double dv = double(pred(x, y, 1)) - gt(x, y, 1);
              errors.push_back(std::sqrt(du * du + dv * dv));
            }
          }
          ++flows;
        }
        if (flows == 0) throw Failure{kExitData, "eval: no flow_%04d_%04d.flo files in " + eval_flow_gt};
        const EpeStats st = epe_stats(errors);
        std::snprintf(buf, sizeof buf, "%sepe_mean_px=%.4f epe_median_px=%.4f flows=%ld pixels=%ld",
                      summary.empty() ? "" : " ", st.mean, st.median, flows, st.pixels);
        summary += buf;
      }
      std::cout << summary << std::endl;
    }
  } catch (const Failure& f) {
    std::cerr << "vgr: " << (f.code == kExitUsage ? "usage error: " : "error: ") << f.message << "\n";
    return f.code;
  } catch (const ContractError& e) {
    std::cerr << "vgr: usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericalError& e) {
    std::cerr << "vgr: numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "vgr: data error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
