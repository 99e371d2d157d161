// Acceptance checks. Prints one PASS/FAIL line per criterion.
//
//   vgr_acceptance            run all criteria
//   vgr_acceptance 1 3 7      run a subset

#include "support/gradcheck.hpp"
#include "support/reference_rasterizer.hpp"
#include "support/scenes.hpp"

#include "vgr/apps.hpp"
#include "vgr/checkpoint.hpp"
#include "vgr/config.hpp"
#include "vgr/edit_script.hpp"
#include "vgr/synth.hpp"
#include "vgr/training.hpp"

#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <iostream>
#include <set>
#include <sstream>

#include <unistd.h>

using namespace vgr;
using namespace vgr::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// --- 1: rasterizer vs naive oracle -----------------------------------------

constexpr double kOracleTol = 1e-5;
constexpr double kBoundaryGuard = 1e-5;     // |power - cutoff| band where float and double may disagree
constexpr double kTransmittanceGuard = 1e-3;  // scenes that approach early stop are redrawn

// True when float rounding could change which Gaussians contribute.
bool scene_is_ambiguous(const SplatInputs<float>& in, int w, int h) {
  const ReferenceImage deep = reference_render(in, w, h, {3.0, 0.3, 0.0, 1 << 30});
  for (double a : deep.alpha) {
    if (1.0 - a < kTransmittanceGuard) return true;
  }
  const double cutoff = 4.5;
  for (Index i = 0; i < in.count(); ++i) {
    const auto p = project_gaussian<double>(in.positions.row(i).transpose().cast<double>(),
                                            in.rotations.row(i).transpose().cast<double>(),
                                            in.log_scales.row(i).transpose().cast<double>(), Camera(w, h), {});
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const Vec2<double> d(x + 0.5 - p.mu2d.x(), y + 0.5 - p.mu2d.y());
        const double power = 0.5 * d.dot(p.inv_cov2d * d);
        if (std::abs(power - cutoff) < kBoundaryGuard) return true;
      }
    }
  }
  return false;
}

Outcome criterion_1() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  const int w = 64, h = 64, d = 3;
  RenderOptions o;
  o.threads = 1;
  int scenes = 0, redrawn = 0;
  double worst = 0;
  while (scenes < 50) {
    const Index n = std::uniform_int_distribution<Index>(1, 100)(rng);
    const SplatInputs<float> in = random_inputs<float>(rng, n, d);
    if (scene_is_ambiguous(in, w, h)) {
      ++redrawn;
      continue;
    }
    ++scenes;
    const ReferenceImage ref = reference_render(in, w, h);
    auto compare = [&](const auto& out) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          auto cmp = [&](Attribute a, int c, int rc) {
            worst = std::max(worst, std::abs(double(out.plane(a)(x, y, c)) - ref.at(x, y, rc)));
          };
          for (int c = 0; c < 3; ++c) cmp(kColor, c, c);
          cmp(kDepth, 0, 3);
          cmp(kFlow, 0, 4);
          cmp(kFlow, 1, 5);
          cmp(kLabel, 0, 6);
          for (int c = 0; c < d; ++c) cmp(kFeature, c, 7 + c);
          worst = std::max(worst, std::abs(double(out.plane(kAlpha)(x, y)) - ref.alpha[std::size_t(y) * w + x]));
        }
      }
    };
    const AttributeMask all = kColor | kDepth | kFlow | kLabel | kFeature;
    compare(rasterize(in, Camera(w, h), all, o));
    compare(rasterize(cast_inputs<double>(in), Camera(w, h), all, o));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {worst <= kOracleTol && secs < 30.0,
          "max abs diff " + fmt("%.3g", worst) + " over 50 scenes, float and double (" + std::to_string(redrawn) + " redrawn), " +
              fmt("%.1f s", secs)};
}

// --- 2: analytic gradients vs central differences ----------------------------

Outcome criterion_2() {
  const auto start = std::chrono::steady_clock::now();
  constexpr double kStep = 1e-4, kRtol = 1e-3, kAtol = 1e-5;
  std::mt19937_64 rng(202);
  RenderOptions o;
  o.kernel_extent = 8.0;  // keeps the loss smooth across the truncation edge
  o.threads = 1;
  const Camera cam(24, 24);
  Index checked = 0, failed = 0;
  std::string worst;
  double worst_excess = 0;
  for (int scene = 0; scene < 10; ++scene) {
    SetLayout layout;
    layout.sh_degree = 1;
    layout.poly_order = 2;
    layout.fourier_order = 2;
    layout.feature_dim = 2;
    layout.rotation_dynamics = scene % 2 == 1;
    layout.fourier_mode = scene % 3 == 2 ? FourierMode::kLiteral : FourierMode::kFullPeriod;
    const Index n = std::uniform_int_distribution<Index>(1, 20)(rng);
    const GaussianSet<double> set = random_set<double>(rng, n, layout);
    const AttributeMask attrs = kColor | kDepth | kFlow | kLabel | kFeature;
    const PlaneWeights weights = PlaneWeights::random(rng, cam, attrs, layout.feature_dim);
    const GradCheckReport r = gradcheck_set(set, 0.3, 0.8, cam, attrs, o, weights, kStep, kRtol, kAtol);
    checked += r.checked;
    failed += r.failed;
    if (r.worst_excess > worst_excess) {
      worst_excess = r.worst_excess;
      worst = r.worst;
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::string detail = std::to_string(checked) + " parameters, " + std::to_string(failed) + " outside tolerance, " +
                       fmt("%.1f s", secs);
  if (!worst.empty()) detail += "; worst " + worst;
  return {failed == 0 && secs < 120.0, detail};
}

// --- 3: loss suite -------------------------------------------------------------

Outcome criterion_3() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(303);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::string> failures;

  // Hand example: median 2, mean absolute deviation 2/3.
  {
    ImagePlane<double> d(3, 1, 1);
    d.values << 1.0, 2.0, 3.0;
    const ImagePlane<double> tau = depth_tau(d);
    const double want[] = {-1.5, 0.0, 1.5};
    for (int i = 0; i < 3; ++i) {
      if (std::abs(tau.values(i, 0) - want[i]) > 1e-12) failures.push_back("tau hand example");
    }
  }

  // Scale / shift invariance.
  double invariance = 0;
  for (int trial = 0; trial < 100; ++trial) {
    ImagePlane<double> r(16, 12, 1), p(16, 12, 1);
    for (Index i = 0; i < r.values.size(); ++i) {
      r.values(i, 0) = g(rng);
      p.values(i, 0) = g(rng);
    }
    const double a = 0.1 + 10 * u(rng), b = 20 * (u(rng) - 0.5);
    const double c = 0.1 + 10 * u(rng), e = 20 * (u(rng) - 0.5);
    ImagePlane<double> r2 = r, p2 = p;
    r2.values = (r.values.array() * a + b).matrix();
    p2.values = (p.values.array() * c + e).matrix();
    const double base = depth_loss<double>(r, p, nullptr, 0.0).value;
    invariance = std::max(invariance, std::abs(depth_loss<double>(r2, p2, nullptr, 0.0).value - base));
  }
  if (invariance > 1e-6) failures.push_back("depth loss invariance " + fmt("%.3g", invariance));

  // ARAP under global rigid motions.
  double arap_worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 200;
    Points3<double> p1(n, 3);
    for (Index i = 0; i < n; ++i) p1.row(i) << g(rng), g(rng), g(rng);
    const Eigen::Quaterniond q = Eigen::Quaterniond(g(rng), g(rng), g(rng), g(rng)).normalized();
    const Eigen::Vector3d t(g(rng), g(rng), g(rng));
    Points3<double> p2 = (p1 * q.toRotationMatrix().transpose()).rowwise() + t.transpose();
    const NeighborGraph graph = build_neighbors(p1, 8);
    std::vector<Index> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), Index(0));
    arap_worst = std::max(arap_worst, arap_positions<double>(p1, p2, graph, all).value);
  }
  if (arap_worst > 1e-9) failures.push_back("ARAP under rigid motion " + fmt("%.3g", arap_worst));

  // Kabsch recovery and proper rotations.
  double kabsch_worst = 0;
  bool improper = false;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Matrix3d r = Eigen::Quaterniond(g(rng), g(rng), g(rng), g(rng)).normalized().toRotationMatrix();
    std::vector<Vec3<double>> src(10), dst(10), noisy(10);
    for (int k = 0; k < 10; ++k) {
      src[std::size_t(k)] = Vec3<double>(g(rng), g(rng), g(rng));
      dst[std::size_t(k)] = r * src[std::size_t(k)];
      noisy[std::size_t(k)] = Vec3<double>(g(rng), g(rng), g(rng));
    }
    const KabschResult k = kabsch_rotation(dst, src);  // dst = R src
    kabsch_worst = std::max(kabsch_worst, (k.rotation - r).norm());
    // Mirrored and random targets must still give det = +1.
    std::vector<Vec3<double>> mirrored = dst;
    for (auto& v : mirrored) v.x() = -v.x();
    for (const auto* target : {&dst, &mirrored, &noisy}) {
      if (std::abs(kabsch_rotation(src, *target).rotation.determinant() - 1.0) > 1e-9) improper = true;
    }
  }
  if (kabsch_worst > 1e-6) failures.push_back("Kabsch Frobenius error " + fmt("%.3g", kabsch_worst));
  if (improper) failures.push_back("Kabsch returned det != +1");

  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::string detail = "invariance " + fmt("%.2g", invariance) + ", arap " + fmt("%.2g", arap_worst) +
                       ", kabsch " + fmt("%.2g", kabsch_worst) + ", " + fmt("%.1f s", secs);
  for (const auto& f : failures) detail += "; " + f;
  return {failures.empty() && secs < 30.0, detail};
}

// --- 4 / 5: synthetic fits -----------------------------------------------------

struct FitMetrics {
  double psnr = 0;
  double median_epe = 0;
  double depth_mse = 0;
  double z_std = 0;
  double seconds = 0;
  Index count = 0;
};

FitMetrics evaluate_fit(const SynthScene& scene, const GaussianSetf& set, const RenderOptions& render) {
  FitMetrics m;
  const Camera cam = scene.camera();
  const int frames = int(scene.priors.frames.size());
  for (int k = 0; k < frames; ++k) {
    m.psnr += psnr_8bit(render_color(set, scene.time(k), cam, render), scene.priors.frames[std::size_t(k)]);
    const ImagePlanef tau_r = depth_tau(render_depth(set, scene.time(k), cam, render));
    const ImagePlanef tau_g = depth_tau(scene.priors.depths.at(k));
    m.depth_mse += (tau_r.values - tau_g.values).squaredNorm() / double(tau_r.pixel_count());
  }
  m.psnr /= frames;
  m.depth_mse /= frames;

  std::vector<double> epe;
  for (const auto& [pair, gt] : scene.priors.flows) {
    const ImagePlanef pred = track(set, scene.time(pair.first), scene.time(pair.second), cam, render).flow;
    const ImagePlanef& mask = scene.priors.masks.at(pair.first);
    for (int y = 0; y < cam.height; ++y) {
      for (int x = 0; x < cam.width; ++x) {
        if (mask(x, y) <= 0.5f) continue;
        epe.push_back(std::hypot(double(pred(x, y, 0)) - gt(x, y, 0), double(pred(x, y, 1)) - gt(x, y, 1)));
      }
    }
  }
  if (!epe.empty()) {
    std::sort(epe.begin(), epe.end());
    const std::size_t mid = epe.size() / 2;
    m.median_epe = epe.size() % 2 ? epe[mid] : 0.5 * (epe[mid - 1] + epe[mid]);
  }

  double mean = 0;
  for (Index i = 0; i < set.count(); ++i) mean += set.mu0(i, 2);
  mean /= double(std::max<Index>(set.count(), 1));
  double var = 0;
  for (Index i = 0; i < set.count(); ++i) var += (set.mu0(i, 2) - mean) * (set.mu0(i, 2) - mean);
  m.z_std = std::sqrt(var / double(std::max<Index>(set.count(), 1)));
  m.count = set.count();
  return m;
}

FitMetrics run_fit(const SynthScene& scene, const FitConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const FitResult r = fit(scene.priors, config);
  FitMetrics m = evaluate_fit(scene, r.set, config.render);
  m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return m;
}

std::string describe(const FitMetrics& m) {
  return "psnr " + fmt("%.2f dB", m.psnr) + ", median EPE " + fmt("%.3f px", m.median_epe) + ", depth MSE " +
         fmt("%.4f", m.depth_mse) + ", z std " + fmt("%.4f", m.z_std) + ", " + std::to_string(m.count) +
         " Gaussians, " + fmt("%.0f s", m.seconds);
}

Outcome criterion_4() {
  SceneSpec spec;
  spec.fixture = "rigid_translate";
  spec.width = 96;
  spec.height = 96;
  spec.frames = 16;
  const SynthScene scene = synth(spec);
  FitConfig config;
  config.steps = 3000;
  config.init_count = 20000;
  const FitMetrics m = run_fit(scene, config);
  const bool pass = m.psnr >= 30.0 && m.median_epe <= 1.0 && m.depth_mse <= 0.05;
  return {pass, describe(m) + (m.seconds > 600 ? " (over the 10 min runtime target)" : "")};
}

Outcome criterion_5() {
  SceneSpec spec;
  spec.fixture = "articulated";
  spec.width = 64;
  spec.height = 64;
  spec.frames = 16;
  const SynthScene scene = synth(spec);
  FitConfig config;
  config.steps = 1500;
  config.init_count = 10000;
  const FitMetrics full = run_fit(scene, config);
  FitConfig no_arap = config;
  no_arap.weights.arap = 0.0;
  const FitMetrics without_arap = run_fit(scene, no_arap);
  FitConfig no_depth = config;
  no_depth.weights.depth = 0.0;
  const FitMetrics without_depth = run_fit(scene, no_depth);

  const bool arap_ok = without_arap.median_epe > full.median_epe;
  const bool depth_ok = without_depth.z_std < 0.2 * full.z_std;
  std::string detail = "full: " + describe(full) + " | no arap: EPE " + fmt("%.3f", without_arap.median_epe) +
                       (arap_ok ? " (higher)" : " (NOT higher)") + " | no depth: z std " +
                       fmt("%.4f", without_depth.z_std) + " vs 20% bound " + fmt("%.4f", 0.2 * full.z_std);
  return {arap_ok && depth_ok, detail};
}

// --- 6: schedule ---------------------------------------------------------------

Outcome criterion_6() {
  std::vector<std::string> failures;
  const LearningRates rates;
  for (long steps : {1L, 3000L, 20000L, 30000L}) {
    if (lr_schedule(ParamGroup::kPosition, 0, steps, rates) != 6e-5) failures.push_back("lr(position, 0)");
    if (lr_schedule(ParamGroup::kPosition, steps, steps, rates) != 1.6e-6) failures.push_back("lr(position, steps)");
  }

  constexpr double kOpacityTol = 1e-7;  // float round trip of logit(0.01)
  std::mt19937_64 rng(606);
  FitConfig config;
  config.steps = 20000;
  SetLayout layout;
  GaussianSetf set = random_set<float>(rng, 500, layout);
  for (Index i = 0; i < set.count(); ++i) set.opacity_logit[i] = float(2.0 + i % 7);
  OptimizerState state = OptimizerState::for_set(set);
  DensityStats stats;
  stats.reset(set.count());
  double max_after = 0;
  int resets = 0;
  for (long step : {3000L, 6000L, 9000L}) {
    for (Index i = 0; i < set.count(); ++i) set.opacity_logit[i] = float(2.0 + i % 7);
    const DensityEvent ev = density_control(set, state, stats, step, config, rng);
    resets += ev.reset;
    double mx = 0;
    for (Index i = 0; i < set.count(); ++i) mx = std::max(mx, double(set.opacity(i)));
    max_after = std::max(max_after, std::abs(mx - 0.01));
    if (!ev.reset || std::abs(mx - 0.01) > kOpacityTol) failures.push_back("reset at step " + std::to_string(step));
  }
  // Steps between resets leave opacities alone.
  for (Index i = 0; i < set.count(); ++i) set.opacity_logit[i] = 3.0f;
  if (density_control(set, state, stats, 3100, config, rng).reset) failures.push_back("reset at step 3100");

  std::string detail = "lr endpoints exact; " + std::to_string(resets) + " resets, max |opacity - 0.01| " +
                       fmt("%.2g", max_after);
  for (const auto& f : failures) detail += "; " + f;
  return {failures.empty(), detail};
}

// --- 7: file formats -------------------------------------------------------------

float random_float(std::mt19937_64& rng) {
  // Random bit patterns, excluding NaN and infinity.
  for (;;) {
    const auto bits = std::uint32_t(rng());
    float f;
    std::memcpy(&f, &bits, sizeof f);
    if (std::isfinite(f)) return f;
  }
}

ImagePlanef random_plane(std::mt19937_64& rng, int max_side, int channels) {
  std::uniform_int_distribution<int> side(1, max_side);
  ImagePlanef p(side(rng), side(rng), channels);
  for (Index i = 0; i < p.values.size(); ++i) p.values.data()[i] = random_float(rng);
  return p;
}

std::string file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome criterion_7() {
  const auto start = std::chrono::steady_clock::now();
  const fs::path dir = fs::temp_directory_path() / ("vgr_roundtrip_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  std::mt19937_64 rng(707);
  int mismatches[4] = {0, 0, 0, 0};
  for (int trial = 0; trial < 1000; ++trial) {
    {
      const ImagePlanef p = random_plane(rng, 40, 2);
      write_flo(dir / "a.flo", p);
      const ImagePlanef q = read_flo(dir / "a.flo");
      write_flo(dir / "b.flo", q);
      if (!planes_identical(p, q) || file_bytes(dir / "a.flo") != file_bytes(dir / "b.flo")) ++mismatches[0];
    }
    {
      const ImagePlanef p = random_plane(rng, 40, 1);
      write_pfm(dir / "a.pfm", p);
      const ImagePlanef q = read_pfm(dir / "a.pfm");
      write_pfm(dir / "b.pfm", q);
      if (!planes_identical(p, q) || file_bytes(dir / "a.pfm") != file_bytes(dir / "b.pfm")) ++mismatches[1];
    }
    {
      const ImagePlanef p = random_plane(rng, 24, std::uniform_int_distribution<int>(1, 64)(rng));
      write_feature(dir / "a.vgrf", p);
      const ImagePlanef q = read_feature(dir / "a.vgrf");
      write_feature(dir / "b.vgrf", q);
      if (!planes_identical(p, q) || file_bytes(dir / "a.vgrf") != file_bytes(dir / "b.vgrf")) ++mismatches[2];
    }
    {
      SetLayout layout;
      layout.sh_degree = int(rng() % 4);
      layout.poly_order = int(rng() % 5);
      layout.fourier_order = int(rng() % 5);
      layout.feature_dim = int(rng() % 9);
      layout.rotation_dynamics = rng() % 2;
      layout.fourier_mode = rng() % 2 ? FourierMode::kLiteral : FourierMode::kFullPeriod;
      GaussianSetf set = GaussianSetf::zeros(Index(rng() % 60), layout);
      visit_blocks(
          [&](Block, auto& m) {
            for (Index i = 0; i < m.size(); ++i) m.data()[i] = random_float(rng);
          },
          set);
      FitConfig config;
      config.seed = rng();
      config.steps = long(rng() % 100000);
      config.rates.opacity = std::uniform_real_distribution<double>(0, 1)(rng);
      config.layout = layout;
      save_checkpoint(dir / "a.vgrc", set, config);
      const Checkpoint c = load_checkpoint(dir / "a.vgrc");
      save_checkpoint(dir / "b.vgrc", c.set, c.config);
      bool same = c.set.layout == set.layout && c.set.count() == set.count();
      if (same) {
        visit_blocks(
            [&](Block, const auto& a, const auto& b) {
              same = same && std::memcmp(a.data(), b.data(), sizeof(float) * std::size_t(a.size())) == 0;
            },
            set, c.set);
      }
      same = same && fit_config_to_text(c.config) == fit_config_to_text(config);
      if (!same || file_bytes(dir / "a.vgrc") != file_bytes(dir / "b.vgrc")) ++mismatches[3];
    }
  }
  fs::remove_all(dir);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const int total = mismatches[0] + mismatches[1] + mismatches[2] + mismatches[3];
  return {total == 0 && secs < 30.0, "mismatches flo " + std::to_string(mismatches[0]) + ", pfm " +
                                         std::to_string(mismatches[1]) + ", vgrf " + std::to_string(mismatches[2]) +
                                         ", vgrc " + std::to_string(mismatches[3]) + " of 1000 each, " +
                                         fmt("%.1f s", secs)};
}

// --- 8: application invariants -------------------------------------------------------

Outcome criterion_8() {
  std::vector<std::string> failures;
  SceneSpec spec;
  spec.fixture = "articulated";
  spec.width = 48;
  spec.height = 40;
  spec.frames = 8;
  const SynthScene scene = synth(spec);
  FitConfig config;
  config.steps = 120;
  config.init_count = 3000;
  config.warmup = 50;
  config.density_interval = 50;
  const GaussianSetf set = fit(scene.priors, config).set;
  const Camera cam = scene.camera();
  const RenderOptions& ro = config.render;
  const TimeMap times(spec.frames);

  // Identity remap reproduces the renders made during fitting.
  const std::vector<ImagePlanef> interp = interpolate(set, [](double s) { return s; }, spec.frames, cam, ro);
  for (int k = 0; k < spec.frames; ++k) {
    const RenderOutput<float> fit_time = render_set(set, times.time(k), cam, kColor | kDepth | kLabel, ro);
    if (!planes_identical(interp[std::size_t(k)], fit_time.plane(kColor))) {
      failures.push_back("interpolation frame " + std::to_string(k));
    }
  }

  // T followed by its inverse.
  std::mt19937_64 rng(808);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::Isometry3d T = Eigen::Isometry3d::Identity();
    T.linear() = Eigen::Quaterniond(g(rng), g(rng), g(rng), g(rng)).normalized().toRotationMatrix();
    T.translation() = Eigen::Vector3d(g(rng), g(rng), g(rng)) * 0.3;
    const std::vector<Eigen::Isometry3d> chain{T, T.inverse()};
    const double t = times.time(trial % spec.frames);
    if (!planes_identical(render_transformed(set, chain, t, cam, ro), render_color(set, t, cam, ro))) {
      failures.push_back("T then T^-1, trial " + std::to_string(trial));
    }
  }

  // Zero-baseline stereo.
  for (int k = 0; k < spec.frames; k += 3) {
    const StereoFrames s = stereo_pair(set, times.time(k), cam, 0.0, 0.0, ro);
    const ImagePlanef mono = render_color(set, times.time(k), cam, ro);
    if (!planes_identical(s.left, s.right) || !planes_identical(s.left, mono)) {
      failures.push_back("b = 0 stereo at frame " + std::to_string(k));
    }
  }

  // Geometry-edit locality: pixels whose compositing lists never include an
  // edited Gaussian (before or after) are unchanged.
  const double t = times.time(2);
  const EditScript script = parse_edit_script("select box 0.05 -1 0 1 1 0.6 at " + std::to_string(t) +
                                              "\ntranslate 0.06 -0.04 0\n");
  const EditResult edited = edit_geometry(set, script);
  const Points3<float> before_pos = eval_position(set, t);
  std::vector<char> moved(static_cast<std::size_t>(set.count()), 0);
  Index moved_count = 0;
  for (Index i = 0; i < set.count(); ++i) {
    const Vec3<float> p = before_pos.row(i).transpose();
    moved[std::size_t(i)] = p.x() >= 0.05f && p.x() <= 1.0f && p.y() >= -1.0f && p.y() <= 1.0f && p.z() >= 0.0f &&
                            p.z() <= 0.6f;
    moved_count += moved[std::size_t(i)];
  }
  const RenderOutput<float> before = render_set(set, t, cam, kColor, ro);
  const RenderOutput<float> after = render_set(edited.set, t, cam, kColor, ro);
  long untouched = 0, touched = 0, changed_untouched = 0;
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      bool hit = false;
      for (const auto& e : before.tape(x, y)) hit = hit || moved[std::size_t(e.gaussian)];
      for (const auto& e : after.tape(x, y)) hit = hit || moved[std::size_t(e.gaussian)];
      if (hit) {
        ++touched;
        continue;
      }
      ++untouched;
      for (int c = 0; c < 3; ++c) {
        const float a = before.plane(kColor)(x, y, c), b = after.plane(kColor)(x, y, c);
        if (std::memcmp(&a, &b, sizeof(float)) != 0) {
          ++changed_untouched;
          break;
        }
      }
    }
  }
  if (moved_count == 0 || touched == 0 || untouched == 0) failures.push_back("edit selection degenerate");
  if (changed_untouched > 0) failures.push_back(std::to_string(changed_untouched) + " unaffected pixels changed");

  std::string detail = "interpolation, T/T^-1, b=0 stereo checked; edit moved " + std::to_string(moved_count) +
                       " Gaussians, " + std::to_string(untouched) + " unaffected pixels";
  for (const auto& f : failures) detail += "; " + f;
  return {failures.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  if (wanted.empty()) wanted = {1, 2, 3, 4, 5, 6, 7, 8};
  Outcome (*const criteria[])() = {criterion_1, criterion_2, criterion_3, criterion_4,
                                   criterion_5, criterion_6, criterion_7, criterion_8};
  const char* names[] = {"rasterizer matches naive oracle",
                         "analytic gradients match finite differences",
                         "loss-function suite",
                         "end-to-end synthetic fit",
                         "ablation directions",
                         "learning-rate schedule and opacity reset",
                         "file format round trips",
                         "application invariants"};
  int failed = 0;
  for (int c : wanted) {
    if (c < 1 || c > 8) {
      std::cerr << "unknown criterion " << c << "\n";
      return 2;
    }
    Outcome o;
    try {
      o = criteria[c - 1]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c << " (" << names[c - 1] << "): " << o.detail
              << std::endl;
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
