#include "vgr/synth.hpp"

#include "vgr/checkpoint.hpp"
#include "vgr/scene_render.hpp"

#include <cmath>

namespace vgr {

namespace {

constexpr double kTwoPi = 6.283185307179586;
constexpr int kFlowGaps[] = {1, 2, 4, 8};

struct Builder {
  SetLayout layout;
  std::vector<Vec3<double>> pos;
  std::vector<Vec3<double>> scale;
  std::vector<Vec3<double>> color;
  std::vector<double> opacity;
  std::vector<int> group;

  void add(const Vec3<double>& p, double s, double sz, const Vec3<double>& c, double a, int g) {
    pos.push_back(p);
    scale.push_back({s, s, sz});
    color.push_back(c.cwiseMax(0.02).cwiseMin(0.98));
    opacity.push_back(a);
    group.push_back(g);
  }

  /// Square lattice over [x0, x1] x [y0, y1] at depth z, kept where `inside` holds.
  template <typename Inside, typename Colour>
  void lattice(double x0, double x1, double y0, double y1, double z, double spacing, int g, double alpha,
               Inside inside, Colour colour) {
    const int nx = int(std::round((x1 - x0) / spacing)), ny = int(std::round((y1 - y0) / spacing));
    for (int j = 0; j <= ny; ++j) {
      for (int i = 0; i <= nx; ++i) {
        const double x = x0 + i * spacing, y = y0 + j * spacing;
        if (!inside(x, y)) continue;
        add({x, y, z}, 0.7 * spacing, 0.01, colour(x, y), alpha, g);
      }
    }
  }

  GaussianSetf build() const {
    GaussianSetf s = GaussianSetf::zeros(Index(pos.size()), layout);
    for (std::size_t k = 0; k < pos.size(); ++k) {
      const Index i = Index(k);
      s.mu0.row(i) = pos[k].cast<float>().transpose();
      s.q0(i, 0) = 1.0f;
      s.log_scale.row(i) = scale[k].array().log().cast<float>().matrix().transpose();
      s.opacity_logit[i] = float(std::log(opacity[k] / (1.0 - opacity[k])));
      for (int c = 0; c < 3; ++c) s.sh(i, c) = float((color[k][c] - 0.5) / kShC0);
      s.label[i] = group[k] == 0 ? 0.0f : 1.0f;
    }
    return s;
  }
};

Vec3<double> background_colour(double x, double y) {
  return {0.45 + 0.25 * std::sin(3.1 * x + 1.3 * y), 0.40 + 0.20 * std::cos(2.3 * y - 1.7 * x + 0.5),
          0.35 + 0.20 * std::sin(4.0 * (x + y))};
}

void add_background(Builder& b) {
  b.lattice(-1.15, 1.15, -1.15, 1.15, 0.8, 0.035, 0, 0.9, [](double, double) { return true; },
            background_colour);
}

void set_translation(GaussianSetf& set, const std::vector<int>& group, int g, const Eigen::Vector3d& v) {
  if (set.layout.poly_order < 1) throw ContractError("synth: translation needs polynomial order >= 1");
  for (Index i = 0; i < set.count(); ++i) {
    if (group[std::size_t(i)] == g) set.traj.poly.row(i).head<3>() = v.cast<float>().transpose();
  }
}

}  // namespace

const std::vector<std::string>& fixture_names() {
  static const std::vector<std::string> names = {"rigid_translate", "rotator", "articulated", "occluder"};
  return names;
}

Eigen::Vector3d GroupMotion::advance(const Eigen::Vector3d& x, double t1, double t2) const {
  switch (kind) {
    case Kind::kStatic: return x;
    case Kind::kTranslate: return x + velocity * (t2 - t1);
    case Kind::kRotate: {
      const double a = kTwoPi * turns * (t2 - t1);
      const Eigen::Vector3d d = x - center;
      return center + Eigen::Vector3d(std::cos(a) * d.x() - std::sin(a) * d.y(),
                                      std::sin(a) * d.x() + std::cos(a) * d.y(), d.z());
    }
  }
  return x;
}

double SynthScene::time(int frame) const { return TimeMap(spec.frames).time(frame); }

SynthScene synth(const SceneSpec& spec) {
  if (spec.width <= 0 || spec.height <= 0) throw ContractError("synth: image size must be positive");
  if (spec.frames < 2) throw ContractError("synth: need at least 2 frames");
  if (spec.feature_dim < 0 || spec.feature_dim > kMaxFeatureDim) throw ContractError("synth: feature_dim 0..64");

  SynthScene scene;
  scene.spec = spec;
  Builder b;
  b.layout.feature_dim = spec.feature_dim;
  add_background(b);
  scene.motions.push_back({});

  const std::string& f = spec.fixture;
  if (f == "rigid_translate") {
    const Eigen::Vector3d start = -0.5 * spec.velocity;
    b.lattice(start.x() - 0.28, start.x() + 0.28, start.y() - 0.28, start.y() + 0.28, 0.3, 0.03, 1, 0.95,
              [&](double x, double y) { return std::hypot(x - start.x(), y - start.y()) <= 0.28; },
              [&](double x, double y) {
                const double lx = x - start.x(), ly = y - start.y();
                return Vec3<double>(0.85 - 3.0 * (lx * lx + ly * ly), 0.30 + 0.25 * std::sin(9.0 * lx),
                                    0.25 + 0.20 * std::cos(9.0 * ly));
              });
    GroupMotion m;
    m.kind = GroupMotion::Kind::kTranslate;
    m.velocity = spec.velocity;
    scene.motions.push_back(m);
  } else if (f == "rotator") {
    if (spec.turns < 1 || spec.turns > b.layout.fourier_order) {
      throw ContractError("synth: rotator turns must be 1.." + std::to_string(b.layout.fourier_order));
    }
    b.lattice(-0.3, 0.3, -0.3, 0.3, 0.3, 0.03, 1, 0.95, [](double x, double y) { return std::hypot(x, y) <= 0.3; },
              [](double x, double y) {
                const double a = std::atan2(y, x);
                return Vec3<double>(0.6 + 0.3 * std::cos(a), 0.5 + 0.3 * std::sin(2 * a),
                                    0.3 + 0.5 * std::hypot(x, y));
              });
    GroupMotion m;
    m.kind = GroupMotion::Kind::kRotate;
    m.turns = spec.turns;
    scene.motions.push_back(m);
  } else if (f == "articulated") {
    auto bar_colour = [](double phase) {
      return [phase](double x, double y) {
        return Vec3<double>(0.75 + 0.2 * std::sin(10 * x + phase), 0.35 + 0.2 * std::cos(12 * y),
                            0.3 + 0.25 * std::sin(7 * (x - y) + phase));
      };
    };
    b.lattice(-0.45, 0.0, -0.12, 0.12, 0.35, 0.03, 1, 0.95, [](double, double) { return true; }, bar_colour(0.0));
    b.lattice(0.03, 0.45, -0.12, 0.12, 0.35, 0.03, 2, 0.95, [](double, double) { return true; }, bar_colour(2.0));
    GroupMotion a, c;
    a.kind = c.kind = GroupMotion::Kind::kTranslate;
    a.velocity = spec.velocity;
    c.velocity = spec.velocity + Eigen::Vector3d(0.2, -0.4, 0.0);
    scene.motions.push_back(a);
    scene.motions.push_back(c);
  } else if (f == "occluder") {
    b.lattice(-0.15, 0.15, -0.15, 0.15, 0.79, 0.03, 0, 0.95, [](double x, double y) { return std::hypot(x, y) <= 0.15; },
              [](double x, double y) {
                return Vec3<double>(0.95, 0.9 - 2.0 * (x * x + y * y), 0.2);
              });
    const double x0 = -0.5 * spec.velocity.x() * 2.0;
    b.lattice(x0 - 0.06, x0 + 0.06, -0.45, 0.45, 0.25, 0.03, 1, 0.95, [](double, double) { return true; },
              [](double x, double y) {
                return Vec3<double>(0.2 + 0.15 * std::sin(20 * x), 0.3 + 0.2 * std::sin(8 * y), 0.8);
              });
    GroupMotion m;
    m.kind = GroupMotion::Kind::kTranslate;
    m.velocity = spec.velocity * 2.0;
    scene.motions.push_back(m);
  } else {
    throw ContractError("synth: unknown fixture '" + f + "'");
  }

  scene.gt = b.build();
  scene.group = b.group;
  const int groups = int(scene.motions.size());
  for (int g = 1; g < groups; ++g) {
    const GroupMotion& m = scene.motions[std::size_t(g)];
    if (m.kind == GroupMotion::Kind::kTranslate) set_translation(scene.gt, scene.group, g, m.velocity);
  }
  if (f == "rotator") {
    // mu(t) = c + Rz(2 pi k t) d, written as mu0 = c with cos / sin coefficients at l = k.
    const int l = spec.turns - 1;
    for (Index i = 0; i < scene.gt.count(); ++i) {
      if (scene.group[std::size_t(i)] != 1) continue;
      const Vec3<float> d = scene.gt.mu0.row(i).transpose();
      scene.gt.mu0(i, 0) = 0.0f;
      scene.gt.mu0(i, 1) = 0.0f;
      scene.gt.traj.four_cos.row(i).segment<3>(3 * l) = Vec3<float>(d.x(), d.y(), 0).transpose();
      scene.gt.traj.four_sin.row(i).segment<3>(3 * l) = Vec3<float>(-d.y(), d.x(), 0).transpose();
    }
  }
  if (spec.feature_dim > 0) {
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<float> normal(0.0f, 0.5f);
    RowMatrix<float> embed(groups, spec.feature_dim);
    for (Index k = 0; k < embed.size(); ++k) embed.data()[k] = normal(rng);
    for (Index i = 0; i < scene.gt.count(); ++i) scene.gt.feature.row(i) = embed.row(scene.group[std::size_t(i)]);
  }

  const Camera cam = scene.camera();
  const TimeMap times(spec.frames);
  RenderOptions no_tape;
  no_tape.keep_tape = false;
  for (int k = 0; k < spec.frames; ++k) {
    const double t = times.time(k);
    scene.priors.frames.push_back(render_set(scene.gt, t, cam, kColor, no_tape).plane(kColor));

    SplatInputs<float> in = splat_inputs(scene.gt, t, cam, kDepth);
    in.feature = RowMatrix<float>::Zero(scene.gt.count(), groups);
    for (Index i = 0; i < scene.gt.count(); ++i) in.feature(i, scene.group[std::size_t(i)]) = 1.0f;
    const RenderOutput<float> out = rasterize(in, cam, kDepth | kFeature, no_tape);
    scene.priors.depths.emplace(k, out.plane(kDepth));

    const ImagePlanef& weights = out.plane(kFeature);
    ImagePlanef mask(cam.width, cam.height, 1);
    std::vector<int> owner(std::size_t(cam.pixel_count()), 0);
    for (Index p = 0; p < cam.pixel_count(); ++p) {
      Index best = 0;
      weights.values.row(p).maxCoeff(&best);
      owner[std::size_t(p)] = int(best);
      const float fg = weights.values.row(p).sum() - weights.values(p, 0);
      mask.values(p, 0) = fg > 0.5f ? 1.0f : 0.0f;
    }
    scene.priors.masks.emplace(k, std::move(mask));
    scene.pixel_group.push_back(std::move(owner));
    if (spec.feature_dim > 0) {
      scene.priors.features.emplace(k, render_set(scene.gt, t, cam, kFeature, no_tape).plane(kFeature));
    }
  }
  for (int k = 0; k < spec.frames; ++k) {
    for (int gap : kFlowGaps) {
      for (int k2 : {k + gap, k - gap}) {
        if (k2 < 0 || k2 >= spec.frames) continue;
        scene.priors.flows.emplace(std::pair{k, k2}, ground_truth_flow(scene, k, k2));
      }
    }
  }
  return scene;
}

ImagePlanef ground_truth_flow(const SynthScene& scene, int f1, int f2) {
  const Camera cam = scene.camera();
  if (f1 < 0 || f2 < 0 || f1 >= scene.spec.frames || f2 >= scene.spec.frames) {
    throw ContractError("ground_truth_flow: frame out of range");
  }
  const double t1 = scene.time(f1), t2 = scene.time(f2);
  ImagePlanef flow(cam.width, cam.height, 2);
  const auto& owner = scene.pixel_group[std::size_t(f1)];
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const Eigen::Vector3d p((x + 0.5) / cam.width * 2.0 - 1.0, (y + 0.5) / cam.height * 2.0 - 1.0, 0.0);
      const GroupMotion& m = scene.motions[std::size_t(owner[std::size_t(y) * cam.width + x])];
      const Eigen::Vector3d q = m.advance(p, t1, t2);
      flow(x, y, 0) = float((q.x() - p.x()) * cam.width / 2.0);
      flow(x, y, 1) = float((q.y() - p.y()) * cam.height / 2.0);
    }
  }
  return flow;
}

void write_scene(const SynthScene& scene, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  save_frames(dir / "frames", scene.priors.frames);
  char name[32];
  for (const auto& [key, flow] : scene.priors.flows) write_flo(dir / "flow" / flow_file_name(key.first, key.second), flow);
  for (const auto& [k, d] : scene.priors.depths) {
    std::snprintf(name, sizeof name, "%04d.pfm", k);
    write_pfm(dir / "depth" / name, d);
  }
  for (const auto& [k, m] : scene.priors.masks) {
    std::snprintf(name, sizeof name, "%04d.png", k);
    write_png(dir / "masks" / name, m);
  }
  for (const auto& [k, feat] : scene.priors.features) {
    std::snprintf(name, sizeof name, "%04d.vgrf", k);
    write_feature(dir / "features" / name, feat);
  }
  FitConfig config;
  config.layout = scene.gt.layout;
  save_checkpoint(dir / "gt.vgrc", scene.gt, config);
}

}  // namespace vgr
