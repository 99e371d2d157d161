#include "support/scenes.hpp"

#include "vgr/apps.hpp"

#include <doctest.h>

using namespace vgr;

namespace {

// One Gaussian moving linearly: mu(t) = mu0 + v t.
GaussianSetf moving_blob(const Eigen::Vector3f& v) {
  SetLayout layout;
  layout.poly_order = 1;
  layout.fourier_order = 0;
  GaussianSetf s = GaussianSetf::zeros(1, layout);
  s.q0(0, 0) = 1;
  s.mu0.row(0) << 0.1f, -0.2f, 0.5f;
  s.log_scale.setConstant(std::log(0.1f));
  s.opacity_logit[0] = 8.0f;
  s.traj.poly.row(0) = v.transpose();
  return s;
}

}  // namespace

TEST_CASE("psnr of known errors") {
  ImagePlanef a(4, 4, 3), b(4, 4, 3);
  CHECK(std::isinf(psnr(a, b)));
  b.values.setConstant(0.1f);
  CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-6));
  b.values.setConstant(0.001f);  // rounds to zero at 8 bits
  CHECK(std::isinf(psnr_8bit(a, b)));
  CHECK_THROWS_AS(psnr(a, ImagePlanef(4, 4, 1)), ContractError);
}

TEST_CASE("bilinear sampling uses pixel centres and clamps") {
  ImagePlanef p(2, 2, 1);
  p(0, 0) = 0;
  p(1, 0) = 1;
  p(0, 1) = 2;
  p(1, 1) = 3;
  CHECK(sample_bilinear(p, 0.5, 0.5, 0) == 0);
  CHECK(sample_bilinear(p, 1.0, 0.5, 0) == doctest::Approx(0.5));
  CHECK(sample_bilinear(p, 1.0, 1.0, 0) == doctest::Approx(1.5));
  CHECK(sample_bilinear(p, -5, 10, 0) == 2);
}

TEST_CASE("tracking follows a translating Gaussian") {
  const GaussianSetf s = moving_blob({0.4f, 0.2f, 0.0f});
  const Camera cam(40, 30);
  // Centre at t = 0.25 is (0.2, -0.15), pixel (24, 12.75).
  const std::vector<Vec2<double>> q = {{24.0, 12.75}, {1.0, 1.0}};
  const auto pts = track_points(s, q, 0.25, 0.75, cam);
  REQUIRE(pts.size() == 2);
  // The flow plane is alpha-composited: for a single Gaussian flow / alpha is
  // the exact displacement, and the tracked point lands close to it.
  const TrackResult tr = track(s, 0.25, 0.75, cam);
  CHECK(tr.flow(24, 12, 0) / tr.alpha(24, 12) == doctest::Approx(0.2 * 20).epsilon(1e-5));
  CHECK(tr.flow(24, 12, 1) / tr.alpha(24, 12) == doctest::Approx(0.1 * 15).epsilon(1e-5));
  CHECK(pts[0].position.x() - 24.0 == doctest::Approx(0.2 * 20).epsilon(0.1));
  CHECK(pts[0].position.y() - 12.75 == doctest::Approx(0.1 * 15).epsilon(0.1));
  CHECK(!pts[0].occluded);
  CHECK(pts[1].occluded);
}

TEST_CASE("depth and feature renders") {
  GaussianSetf s = moving_blob({0, 0, 0});
  const Camera cam(16, 16);
  const ImagePlanef d = render_depth(s, 0, cam);
  CHECK(d(9, 6) == doctest::Approx(0.5f));
  CHECK_THROWS_AS(render_feature(s, 0, cam), ContractError);
}

TEST_CASE("interpolation with the identity remap matches direct renders") {
  std::mt19937_64 rng(41);
  const GaussianSetf s = testing::random_set<float>(rng, 30, SetLayout{});
  const Camera cam(24, 20);
  const auto frames = interpolate(s, [](double t) { return t; }, 5, cam);
  REQUIRE(frames.size() == 5);
  CHECK(testing::planes_identical(frames[2], render_color(s, 0.5, cam)));
  CHECK(testing::planes_identical(frames[4], render_color(s, 1.0, cam)));
}

TEST_CASE("transform chains and stereo views") {
  std::mt19937_64 rng(42);
  const GaussianSetf s = testing::random_set<float>(rng, 30, SetLayout{});
  const Camera cam(24, 20);
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  t.rotate(Eigen::AngleAxisd(0.3, Eigen::Vector3d(1, 2, 3).normalized()));
  t.translate(Eigen::Vector3d(0.1, -0.2, 0.05));
  const std::vector<Eigen::Isometry3d> chain = {t, t.inverse()};
  const ImagePlanef mono = render_color(s, 0.4, cam);
  CHECK(testing::planes_identical(render_transformed(s, chain, 0.4, cam), mono));

  const StereoFrames zero = stereo_pair(s, 0.4, cam, 0.0);
  CHECK(testing::planes_identical(zero.left, mono));
  CHECK(testing::planes_identical(zero.right, mono));
  const Eigen::Isometry3d left = stereo_view_transform(0.1, 0, true);
  CHECK(left.translation().isApprox(Eigen::Vector3d(0.05, 0, 0)));
  const StereoFrames wide = stereo_pair(s, 0.4, cam, 0.1);
  CHECK(!testing::planes_identical(wide.left, wide.right));
}

TEST_CASE("appearance edits only touch colour coefficients and reduce the loss") {
  std::mt19937_64 rng(43);
  SetLayout layout;
  layout.sh_degree = 1;
  const GaussianSetf s = testing::random_set<float>(rng, 40, layout);
  const Camera cam(24, 24);
  GaussianSetf target = s;
  target.sh.leftCols(3).array() += 0.3f;
  const ImagePlanef edited = render_color(target, 0.5, cam);
  AppearanceEditOptions o;
  o.max_steps = 200;
  o.lr_sh_dc = 1e-2;
  const AppearanceEditResult r = edit_appearance(s, 0.5, edited, o);
  CHECK(!r.aborted);
  CHECK(r.final_loss < 0.5 * r.initial_loss);
  CHECK(r.set.mu0 == s.mu0);
  CHECK(r.set.log_scale == s.log_scale);
  CHECK(r.set.opacity_logit == s.opacity_logit);
  CHECK(r.set.traj.poly == s.traj.poly);
  CHECK(r.set.sh != s.sh);
}
