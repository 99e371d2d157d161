#include "vgr/synth.hpp"

#include <doctest.h>

using namespace vgr;

TEST_CASE("fixtures generate consistent priors") {
  for (const std::string& name : fixture_names()) {
    CAPTURE(name);
    SceneSpec spec;
    spec.fixture = name;
    spec.width = 32;
    spec.height = 24;
    spec.frames = 9;
    const SynthScene s = synth(spec);
    s.priors.validate();
    CHECK(s.priors.frames.size() == 9);
    CHECK(s.priors.depths.size() == 9);
    CHECK(s.priors.masks.size() == 9);
    // gaps 1, 2, 4, 8 in both directions
    CHECK(s.priors.flows.size() == 2 * (8 + 7 + 5 + 1));
    CHECK(s.priors.flows.count({8, 0}) == 1);
    CHECK(s.group.size() == std::size_t(s.gt.count()));
    CHECK(s.time(0) == 0.0);
    CHECK(s.time(8) == 1.0);
    for (const auto& [pair, flow] : s.priors.flows) {
      const ImagePlanef gt = ground_truth_flow(s, pair.first, pair.second);
      CHECK(gt.values == flow.values);
    }
  }
}

TEST_CASE("rigid translation flow equals the projected velocity") {
  SceneSpec spec;
  spec.width = 40;
  spec.height = 30;
  spec.frames = 5;
  spec.velocity = Eigen::Vector3d(0.4, -0.2, 0);
  const SynthScene s = synth(spec);
  const ImagePlanef& f = s.priors.flows.at({1, 3});
  const double dt = s.time(3) - s.time(1);
  int moving = 0;
  for (int y = 0; y < 30; ++y) {
    for (int x = 0; x < 40; ++x) {
      if (s.pixel_group[1][std::size_t(y) * 40 + x] == 0) {
        CHECK(f(x, y, 0) == 0.0f);
        continue;
      }
      ++moving;
      CHECK(f(x, y, 0) == doctest::Approx(0.4 * dt * 20).epsilon(1e-5));
      CHECK(f(x, y, 1) == doctest::Approx(-0.2 * dt * 15).epsilon(1e-5));
    }
  }
  CHECK(moving > 50);
}

TEST_CASE("group motions advance points in closed form") {
  GroupMotion m;
  m.kind = GroupMotion::Kind::kRotate;
  m.center = Eigen::Vector3d(0.1, 0, 0.5);
  m.turns = 1;
  const Eigen::Vector3d p = m.advance(Eigen::Vector3d(0.3, 0, 0.5), 0.0, 0.25);
  CHECK(p.isApprox(Eigen::Vector3d(0.1, 0.2, 0.5), 1e-12));
  CHECK(m.advance(p, 0.25, 1.0).isApprox(Eigen::Vector3d(0.3, 0, 0.5), 1e-12));
  m.kind = GroupMotion::Kind::kTranslate;
  m.velocity = Eigen::Vector3d(1, 2, 0);
  CHECK(m.advance(Eigen::Vector3d::Zero(), 0.5, 0.0).isApprox(Eigen::Vector3d(-0.5, -1, 0)));
}

TEST_CASE("invalid specs are rejected") {
  SceneSpec spec;
  spec.fixture = "teapot";
  CHECK_THROWS_AS(synth(spec), ContractError);
  spec = SceneSpec{};
  spec.frames = 1;
  CHECK_THROWS_AS(synth(spec), ContractError);
}
