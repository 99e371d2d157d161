#include "support/scenes.hpp"

#include "vgr/losses.hpp"

#include <doctest.h>

#include <numeric>

using namespace vgr;

namespace {

ImagePlane<double> plane(int w, int h, int c, std::initializer_list<double> v) {
  ImagePlane<double> p(w, h, c);
  std::copy(v.begin(), v.end(), p.values.data());
  return p;
}

}  // namespace

TEST_CASE("render loss is the mean absolute difference") {
  const auto a = plane(2, 1, 3, {0, 0, 0, 1, 1, 1});
  const auto b = plane(2, 1, 3, {0.3, 0, 0, 1, 1, 0.4});
  const auto l = render_loss(a, b);
  CHECK(l.value == doctest::Approx(0.9 / 6));
  CHECK(l.grad.values(0, 0) == doctest::Approx(-1.0 / 6));
  CHECK(l.grad.values(1, 2) == doctest::Approx(1.0 / 6));
  CHECK(l.grad.values(0, 1) == 0.0);
}

TEST_CASE("flow loss averages |du| + |dv| over valid pixels") {
  const auto r = plane(3, 1, 2, {1, 1, 0, 0, 5, 5});
  const auto g = plane(3, 1, 2, {0, 3, 0, 0, 0, 0});
  const auto valid = plane(3, 1, 1, {1, 1, 0});
  const auto l = flow_plane_loss(r, g, &valid);
  CHECK(l.value == doctest::Approx(3.0 / 2));
  CHECK(l.grad.values(0, 0) == doctest::Approx(0.5));
  CHECK(l.grad.values(0, 1) == doctest::Approx(-0.5));
  CHECK(l.grad.values(2, 0) == 0.0);
  const auto none = plane(3, 1, 1, {0, 0, 0});
  CHECK(flow_plane_loss(r, g, &none).value == 0.0);
}

TEST_CASE("depth statistics use the median and mean absolute deviation") {
  const auto even = plane(4, 1, 1, {1, 2, 4, 10});
  const DepthStats s = depth_stats(even);
  CHECK(s.median == 3.0);
  CHECK(s.scale == doctest::Approx((2 + 1 + 1 + 7) / 4.0));
  const auto flat = plane(3, 1, 1, {2, 2, 2});
  CHECK(depth_stats(flat).scale == 1e-6);
  const auto mask = plane(4, 1, 1, {1, 1, 1, 0});
  CHECK(depth_stats(even, &mask).median == 2.0);
}

TEST_CASE("depth loss is zero for affinely related planes and its gradient treats statistics as constants") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g;
  ImagePlane<double> r(6, 5, 1), p(6, 5, 1);
  for (Index i = 0; i < 30; ++i) {
    r.values(i, 0) = g(rng);
    p.values(i, 0) = 3 * r.values(i, 0) + 7;
  }
  CHECK(depth_loss<double>(r, p, nullptr, 0.0).value < 1e-24);

  for (Index i = 0; i < 30; ++i) p.values(i, 0) = g(rng);
  const auto l = depth_loss<double>(r, p, nullptr, 0.0);
  const DepthStats rs = depth_stats(r), ps = depth_stats(p);
  for (Index i = 0; i < 30; i += 7) {
    // Derivative of mean((tau_r - tau_p)^2) with median and scale frozen.
    double sum_up = 0, sum_down = 0;
    for (Index k = 0; k < 30; ++k) {
      const double tp = (p.values(k, 0) - ps.median) / ps.scale;
      const double bump = k == i ? 1e-6 : 0.0;
      const double up = (r.values(k, 0) + bump - rs.median) / rs.scale - tp;
      const double down = (r.values(k, 0) - bump - rs.median) / rs.scale - tp;
      sum_up += up * up;
      sum_down += down * down;
    }
    CHECK(l.grad.values(i, 0) == doctest::Approx((sum_up - sum_down) / 30 / 2e-6).epsilon(1e-6));
  }
}

TEST_CASE("trimmed depth loss drops the largest residuals") {
  const auto r = plane(5, 1, 1, {0, 1, 2, 3, 4});
  auto p = r;
  p.values(4, 0) = -100;
  const auto full = depth_loss<double>(r, p, nullptr, 0.0);
  const auto trimmed = depth_loss<double>(r, p, nullptr, 0.2);
  CHECK(trimmed.value < full.value);
  CHECK(trimmed.grad.values(4, 0) == 0.0);
  CHECK_THROWS_AS(depth_loss<double>(r, p, nullptr, 1.0), ContractError);
}

TEST_CASE("ARAP term penalises non-rigid neighbourhoods with the matching gradient") {
  std::mt19937_64 rng(22);
  std::normal_distribution<double> g;
  Points3<double> p1(40, 3), p2(40, 3);
  for (Index i = 0; i < 40; ++i) {
    p1.row(i) << g(rng), g(rng), g(rng);
    p2.row(i) = p1.row(i) * 1.3;
  }
  const NeighborGraph graph = build_neighbors(p1, 4);
  std::vector<Index> all(40);
  std::iota(all.begin(), all.end(), Index(0));
  const ArapTerm<double> t = arap_positions<double>(p1, p2, graph, all);
  CHECK(t.value > 0.01);
  // Central differences with the per-Gaussian rotations held at their optimum
  // (envelope theorem: the loss is stationary in R).
  for (Index i : {Index(0), Index(17)}) {
    for (int a = 0; a < 3; ++a) {
      Points3<double> up = p2, down = p2;
      up(i, a) += 1e-6;
      down(i, a) -= 1e-6;
      const double fd = (arap_positions<double>(p1, up, graph, all).value -
                         arap_positions<double>(p1, down, graph, all).value) / 2e-6;
      CHECK(t.d_pos2(i, a) == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("sample_indices returns sorted distinct indices") {
  std::mt19937_64 rng(23);
  const auto s = sample_indices(100, 10, rng);
  CHECK(s.size() == 10);
  CHECK(std::is_sorted(s.begin(), s.end()));
  CHECK(std::adjacent_find(s.begin(), s.end()) == s.end());
  CHECK(sample_indices(5, 10, rng).size() == 5);
}

TEST_CASE("label and feature losses are mean squared errors") {
  const auto a = plane(2, 1, 1, {0.2, 1.0});
  const auto b = plane(2, 1, 1, {0.0, 0.0});
  CHECK(label_loss(a, b).value == doctest::Approx((0.04 + 1.0) / 2));
  CHECK(feature_loss(a, b).grad.values(1, 0) == doctest::Approx(1.0));
  const auto c = plane(1, 2, 1, {0, 0});
  CHECK_THROWS_AS(label_loss(a, c), ContractError);
}

TEST_CASE("total loss applies the default weights") {
  LossReport r;
  r.render = 1;
  r.flow = 2;
  r.depth = 3;
  r.arap = 4;
  r.label = 5;
  r.feature = 6;
  CHECK(total_loss(r, LossWeights{}).total == doctest::Approx(1 + 1 + 1.5 + 2 + 5 + 3));
  LossWeights w;
  w.render = 0;
  CHECK_THROWS_AS(w.validate(), ContractError);
  w.render = 1;
  w.flow = -1;
  CHECK_THROWS_AS(w.validate(), ContractError);
}
