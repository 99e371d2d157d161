#include "support/scenes.hpp"
#include "support/temp_dir.hpp"

#include "vgr/checkpoint.hpp"
#include "vgr/priors.hpp"
#include "vgr/synth.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace vgr;
using testing::TempDir;

namespace {

ImagePlanef random_plane(std::mt19937_64& rng, int w, int h, int c) {
  std::normal_distribution<float> g;
  ImagePlanef p(w, h, c);
  for (Index i = 0; i < p.values.size(); ++i) p.values.data()[i] = g(rng);
  return p;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out << bytes;
}

}  // namespace

TEST_CASE("flo round trip and layout") {
  TempDir dir;
  std::mt19937_64 rng(1);
  const ImagePlanef flow = random_plane(rng, 5, 3, 2);
  write_flo(dir / "a.flo", flow);
  const std::string bytes = slurp(dir / "a.flo");
  CHECK(bytes.size() == 12 + 5 * 3 * 2 * 4);
  CHECK(bytes.substr(0, 4) == "PIEH");
  float u;
  std::memcpy(&u, bytes.data() + 12, 4);
  CHECK(u == flow(0, 0, 0));
  const ImagePlanef back = read_flo(dir / "a.flo");
  CHECK(testing::planes_identical(back, flow));
  CHECK_THROWS_AS(write_flo(dir / "b.flo", ImagePlanef(2, 2, 1)), ContractError);
}

TEST_CASE("pfm stores rows bottom to top") {
  TempDir dir;
  std::mt19937_64 rng(2);
  const ImagePlanef depth = random_plane(rng, 4, 3, 1);
  write_pfm(dir / "d.pfm", depth);
  const std::string bytes = slurp(dir / "d.pfm");
  CHECK(bytes.rfind("Pf\n4 3\n-1", 0) == 0);
  float last_row_first;
  std::memcpy(&last_row_first, bytes.data() + bytes.size() - 4 * 4, 4);
  CHECK(last_row_first == depth(0, 0));
  CHECK(testing::planes_identical(read_pfm(dir / "d.pfm"), depth));
}

TEST_CASE("vgrf round trip across channel counts") {
  TempDir dir;
  std::mt19937_64 rng(3);
  for (int d : {1, 7, 64}) {
    const ImagePlanef f = random_plane(rng, 3, 2, d);
    write_feature(dir / "f.vgrf", f);
    CHECK(slurp(dir / "f.vgrf").size() == 20 + std::size_t(3 * 2 * d) * 4);
    CHECK(testing::planes_identical(read_feature(dir / "f.vgrf"), f));
  }
  CHECK_THROWS_AS(write_feature(dir / "g.vgrf", ImagePlanef(2, 2, 65)), ContractError);
}

TEST_CASE("malformed files raise format errors") {
  TempDir dir;
  std::mt19937_64 rng(4);
  write_flo(dir / "a.flo", random_plane(rng, 4, 4, 2));
  const std::string good = slurp(dir / "a.flo");

  spit(dir / "magic.flo", "XXXX" + good.substr(4));
  CHECK_THROWS_AS(read_flo(dir / "magic.flo"), FormatError);
  spit(dir / "short.flo", good.substr(0, good.size() - 3));
  CHECK_THROWS_AS(read_flo(dir / "short.flo"), FormatError);
  spit(dir / "long.flo", good + "x");
  CHECK_THROWS_AS(read_flo(dir / "long.flo"), FormatError);
  CHECK_THROWS_AS(read_flo(dir / "missing.flo"), FormatError);

  write_feature(dir / "f.vgrf", random_plane(rng, 2, 2, 3));
  std::string f = slurp(dir / "f.vgrf");
  f[4] = 9;  // version
  spit(dir / "v.vgrf", f);
  CHECK_THROWS_AS(read_feature(dir / "v.vgrf"), FormatError);

  spit(dir / "bad.pfm", "PF\n2 2\n-1\n");
  CHECK_THROWS_AS(read_pfm(dir / "bad.pfm"), FormatError);
  spit(dir / "bad.png", "not a png");
  CHECK_THROWS_AS(read_png(dir / "bad.png"), FormatError);
}

TEST_CASE("png quantizes to 8 bits") {
  TempDir dir;
  ImagePlanef rgb(3, 2, 3);
  rgb(0, 0, 0) = 1.5f;
  rgb(1, 0, 1) = -0.2f;
  rgb(2, 1, 2) = 0.5f;
  write_png(dir / "c.png", rgb);
  const ImagePlanef back = read_png(dir / "c.png");
  REQUIRE(back.same_shape(rgb));
  CHECK(back(0, 0, 0) == 1.0f);
  CHECK(back(1, 0, 1) == 0.0f);
  CHECK(back(2, 1, 2) == doctest::Approx(128.0 / 255.0));
  ImagePlanef grey(2, 2, 1);
  grey(1, 1) = 1.0f;
  write_png(dir / "g.png", grey);
  CHECK(read_png(dir / "g.png").channels() == 1);
  CHECK_THROWS_AS(write_png(dir / "x.png", ImagePlanef(2, 2, 2)), ContractError);
}

TEST_CASE("frame files are ordered numerically") {
  TempDir dir;
  ImagePlanef img(2, 2, 3);
  for (const char* name : {"10.png", "2.png", "frame_1.png"}) write_png(dir / name, img);
  spit(dir / "notes.txt", "x");
  const auto files = numbered_files(dir.path, ".png");
  REQUIRE(files.size() == 3);
  CHECK(files[0].filename() == "frame_1.png");
  CHECK(files[1].filename() == "2.png");
  CHECK(files[2].filename() == "10.png");
  CHECK(load_frames(dir.path).size() == 3);
  CHECK(flow_file_name(3, 11) == "flow_0003_0011.flo");
  CHECK(parse_flow_file_name("flow_0003_0011.flo") == std::pair(3, 11));
  CHECK(!parse_flow_file_name("flow_3.flo"));
}

TEST_CASE("synthetic scene directories load back as priors") {
  TempDir dir;
  SceneSpec spec;
  spec.width = 20;
  spec.height = 16;
  spec.frames = 5;
  spec.feature_dim = 3;
  const SynthScene scene = synth(spec);
  write_scene(scene, dir.path);
  const PriorBundle p = load_priors({dir / "frames", dir / "flow", dir / "depth", dir / "masks", dir / "features"});
  p.validate();
  CHECK(p.frames.size() == 5);
  CHECK(p.width() == 20);
  CHECK(p.height() == 16);
  CHECK(p.feature_dim() == 3);
  CHECK(p.flows.size() == scene.priors.flows.size());
  CHECK(testing::planes_identical(p.flows.at({1, 3}), scene.priors.flows.at({1, 3})));
  CHECK(testing::planes_identical(p.depths.at(4), scene.priors.depths.at(4)));
  const Checkpoint gt = load_checkpoint(dir / "gt.vgrc");
  CHECK(gt.set.mu0 == scene.gt.mu0);
}

TEST_CASE("prior bundles reject inconsistent shapes") {
  PriorBundle p;
  p.frames.assign(1, ImagePlanef(4, 4, 3));
  CHECK_THROWS_AS(p.validate(), ContractError);
  p.frames.assign(3, ImagePlanef(4, 4, 3));
  p.validate();
  p.depths.emplace(1, ImagePlanef(4, 3, 1));
  CHECK_THROWS_AS(p.validate(), ContractError);
  p.depths.clear();
  p.flows.emplace(std::pair(0, 5), ImagePlanef(4, 4, 2));
  CHECK_THROWS_AS(p.validate(), ContractError);
  p.flows.clear();
  p.masks.emplace(0, ImagePlanef(4, 4, 3));
  CHECK_THROWS_AS(p.validate(), ContractError);
}

TEST_CASE("checkpoints round trip and reject damage") {
  TempDir dir;
  std::mt19937_64 rng(5);
  FitConfig c;
  c.layout.feature_dim = 2;
  c.layout.rotation_dynamics = true;
  c.steps = 123;
  c.width = 40;
  const GaussianSetf s = testing::random_set<float>(rng, 9, c.layout);
  save_checkpoint(dir / "c.vgrc", s, c);
  const Checkpoint back = load_checkpoint(dir / "c.vgrc");
  CHECK(back.set.layout == s.layout);
  CHECK(back.set.traj.rot_sin == s.traj.rot_sin);
  CHECK(back.set.feature == s.feature);
  CHECK(back.config.steps == 123);
  CHECK(back.config.width == 40);
  CHECK(encode_checkpoint(back.set, back.config) == slurp(dir / "c.vgrc"));

  const std::string bytes = slurp(dir / "c.vgrc");
  CHECK_THROWS_AS(decode_checkpoint(bytes.substr(0, bytes.size() - 1)), FormatError);
  CHECK_THROWS_AS(decode_checkpoint(bytes + "z"), FormatError);
  CHECK_THROWS_AS(decode_checkpoint("VGRD" + bytes.substr(4)), FormatError);
  std::string v = bytes;
  v[4] = 2;
  CHECK_THROWS_AS(decode_checkpoint(v), FormatError);
  CHECK_THROWS_AS(decode_checkpoint(""), FormatError);
}
