#include "support/temp_dir.hpp"

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>
#include <sys/wait.h>

using vgr::testing::TempDir;

namespace {

int run(const std::string& args, const std::filesystem::path& out = {}) {
  std::string cmd = std::string(VGR_CLI) + " " + args;
  cmd += out.empty() ? " >/dev/null 2>&1" : " >" + out.string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// A tiny scene fitted once and shared by the tests below.
const TempDir& fitted() {
  static TempDir dir;
  static bool done = false;
  if (!done) {
    const std::string d = dir.path.string();
    REQUIRE(run("synth --fixture rigid_translate --out " + d + " --width 24 --height 20 --frames 4") == 0);
    REQUIRE(run("fit --frames " + d + "/frames --flow " + d + "/flow --depth " + d + "/depth --masks " + d +
                "/masks --steps 20 --init_count 300 --out " + d + "/c.vgrc --log " + d + "/log.csv") == 0);
    done = true;
  }
  return dir;
}

}  // namespace

TEST_CASE("usage errors exit with status 1") {
  TempDir dir;
  CHECK(run("") == 1);
  CHECK(run("frobnicate") == 1);
  CHECK(run("fit --out " + (dir / "c.vgrc").string()) == 1);
  CHECK(!std::filesystem::exists(dir / "c.vgrc"));
  CHECK(run("fit --frames " + (dir / "nowhere").string()) == 1);
  CHECK(run("synth --fixture teapot --out " + dir.path.string()) == 1);
}

TEST_CASE("unknown config keys are usage errors") {
  TempDir dir;
  std::ofstream(dir / "bad.cfg") << "[fit]\nwarp_speed = 9\n";
  CHECK(run("fit --config " + (dir / "bad.cfg").string() + " --frames " + dir.path.string()) == 1);
}

TEST_CASE("rendering is deterministic") {
  const TempDir& d = fitted();
  const std::string ck = (d / "c.vgrc").string();
  REQUIRE(run("render --checkpoint " + ck + " --t 0.5 --out " + (d / "a.png").string()) == 0);
  REQUIRE(run("render --checkpoint " + ck + " --t 0.5 --out " + (d / "b.png").string()) == 0);
  CHECK(slurp(d / "a.png") == slurp(d / "b.png"));
  CHECK(slurp(d / "a.png").size() > 8);
  CHECK(run("depth --checkpoint " + ck + " --frame 2 --out " + (d / "d.pfm").string()) == 0);
  CHECK(run("track --checkpoint " + ck + " --t1 0 --t2 1 --out " + (d / "f.flo").string()) == 0);
  CHECK(slurp(d / "f.flo").substr(0, 4) == "PIEH");
  CHECK(slurp(d / "log.csv").rfind("step,total", 0) == 0);
}

TEST_CASE("corrupt checkpoints are data errors") {
  const TempDir& d = fitted();
  std::string bytes = slurp(d / "c.vgrc");
  bytes.resize(bytes.size() / 2);
  std::ofstream(d / "broken.vgrc", std::ios::binary) << bytes;
  CHECK(run("render --checkpoint " + (d / "broken.vgrc").string() + " --t 0 --out " + (d / "x.png").string()) == 2);
}

TEST_CASE("eval prints one parseable line") {
  const TempDir& d = fitted();
  const std::string s = d.path.string();
  REQUIRE(run("eval --checkpoint " + s + "/c.vgrc --reference " + s + "/frames --flow-gt " + s + "/flow --masks " +
                  s + "/masks",
              d / "eval.txt") == 0);
  const std::string line = slurp(d / "eval.txt");
  std::smatch m;
  REQUIRE(std::regex_search(line, m, std::regex(R"(psnr_db=([0-9.]+) frames=4 epe_mean_px=([0-9.]+))")));
  CHECK(std::stod(m.str(1)) > 5);
  CHECK(std::count(line.begin(), line.end(), '\n') == 1);
}
