#include "scomp/io.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <random>
#include <sys/wait.h>
#include <unistd.h>

using namespace scomp;

namespace {

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("scomp_io_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  [[nodiscard]] const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

RunResult run_cli(const std::string& args, const fs::path& scratch) {
  const fs::path out = scratch / "stdout.txt";
  const fs::path err = scratch / "stderr.txt";
  const std::string cmd = std::string(SCOMP_CLI_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_file(out);
  r.err = read_file(err);
  return r;
}

std::map<std::string, std::string> directory_bytes(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = read_file(e.path());
  }
  return files;
}

SceneContainer small_container() {
  const SyntheticScene scene = generate_scene(3);
  const auto cams = orbit_cameras(scene, 2, 12, 12, 0.3, 0.4);
  SceneContainer c;
  c.width = 12;
  c.height = 12;
  c.scene = scene;
  for (std::size_t i = 0; i < cams.size(); ++i) c.frames.push_back({view_name(i), cams[i], render_exact(scene, cams[i], 12, 12)});
  return c;
}

}  // namespace

TEST(Pfm, RoundtripIsFloat32Exact) {
  TempDir tmp;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.1, 9.0);
  Grid<double> g(7, 5, 0.0);
  for (double& v : g.data) v = u(rng);
  write_pfm(tmp.path() / "a.pfm", g);
  const Grid<double> back = read_pfm(tmp.path() / "a.pfm");
  ASSERT_TRUE(back.same_shape(g));
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(back.data[i], static_cast<double>(static_cast<float>(g.data[i])));
  write_pfm(tmp.path() / "b.pfm", back);
  EXPECT_EQ(read_file(tmp.path() / "a.pfm"), read_file(tmp.path() / "b.pfm"));
}

TEST(Pfm, HeaderAndRowOrder) {
  Grid<double> g(2, 2, 0.0);
  g(0, 0) = 1.0;  // top-left
  const std::string bytes = encode_pfm(g);
  EXPECT_EQ(bytes.substr(0, 12), "Pf\n2 2\n-1.0\n");
  // rows are stored bottom-up: the top-left value is the third float
  float third = 0;
  std::memcpy(&third, bytes.data() + 12 + 8, 4);
  EXPECT_EQ(third, 1.0f);
}

TEST(Png, RgbAndMaskRoundtrip) {
  TempDir tmp;
  Image img(3, 2, Vec3::Zero());
  img(1, 0) = Vec3(1.0, 0.5, 0.0);
  write_rgb_png(tmp.path() / "i.png", img);
  const Image back = read_rgb_png(tmp.path() / "i.png");
  EXPECT_EQ(back(1, 0), Vec3(1.0, 128.0 / 255.0, 0.0));
  Mask m(3, 2, 0);
  m(2, 1) = 1;
  write_mask_png(tmp.path() / "m.png", m);
  EXPECT_EQ(read_mask_png(tmp.path() / "m.png"), m);
}

TEST(Ply, SinglePointLayout) {
  SceneCloud c;
  c.push_back(Vec3(1.0, 2.0, 3.0), Vec3(1.0, 0.0, 0.5), 0);
  const std::string bytes = encode_ply(c);
  const std::string header =
      "ply\nformat binary_little_endian 1.0\nelement vertex 1\nproperty float x\nproperty float y\n"
      "property float z\nproperty uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
  ASSERT_EQ(bytes.substr(0, header.size()), header);
  EXPECT_EQ(bytes.size(), header.size() + 15);
  TempDir tmp;
  export_ply(c, tmp.path() / "one.ply");
  const SceneCloud back = read_ply(tmp.path() / "one.ply");
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back.points[0], Vec3(1.0, 2.0, 3.0));
  EXPECT_EQ(back.colors[0], Vec3(1.0, 0.0, 128.0 / 255.0));
}

TEST(Ply, MillionPointsHaveExactCount) {
  SceneCloud c;
  c.points.assign(1000000, Vec3(0.5, -1.0, 2.0));
  c.colors.assign(1000000, Vec3(0.2, 0.4, 0.6));
  c.source_iter.assign(1000000, 0);
  TempDir tmp;
  export_ply(c, tmp.path() / "big.ply");
  const std::string bytes = read_file(tmp.path() / "big.ply");
  EXPECT_NE(bytes.find("element vertex 1000000\n"), std::string::npos);
  EXPECT_EQ(read_ply(tmp.path() / "big.ply").size(), 1000000u);
}

TEST(Ply, EmptyCloud) {
  EXPECT_SCOMP_ERROR(encode_ply(SceneCloud{}), ErrorCode::kEmptyCloud);
}

TEST(Container, SaveLoadRoundtrip) {
  TempDir tmp;
  const SceneContainer c = small_container();
  save_scene(c, tmp.path() / "s");
  const SceneContainer back = load_scene(tmp.path() / "s");
  ASSERT_EQ(back.frames.size(), 2u);
  EXPECT_EQ(back.width, 12);
  EXPECT_EQ(back.scene, c.scene);
  for (std::size_t f = 0; f < 2; ++f) {
    EXPECT_EQ(back.frames[f].name, c.frames[f].name);
    EXPECT_EQ(back.frames[f].camera, c.frames[f].camera);
    EXPECT_EQ(back.frames[f].frame.depth.valid, c.frames[f].frame.depth.valid);
    for (std::size_t i = 0; i < back.frames[f].frame.depth.z.size(); ++i) {
      EXPECT_EQ(back.frames[f].frame.depth.z.data[i],
                static_cast<double>(static_cast<float>(c.frames[f].frame.depth.z.data[i])));
    }
  }
  // a reloaded container saves to identical bytes
  save_scene(back, tmp.path() / "t");
  EXPECT_EQ(directory_bytes(tmp.path() / "s"), directory_bytes(tmp.path() / "t"));
}

TEST(Container, MissingBlob) {
  TempDir tmp;
  save_scene(small_container(), tmp.path() / "s");
  fs::remove(tmp.path() / "s" / "view_001.pfm");
  EXPECT_SCOMP_ERROR(load_scene(tmp.path() / "s"), ErrorCode::kMissingBlob);
}

TEST(Container, ReflectionIsRejected) {
  TempDir tmp;
  SceneContainer c = small_container();
  c.frames[0].camera.R = -Mat3::Identity();
  save_scene(c, tmp.path() / "s");
  EXPECT_SCOMP_ERROR(load_scene(tmp.path() / "s"), ErrorCode::kNonRotationOnLoad);
}

TEST(Container, FutureVersionIsRejected) {
  TempDir tmp;
  save_scene(small_container(), tmp.path() / "s");
  json m = read_json(tmp.path() / "s" / "manifest.json");
  m["version"] = 2;
  write_json(tmp.path() / "s" / "manifest.json", m);
  EXPECT_SCOMP_ERROR(load_scene(tmp.path() / "s"), ErrorCode::kVersionUnsupported);
}

TEST(Container, MalformedManifest) {
  TempDir tmp;
  fs::create_directories(tmp.path() / "s");
  write_file(tmp.path() / "s" / "manifest.json", "{not json");
  EXPECT_SCOMP_ERROR(load_scene(tmp.path() / "s"), ErrorCode::kParseError);
  EXPECT_SCOMP_ERROR(load_scene(tmp.path() / "nowhere"), ErrorCode::kMissingBlob);
}

TEST(Trajectory, RoundtripKeepsNames) {
  TempDir tmp;
  const SceneContainer c = small_container();
  Trajectory t{12, 10, {c.frames[0].camera, c.frames[1].camera}, {"a", "b"}};
  save_trajectory(t, tmp.path() / "t.json");
  const Trajectory back = load_trajectory(tmp.path() / "t.json");
  EXPECT_EQ(back.names, t.names);
  EXPECT_EQ(back.cameras, t.cameras);
}

TEST(Checkpoint, RoundtripIsBitExact) {
  TempDir tmp;
  ModelConfig cfg;
  cfg.patch = 2;
  cfg.hidden = 16;
  Checkpoint ck;
  ck.model = init_diffusion_model(cfg, 4);
  ck.schedule_steps = 50;
  ck.codec_factor = 2;
  ck.reference_projection = PatchGridExtractor::seeded(cfg.d_model, 5).projection();
  save_checkpoint(ck, tmp.path() / "m.ckpt");
  const Checkpoint back = load_checkpoint(tmp.path() / "m.ckpt");
  EXPECT_EQ(back.model.config, cfg);
  EXPECT_EQ(back.schedule_steps, 50);
  EXPECT_EQ(back.codec_factor, 2);
  EXPECT_EQ(back.reference_projection, ck.reference_projection);
  EXPECT_EQ(encode_checkpoint(back), encode_checkpoint(ck));
}

TEST(Checkpoint, TruncatedFileFails) {
  TempDir tmp;
  Checkpoint ck;
  ck.model = init_diffusion_model(ModelConfig{}, 1);
  ck.reference_projection = Mat::Zero(5, 32);
  std::string bytes = encode_checkpoint(ck);
  bytes.resize(bytes.size() - 3);
  write_file(tmp.path() / "m.ckpt", bytes);
  EXPECT_SCOMP_ERROR(load_checkpoint(tmp.path() / "m.ckpt"), ErrorCode::kIoFailure);
}

TEST(Stats, JsonRecordShape) {
  const json j = stats_to_json({StepStats{1, 10, 1.5, -0.25, 0.01}});
  ASSERT_EQ(j.size(), 1u);
  EXPECT_EQ(j[0]["iteration"], 1);
  EXPECT_EQ(j[0]["points_added"], 10);
  EXPECT_EQ(j[0]["scale"], 1.5);
  EXPECT_EQ(j[0]["offset"], -0.25);
  EXPECT_EQ(j[0]["residual_rms"], 0.01);
}

TEST(Cli, SynthTwiceIsByteIdentical) {
  TempDir tmp;
  const fs::path a = tmp.path() / "a";
  const fs::path b = tmp.path() / "b";
  ASSERT_EQ(run_cli("--seed 7 --out " + a.string() + " synth --width 16 --height 16 --frames 4", tmp.path()).exit_code, 0);
  ASSERT_EQ(run_cli("--seed 7 --out " + b.string() + " synth --width 16 --height 16 --frames 4", tmp.path()).exit_code, 0);
  const auto fa = directory_bytes(a);
  EXPECT_EQ(fa.size(), 4u * 3u + 2u);
  EXPECT_EQ(fa, directory_bytes(b));
}

TEST(Cli, AlignReportsScaleAndOffset) {
  TempDir tmp;
  Grid<double> pred(4, 4, 0.0);
  Grid<double> clue(4, 4, 0.0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    pred.data[i] = 0.5 + 0.25 * static_cast<double>(i);
    clue.data[i] = 2.0 * pred.data[i] + 1.0;
  }
  write_pfm(tmp.path() / "pred.pfm", pred);
  write_pfm(tmp.path() / "clue.pfm", clue);
  const RunResult r = run_cli("align --clue " + (tmp.path() / "clue.pfm").string() + " --pred " +
                                  (tmp.path() / "pred.pfm").string(),
                              tmp.path());
  EXPECT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("scale=2 offset=1 ", 0), 0u) << r.out;
}

TEST(Cli, MetricsOnIdenticalContainers) {
  TempDir tmp;
  save_scene(small_container(), tmp.path() / "s");
  const std::string s = (tmp.path() / "s").string();
  const RunResult r = run_cli("metrics --pred " + s + " --gt " + s, tmp.path());
  EXPECT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(r.out, "frames=2 psnr_db=inf ssim=1 r_dist_rad=0 t_dist=0\n");
  const RunResult j = run_cli("--json metrics --pred " + s + " --gt " + s, tmp.path());
  const json rep = json::parse(j.out);
  EXPECT_EQ(rep["psnr_db"], "inf");
  EXPECT_EQ(rep["ssim"], 1.0);
}

TEST(Cli, UnsupportedMetric) {
  TempDir tmp;
  save_scene(small_container(), tmp.path() / "s");
  const std::string s = (tmp.path() / "s").string();
  const RunResult r = run_cli("--json metrics --metric lpips --pred " + s + " --gt " + s, tmp.path());
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_EQ(json::parse(r.out)["error"], "UnsupportedMetric");
}

TEST(Cli, ExitCodes) {
  TempDir tmp;
  EXPECT_EQ(run_cli("", tmp.path()).exit_code, 1);
  EXPECT_EQ(run_cli("no-such-command", tmp.path()).exit_code, 1);
  EXPECT_EQ(run_cli("align --clue", tmp.path()).exit_code, 1);
  EXPECT_EQ(run_cli("--help", tmp.path()).exit_code, 0);
  const RunResult missing = run_cli("--json export-ply --out x --scene " + (tmp.path() / "none").string(), tmp.path());
  EXPECT_EQ(missing.exit_code, 2);
  EXPECT_EQ(json::parse(missing.out)["error"], "MissingBlob");
  const RunResult usage = run_cli("--json synth", tmp.path());
  EXPECT_EQ(usage.exit_code, 1);
  EXPECT_EQ(json::parse(usage.out)["error"], "Usage");
}

TEST(Cli, ConfigFileSuppliesOptions) {
  TempDir tmp;
  const fs::path cfg = tmp.path() / "cfg.json";
  write_json(cfg, {{"seed", 7}, {"out", (tmp.path() / "c").string()}, {"synth", {{"width", 16}, {"height", 8}, {"frames", 3}}}});
  const RunResult r = run_cli("--config " + cfg.string() + " synth", tmp.path());
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const SceneContainer c = load_scene(tmp.path() / "c");
  EXPECT_EQ(c.width, 16);
  EXPECT_EQ(c.height, 8);
  EXPECT_EQ(c.frames.size(), 3u);
  EXPECT_EQ(c.scene->seed, 7u);
}

TEST(Cli, OracleCompletionWritesOutputs) {
  TempDir tmp;
  const std::string scene = (tmp.path() / "s").string();
  ASSERT_EQ(run_cli("--seed 3 --out " + scene + " synth --width 16 --height 16 --frames 4", tmp.path()).exit_code, 0);
  const RunResult r =
      run_cli("--json --out " + (tmp.path() / "c").string() + " complete --backend oracle --scene " + scene, tmp.path());
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const json stats = read_json(tmp.path() / "c" / "stats.json");
  ASSERT_EQ(stats.size(), 3u);
  EXPECT_EQ(stats[0]["iteration"], 1);
  EXPECT_GT(read_ply(tmp.path() / "c" / "scene.ply").size(), 256u);
  const SceneContainer views = load_scene(tmp.path() / "c" / "views");
  EXPECT_EQ(views.frames.size(), 3u);
  EXPECT_EQ(views.frames[0].name, "view_001");
}
