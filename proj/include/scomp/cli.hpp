#pragma once

// Command-line front end. Exit codes: 0 success, 1 usage error, 2 runtime error.

#include "scomp/alignment.hpp"
#include "scomp/core.hpp"
#include "scomp/denoiser.hpp"
#include "scomp/depth_codec.hpp"
#include "scomp/diffusion.hpp"
#include "scomp/geometry.hpp"
#include "scomp/io.hpp"
#include "scomp/metrics.hpp"
#include "scomp/pipeline.hpp"
#include "scomp/scene_embedder.hpp"
#include "scomp/synth.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <sstream>
#include <string_view>
#include <string>
#include <vector>

namespace scomp {

namespace cli {

using report = nlohmann::ordered_json;

/// Reads `--config` files: top-level keys are global options, nested objects
/// are keyed by subcommand, e.g. {"seed": 3, "train": {"steps": 50}}.
class JsonConfig final : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    try {
      input >> j;
    } catch (const json::exception& e) {
      throw CLI::ConversionError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config must be a JSON object");
    std::vector<CLI::ConfigItem> out;
    flatten(j, {}, out);
    return out;
  }

 private:
  static std::string scalar(const json& v, const std::string& name) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return v.dump();
    throw CLI::ConversionError("unsupported config value for " + name);
  }

  static void flatten(const json& obj, const std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& out) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (it->is_object()) {
        auto next = parents;
        next.push_back(it.key());
        flatten(*it, next, out);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = it.key();
      if (it->is_array()) {
        for (const json& v : *it) item.inputs.push_back(scalar(v, it.key()));
      } else {
        item.inputs.push_back(scalar(*it, it.key()));
      }
      out.push_back(std::move(item));
    }
  }
};

struct Globals {
  std::uint64_t seed = 0;
  std::string out;
  bool json = false;
};

inline std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline json number_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline void print_report(const report& r, bool as_json) {
  if (as_json) {
    std::cout << r.dump() << "\n";
    return;
  }
  std::string line;
  for (auto it = r.begin(); it != r.end(); ++it) {
    if (it->is_array() || it->is_object()) continue;
    if (!line.empty()) line += ' ';
    line += it.key() + "=";
    if (it->is_number_float()) {
      line += format_number(it->get<double>());
    } else if (it->is_string()) {
      line += it->get<std::string>();
    } else {
      line += it->dump();
    }
  }
  std::cout << line << "\n";
}

inline fs::path require_out(const Globals& g) {
  if (g.out.empty()) throw CLI::RequiredError("--out");
  return g.out;
}

inline Mask positive_mask(const Grid<double>& g) {
  Mask m(g.width, g.height, 0);
  for (std::size_t i = 0; i < g.size(); ++i) m.data[i] = (std::isfinite(g.data[i]) && g.data[i] > 0.0) ? 1 : 0;
  return m;
}

inline DepthMap load_depth(const std::string& depth, const std::string& mask) {
  DepthMap dm;
  dm.z = read_pfm(depth);
  dm.valid = mask.empty() ? positive_mask(dm.z) : read_mask_png(mask);
  if (!dm.valid.same_shape(dm.z)) throw Error(ErrorCode::kShapeMismatch, "mask and depth differ in size");
  return dm;
}

inline SceneCloud frame_cloud(const ContainerFrame& f) {
  SceneCloud cloud;
  append_frame(cloud, f.frame, f.camera, 0);
  return cloud;
}

inline const ContainerFrame& frame_at(const SceneContainer& c, int index) {
  if (index < 0 || static_cast<std::size_t>(index) >= c.frames.size()) {
    throw Error(ErrorCode::kInvalidRange, "frame index " + std::to_string(index) + " out of range");
  }
  return c.frames[static_cast<std::size_t>(index)];
}

inline const SyntheticScene& require_scene(const SceneContainer& c) {
  if (!c.scene) throw Error(ErrorCode::kMissingBlob, "container has no synthetic scene description");
  return *c.scene;
}

inline AlignDirection parse_direction(const std::string& s) {
  return s == "clue-to-pred" ? AlignDirection::kClueToPrediction : AlignDirection::kPredictionToClue;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  int width = 32;
  int height = 32;
  int frames = 12;
  double radius = 0.3;
  double yaw_step = 0.3;
  double hfov_deg = 70.0;
};

inline report run_synth(const Globals& g, const SynthArgs& a) {
  const fs::path out = require_out(g);
  const SyntheticScene scene = generate_scene(g.seed);
  const std::vector<Camera> cams = orbit_cameras(scene, a.frames, a.width, a.height, a.radius, a.yaw_step, 0.0,
                                                 a.hfov_deg * std::numbers::pi / 180.0);
  SceneContainer c;
  c.width = a.width;
  c.height = a.height;
  c.scene = scene;
  Trajectory traj{a.width, a.height, {}, {}};
  for (std::size_t i = 0; i < cams.size(); ++i) {
    c.frames.push_back({view_name(i), cams[i], render_exact(scene, cams[i], a.width, a.height)});
    if (i > 0) {
      traj.cameras.push_back(cams[i]);
      traj.names.push_back(view_name(i));
    }
  }
  save_scene(c, out);
  save_trajectory(traj, out / "trajectory.json");
  return {{"frames", c.frames.size()}, {"quads", scene.quads.size()}, {"out", out.string()}};
}

struct ProjectArgs {
  std::string scene;
  int source = 0;
  bool inverse = false;
};

inline report run_project(const Globals& g, const ProjectArgs& a) {
  const fs::path out = require_out(g);
  const SceneContainer in = load_scene(a.scene);
  const SceneCloud cloud = frame_cloud(frame_at(in, a.source));
  SceneContainer res{in.width, in.height, {}, std::nullopt};
  std::size_t covered = 0;
  for (const ContainerFrame& f : in.frames) {
    const PartialView pv = render_partial_view(cloud, f.camera, in.width, in.height);
    covered += count_valid(pv.depth.valid);
    res.frames.push_back({f.name, f.camera, {pv.rgb, a.inverse ? to_inverse_depth(pv.depth) : pv.depth}});
  }
  save_scene(res, out);
  const double total = static_cast<double>(in.frames.size()) * in.width * in.height;
  return {{"frames", res.frames.size()}, {"source", a.source}, {"mean_coverage", covered / total}};
}

struct NormalizeArgs {
  std::string depth;
  std::string mask;
};

inline report run_normalize(const Globals& g, const NormalizeArgs& a) {
  const DepthMap dm = load_depth(a.depth, a.mask);
  const NormalizedDepth nd = normalize_depth(dm);
  const std::vector<double> v = valid_values(nd.values, nd.valid);
  report r{{"d2", nd.d2},
           {"d98", nd.d98},
           {"valid", v.size()},
           {"min", *std::min_element(v.begin(), v.end())},
           {"max", *std::max_element(v.begin(), v.end())}};
  if (!g.out.empty()) {
    const fs::path out = g.out;
    write_pfm(out / "normalized.pfm", nd.values);
    write_mask_png(out / "normalized_mask.png", nd.valid);
    write_file(out / "normalize.json", r.dump(2) + "\n");
  }
  return r;
}

struct AlignArgs {
  std::string clue;
  std::string pred;
  std::string clue_mask;
  std::string pred_mask;
  std::string direction = "pred-to-clue";
};

inline report run_align(const Globals& g, const AlignArgs& a) {
  const DepthMap clue = load_depth(a.clue, a.clue_mask);
  const Grid<double> pred = read_pfm(a.pred);
  const Mask pred_valid = a.pred_mask.empty() ? Mask(pred.width, pred.height, 1) : read_mask_png(a.pred_mask);
  const AffineFit fit = fit_scale_offset(clue, pred, pred_valid, parse_direction(a.direction));
  report r{{"scale", fit.scale}, {"offset", fit.offset}, {"n_samples", fit.n_samples}, {"residual_rms", fit.residual_rms}};
  if (!g.out.empty()) {
    const fs::path out = g.out;
    const DepthMap aligned = apply_alignment(fit, pred, pred_valid);
    Grid<double> z = aligned.z;
    for (std::size_t i = 0; i < z.size(); ++i) z.data[i] = aligned.valid.data[i] ? z.data[i] : 0.0;
    write_pfm(out / "aligned.pfm", z);
    write_mask_png(out / "aligned_mask.png", aligned.valid);
    write_file(out / "align.json", r.dump(2) + "\n");
  }
  return r;
}

struct TrainArgs {
  std::string scene;
  int pairs = 32;
  std::vector<int> strides{1, 2, 4, 8};
  int steps = 200;
  int batch = 8;
  double lr = 0.05;
  int timesteps = 100;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  int codec_factor = 1;
  ModelConfig model;
};

inline std::vector<DiffusionSample> build_dataset(const SceneContainer& c, const TrainArgs& a, std::uint64_t seed,
                                                  const LatentCodec& codec, const ReferenceExtractor& extractor) {
  std::vector<Camera> cams;
  for (const ContainerFrame& f : c.frames) cams.push_back(f.camera);
  const std::vector<TrainingPair> pairs =
      make_training_pairs(require_scene(c), cams, a.strides, a.pairs, c.width, c.height, seed);
  std::vector<DiffusionSample> data;
  data.reserve(pairs.size());
  for (const TrainingPair& p : pairs) data.push_back(make_diffusion_sample(p, codec, extractor));
  return data;
}

inline report run_train(const Globals& g, const TrainArgs& a) {
  const fs::path out = require_out(g);
  const SceneContainer c = load_scene(a.scene);
  const auto codec = make_codec(a.codec_factor);
  Checkpoint ck;
  ck.model = init_diffusion_model(a.model, g.seed);
  ck.schedule_steps = a.timesteps;
  ck.beta_start = a.beta_start;
  ck.beta_end = a.beta_end;
  ck.codec_factor = a.codec_factor;
  const PatchGridExtractor extractor = PatchGridExtractor::seeded(a.model.d_model, g.seed + 1, a.model.ref_grid);
  ck.reference_projection = extractor.projection();
  const DiffusionSchedule sched = make_schedule(a.timesteps, a.beta_start, a.beta_end);
  const std::vector<DiffusionSample> data = build_dataset(c, a, g.seed + 2, *codec, extractor);
  const std::uint64_t eval_seed = g.seed + 4;
  const double before = evaluate_loss(ck.model, data, sched, eval_seed);
  const TrainResult tr = train(ck.model, data, sched, TrainConfig{a.steps, a.batch, a.lr, g.seed + 3});
  const double after = evaluate_loss(ck.model, data, sched, eval_seed);
  save_checkpoint(ck, out / "model.ckpt");
  json log = {{"initial_loss", before}, {"final_loss", after}, {"loss_curve", tr.loss_curve}};
  write_json(out / "train.json", log);
  return {{"pairs", data.size()}, {"steps", a.steps}, {"initial_loss", before}, {"final_loss", after}};
}

struct Backend {
  std::unique_ptr<LatentCodec> codec;
  std::unique_ptr<Checkpoint> checkpoint;
  std::unique_ptr<FillBackend> fill;
};

inline Backend make_backend(const std::string& kind, const std::string& checkpoint, const SceneContainer& c,
                            const Image& reference) {
  Backend b;
  if (kind == "oracle") {
    b.codec = make_codec(1);
    b.fill = std::make_unique<OracleFill>(require_scene(c));
  } else if (kind == "passthrough") {
    b.codec = make_codec(1);
    b.fill = std::make_unique<PassthroughFill>();
  } else {
    if (checkpoint.empty()) throw CLI::RequiredError("--checkpoint");
    b.checkpoint = std::make_unique<Checkpoint>(load_checkpoint(checkpoint));
    const Checkpoint& ck = *b.checkpoint;
    b.codec = make_codec(ck.codec_factor);
    const PatchGridExtractor extractor(ck.reference_projection, ck.model.config.ref_grid);
    b.fill = std::make_unique<DiffusionFill>(ck.model, extractor.extract(reference),
                                             make_schedule(ck.schedule_steps, ck.beta_start, ck.beta_end));
  }
  return b;
}

struct SampleArgs {
  std::string scene;
  std::string checkpoint;
  std::string backend = "diffusion";
  int source = 0;
  int target = 1;
  std::string direction = "pred-to-clue";
};

inline report run_sample(const Globals& g, const SampleArgs& a) {
  const fs::path out = require_out(g);
  const SceneContainer c = load_scene(a.scene);
  const ContainerFrame& src = frame_at(c, a.source);
  const ContainerFrame& tgt = frame_at(c, a.target);
  const Backend b = make_backend(a.backend, a.checkpoint, c, src.frame.rgb);
  const CompletionOptions opt{c.width, c.height, parse_direction(a.direction), g.seed};
  const StepResult r = complete_step(frame_cloud(src), tgt.camera, *b.fill, *b.codec, opt, 1);
  SceneContainer res{c.width, c.height, {{tgt.name, tgt.camera, r.completed}}, std::nullopt};
  save_scene(res, out);
  return {{"target", tgt.name},
          {"generated", count_valid(r.generated)},
          {"scale", r.stats.scale},
          {"offset", r.stats.offset},
          {"residual_rms", r.stats.residual_rms}};
}

struct CompleteArgs {
  std::string scene;
  std::string trajectory;
  std::string checkpoint;
  std::string backend = "diffusion";
  int source = 0;
  std::string direction = "pred-to-clue";
};

inline report run_complete(const Globals& g, const CompleteArgs& a) {
  const fs::path out = require_out(g);
  const SceneContainer c = load_scene(a.scene);
  const Trajectory traj = load_trajectory(a.trajectory.empty() ? fs::path(a.scene) / "trajectory.json" : fs::path(a.trajectory));
  const ContainerFrame& src = frame_at(c, a.source);
  const Backend b = make_backend(a.backend, a.checkpoint, c, src.frame.rgb);
  const CompletionOptions opt{traj.width, traj.height, parse_direction(a.direction), g.seed};
  const SceneCloud initial = frame_cloud(src);
  const TrajectoryResult res = complete_trajectory(initial, traj.cameras, *b.fill, *b.codec, opt);

  export_ply(res.scene, out / "scene.ply");
  write_json(out / "stats.json", stats_to_json(res.stats));
  SceneContainer views{traj.width, traj.height, {}, std::nullopt};
  for (std::size_t i = 0; i < traj.cameras.size(); ++i) {
    views.frames.push_back({traj.names[i], traj.cameras[i], res.completed[i]});
  }
  save_scene(views, out / "views");
  return {{"iterations", res.stats.size()},
          {"initial_points", initial.size()},
          {"points", res.scene.size()},
          {"backend", b.fill->name()}};
}

struct MetricsArgs {
  std::string pred;
  std::string gt;
  std::vector<std::string> metrics;
};

inline constexpr std::array<std::string_view, 4> kKnownMetrics{"psnr", "ssim", "r_dist", "t_dist"};

inline report run_metrics(const Globals& g, const MetricsArgs& a) {
  for (const std::string& m : a.metrics) {
    if (std::find(kKnownMetrics.begin(), kKnownMetrics.end(), m) == kKnownMetrics.end()) {
      throw Error(ErrorCode::kUnsupportedMetric, "metric '" + m + "' is not available");
    }
  }
  const auto wanted = [&](std::string_view m) {
    return a.metrics.empty() || std::find(a.metrics.begin(), a.metrics.end(), m) != a.metrics.end();
  };
  const SceneContainer pred = load_scene(a.pred);
  const SceneContainer gt = load_scene(a.gt);
  std::map<std::string, const ContainerFrame*> by_name;
  for (const ContainerFrame& f : gt.frames) by_name[f.name] = &f;
  if (pred.frames.empty()) throw Error(ErrorCode::kLengthMismatch, "prediction container has no frames");
  PoseSet gen_poses;
  PoseSet gt_poses;
  std::vector<double> psnrs;
  std::vector<double> ssims;
  for (const ContainerFrame& f : pred.frames) {
    const auto it = by_name.find(f.name);
    if (it == by_name.end()) throw Error(ErrorCode::kLengthMismatch, "ground truth has no frame " + f.name);
    psnrs.push_back(psnr(f.frame.rgb, it->second->frame.rgb));
    ssims.push_back(ssim(f.frame.rgb, it->second->frame.rgb));
    gen_poses.push_back(f.camera);
    gt_poses.push_back(it->second->camera);
  }
  double psnr_sum = 0.0;
  for (double p : psnrs) psnr_sum += p;
  const double mean_psnr = psnr_sum / static_cast<double>(psnrs.size());
  report r{{"frames", psnrs.size()}};
  if (wanted("psnr")) r["psnr_db"] = number_or_inf(mean_psnr);
  if (wanted("ssim")) r["ssim"] = pairwise_mean(ssims);
  if (wanted("r_dist")) r["r_dist_rad"] = rotation_distance(gen_poses, gt_poses);
  if (wanted("t_dist")) r["t_dist"] = translation_distance(gen_poses, gt_poses);
  if (!g.out.empty()) write_file(fs::path(g.out) / "metrics.json", r.dump(2) + "\n");
  return r;
}

struct ExportArgs {
  std::string scene;
};

inline report run_export(const Globals& g, const ExportArgs& a) {
  const fs::path out = require_out(g);
  const SceneContainer c = load_scene(a.scene);
  SceneCloud cloud;
  for (std::size_t i = 0; i < c.frames.size(); ++i) {
    append_frame(cloud, c.frames[i].frame, c.frames[i].camera, static_cast<int>(i));
  }
  export_ply(cloud, out / "scene.ply");
  return {{"frames", c.frames.size()}, {"points", cloud.size()}};
}

inline int report_error(bool as_json, const std::string& code, const std::string& message, int exit_code) {
  if (as_json) {
    std::cout << report{{"error", code}, {"message", message}}.dump() << "\n";
  }
  std::cerr << "error [" << code << "]: " << message << "\n";
  return exit_code;
}

}  // namespace cli

inline int cli_main(int argc, char** argv) {
  using namespace cli;
  CLI::App app{"Scene completion toolkit: synthetic scenes, toy RGBD diffusion, iterative completion"};
  app.require_subcommand(1);
  app.fallthrough();
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON configuration file; command-line flags take precedence");

  Globals g;
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--out", g.out, "Output directory");
  app.add_flag("--json", g.json, "Machine-readable JSON output and errors");

  SynthArgs synth;
  auto* s_synth = app.add_subcommand("synth", "Generate a synthetic scene and save it as a container");
  s_synth->add_option("--width", synth.width)->check(CLI::PositiveNumber);
  s_synth->add_option("--height", synth.height)->check(CLI::PositiveNumber);
  s_synth->add_option("--frames", synth.frames, "Orbit frames")->check(CLI::Range(2, 1000));
  s_synth->add_option("--radius", synth.radius, "Orbit radius");
  s_synth->add_option("--yaw-step", synth.yaw_step, "Yaw increment per frame, radians");
  s_synth->add_option("--hfov", synth.hfov_deg, "Horizontal field of view, degrees")->check(CLI::Range(1.0, 179.0));

  ProjectArgs project;
  auto* s_project = app.add_subcommand("project", "Project one frame's geometry into every camera of a container");
  s_project->add_option("--scene", project.scene)->required();
  s_project->add_option("--source", project.source, "Source frame index");
  s_project->add_flag("--inverse-depth", project.inverse, "Store inverse depth instead of metric z");

  NormalizeArgs normalize;
  auto* s_norm = app.add_subcommand("normalize", "Percentile-normalize a depth map and report the anchors");
  s_norm->add_option("--depth", normalize.depth, "Depth PFM")->required();
  s_norm->add_option("--mask", normalize.mask, "Validity mask PNG (default: depth > 0)");

  AlignArgs align;
  auto* s_align = app.add_subcommand("align", "Fit scale and offset between a clue and a predicted depth map");
  s_align->add_option("--clue", align.clue, "Clue depth PFM")->required();
  s_align->add_option("--pred", align.pred, "Predicted depth PFM")->required();
  s_align->add_option("--clue-mask", align.clue_mask, "Clue mask PNG (default: depth > 0)");
  s_align->add_option("--pred-mask", align.pred_mask, "Prediction mask PNG (default: all valid)");
  s_align->add_option("--direction", align.direction)->check(CLI::IsMember({"pred-to-clue", "clue-to-pred"}));

  TrainArgs train_args;
  auto* s_train = app.add_subcommand("train", "Train the toy RGBD diffusion model on pairs from a synthetic scene");
  s_train->add_option("--scene", train_args.scene)->required();
  s_train->add_option("--pairs", train_args.pairs)->check(CLI::PositiveNumber);
  s_train->add_option("--strides", train_args.strides)->delimiter(',');
  s_train->add_option("--steps", train_args.steps)->check(CLI::NonNegativeNumber);
  s_train->add_option("--batch", train_args.batch)->check(CLI::PositiveNumber);
  s_train->add_option("--lr", train_args.lr);
  s_train->add_option("--timesteps", train_args.timesteps)->check(CLI::PositiveNumber);
  s_train->add_option("--beta-start", train_args.beta_start);
  s_train->add_option("--beta-end", train_args.beta_end);
  s_train->add_option("--codec-factor", train_args.codec_factor)->check(CLI::PositiveNumber);
  s_train->add_option("--patch", train_args.model.patch)->check(CLI::PositiveNumber);
  s_train->add_option("--d-model", train_args.model.d_model)->check(CLI::PositiveNumber);
  s_train->add_option("--hidden", train_args.model.hidden)->check(CLI::PositiveNumber);
  s_train->add_option("--n-emb", train_args.model.n_emb)->check(CLI::PositiveNumber);
  s_train->add_option("--ref-grid", train_args.model.ref_grid)->check(CLI::PositiveNumber);

  SampleArgs sample_args;
  auto* s_sample = app.add_subcommand("sample", "Complete one view of a container with a single sampler run");
  s_sample->add_option("--scene", sample_args.scene)->required();
  s_sample->add_option("--checkpoint", sample_args.checkpoint);
  s_sample->add_option("--backend", sample_args.backend)
      ->check(CLI::IsMember({"diffusion", "oracle", "passthrough"}));
  s_sample->add_option("--source", sample_args.source);
  s_sample->add_option("--target", sample_args.target);
  s_sample->add_option("--direction", sample_args.direction)->check(CLI::IsMember({"pred-to-clue", "clue-to-pred"}));

  CompleteArgs complete;
  auto* s_complete = app.add_subcommand("complete", "Iteratively complete a scene along a camera trajectory");
  s_complete->add_option("--scene", complete.scene)->required();
  s_complete->add_option("--trajectory", complete.trajectory, "Trajectory JSON (default: <scene>/trajectory.json)");
  s_complete->add_option("--checkpoint", complete.checkpoint);
  s_complete->add_option("--backend", complete.backend)->check(CLI::IsMember({"diffusion", "oracle", "passthrough"}));
  s_complete->add_option("--source", complete.source, "Frame seeding the initial cloud");
  s_complete->add_option("--direction", complete.direction)->check(CLI::IsMember({"pred-to-clue", "clue-to-pred"}));

  MetricsArgs metrics;
  auto* s_metrics = app.add_subcommand("metrics", "PSNR, SSIM and pose distances between two containers");
  s_metrics->add_option("--pred", metrics.pred)->required();
  s_metrics->add_option("--gt", metrics.gt)->required();
  s_metrics->add_option("--metric", metrics.metrics, "Subset of psnr,ssim,r_dist,t_dist (default: all)")
      ->delimiter(',');

  ExportArgs export_args;
  auto* s_export = app.add_subcommand("export-ply", "Fuse every frame of a container into a PLY point cloud");
  s_export->add_option("--scene", export_args.scene)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    if (g.json) return report_error(true, "Usage", e.what(), 1);
    app.exit(e);
    return 1;
  }

  try {
    report r;
    if (s_synth->parsed()) r = run_synth(g, synth);
    if (s_project->parsed()) r = run_project(g, project);
    if (s_norm->parsed()) r = run_normalize(g, normalize);
    if (s_align->parsed()) r = run_align(g, align);
    if (s_train->parsed()) r = run_train(g, train_args);
    if (s_sample->parsed()) r = run_sample(g, sample_args);
    if (s_complete->parsed()) r = run_complete(g, complete);
    if (s_metrics->parsed()) r = run_metrics(g, metrics);
    if (s_export->parsed()) r = run_export(g, export_args);
    print_report(r, g.json);
    return 0;
  } catch (const CLI::ParseError& e) {
    return report_error(g.json, "Usage", e.what(), 1);
  } catch (const Error& e) {
    return report_error(g.json, std::string(to_string(e.code())), e.what(), 2);
  } catch (const fs::filesystem_error& e) {
    return report_error(g.json, "IoFailure", e.what(), 2);
  } catch (const json::exception& e) {
    return report_error(g.json, "ParseError", e.what(), 2);
  } catch (const std::exception& e) {
    return report_error(g.json, "Internal", e.what(), 2);
  }
}

}  // namespace scomp
