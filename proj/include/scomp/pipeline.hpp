#pragma once

// Iterative scene completion: render the fused cloud into a new camera,
// generatively fill the missing pixels, register the filled depth to the
// clues, lift it back to 3D and append the new points.

#include "scomp/alignment.hpp"
#include "scomp/camera.hpp"
#include "scomp/core.hpp"
#include "scomp/denoiser.hpp"
#include "scomp/depth_codec.hpp"
#include "scomp/diffusion.hpp"
#include "scomp/geometry.hpp"
#include "scomp/scene_embedder.hpp"
#include "scomp/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace scomp {

/// Everything a backend may look at when filling a view.
struct FillRequest {
  const Camera& camera;
  const PartialView& partial;
  const NormalizedDepth& clue;  // partial depth, normalized by its own percentiles
  const ConditionPack& condition;
  const LatentCodec& codec;
  std::uint64_t seed;
};

/// Completed view in normalized-depth space (any affine frame; alignment
/// registers it afterwards).
struct FilledView {
  Image rgb;
  Grid<double> depth;
  Mask valid;
};

class FillBackend {
 public:
  virtual ~FillBackend() = default;
  [[nodiscard]] virtual FilledView fill(const FillRequest& req) const = 0;
  [[nodiscard]] virtual std::string name() const = 0;
};

/// Returns the clues unchanged; nothing outside the clue mask becomes valid.
class PassthroughFill final : public FillBackend {
 public:
  [[nodiscard]] FilledView fill(const FillRequest& req) const override {
    return {req.partial.rgb, req.clue.values, req.clue.valid};
  }
  [[nodiscard]] std::string name() const override { return "passthrough"; }
};

/// Normalizes a clue depth map; views with too few or constant clues get an
/// all-invalid condition instead of an error.
inline NormalizedDepth normalize_clue(const DepthMap& dm) {
  try {
    return normalize_depth(dm);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kTooFewSamples && e.code() != ErrorCode::kDegenerateRange) throw;
    return {Grid<double>(dm.width(), dm.height(), 0.0), Mask(dm.width(), dm.height(), 0), 0.0, 1.0};
  }
}

/// Training example from a synthetic pair: the target RGBD (depth normalized
/// by its own percentiles) is the clean latent, the projected source view is
/// the condition and the source render feeds the scene embedding.
inline DiffusionSample make_diffusion_sample(const TrainingPair& pair, const LatentCodec& codec,
                                             const ReferenceExtractor& extractor) {
  const NormalizedDepth target = normalize_depth(pair.target.depth);
  DiffusionSample s;
  s.z0 = encode_rgbd(pair.target.rgb, target.values, codec).stacked();
  PartialView cond = pair.condition;
  const NormalizedDepth clue = normalize_clue(cond.depth);
  cond.depth.valid = clue.valid;
  s.cond = build_condition(cond, clue, codec);
  s.ref = extractor.extract(pair.reference);
  return s;
}

/// Ideal inpainter over a synthetic scene: clue pixels are reproduced, missing
/// pixels take the exact ground truth, and the depth is returned normalized by
/// the completed view's own percentiles.
class OracleFill final : public FillBackend {
 public:
  explicit OracleFill(SyntheticScene scene) : scene_(std::move(scene)) {}

  [[nodiscard]] FilledView fill(const FillRequest& req) const override {
    const int w = req.partial.width();
    const int h = req.partial.height();
    const RgbdFrame truth = render_exact(scene_, req.camera, w, h);
    DepthMap composite(w, h);
    Image rgb(w, h, Vec3::Zero());
    for (std::size_t i = 0; i < composite.z.size(); ++i) {
      if (req.partial.depth.valid.data[i]) {
        composite.z.data[i] = req.partial.depth.z.data[i];
        composite.valid.data[i] = 1;
        rgb.data[i] = req.partial.rgb.data[i];
      } else if (truth.depth.valid.data[i]) {
        composite.z.data[i] = truth.depth.z.data[i];
        composite.valid.data[i] = 1;
        rgb.data[i] = truth.rgb.data[i];
      }
    }
    NormalizedDepth nd = normalize_depth(composite);
    return {std::move(rgb), std::move(nd.values), std::move(nd.valid)};
  }
  [[nodiscard]] std::string name() const override { return "oracle"; }

 private:
  SyntheticScene scene_;
};

/// Samples the trained toy denoiser under the request's conditions.
class DiffusionFill final : public FillBackend {
 public:
  DiffusionFill(const DiffusionModel& model, const ReferenceFeatures& reference, DiffusionSchedule sched)
      : model_(model), scene_tokens_(cross_attend(model.embedder, reference)), sched_(std::move(sched)) {}

  [[nodiscard]] FilledView fill(const FillRequest& req) const override {
    const Tensor3 z0 = sample(make_predictor(model_, scene_tokens_), req.condition, sched_, req.seed);
    const DecodedRgbd dec = decode_rgbd(split_latent(z0), req.codec);
    FilledView out{dec.rgb, dec.depth, Mask(dec.depth.width, dec.depth.height, 1)};
    for (Vec3& c : out.rgb.data) c = c.cwiseMax(0.0).cwiseMin(1.0);
    return out;
  }
  [[nodiscard]] std::string name() const override { return "diffusion"; }

 private:
  const DiffusionModel& model_;
  Mat scene_tokens_;
  DiffusionSchedule sched_;
};

/// Minimum number of co-valid clue pixels required for the depth fit.
inline constexpr std::size_t kMinFitOverlap = 16;

struct StepStats {
  int iteration = 0;
  std::size_t points_added = 0;
  double scale = 1.0;
  double offset = 0.0;
  double residual_rms = 0.0;
};

struct StepResult {
  SceneCloud scene;
  /// Completed view: filled colour and aligned metric depth with clues re-imposed.
  RgbdFrame completed;
  Mask generated;  // pixels that contributed new points
  StepStats stats;
};

struct CompletionOptions {
  int width = 0;
  int height = 0;
  AlignDirection direction = AlignDirection::kPredictionToClue;
  std::uint64_t seed = 0;
};

/// One completion iteration. Existing points are never touched; only pixels
/// outside the clue mask are appended, tagged with `iteration`.
inline StepResult complete_step(const SceneCloud& scene, const Camera& target, const FillBackend& backend,
                                const LatentCodec& codec, const CompletionOptions& opt, int iteration) {
  validate(target);
  if (scene.empty()) throw Error(ErrorCode::kEmptyCloud, "cannot complete from an empty scene");
  const int w = opt.width;
  const int h = opt.height;

  const PartialView partial = render_partial_view(scene, target, w, h);
  if (count_valid(partial.depth.valid) < kMinFitOverlap) {
    throw Error(ErrorCode::kInsufficientOverlap,
                "only " + std::to_string(count_valid(partial.depth.valid)) + " clue pixels in view");
  }
  const NormalizedDepth clue = normalize_depth(partial.depth);
  const ConditionPack cond = build_condition(partial, clue, codec);
  const FilledView filled =
      backend.fill(FillRequest{target, partial, clue, cond, codec, opt.seed + static_cast<std::uint64_t>(iteration)});
  if (!filled.depth.same_shape(w, h) || !filled.rgb.same_shape(w, h) || !filled.valid.same_shape(w, h)) {
    throw Error(ErrorCode::kShapeMismatch, "backend output resolution differs from the request");
  }

  // back into the clue's metric range, then registered against the clues
  const NormalizedDepth filled_nd{filled.depth, filled.valid, clue.d2, clue.d98};
  const Grid<double> pred = denormalize_values(filled_nd);
  std::size_t overlap = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) overlap += (partial.depth.valid.data[i] && filled.valid.data[i]) ? 1 : 0;
  if (overlap < kMinFitOverlap) {
    throw Error(ErrorCode::kInsufficientOverlap,
                "only " + std::to_string(overlap) + " clue pixels overlap the prediction");
  }
  const AffineFit fit = fit_scale_offset(partial.depth, pred, filled.valid, opt.direction);
  DepthMap aligned = apply_alignment(fit, pred, filled.valid);

  StepResult res;
  res.completed.rgb = filled.rgb;
  res.generated = Mask(w, h, 0);
  for (std::size_t i = 0; i < aligned.z.size(); ++i) {
    if (partial.depth.valid.data[i]) {
      aligned.z.data[i] = partial.depth.z.data[i];
      aligned.valid.data[i] = 1;
      res.completed.rgb.data[i] = partial.rgb.data[i];
    } else if (aligned.valid.data[i]) {
      res.generated.data[i] = 1;
    }
  }
  res.completed.depth = aligned;

  const Pointmap lifted = unproject_depth(aligned, target);
  res.scene = scene;
  for (std::size_t i = 0; i < lifted.points.size(); ++i) {
    if (res.generated.data[i]) res.scene.push_back(lifted.points.data[i], res.completed.rgb.data[i], iteration);
  }
  res.stats = {iteration, res.scene.size() - scene.size(), fit.scale, fit.offset, fit.residual_rms};
  return res;
}

struct TrajectoryResult {
  SceneCloud scene;
  std::vector<StepStats> stats;
  std::vector<RgbdFrame> completed;
};

/// Folds complete_step over the cameras; iterations are numbered from 1.
/// Step errors are rethrown with the iteration index.
inline TrajectoryResult complete_trajectory(const SceneCloud& scene, const std::vector<Camera>& cams,
                                            const FillBackend& backend, const LatentCodec& codec,
                                            const CompletionOptions& opt) {
  TrajectoryResult out;
  out.scene = scene;
  for (std::size_t i = 0; i < cams.size(); ++i) {
    const int iteration = static_cast<int>(i) + 1;
    try {
      StepResult r = complete_step(out.scene, cams[i], backend, codec, opt, iteration);
      out.scene = std::move(r.scene);
      out.stats.push_back(r.stats);
      out.completed.push_back(std::move(r.completed));
    } catch (const Error& e) {
      throw Error(e.code(), "iteration " + std::to_string(iteration) + ": " + e.what());
    }
  }
  return out;
}

/// Symmetric mean nearest-neighbour distance, brute force.
inline double chamfer_distance(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::kEmptyCloud, "chamfer distance needs non-empty clouds");
  const auto directed = [](const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
    double sum = 0.0;
    for (const Vec3& p : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const Vec3& q : to) {
        const double dx = p.x() - q.x();
        const double dy = p.y() - q.y();
        const double dz = p.z() - q.z();
        best = std::min(best, dx * dx + dy * dy + dz * dz);
      }
      sum += std::sqrt(best);
    }
    return sum / static_cast<double>(from.size());
  };
  return 0.5 * (directed(a, b) + directed(b, a));
}

inline double chamfer_distance(const SceneCloud& a, const SceneCloud& b) { return chamfer_distance(a.points, b.points); }

/// Fraction of `reference` points with a point of `cloud` within `tau`.
inline double coverage(const std::vector<Vec3>& reference, const std::vector<Vec3>& cloud, double tau) {
  if (reference.empty()) return 0.0;
  const double tau2 = tau * tau;
  std::size_t hit = 0;
  for (const Vec3& p : reference) {
    for (const Vec3& q : cloud) {
      if ((p - q).squaredNorm() <= tau2) {
        ++hit;
        break;
      }
    }
  }
  return static_cast<double>(hit) / static_cast<double>(reference.size());
}

}  // namespace scomp
