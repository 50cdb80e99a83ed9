#pragma once

// Learnable scene tokens that cross-attend over reference-view features to
// give the denoiser global scene context.

#include "scomp/attention.hpp"
#include "scomp/core.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

namespace scomp {

struct ReferenceFeatures {
  Mat tokens;  // n_ref x d_model
  std::string provenance;
};

/// Pluggable reference-view feature extractor.
class ReferenceExtractor {
 public:
  virtual ~ReferenceExtractor() = default;
  [[nodiscard]] virtual ReferenceFeatures extract(const Image& image) const = 0;
};

/// Grid-of-patches extractor: per patch (mean R, mean G, mean B, u_centre,
/// v_centre) with centres normalized to [0, 1], then a fixed linear map to d_model.
class PatchGridExtractor final : public ReferenceExtractor {
 public:
  static constexpr int kRawDim = 5;

  PatchGridExtractor(Mat projection, int grid = 8) : projection_(std::move(projection)), grid_(grid) {
    if (projection_.rows() != kRawDim) throw Error(ErrorCode::kDimMismatch, "projection must have 5 rows");
  }

  static PatchGridExtractor seeded(int d_model, std::uint64_t seed, int grid = 8) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(kRawDim)));
    Mat p(kRawDim, d_model);
    for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = normal(rng);
    return PatchGridExtractor(std::move(p), grid);
  }

  [[nodiscard]] int grid() const { return grid_; }
  [[nodiscard]] const Mat& projection() const { return projection_; }

  /// Pre-projection features, one row per patch in row-major patch order.
  [[nodiscard]] Mat raw_features(const Image& image) const {
    if (image.width % grid_ != 0 || image.height % grid_ != 0 || image.width == 0 || image.height == 0) {
      throw Error(ErrorCode::kShapeIndivisible, "image not divisible into the patch grid");
    }
    const int pw = image.width / grid_;
    const int ph = image.height / grid_;
    Mat raw(grid_ * grid_, kRawDim);
    const double inv = 1.0 / static_cast<double>(pw * ph);
    for (int gy = 0; gy < grid_; ++gy) {
      for (int gx = 0; gx < grid_; ++gx) {
        Vec3 sum = Vec3::Zero();
        for (int y = gy * ph; y < (gy + 1) * ph; ++y)
          for (int x = gx * pw; x < (gx + 1) * pw; ++x) sum += image(x, y);
        const Eigen::Index r = gy * grid_ + gx;
        raw(r, 0) = sum.x() * inv;
        raw(r, 1) = sum.y() * inv;
        raw(r, 2) = sum.z() * inv;
        raw(r, 3) = (gx + 0.5) / grid_;
        raw(r, 4) = (gy + 0.5) / grid_;
      }
    }
    return raw;
  }

  [[nodiscard]] ReferenceFeatures extract(const Image& image) const override {
    return {raw_features(image) * projection_, "patch-grid-" + std::to_string(grid_)};
  }

 private:
  Mat projection_;
  int grid_;
};

struct SceneEmbedding {
  Mat tokens;  // n_emb x d
  Mat wq;
  Mat wk;
  Mat wv;

  [[nodiscard]] int d_model() const { return static_cast<int>(tokens.cols()); }
  [[nodiscard]] int n_tokens() const { return static_cast<int>(tokens.rows()); }

  template <typename F>
  void visit(F&& f) {
    f("emb.tokens", tokens);
    f("emb.wq", wq);
    f("emb.wk", wk);
    f("emb.wv", wv);
  }
  template <typename F>
  void visit(F&& f) const {
    f("emb.tokens", tokens);
    f("emb.wq", wq);
    f("emb.wk", wk);
    f("emb.wv", wv);
  }

  [[nodiscard]] SceneEmbedding zeros_like() const {
    return {Mat::Zero(tokens.rows(), tokens.cols()), Mat::Zero(wq.rows(), wq.cols()), Mat::Zero(wk.rows(), wk.cols()),
            Mat::Zero(wv.rows(), wv.cols())};
  }
};

inline SceneEmbedding init_scene_embedding(int n_emb, int d_model, std::uint64_t seed) {
  if (n_emb < 1 || d_model < 1) throw Error(ErrorCode::kDimMismatch, "scene embedding needs n_emb, d_model >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  const double w_std = 1.0 / std::sqrt(static_cast<double>(d_model));
  const auto fill = [&](Mat& m, double std) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = std * unit(rng);
  };
  SceneEmbedding e{Mat(n_emb, d_model), Mat(d_model, d_model), Mat(d_model, d_model), Mat(d_model, d_model)};
  fill(e.tokens, 1.0);
  fill(e.wq, w_std);
  fill(e.wk, w_std);
  fill(e.wv, w_std);
  return e;
}

/// f_scene = softmax(Q K^T / sqrt(d)) V with Q = f_emb Wq, K = f_ref Wk, V = f_ref Wv.
inline Mat cross_attend(const SceneEmbedding& emb, const ReferenceFeatures& ref, AttentionCache* cache = nullptr) {
  if (ref.tokens.cols() != emb.wk.rows() || emb.tokens.cols() != emb.wq.rows()) {
    throw Error(ErrorCode::kDimMismatch, "reference feature width does not match d_model");
  }
  return cross_attention(emb.tokens, ref.tokens, emb.wq, emb.wk, emb.wv, cache);
}

/// Accumulates dL/dparams into `grads` given dL/df_scene.
inline void cross_attend_backward(const SceneEmbedding& emb, const AttentionCache& cache, const Mat& d_scene,
                                  SceneEmbedding& grads) {
  const AttentionGrads g = cross_attention_backward(cache, emb.wq, emb.wk, emb.wv, d_scene);
  grads.tokens += g.d_queries_in;
  grads.wq += g.d_wq;
  grads.wk += g.d_wk;
  grads.wv += g.d_wv;
}

}  // namespace scomp
