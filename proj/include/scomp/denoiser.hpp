#pragma once

// Toy noise predictor standing in for the RGBD U-Net: patch embedding plus a
// sinusoidal timestep embedding, one cross-attention block over the scene
// tokens, a tanh MLP, and a linear unpatch head. All gradients are analytic.

#include "scomp/attention.hpp"
#include "scomp/core.hpp"
#include "scomp/diffusion.hpp"
#include "scomp/scene_embedder.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace scomp {

struct ModelConfig {
  int patch = 4;
  int d_model = 32;
  int hidden = 64;
  int n_emb = 4;
  int ref_grid = 8;

  bool operator==(const ModelConfig&) const = default;
};

struct ToyDenoiser {
  int patch = 4;
  Mat w_in;   // (10 P^2) x d
  Mat b_in;   // 1 x d
  Mat wq;     // d x d
  Mat wk;
  Mat wv;
  Mat wo;
  Mat w1;     // d x hidden
  Mat b1;     // 1 x hidden
  Mat w2;     // hidden x d
  Mat b2;     // 1 x d
  Mat w_out;  // d x (4 P^2)
  Mat b_out;  // 1 x (4 P^2)

  [[nodiscard]] int d_model() const { return static_cast<int>(w_in.cols()); }

  template <typename Self, typename F>
  static void visit_impl(Self& s, F&& f) {
    f("den.w_in", s.w_in);
    f("den.b_in", s.b_in);
    f("den.wq", s.wq);
    f("den.wk", s.wk);
    f("den.wv", s.wv);
    f("den.wo", s.wo);
    f("den.w1", s.w1);
    f("den.b1", s.b1);
    f("den.w2", s.w2);
    f("den.b2", s.b2);
    f("den.w_out", s.w_out);
    f("den.b_out", s.b_out);
  }
  template <typename F>
  void visit(F&& f) { visit_impl(*this, f); }
  template <typename F>
  void visit(F&& f) const { visit_impl(*this, f); }

  [[nodiscard]] ToyDenoiser zeros_like() const {
    ToyDenoiser z = *this;
    z.visit([](const std::string&, Mat& m) { m.setZero(); });
    return z;
  }
};

/// Denoiser plus the scene embedder it consumes; trained jointly.
struct DiffusionModel {
  ModelConfig config;
  SceneEmbedding embedder;
  ToyDenoiser denoiser;

  template <typename F>
  void visit(F&& f) {
    embedder.visit(f);
    denoiser.visit(f);
  }
  template <typename F>
  void visit(F&& f) const {
    embedder.visit(f);
    denoiser.visit(f);
  }

  [[nodiscard]] DiffusionModel zeros_like() const {
    return {config, embedder.zeros_like(), denoiser.zeros_like()};
  }

  [[nodiscard]] std::vector<Mat*> parameters() {
    std::vector<Mat*> out;
    visit([&](const std::string&, Mat& m) { out.push_back(&m); });
    return out;
  }
  [[nodiscard]] std::vector<std::string> parameter_names() const {
    std::vector<std::string> out;
    visit([&](const std::string& n, const Mat&) { out.push_back(n); });
    return out;
  }
};

/// Scaled Gaussian init; the output head gets a 0.1 gain so the initial
/// prediction is close to zero.
inline DiffusionModel init_diffusion_model(const ModelConfig& cfg, std::uint64_t seed) {
  if (cfg.patch < 1 || cfg.d_model < 2 || cfg.hidden < 1 || cfg.n_emb < 1) {
    throw Error(ErrorCode::kInvalidRange, "invalid model configuration");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  const auto gauss = [&](Eigen::Index r, Eigen::Index c, double gain) {
    Mat m(r, c);
    const double std = gain / std::sqrt(static_cast<double>(r));
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = std * unit(rng);
    return m;
  };
  const int p2 = cfg.patch * cfg.patch;
  const int d = cfg.d_model;
  DiffusionModel m;
  m.config = cfg;
  m.embedder = init_scene_embedding(cfg.n_emb, d, rng());
  ToyDenoiser& den = m.denoiser;
  den.patch = cfg.patch;
  den.w_in = gauss(kPackedChannels * p2, d, 1.0);
  den.b_in = Mat::Zero(1, d);
  den.wq = gauss(d, d, 1.0);
  den.wk = gauss(d, d, 1.0);
  den.wv = gauss(d, d, 1.0);
  den.wo = gauss(d, d, 1.0);
  den.w1 = gauss(d, cfg.hidden, 1.0);
  den.b1 = Mat::Zero(1, cfg.hidden);
  den.w2 = gauss(cfg.hidden, d, 1.0);
  den.b2 = Mat::Zero(1, d);
  den.w_out = gauss(d, kLatentChannels * p2, 0.1);
  den.b_out = Mat::Zero(1, kLatentChannels * p2);
  return m;
}

/// Fixed sinusoidal embedding: [sin(t w_k), cos(t w_k)] with w_k = 10000^(-2k/d).
inline RowVec timestep_embedding(int t, int d_model) {
  RowVec e(d_model);
  for (int i = 0; i < d_model; ++i) {
    const int k = i / 2;
    const double freq = std::pow(10000.0, -2.0 * k / static_cast<double>(d_model));
    e(i) = (i % 2 == 0) ? std::sin(t * freq) : std::cos(t * freq);
  }
  return e;
}

/// Non-overlapping P x P patches -> rows of length C P^2 (feature = c P^2 + dy P + dx).
inline Mat patchify(const Tensor3& x, int p) {
  if (x.height % p != 0 || x.width % p != 0) throw Error(ErrorCode::kShapeMismatch, "latent not divisible by patch");
  const int nx = x.width / p;
  const int ny = x.height / p;
  Mat out(nx * ny, x.channels * p * p);
  for (int py = 0; py < ny; ++py)
    for (int px = 0; px < nx; ++px)
      for (int c = 0; c < x.channels; ++c)
        for (int dy = 0; dy < p; ++dy)
          for (int dx = 0; dx < p; ++dx) out(py * nx + px, (c * p + dy) * p + dx) = x.at(c, py * p + dy, px * p + dx);
  return out;
}

inline Tensor3 unpatchify(const Mat& tokens, int channels, int height, int width, int p) {
  Tensor3 x(channels, height, width);
  const int nx = width / p;
  for (int py = 0; py < height / p; ++py)
    for (int px = 0; px < nx; ++px)
      for (int c = 0; c < channels; ++c)
        for (int dy = 0; dy < p; ++dy)
          for (int dx = 0; dx < p; ++dx) x.at(c, py * p + dy, px * p + dx) = tokens(py * nx + px, (c * p + dy) * p + dx);
  return x;
}

struct DenoiserCache {
  Mat x;
  Mat e;
  AttentionCache attn;
  Mat ctx;
  Mat h1;
  Mat g;
  Mat h2;
};

/// Predicts eps_hat (4 channels, latent shape) from the packed 10-channel input.
inline Tensor3 denoise(const ToyDenoiser& den, const Tensor3& packed, int t, const Mat& scene_tokens,
                       DenoiserCache* cache = nullptr) {
  if (packed.channels != kPackedChannels) throw Error(ErrorCode::kShapeMismatch, "denoiser expects 10 channels");
  if (packed.height % den.patch != 0 || packed.width % den.patch != 0) {
    throw Error(ErrorCode::kShapeMismatch, "input not divisible by patch size");
  }
  if (scene_tokens.cols() != den.d_model()) throw Error(ErrorCode::kShapeMismatch, "scene token width");
  DenoiserCache local;
  DenoiserCache& c = cache ? *cache : local;
  c.x = patchify(packed, den.patch);
  const RowVec temb = timestep_embedding(t, den.d_model());
  c.e = c.x * den.w_in;
  c.e.rowwise() += den.b_in.row(0) + temb;
  c.ctx = cross_attention(c.e, scene_tokens, den.wq, den.wk, den.wv, &c.attn);
  c.h1 = c.e + c.ctx * den.wo;
  Mat u = c.h1 * den.w1;
  u.rowwise() += den.b1.row(0);
  c.g = u.array().tanh().matrix();
  c.h2 = c.h1 + c.g * den.w2;
  c.h2.rowwise() += den.b2.row(0);
  Mat y = c.h2 * den.w_out;
  y.rowwise() += den.b_out.row(0);
  return unpatchify(y, kLatentChannels, packed.height, packed.width, den.patch);
}

/// Accumulates parameter gradients given dL/d(eps_hat) in token layout;
/// returns dL/d(scene_tokens).
inline Mat denoise_backward(const ToyDenoiser& den, const DenoiserCache& c, const Mat& d_y, ToyDenoiser& grads) {
  grads.w_out += c.h2.transpose() * d_y;
  grads.b_out += d_y.colwise().sum();
  const Mat d_h2 = d_y * den.w_out.transpose();
  grads.w2 += c.g.transpose() * d_h2;
  grads.b2 += d_h2.colwise().sum();
  const Mat d_g = d_h2 * den.w2.transpose();
  const Mat d_u = d_g.cwiseProduct((1.0 - c.g.array().square()).matrix());
  grads.w1 += c.h1.transpose() * d_u;
  grads.b1 += d_u.colwise().sum();
  const Mat d_h1 = d_h2 + d_u * den.w1.transpose();
  grads.wo += c.ctx.transpose() * d_h1;
  const Mat d_ctx = d_h1 * den.wo.transpose();
  const AttentionGrads ag = cross_attention_backward(c.attn, den.wq, den.wk, den.wv, d_ctx);
  grads.wq += ag.d_wq;
  grads.wk += ag.d_wk;
  grads.wv += ag.d_wv;
  const Mat d_e = d_h1 + ag.d_queries_in;
  grads.w_in += c.x.transpose() * d_e;
  grads.b_in += d_e.colwise().sum();
  return ag.d_context_in;
}

/// One supervised example: clean latent, its conditions and reference features.
struct DiffusionSample {
  Tensor3 z0;
  ConditionPack cond;
  ReferenceFeatures ref;
};

struct NoiseDraw {
  int t = 1;
  Tensor3 eps;
};

/// Per-item t ~ U{1..T} and eps ~ N(0, I) from one seeded stream.
inline std::vector<NoiseDraw> draw_noise(std::span<const DiffusionSample> batch, const DiffusionSchedule& sched,
                                         std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> step(1, sched.steps);
  std::vector<NoiseDraw> draws;
  draws.reserve(batch.size());
  for (const DiffusionSample& s : batch) {
    NoiseDraw d;
    d.t = step(rng);
    d.eps = gaussian_like(s.z0, rng);
    draws.push_back(std::move(d));
  }
  return draws;
}

/// eps_hat = f(packed input, t, batch index).
using IndexedPredictor = std::function<Tensor3(const Tensor3& packed, int t, std::size_t item)>;

/// Mean squared noise-prediction error over all items and elements, using the
/// same draws as loss_and_grads for the given seed.
inline double epsilon_loss(const IndexedPredictor& predictor, std::span<const DiffusionSample> batch,
                           const DiffusionSchedule& sched, std::uint64_t seed) {
  if (batch.empty()) throw Error(ErrorCode::kEmptyBatch, "loss needs at least one item");
  const std::vector<NoiseDraw> draws = draw_noise(batch, sched, seed);
  std::vector<double> per_item(batch.size());
  std::size_t n_el = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Tensor3 zt = mix_noise(batch[i].z0, draws[i].eps, sched.alpha_bar_at(draws[i].t));
    const Tensor3 eps_hat = predictor(pack_input(zt, batch[i].cond), draws[i].t, i);
    if (!eps_hat.same_shape(zt)) throw Error(ErrorCode::kShapeMismatch, "predictor output shape");
    std::vector<double> sq(eps_hat.data.size());
    for (std::size_t k = 0; k < sq.size(); ++k) {
      const double r = draws[i].eps.data[k] - eps_hat.data[k];
      sq[k] = r * r;
    }
    per_item[i] = pairwise_sum(sq);
    n_el += sq.size();
  }
  return pairwise_sum(per_item) / static_cast<double>(n_el);
}

inline double evaluate_loss(const DiffusionModel& model, std::span<const DiffusionSample> batch,
                            const DiffusionSchedule& sched, std::uint64_t seed) {
  return epsilon_loss(
      [&](const Tensor3& packed, int t, std::size_t i) {
        const Mat scene = cross_attend(model.embedder, batch[i].ref);
        return denoise(model.denoiser, packed, t, scene);
      },
      batch, sched, seed);
}

struct LossAndGrads {
  double loss = 0.0;
  DiffusionModel grads;
};

/// L = mean ||eps - eps_hat||^2 over the batch with reverse-mode gradients for
/// every denoiser and scene-embedding parameter.
inline LossAndGrads loss_and_grads(const DiffusionModel& model, std::span<const DiffusionSample> batch,
                                   const DiffusionSchedule& sched, std::uint64_t seed) {
  if (batch.empty()) throw Error(ErrorCode::kEmptyBatch, "loss needs at least one item");
  const std::vector<NoiseDraw> draws = draw_noise(batch, sched, seed);
  std::size_t n_el = 0;
  for (const auto& s : batch) n_el += s.z0.data.size();
  const double norm = 1.0 / static_cast<double>(n_el);
  const int p = model.denoiser.patch;

  LossAndGrads out{0.0, model.zeros_like()};
  std::vector<double> per_item(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const DiffusionSample& s = batch[i];
    AttentionCache emb_cache;
    const Mat scene = cross_attend(model.embedder, s.ref, &emb_cache);
    const Tensor3 zt = mix_noise(s.z0, draws[i].eps, sched.alpha_bar_at(draws[i].t));
    DenoiserCache cache;
    const Tensor3 eps_hat = denoise(model.denoiser, pack_input(zt, s.cond), draws[i].t, scene, &cache);
    Tensor3 d_out(eps_hat.channels, eps_hat.height, eps_hat.width);
    std::vector<double> sq(eps_hat.data.size());
    for (std::size_t k = 0; k < sq.size(); ++k) {
      const double r = eps_hat.data[k] - draws[i].eps.data[k];
      sq[k] = r * r;
      d_out.data[k] = 2.0 * r * norm;
    }
    per_item[i] = pairwise_sum(sq);
    const Mat d_scene = denoise_backward(model.denoiser, cache, patchify(d_out, p), out.grads.denoiser);
    cross_attend_backward(model.embedder, emb_cache, d_scene, out.grads.embedder);
  }
  out.loss = pairwise_sum(per_item) * norm;
  return out;
}

struct TrainConfig {
  int steps = 500;
  int batch_size = 8;
  double learning_rate = 0.05;
  std::uint64_t seed = 0;
};

struct TrainResult {
  std::vector<double> loss_curve;
};

/// Plain minibatch gradient descent with seeded epoch shuffling.
inline TrainResult train(DiffusionModel& model, std::span<const DiffusionSample> dataset,
                         const DiffusionSchedule& sched, const TrainConfig& cfg) {
  if (dataset.empty()) throw Error(ErrorCode::kEmptyBatch, "training set is empty");
  if (cfg.batch_size < 1 || cfg.steps < 0) throw Error(ErrorCode::kInvalidRange, "invalid training configuration");
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t cursor = 0;

  TrainResult result;
  result.loss_curve.reserve(static_cast<std::size_t>(cfg.steps));
  std::vector<DiffusionSample> batch;
  for (int step = 0; step < cfg.steps; ++step) {
    batch.clear();
    for (int b = 0; b < cfg.batch_size; ++b) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      batch.push_back(dataset[order[cursor++]]);
    }
    LossAndGrads lg = loss_and_grads(model, batch, sched, rng());
    if (!std::isfinite(lg.loss)) {
      throw Error(ErrorCode::kDivergenceDetected, "loss became non-finite at step " + std::to_string(step));
    }
    result.loss_curve.push_back(lg.loss);
    std::vector<Mat*> params = model.parameters();
    std::vector<Mat*> grads = lg.grads.parameters();
    for (std::size_t k = 0; k < params.size(); ++k) *params[k] -= cfg.learning_rate * *grads[k];
  }
  return result;
}

/// Sampler-facing predictor bound to precomputed scene tokens.
inline NoisePredictor make_predictor(const DiffusionModel& model, Mat scene_tokens) {
  return [&model, scene = std::move(scene_tokens)](const Tensor3& packed, int t) {
    return denoise(model.denoiser, packed, t, scene);
  };
}

}  // namespace scomp
