#pragma once

// DDPM forward process, condition packing and ancestral sampling over the
// stacked RGBD latent.

#include "scomp/core.hpp"
#include "scomp/depth_codec.hpp"
#include "scomp/geometry.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace scomp {

inline constexpr int kLatentChannels = 4;
inline constexpr int kPackedChannels = 10;

struct DiffusionSchedule {
  int steps = 0;
  std::vector<double> beta;       // beta[t - 1] for t = 1..T
  std::vector<double> alpha_bar;  // alpha_bar[t] for t = 0..T, alpha_bar[0] = 1

  [[nodiscard]] double beta_at(int t) const { return beta[static_cast<std::size_t>(t - 1)]; }
  [[nodiscard]] double alpha_bar_at(int t) const { return alpha_bar[static_cast<std::size_t>(t)]; }
};

/// Linearly spaced betas and their running product.
inline DiffusionSchedule make_schedule(int steps, double beta_start, double beta_end) {
  if (steps < 1 || !(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0)) {
    throw Error(ErrorCode::kInvalidRange, "schedule needs T >= 1 and 0 < beta_start <= beta_end < 1");
  }
  DiffusionSchedule s;
  s.steps = steps;
  s.beta.resize(static_cast<std::size_t>(steps));
  s.alpha_bar.resize(static_cast<std::size_t>(steps) + 1);
  s.alpha_bar[0] = 1.0;
  for (int t = 1; t <= steps; ++t) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(t - 1) / static_cast<double>(steps - 1);
    const double b = beta_start + frac * (beta_end - beta_start);
    s.beta[static_cast<std::size_t>(t - 1)] = b;
    s.alpha_bar[static_cast<std::size_t>(t)] = s.alpha_bar[static_cast<std::size_t>(t - 1)] * (1.0 - b);
  }
  return s;
}

inline DiffusionSchedule default_schedule() { return make_schedule(100, 1e-4, 0.02); }

inline Tensor3 gaussian_like(const Tensor3& shape, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor3 eps(shape.channels, shape.height, shape.width);
  for (double& v : eps.data) v = normal(rng);
  return eps;
}

/// sqrt(a) * z0 + sqrt(1 - a) * eps for an arbitrary alpha_bar in [0, 1].
inline Tensor3 mix_noise(const Tensor3& z0, const Tensor3& eps, double alpha_bar) {
  if (!z0.same_shape(eps)) throw Error(ErrorCode::kShapeMismatch, "latent and noise shapes differ");
  const double a = std::sqrt(alpha_bar);
  const double b = std::sqrt(1.0 - alpha_bar);
  Tensor3 zt(z0.channels, z0.height, z0.width);
  for (std::size_t i = 0; i < zt.data.size(); ++i) zt.data[i] = a * z0.data[i] + b * eps.data[i];
  return zt;
}

struct NoisedLatent {
  Tensor3 zt;
  Tensor3 eps;
};

inline NoisedLatent forward_noise(const Tensor3& z0, int t, const DiffusionSchedule& sched, std::mt19937_64& rng) {
  if (t < 1 || t > sched.steps) throw Error(ErrorCode::kStepOutOfRange, "t must lie in [1, T]");
  Tensor3 eps = gaussian_like(z0, rng);
  Tensor3 zt = mix_noise(z0, eps, sched.alpha_bar_at(t));
  return {std::move(zt), std::move(eps)};
}

inline NoisedLatent forward_noise(const Tensor3& z0, int t, const DiffusionSchedule& sched, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return forward_noise(z0, t, sched, rng);
}

/// Clean-latent estimate (z_t - sqrt(1 - a) eps_hat) / sqrt(a).
inline Tensor3 predict_x0(const Tensor3& zt, const Tensor3& eps_hat, double alpha_bar) {
  if (!zt.same_shape(eps_hat)) throw Error(ErrorCode::kShapeMismatch, "latent and noise shapes differ");
  const double a = std::sqrt(alpha_bar);
  const double b = std::sqrt(1.0 - alpha_bar);
  Tensor3 x0(zt.channels, zt.height, zt.width);
  for (std::size_t i = 0; i < x0.data.size(); ++i) x0.data[i] = (zt.data[i] - b * eps_hat.data[i]) / a;
  return x0;
}

/// Latent conditions: partial image (3), partial depth (1), soft masks (1 + 1).
struct ConditionPack {
  Tensor3 z_ip;
  Tensor3 z_dp;
  Tensor3 z_im;
  Tensor3 z_dm;

  [[nodiscard]] int height() const { return z_ip.height; }
  [[nodiscard]] int width() const { return z_ip.width; }

  bool operator==(const ConditionPack&) const = default;
};

inline Tensor3 grid_to_tensor(const Grid<double>& g) {
  Tensor3 t(1, g.height, g.width);
  std::copy(g.data.begin(), g.data.end(), t.data.begin());
  return t;
}

/// Builds the condition pack for a partial view: invalid pixels are zeroed,
/// depth is normalized by its own percentiles, masks are area-interpolated.
inline ConditionPack build_condition(const PartialView& view, const NormalizedDepth& nd, const LatentCodec& codec) {
  Image rgb = view.rgb;
  for (std::size_t i = 0; i < rgb.size(); ++i) {
    if (!view.rgb_valid.data[i]) rgb.data[i] = Vec3::Zero();
  }
  const RgbdLatent z = encode_rgbd(rgb, nd.values, codec);
  ConditionPack c;
  c.z_ip = z.image;
  c.z_dp = z.depth;
  c.z_im = grid_to_tensor(interpolate_mask(view.rgb_valid, codec.factor()));
  c.z_dm = grid_to_tensor(interpolate_mask(view.depth.valid, codec.factor()));
  return c;
}

/// Channel layout: [z_t (4) | z_ip (3) | z_dp (1) | z_im (1) | z_dm (1)].
inline Tensor3 pack_input(const Tensor3& zt, const ConditionPack& c) {
  const auto ok = [&](const Tensor3& t, int ch) {
    return t.channels == ch && t.height == zt.height && t.width == zt.width;
  };
  if (!ok(zt, kLatentChannels) || !ok(c.z_ip, 3) || !ok(c.z_dp, 1) || !ok(c.z_im, 1) || !ok(c.z_dm, 1)) {
    throw Error(ErrorCode::kShapeMismatch, "pack_input shapes disagree");
  }
  Tensor3 out(kPackedChannels, zt.height, zt.width);
  auto it = out.data.begin();
  for (const Tensor3* t : {&zt, &c.z_ip, &c.z_dp, &c.z_im, &c.z_dm}) it = std::copy(t->data.begin(), t->data.end(), it);
  return out;
}

struct UnpackedInput {
  Tensor3 zt;
  ConditionPack cond;
};

inline UnpackedInput unpack_input(const Tensor3& packed) {
  if (packed.channels != kPackedChannels) throw Error(ErrorCode::kShapeMismatch, "packed input must have 10 channels");
  const int h = packed.height;
  const int w = packed.width;
  UnpackedInput u{Tensor3(4, h, w), {Tensor3(3, h, w), Tensor3(1, h, w), Tensor3(1, h, w), Tensor3(1, h, w)}};
  auto it = packed.data.begin();
  for (Tensor3* t : {&u.zt, &u.cond.z_ip, &u.cond.z_dp, &u.cond.z_im, &u.cond.z_dm}) {
    const auto n = static_cast<std::ptrdiff_t>(t->data.size());
    std::copy(it, it + n, t->data.begin());
    it += n;
  }
  return u;
}

/// eps_hat = predictor(packed input, t).
using NoisePredictor = std::function<Tensor3(const Tensor3& packed, int t)>;

struct SampleTrace {
  /// x0 estimate at each step, ordered t = T..1.
  std::vector<Tensor3> x0_estimates;
};

/// DDPM ancestral sampling from z_T ~ N(0, I) with posterior variance
/// beta_t (1 - abar_{t-1}) / (1 - abar_t).
inline Tensor3 sample(const NoisePredictor& predictor, const ConditionPack& cond, const DiffusionSchedule& sched,
                      std::uint64_t seed, SampleTrace* trace = nullptr) {
  std::mt19937_64 rng(seed);
  Tensor3 z = gaussian_like(Tensor3(kLatentChannels, cond.height(), cond.width()), rng);
  for (int t = sched.steps; t >= 1; --t) {
    const Tensor3 eps_hat = predictor(pack_input(z, cond), t);
    if (!eps_hat.same_shape(z)) throw Error(ErrorCode::kShapeMismatch, "predictor output shape");
    const double abar = sched.alpha_bar_at(t);
    const double abar_prev = sched.alpha_bar_at(t - 1);
    const double beta = sched.beta_at(t);
    const Tensor3 x0 = predict_x0(z, eps_hat, abar);
    if (trace) trace->x0_estimates.push_back(x0);
    const double c0 = std::sqrt(abar_prev) * beta / (1.0 - abar);
    const double ct = std::sqrt(1.0 - beta) * (1.0 - abar_prev) / (1.0 - abar);
    const double sigma = std::sqrt(beta * (1.0 - abar_prev) / (1.0 - abar));
    Tensor3 next(z.channels, z.height, z.width);
    if (t > 1) {
      const Tensor3 noise = gaussian_like(z, rng);
      for (std::size_t i = 0; i < next.data.size(); ++i) {
        next.data[i] = c0 * x0.data[i] + ct * z.data[i] + sigma * noise.data[i];
      }
    } else {
      for (std::size_t i = 0; i < next.data.size(); ++i) next.data[i] = c0 * x0.data[i] + ct * z.data[i];
    }
    for (double v : next.data) {
      if (!std::isfinite(v)) throw Error(ErrorCode::kNonFiniteState, "sampler state diverged at t=" + std::to_string(t));
    }
    z = std::move(next);
  }
  return z;
}

}  // namespace scomp
