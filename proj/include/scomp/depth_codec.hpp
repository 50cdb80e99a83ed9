#pragma once

// Percentile-anchored depth normalization and the latent codec contract.

#include "scomp/core.hpp"
#include "scomp/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <span>
#include <vector>

namespace scomp {

/// Linear-interpolation quantile: rank r = q (n - 1) over ascending values.
inline double percentile(std::span<const double> values, double q) {
  if (values.size() < 2) throw Error(ErrorCode::kTooFewSamples, "percentile needs at least 2 values");
  if (!(q >= 0.0 && q <= 1.0)) throw Error(ErrorCode::kInvalidRange, "quantile must lie in [0, 1]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double rank = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline std::vector<double> valid_values(const Grid<double>& values, const Mask& valid) {
  std::vector<double> out;
  out.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (valid.data[i]) out.push_back(values.data[i]);
  }
  return out;
}

struct NormalizedDepth {
  Grid<double> values;
  Mask valid;
  double d2 = 0.0;
  double d98 = 1.0;

  [[nodiscard]] int width() const { return values.width; }
  [[nodiscard]] int height() const { return values.height; }
};

inline double normalize_value(double d, double d2, double d98) { return ((d - d2) / (d98 - d2) - 0.5) * 2.0; }
inline double denormalize_value(double v, double d2, double d98) { return (v * 0.5 + 0.5) * (d98 - d2) + d2; }

/// Maps the 2nd/98th percentile band of the valid depths onto [-1, 1].
/// Values outside the band are not clipped. Invalid pixels hold 0.
inline NormalizedDepth normalize_depth(const DepthMap& dm) {
  const std::vector<double> vals = valid_values(dm.z, dm.valid);
  if (vals.size() < 2) throw Error(ErrorCode::kTooFewSamples, "normalization needs at least 2 valid pixels");
  NormalizedDepth nd;
  nd.d2 = percentile(vals, 0.02);
  nd.d98 = percentile(vals, 0.98);
  const double eps = 1e-9 * std::max({std::abs(nd.d2), std::abs(nd.d98), 1.0});
  if (!(nd.d98 - nd.d2 > eps)) throw Error(ErrorCode::kDegenerateRange, "percentile spread is below tolerance");
  nd.valid = dm.valid;
  nd.values = Grid<double>(dm.width(), dm.height(), 0.0);
  for (std::size_t i = 0; i < nd.values.size(); ++i) {
    if (nd.valid.data[i]) nd.values.data[i] = normalize_value(dm.z.data[i], nd.d2, nd.d98);
  }
  return nd;
}

/// Affine inverse without the positivity guard (used before alignment).
inline Grid<double> denormalize_values(const NormalizedDepth& nd) {
  Grid<double> out(nd.width(), nd.height(), 0.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (nd.valid.data[i]) out.data[i] = denormalize_value(nd.values.data[i], nd.d2, nd.d98);
  }
  return out;
}

/// Exact affine inverse of normalize_depth. Pixels mapping to non-positive
/// depth are marked invalid.
inline DepthMap denormalize_depth(const NormalizedDepth& nd) {
  DepthMap out(nd.width(), nd.height());
  const Grid<double> raw = denormalize_values(nd);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (nd.valid.data[i] && raw.data[i] > 0.0) {
      out.z.data[i] = raw.data[i];
      out.valid.data[i] = 1;
    }
  }
  return out;
}

/// Encoder/decoder pair shared between image and depth streams.
class LatentCodec {
 public:
  virtual ~LatentCodec() = default;

  /// Spatial downsample factor of the latent grid.
  [[nodiscard]] virtual int factor() const = 0;
  [[nodiscard]] virtual Tensor3 encode(const Tensor3& x) const = 0;
  [[nodiscard]] virtual Tensor3 decode(const Tensor3& z) const = 0;
  /// Whether depth is replicated to three channels before encoding.
  [[nodiscard]] virtual bool replicates_depth() const = 0;
  /// Max abs error of decode(encode(x)) on inputs the codec represents exactly.
  [[nodiscard]] virtual double roundtrip_tolerance() const = 0;
  [[nodiscard]] virtual std::string name() const = 0;

  [[nodiscard]] int image_channels() const { return 3; }
  [[nodiscard]] int depth_channels() const { return 1; }
};

class IdentityCodec final : public LatentCodec {
 public:
  [[nodiscard]] int factor() const override { return 1; }
  [[nodiscard]] Tensor3 encode(const Tensor3& x) const override { return x; }
  [[nodiscard]] Tensor3 decode(const Tensor3& z) const override { return z; }
  [[nodiscard]] bool replicates_depth() const override { return false; }
  [[nodiscard]] double roundtrip_tolerance() const override { return 0.0; }
  [[nodiscard]] std::string name() const override { return "identity"; }
};

/// Reference lossy codec: f x f area mean down, nearest-neighbour up.
class AreaCodec final : public LatentCodec {
 public:
  explicit AreaCodec(int f) : f_(f) {
    if (f < 1) throw Error(ErrorCode::kInvalidRange, "codec factor must be >= 1");
  }

  [[nodiscard]] int factor() const override { return f_; }

  [[nodiscard]] Tensor3 encode(const Tensor3& x) const override {
    if (x.height % f_ != 0 || x.width % f_ != 0) {
      throw Error(ErrorCode::kCodecShapeMismatch, "input not divisible by codec factor");
    }
    Tensor3 z(x.channels, x.height / f_, x.width / f_);
    const double inv = 1.0 / static_cast<double>(f_ * f_);
    for (int c = 0; c < z.channels; ++c) {
      for (int y = 0; y < z.height; ++y) {
        for (int xx = 0; xx < z.width; ++xx) {
          double s = 0.0;
          for (int dy = 0; dy < f_; ++dy)
            for (int dx = 0; dx < f_; ++dx) s += x.at(c, y * f_ + dy, xx * f_ + dx);
          z.at(c, y, xx) = s * inv;
        }
      }
    }
    return z;
  }

  [[nodiscard]] Tensor3 decode(const Tensor3& z) const override {
    Tensor3 x(z.channels, z.height * f_, z.width * f_);
    for (int c = 0; c < x.channels; ++c)
      for (int y = 0; y < x.height; ++y)
        for (int xx = 0; xx < x.width; ++xx) x.at(c, y, xx) = z.at(c, y / f_, xx / f_);
    return x;
  }

  [[nodiscard]] bool replicates_depth() const override { return true; }
  [[nodiscard]] double roundtrip_tolerance() const override { return 1e-12; }
  [[nodiscard]] std::string name() const override { return "area" + std::to_string(f_); }

 private:
  int f_;
};

inline std::unique_ptr<LatentCodec> make_codec(int factor) {
  if (factor == 1) return std::make_unique<IdentityCodec>();
  return std::make_unique<AreaCodec>(factor);
}

struct RgbdLatent {
  Tensor3 image;  // 3 channels
  Tensor3 depth;  // 1 channel

  /// Channel stack [image | depth] = z_0.
  [[nodiscard]] Tensor3 stacked() const {
    Tensor3 z(image.channels + depth.channels, image.height, image.width);
    std::copy(image.data.begin(), image.data.end(), z.data.begin());
    std::copy(depth.data.begin(), depth.data.end(), z.data.begin() + static_cast<std::ptrdiff_t>(image.data.size()));
    return z;
  }
};

inline Tensor3 image_to_tensor(const Image& img) {
  Tensor3 t(3, img.height, img.width);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) t.at(c, y, x) = img(x, y)[c];
  return t;
}

inline Image tensor_to_image(const Tensor3& t) {
  Image img(t.width, t.height, Vec3::Zero());
  for (int y = 0; y < t.height; ++y)
    for (int x = 0; x < t.width; ++x) img(x, y) = Vec3(t.at(0, y, x), t.at(1, y, x), t.at(2, y, x));
  return img;
}

namespace detail {

inline Tensor3 channel_mean(const Tensor3& t) {
  Tensor3 out(1, t.height, t.width);
  for (int y = 0; y < t.height; ++y) {
    for (int x = 0; x < t.width; ++x) {
      double s = 0.0;
      for (int c = 0; c < t.channels; ++c) s += t.at(c, y, x);
      out.at(0, y, x) = s / t.channels;
    }
  }
  return out;
}

inline Tensor3 replicate3(const Tensor3& t) {
  Tensor3 out(3, t.height, t.width);
  for (int c = 0; c < 3; ++c)
    std::copy(t.data.begin(), t.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(c * t.plane()));
  return out;
}

}  // namespace detail

/// Encodes an image and an (already normalized) depth field with the shared
/// codec. Non-identity codecs see depth replicated to three channels, and the
/// three latent channels are averaged back to one.
inline RgbdLatent encode_rgbd(const Image& rgb, const Grid<double>& depth, const LatentCodec& codec) {
  if (!rgb.same_shape(depth)) throw Error(ErrorCode::kCodecShapeMismatch, "image and depth shapes differ");
  const int f = codec.factor();
  if (rgb.width % f != 0 || rgb.height % f != 0) {
    throw Error(ErrorCode::kCodecShapeMismatch, "frame not divisible by codec factor");
  }
  Tensor3 d(1, depth.height, depth.width);
  std::copy(depth.data.begin(), depth.data.end(), d.data.begin());
  RgbdLatent z;
  z.image = codec.encode(image_to_tensor(rgb));
  z.depth = codec.replicates_depth() ? detail::channel_mean(codec.encode(detail::replicate3(d))) : codec.encode(d);
  return z;
}

struct DecodedRgbd {
  Image rgb;
  Grid<double> depth;
};

inline DecodedRgbd decode_rgbd(const RgbdLatent& z, const LatentCodec& codec) {
  if (z.image.channels != 3 || z.depth.channels != 1 || z.image.height != z.depth.height ||
      z.image.width != z.depth.width) {
    throw Error(ErrorCode::kCodecShapeMismatch, "latent must be 3 image + 1 depth channels of one shape");
  }
  DecodedRgbd out;
  out.rgb = tensor_to_image(codec.decode(z.image));
  const Tensor3 d = codec.replicates_depth() ? detail::channel_mean(codec.decode(detail::replicate3(z.depth)))
                                             : codec.decode(z.depth);
  out.depth = Grid<double>(d.width, d.height, 0.0);
  std::copy(d.data.begin(), d.data.end(), out.depth.data.begin());
  return out;
}

/// Splits a stacked 4-channel latent back into image and depth parts.
inline RgbdLatent split_latent(const Tensor3& z0) {
  if (z0.channels != 4) throw Error(ErrorCode::kShapeMismatch, "stacked latent must have 4 channels");
  RgbdLatent z{Tensor3(3, z0.height, z0.width), Tensor3(1, z0.height, z0.width)};
  const auto split = static_cast<std::ptrdiff_t>(3 * z0.plane());
  std::copy(z0.data.begin(), z0.data.begin() + split, z.image.data.begin());
  std::copy(z0.data.begin() + split, z0.data.end(), z.depth.data.begin());
  return z;
}

/// f x f area average of a boolean mask; the result stays soft in [0, 1].
inline Grid<double> interpolate_mask(const Mask& mask, int f) {
  if (f < 1 || mask.width % f != 0 || mask.height % f != 0) {
    throw Error(ErrorCode::kIndivisibleShape, "mask not divisible by factor");
  }
  Grid<double> out(mask.width / f, mask.height / f, 0.0);
  const double inv = 1.0 / static_cast<double>(f * f);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      int n = 0;
      for (int dy = 0; dy < f; ++dy)
        for (int dx = 0; dx < f; ++dx) n += mask(x * f + dx, y * f + dy) ? 1 : 0;
      out(x, y) = n * inv;
    }
  }
  return out;
}

}  // namespace scomp
