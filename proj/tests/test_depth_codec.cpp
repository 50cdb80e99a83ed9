#include "scomp/depth_codec.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

using namespace scomp;

namespace {

// Sort + linear interpolation between ranks floor(q(n-1)) and ceil(q(n-1)).
double percentile_oracle(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double r = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(r));
  const auto hi = static_cast<std::size_t>(std::ceil(r));
  return v[lo] + (r - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

DepthMap random_depth(std::mt19937_64& rng, int w, int h, double fill) {
  std::uniform_real_distribution<double> z(0.3, 9.0);
  std::bernoulli_distribution keep(fill);
  DepthMap dm(w, h);
  for (std::size_t i = 0; i < dm.z.size(); ++i) {
    if (keep(rng)) {
      dm.z.data[i] = z(rng);
      dm.valid.data[i] = 1;
    }
  }
  return dm;
}

}  // namespace

TEST(Percentile, MedianOfThree) {
  const std::vector<double> v{3, 1, 2};
  EXPECT_EQ(percentile(v, 0.5), 2.0);
}

TEST(Percentile, QuarterOfTwo) {
  const std::vector<double> v{0, 10};
  EXPECT_EQ(percentile(v, 0.25), 2.5);
}

TEST(Percentile, OneToHundredAtTwoPercent) {
  std::vector<double> v(100);
  std::iota(v.begin(), v.end(), 1.0);
  EXPECT_NEAR(percentile(v, 0.02), 2.98, 1e-12);
  EXPECT_NEAR(percentile(v, 0.02), percentile_oracle(v, 0.02), 1e-12);
}

TEST(Percentile, MatchesOracleOnRandomData) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0, 5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> v(2 + trial * 37);
    for (double& x : v) x = n(rng);
    for (double q : {0.0, 0.02, 0.37, 0.5, 0.98, 1.0}) EXPECT_EQ(percentile(v, q), percentile_oracle(v, q));
  }
}

TEST(Percentile, TooFewSamples) {
  const std::vector<double> v{1.0};
  EXPECT_SCOMP_ERROR(percentile(v, 0.5), ErrorCode::kTooFewSamples);
}

TEST(Normalize, MidpointAndEndpoints) {
  // 101 values: percentiles land exactly on 1 and 3 at the ends of a padded set
  DepthMap dm(51, 1);
  for (int i = 0; i < 51; ++i) {
    dm.z.data[static_cast<std::size_t>(i)] = 1.0 + 2.0 * i / 50.0;
    dm.valid.data[static_cast<std::size_t>(i)] = 1;
  }
  const NormalizedDepth nd = normalize_depth(dm);
  // hand-checked anchors: r = 0.02 * 50 = 1 -> value 1.04, r = 49 -> 2.96
  EXPECT_NEAR(nd.d2, 1.04, 1e-12);
  EXPECT_NEAR(nd.d98, 2.96, 1e-12);
  EXPECT_NEAR(normalize_value(2.0, 1.0, 3.0), 0.0, 1e-12);
  EXPECT_EQ(normalize_value(1.0, 1.0, 3.0), -1.0);
  EXPECT_EQ(normalize_value(3.0, 1.0, 3.0), 1.0);
  EXPECT_NEAR(nd.values.data[1], -1.0, 1e-9);
  EXPECT_NEAR(nd.values.data[49], 1.0, 1e-9);
}

TEST(Normalize, AnchorsMapToUnitInterval) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const DepthMap dm = random_depth(rng, 17, 13, 0.8);
    const NormalizedDepth nd = normalize_depth(dm);
    EXPECT_NEAR(normalize_value(nd.d2, nd.d2, nd.d98), -1.0, 1e-9);
    EXPECT_NEAR(normalize_value(nd.d98, nd.d2, nd.d98), 1.0, 1e-9);
    const std::vector<double> v = valid_values(dm.z, dm.valid);
    EXPECT_EQ(nd.d2, percentile_oracle(v, 0.02));
    EXPECT_EQ(nd.d98, percentile_oracle(v, 0.98));
  }
}

TEST(Normalize, ValuesOutsideBandAreNotClipped) {
  std::mt19937_64 rng(4);
  const DepthMap dm = random_depth(rng, 20, 20, 1.0);
  const NormalizedDepth nd = normalize_depth(dm);
  const auto [lo, hi] = std::minmax_element(nd.values.data.begin(), nd.values.data.end());
  EXPECT_LT(*lo, -1.0);
  EXPECT_GT(*hi, 1.0);
}

TEST(Normalize, ConstantDepthIsDegenerate) {
  DepthMap dm(4, 4);
  std::fill(dm.z.data.begin(), dm.z.data.end(), 2.5);
  std::fill(dm.valid.data.begin(), dm.valid.data.end(), 1);
  EXPECT_SCOMP_ERROR(normalize_depth(dm), ErrorCode::kDegenerateRange);
}

TEST(Normalize, SingleValidPixelIsTooFew) {
  DepthMap dm(4, 4);
  dm.z(1, 1) = 2.0;
  dm.valid(1, 1) = 1;
  EXPECT_SCOMP_ERROR(normalize_depth(dm), ErrorCode::kTooFewSamples);
}

TEST(Normalize, AffineInvariance) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> a(0.1, 10.0);
  std::uniform_real_distribution<double> b(-5.0, 5.0);
  for (int trial = 0; trial < 20; ++trial) {
    const DepthMap dm = random_depth(rng, 16, 16, 0.7);
    const double sa = a(rng);
    const double sb = b(rng);
    DepthMap moved = dm;
    for (double& z : moved.z.data) z = sa * z + sb;
    const NormalizedDepth n0 = normalize_depth(dm);
    const NormalizedDepth n1 = normalize_depth(moved);
    for (std::size_t i = 0; i < dm.z.size(); ++i) {
      if (dm.valid.data[i]) {
        EXPECT_NEAR(n0.values.data[i], n1.values.data[i], 1e-9);
      }
    }
  }
}

TEST(Denormalize, Examples) {
  NormalizedDepth nd{Grid<double>(2, 1, 0.0), Mask(2, 1, 1), 1.0, 3.0};
  nd.values.data = {0.0, -1.0};
  const DepthMap dm = denormalize_depth(nd);
  EXPECT_EQ(dm.z.data[0], 2.0);
  EXPECT_EQ(dm.z.data[1], 1.0);
}

TEST(Denormalize, RoundtripWithinTolerance) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const DepthMap dm = random_depth(rng, 19, 11, 0.6);
    const DepthMap back = denormalize_depth(normalize_depth(dm));
    EXPECT_EQ(back.valid, dm.valid);
    for (std::size_t i = 0; i < dm.z.size(); ++i) {
      if (dm.valid.data[i]) {
        EXPECT_NEAR(back.z.data[i], dm.z.data[i], 1e-9);
      }
    }
  }
}

TEST(Denormalize, NonPositiveResultsAreInvalid) {
  NormalizedDepth nd{Grid<double>(1, 1, -5.0), Mask(1, 1, 1), 1.0, 3.0};
  EXPECT_EQ(count_valid(denormalize_depth(nd).valid), 0u);
}

TEST(Codec, IdentityEncodeIsBitEqual) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  Image img(8, 8, Vec3::Zero());
  Grid<double> depth(8, 8, 0.0);
  for (auto& c : img.data) c = {u(rng), u(rng), u(rng)};
  for (double& d : depth.data) d = u(rng) * 2 - 1;
  IdentityCodec codec;
  const RgbdLatent z = encode_rgbd(img, depth, codec);
  const Tensor3 stacked = z.stacked();
  ASSERT_EQ(stacked.channels, 4);
  EXPECT_EQ(stacked.height, 8);
  EXPECT_EQ(stacked.width, 8);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      for (int c = 0; c < 3; ++c) EXPECT_EQ(stacked.at(c, y, x), img(x, y)[c]);
      EXPECT_EQ(stacked.at(3, y, x), depth(x, y));
    }
  }
  const DecodedRgbd dec = decode_rgbd(split_latent(stacked), codec);
  EXPECT_EQ(dec.rgb, img);
  EXPECT_EQ(dec.depth, depth);
}

TEST(Codec, AreaCodecRoundtripsConstant) {
  AreaCodec codec(2);
  const Image img(8, 6, Vec3(0.25, 0.5, 0.75));
  const Grid<double> depth(8, 6, -0.3);
  const RgbdLatent z = encode_rgbd(img, depth, codec);
  EXPECT_EQ(z.image.height, 3);
  EXPECT_EQ(z.image.width, 4);
  const DecodedRgbd dec = decode_rgbd(z, codec);
  for (std::size_t i = 0; i < img.size(); ++i) {
    EXPECT_LE((dec.rgb.data[i] - img.data[i]).cwiseAbs().maxCoeff(), codec.roundtrip_tolerance());
    EXPECT_LE(std::abs(dec.depth.data[i] - depth.data[i]), codec.roundtrip_tolerance());
  }
}

TEST(Codec, AreaCodecMatchesBlockMeans) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 1);
  Image img(8, 8, Vec3::Zero());
  for (auto& c : img.data) c = {u(rng), u(rng), u(rng)};
  AreaCodec codec(4);
  const Tensor3 z = codec.encode(image_to_tensor(img));
  for (int by = 0; by < 2; ++by) {
    for (int bx = 0; bx < 2; ++bx) {
      Vec3 s = Vec3::Zero();
      for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) s += img(bx * 4 + x, by * 4 + y);
      for (int c = 0; c < 3; ++c) EXPECT_NEAR(z.at(c, by, bx), s[c] / 16.0, 1e-15);
    }
  }
}

TEST(Codec, ShapeMismatch) {
  EXPECT_SCOMP_ERROR(encode_rgbd(Image(4, 4), Grid<double>(4, 2), IdentityCodec{}), ErrorCode::kCodecShapeMismatch);
  EXPECT_SCOMP_ERROR(encode_rgbd(Image(5, 4), Grid<double>(5, 4), AreaCodec(2)), ErrorCode::kCodecShapeMismatch);
}

TEST(MaskInterp, AllTrue) {
  const Grid<double> m = interpolate_mask(Mask(4, 4, 1), 2);
  for (double v : m.data) EXPECT_EQ(v, 1.0);
}

TEST(MaskInterp, OneOfFour) {
  Mask m(2, 2, 0);
  m(1, 0) = 1;
  const Grid<double> out = interpolate_mask(m, 2);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out.data[0], 0.25);
}

TEST(MaskInterp, FactorOneIsIdentity) {
  Mask m(3, 2, 0);
  m.data = {1, 0, 1, 0, 0, 1};
  const Grid<double> out = interpolate_mask(m, 1);
  for (std::size_t i = 0; i < m.size(); ++i) EXPECT_EQ(out.data[i], m.data[i] ? 1.0 : 0.0);
}

TEST(MaskInterp, RandomMatchesBlockMeanOracle) {
  std::mt19937_64 rng(17);
  std::bernoulli_distribution coin(0.4);
  Mask m(16, 16, 0);
  for (auto& v : m.data) v = coin(rng) ? 1 : 0;
  const Grid<double> out = interpolate_mask(m, 4);
  for (int by = 0; by < 4; ++by) {
    for (int bx = 0; bx < 4; ++bx) {
      int n = 0;
      for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) n += m(bx * 4 + x, by * 4 + y);
      EXPECT_EQ(out(bx, by), n / 16.0);
    }
  }
}

TEST(MaskInterp, LinearOverDisjointUnion) {
  std::mt19937_64 rng(19);
  std::uniform_int_distribution<int> pick(0, 2);
  Mask a(8, 8, 0);
  Mask b(8, 8, 0);
  Mask u(8, 8, 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const int k = pick(rng);
    a.data[i] = k == 1;
    b.data[i] = k == 2;
    u.data[i] = k != 0;
  }
  const Grid<double> ia = interpolate_mask(a, 2);
  const Grid<double> ib = interpolate_mask(b, 2);
  const Grid<double> iu = interpolate_mask(u, 2);
  for (std::size_t i = 0; i < iu.size(); ++i) EXPECT_EQ(iu.data[i], ia.data[i] + ib.data[i]);
}

TEST(MaskInterp, Indivisible) {
  EXPECT_SCOMP_ERROR(interpolate_mask(Mask(5, 4, 1), 2), ErrorCode::kIndivisibleShape);
}
