#include "scomp/attention.hpp"
#include "scomp/scene_embedder.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

using namespace scomp;

namespace {

Mat random_mat(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Mat m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

Image random_image(std::mt19937_64& rng, int w, int h) {
  std::uniform_real_distribution<double> u(0, 1);
  Image img(w, h, Vec3::Zero());
  for (auto& c : img.data) c = {u(rng), u(rng), u(rng)};
  return img;
}

}  // namespace

TEST(Softmax, RowsSumToOneAndShiftInvariant) {
  std::mt19937_64 rng(1);
  const Mat logits = random_mat(rng, 5, 7, 3.0);
  const Mat p = softmax_rows(logits);
  for (Eigen::Index r = 0; r < p.rows(); ++r) EXPECT_NEAR(p.row(r).sum(), 1.0, 1e-15);
  const Mat shifted = softmax_rows(logits.array() + 123.456);
  EXPECT_LE((shifted - p).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Softmax, LargeLogitsStayFinite) {
  Mat logits(1, 3);
  logits << 1000.0, 999.0, -1000.0;
  const Mat p = softmax_rows(logits);
  EXPECT_TRUE(p.allFinite());
  EXPECT_NEAR(p.sum(), 1.0, 1e-15);
}

TEST(CrossAttend, SingleKeyCollapsesToValue) {
  std::mt19937_64 rng(2);
  const SceneEmbedding emb = init_scene_embedding(4, 8, 3);
  const ReferenceFeatures ref{random_mat(rng, 1, 8), "test"};
  const Mat out = cross_attend(emb, ref);
  const RowVec v = ref.tokens.row(0) * emb.wv;
  for (Eigen::Index r = 0; r < out.rows(); ++r) EXPECT_LE((out.row(r) - v).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(CrossAttend, IdenticalValuesCollapse) {
  std::mt19937_64 rng(3);
  SceneEmbedding emb = init_scene_embedding(3, 6, 4);
  emb.wq = emb.wk = emb.wv = Mat::Identity(6, 6);
  const RowVec tok = random_mat(rng, 1, 6);
  ReferenceFeatures ref{Mat(5, 6), "test"};
  for (Eigen::Index r = 0; r < 5; ++r) ref.tokens.row(r) = tok;
  const Mat out = cross_attend(emb, ref);
  for (Eigen::Index r = 0; r < out.rows(); ++r) EXPECT_LE((out.row(r) - tok).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(CrossAttend, KeyPermutationInvariance) {
  std::mt19937_64 rng(4);
  const SceneEmbedding emb = init_scene_embedding(4, 8, 5);
  const ReferenceFeatures ref{random_mat(rng, 10, 8), "test"};
  std::vector<int> perm(10);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  ReferenceFeatures shuffled{Mat(10, 8), "test"};
  for (int i = 0; i < 10; ++i) shuffled.tokens.row(i) = ref.tokens.row(perm[static_cast<std::size_t>(i)]);
  EXPECT_LE((cross_attend(emb, ref) - cross_attend(emb, shuffled)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(CrossAttend, OutputsStayInValueHull) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const SceneEmbedding emb = init_scene_embedding(4, 8, 10 + static_cast<std::uint64_t>(trial));
    const ReferenceFeatures ref{random_mat(rng, 12, 8, 2.0), "test"};
    const Mat v = ref.tokens * emb.wv;
    const Mat out = cross_attend(emb, ref);
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
      const double lo = v.col(c).minCoeff();
      const double hi = v.col(c).maxCoeff();
      for (Eigen::Index r = 0; r < out.rows(); ++r) {
        EXPECT_GE(out(r, c), lo - 1e-9);
        EXPECT_LE(out(r, c), hi + 1e-9);
      }
    }
  }
}

TEST(CrossAttend, DimMismatch) {
  const SceneEmbedding emb = init_scene_embedding(2, 8, 1);
  const ReferenceFeatures ref{Mat::Zero(3, 5), "test"};
  EXPECT_SCOMP_ERROR(cross_attend(emb, ref), ErrorCode::kDimMismatch);
}

TEST(CrossAttend, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(6);
  SceneEmbedding emb = init_scene_embedding(4, 8, 7);
  const ReferenceFeatures ref{random_mat(rng, 6, 8), "test"};
  const Mat weight = random_mat(rng, 4, 8);
  const auto loss = [&] { return cross_attend(emb, ref).cwiseProduct(weight).sum(); };

  AttentionCache cache;
  cross_attend(emb, ref, &cache);
  SceneEmbedding grads = emb.zeros_like();
  cross_attend_backward(emb, cache, weight, grads);
  testutil::check_gradient(loss, emb.tokens, grads.tokens, "tokens");
  testutil::check_gradient(loss, emb.wq, grads.wq, "wq");
  testutil::check_gradient(loss, emb.wk, grads.wk, "wk");
  testutil::check_gradient(loss, emb.wv, grads.wv, "wv");
}

TEST(CrossAttention, InputGradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(8);
  Mat x = random_mat(rng, 5, 6);
  Mat s = random_mat(rng, 7, 6);
  const Mat wq = random_mat(rng, 6, 6, 0.5);
  const Mat wk = random_mat(rng, 6, 6, 0.5);
  const Mat wv = random_mat(rng, 6, 6, 0.5);
  const Mat weight = random_mat(rng, 5, 6);
  const auto loss = [&] { return cross_attention(x, s, wq, wk, wv).cwiseProduct(weight).sum(); };
  AttentionCache cache;
  cross_attention(x, s, wq, wk, wv, &cache);
  const AttentionGrads g = cross_attention_backward(cache, wq, wk, wv, weight);
  testutil::check_gradient(loss, x, g.d_queries_in, "queries");
  testutil::check_gradient(loss, s, g.d_context_in, "context");
}

TEST(Extractor, ConstantGrayGivesIdenticalColourFeatures) {
  const PatchGridExtractor ex = PatchGridExtractor::seeded(16, 1);
  const Mat raw = ex.raw_features(Image(32, 32, Vec3(0.5, 0.5, 0.5)));
  ASSERT_EQ(raw.rows(), 64);
  for (Eigen::Index r = 0; r < 64; ++r) {
    for (int c = 0; c < 3; ++c) EXPECT_EQ(raw(r, c), 0.5);
  }
  EXPECT_EQ(ex.extract(Image(32, 32, Vec3(0.5, 0.5, 0.5))).tokens.rows(), 64);
}

TEST(Extractor, OnePatchChangeChangesOneToken) {
  std::mt19937_64 rng(9);
  const PatchGridExtractor ex = PatchGridExtractor::seeded(16, 2);
  const Image a = random_image(rng, 16, 16);
  Image b = a;
  b(5, 9) = Vec3(1, 0, 0) - b(5, 9) * 0.5;  // patch (2, 4) with 2x2 patches
  const Mat ra = ex.raw_features(a);
  const Mat rb = ex.raw_features(b);
  int differing = 0;
  for (Eigen::Index r = 0; r < ra.rows(); ++r) differing += (ra.row(r) != rb.row(r)) ? 1 : 0;
  EXPECT_EQ(differing, 1);
  EXPECT_NE(ra.row(4 * 8 + 2), rb.row(4 * 8 + 2));
}

TEST(Extractor, PatchMeansMatchBruteForce) {
  std::mt19937_64 rng(10);
  const PatchGridExtractor ex = PatchGridExtractor::seeded(8, 3);
  const Image img = random_image(rng, 24, 16);
  const Mat raw = ex.raw_features(img);
  const int pw = 3;
  const int ph = 2;
  for (int gy = 0; gy < 8; ++gy) {
    for (int gx = 0; gx < 8; ++gx) {
      Vec3 s = Vec3::Zero();
      for (int y = 0; y < ph; ++y)
        for (int x = 0; x < pw; ++x) s += img(gx * pw + x, gy * ph + y);
      s /= pw * ph;
      for (int c = 0; c < 3; ++c) EXPECT_NEAR(raw(gy * 8 + gx, c), s[c], 1e-15);
      EXPECT_EQ(raw(gy * 8 + gx, 3), (gx + 0.5) / 8.0);
      EXPECT_EQ(raw(gy * 8 + gx, 4), (gy + 0.5) / 8.0);
    }
  }
}

TEST(Extractor, IndivisibleShape) {
  const PatchGridExtractor ex = PatchGridExtractor::seeded(8, 3);
  EXPECT_SCOMP_ERROR(ex.raw_features(Image(20, 16)), ErrorCode::kShapeIndivisible);
}
