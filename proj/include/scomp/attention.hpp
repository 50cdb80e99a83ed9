#pragma once

// Single-head scaled dot-product cross-attention with an explicit backward
// pass. Tokens are rows.

#include "scomp/core.hpp"

#include <cmath>

namespace scomp {

/// Row-wise softmax with max subtraction.
inline Mat softmax_rows(const Mat& logits) {
  Mat out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    double s = 0.0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      out(r, c) = std::exp(logits(r, c) - m);
      s += out(r, c);
    }
    out.row(r) /= s;
  }
  return out;
}

/// Backward of row softmax: dL = A .* (dA - rowsum(dA .* A)).
inline Mat softmax_rows_backward(const Mat& probs, const Mat& d_probs) {
  Mat d = probs.cwiseProduct(d_probs);
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    const double dot = d.row(r).sum();
    d.row(r) -= dot * probs.row(r);
  }
  return d;
}

struct AttentionCache {
  Mat queries_in;  // n x d
  Mat context_in;  // m x d
  Mat q;
  Mat k;
  Mat v;
  Mat probs;  // n x m
};

struct AttentionGrads {
  Mat d_queries_in;
  Mat d_context_in;
  Mat d_wq;
  Mat d_wk;
  Mat d_wv;
};

/// softmax((X Wq)(S Wk)^T / sqrt(d)) (S Wv)
inline Mat cross_attention(const Mat& x, const Mat& s, const Mat& wq, const Mat& wk, const Mat& wv,
                           AttentionCache* cache = nullptr) {
  if (x.cols() != wq.rows() || s.cols() != wk.rows() || s.cols() != wv.rows() || wq.cols() != wk.cols()) {
    throw Error(ErrorCode::kDimMismatch, "attention projection dimensions disagree");
  }
  if (s.rows() < 1) throw Error(ErrorCode::kDimMismatch, "attention needs at least one key");
  const double scale = 1.0 / std::sqrt(static_cast<double>(wq.cols()));
  Mat q = x * wq;
  Mat k = s * wk;
  Mat v = s * wv;
  Mat probs = softmax_rows((q * k.transpose()) * scale);
  Mat out = probs * v;
  if (cache) {
    cache->queries_in = x;
    cache->context_in = s;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->probs = std::move(probs);
  }
  return out;
}

inline AttentionGrads cross_attention_backward(const AttentionCache& c, const Mat& wq, const Mat& wk, const Mat& wv,
                                               const Mat& d_out) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(wq.cols()));
  const Mat d_probs = d_out * c.v.transpose();
  const Mat d_v = c.probs.transpose() * d_out;
  const Mat d_logits = softmax_rows_backward(c.probs, d_probs) * scale;
  const Mat d_q = d_logits * c.k;
  const Mat d_k = d_logits.transpose() * c.q;
  AttentionGrads g;
  g.d_wq = c.queries_in.transpose() * d_q;
  g.d_wk = c.context_in.transpose() * d_k;
  g.d_wv = c.context_in.transpose() * d_v;
  g.d_queries_in = d_q * wq.transpose();
  g.d_context_in = d_k * wk.transpose() + d_v * wv.transpose();
  return g;
}

}  // namespace scomp
