#pragma once

// Closed-form least-squares scale/offset registration of predicted depth
// against the depth clues of a partial view.

#include "scomp/core.hpp"
#include "scomp/geometry.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace scomp {

/// Which quantity is regressed on which.
enum class AlignDirection {
  /// clue ~ scale * pred + offset; applying the fit to the prediction brings it
  /// into the clue (scene) frame. Default.
  kPredictionToClue,
  /// pred ~ scale * clue + offset; the fit is still applied to the prediction.
  kClueToPrediction,
};

struct AffineFit {
  double scale = 1.0;
  double offset = 0.0;
  std::size_t n_samples = 0;
  double residual_rms = 0.0;
};

namespace detail {

inline double mean_of(const std::vector<double>& v) { return pairwise_mean(v); }

inline double centered_dot(const std::vector<double>& a, double ma, const std::vector<double>& b, double mb) {
  std::vector<double> prod(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) prod[i] = (a[i] - ma) * (b[i] - mb);
  return pairwise_mean(prod);
}

inline void check_variance(double var, double mean, const char* what) {
  const double eps = 1e-12 * mean * mean;
  if (!(var > eps)) throw Error(ErrorCode::kSingularFit, what);
}

}  // namespace detail

/// Least-squares fit of target ~ scale * source + offset over masked samples.
/// Both the clue and the regressor must carry variance.
inline AffineFit fit_scale_offset(std::span<const double> clue, std::span<const double> pred,
                                  std::span<const std::uint8_t> mask,
                                  AlignDirection dir = AlignDirection::kPredictionToClue) {
  if (clue.size() != pred.size() || clue.size() != mask.size()) {
    throw Error(ErrorCode::kShapeMismatch, "clue, prediction and mask sizes differ");
  }
  std::vector<double> c;
  std::vector<double> p;
  for (std::size_t i = 0; i < clue.size(); ++i) {
    if (!mask[i]) continue;
    c.push_back(clue[i]);
    p.push_back(pred[i]);
  }
  if (c.size() < 2) throw Error(ErrorCode::kTooFewSamples, "fit needs at least 2 co-located samples");

  const double mc = detail::mean_of(c);
  const double mp = detail::mean_of(p);
  const double var_c = detail::centered_dot(c, mc, c, mc);
  const double var_p = detail::centered_dot(p, mp, p, mp);
  const double cov = detail::centered_dot(c, mc, p, mp);
  detail::check_variance(var_c, mc, "clue depths have zero variance");

  const bool to_clue = dir == AlignDirection::kPredictionToClue;
  const std::vector<double>& x = to_clue ? p : c;
  const std::vector<double>& y = to_clue ? c : p;
  const double mx = to_clue ? mp : mc;
  const double my = to_clue ? mc : mp;
  const double var_x = to_clue ? var_p : var_c;
  if (to_clue) detail::check_variance(var_p, mp, "predicted depths have zero variance");

  AffineFit fit;
  fit.scale = cov / var_x;
  fit.offset = my - fit.scale * mx;
  fit.n_samples = c.size();
  std::vector<double> r2(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - fit.scale * x[i] - fit.offset;
    r2[i] = r * r;
  }
  fit.residual_rms = std::sqrt(pairwise_mean(r2));
  return fit;
}

/// Grid convenience overload: mask is the clue validity intersected with `pred_valid`.
inline AffineFit fit_scale_offset(const DepthMap& clue, const Grid<double>& pred, const Mask& pred_valid,
                                  AlignDirection dir = AlignDirection::kPredictionToClue) {
  if (!clue.z.same_shape(pred) || !pred.same_shape(pred_valid)) {
    throw Error(ErrorCode::kShapeMismatch, "clue and prediction shapes differ");
  }
  std::vector<std::uint8_t> m(pred.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = clue.valid.data[i] && pred_valid.data[i];
  return fit_scale_offset(clue.z.data, pred.data, m, dir);
}

/// scale * d + offset per valid pixel; non-positive results become invalid.
inline DepthMap apply_alignment(const AffineFit& fit, const Grid<double>& pred, const Mask& pred_valid) {
  if (!pred.same_shape(pred_valid)) throw Error(ErrorCode::kShapeMismatch, "prediction mask shape");
  DepthMap out(pred.width, pred.height);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!pred_valid.data[i]) continue;
    const double d = fit.scale * pred.data[i] + fit.offset;
    if (d > 0.0 && std::isfinite(d)) {
      out.z.data[i] = d;
      out.valid.data[i] = 1;
    }
  }
  return out;
}

inline DepthMap apply_alignment(const AffineFit& fit, const DepthMap& pred) {
  return apply_alignment(fit, pred.z, pred.valid);
}

}  // namespace scomp
