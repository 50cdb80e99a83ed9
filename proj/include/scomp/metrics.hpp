#pragma once

// Image metrics (PSNR, single-scale SSIM) and summed camera pose distances.

#include "scomp/camera.hpp"
#include "scomp/core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace scomp {

inline double psnr(const Image& a, const Image& b, double peak = 1.0) {
  if (!a.same_shape(b)) throw Error(ErrorCode::kShapeMismatch, "psnr inputs differ in shape");
  if (a.size() == 0) throw Error(ErrorCode::kTooSmall, "psnr of empty images");
  std::vector<double> sq;
  sq.reserve(a.size() * 3);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (int c = 0; c < 3; ++c) {
      const double d = a.data[i][c] - b.data[i][c];
      sq.push_back(d * d);
    }
  }
  const double mse = pairwise_mean(sq);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

inline Grid<double> luma(const Image& img) {
  Grid<double> y(img.width, img.height, 0.0);
  for (std::size_t i = 0; i < img.size(); ++i) {
    const Vec3& c = img.data[i];
    y.data[i] = 0.299 * c.x() + 0.587 * c.y() + 0.114 * c.z();
  }
  return y;
}

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;

/// Normalized 11-tap Gaussian, sigma 1.5.
inline std::array<double, kSsimWindow> ssim_kernel() {
  std::array<double, kSsimWindow> k{};
  double s = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double x = i - kSsimWindow / 2;
    k[static_cast<std::size_t>(i)] = std::exp(-(x * x) / (2.0 * kSsimSigma * kSsimSigma));
    s += k[static_cast<std::size_t>(i)];
  }
  for (double& v : k) v /= s;
  return k;
}

/// Mean SSIM over every fully contained 11x11 window of two luma planes.
inline double ssim(const Grid<double>& a, const Grid<double>& b, double peak = 1.0) {
  if (!a.same_shape(b)) throw Error(ErrorCode::kShapeMismatch, "ssim inputs differ in shape");
  if (a.width < kSsimWindow || a.height < kSsimWindow) throw Error(ErrorCode::kTooSmall, "ssim needs >= 11x11 images");
  const auto k = ssim_kernel();
  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);
  const int ow = a.width - kSsimWindow + 1;
  const int oh = a.height - kSsimWindow + 1;
  std::vector<double> map;
  map.reserve(static_cast<std::size_t>(ow) * static_cast<std::size_t>(oh));
  for (int y0 = 0; y0 < oh; ++y0) {
    for (int x0 = 0; x0 < ow; ++x0) {
      double ma = 0.0, mb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
      for (int dy = 0; dy < kSsimWindow; ++dy) {
        for (int dx = 0; dx < kSsimWindow; ++dx) {
          const double wgt = k[static_cast<std::size_t>(dy)] * k[static_cast<std::size_t>(dx)];
          const double va = a(x0 + dx, y0 + dy);
          const double vb = b(x0 + dx, y0 + dy);
          ma += wgt * va;
          mb += wgt * vb;
          saa += wgt * va * va;
          sbb += wgt * vb * vb;
          sab += wgt * va * vb;
        }
      }
      const double var_a = saa - ma * ma;
      const double var_b = sbb - mb * mb;
      const double cov = sab - ma * mb;
      map.push_back(((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (var_a + var_b + c2)));
    }
  }
  return pairwise_mean(map);
}

/// SSIM on the luma of two RGB images.
inline double ssim(const Image& a, const Image& b, double peak = 1.0) { return ssim(luma(a), luma(b), peak); }

struct PoseSet {
  std::vector<Mat3> rotations;
  std::vector<Vec3> translations;

  [[nodiscard]] std::size_t size() const { return rotations.size(); }
  void push_back(const Camera& cam) {
    rotations.push_back(cam.R);
    translations.push_back(cam.T);
  }
};

inline void check_poses(const PoseSet& p) {
  if (p.rotations.size() != p.translations.size()) throw Error(ErrorCode::kLengthMismatch, "rotation/translation count");
  for (const Mat3& r : p.rotations) {
    if (!is_rotation(r, 1e-6)) throw Error(ErrorCode::kNonRotation, "pose rotation is not in SO(3)");
  }
}

/// Geodesic angle between two rotations. Below 90 degrees the chord form
/// 2 asin(||A - B||_F / (2 sqrt 2)) is used: it equals the trace form for exact
/// rotations but does not lose half the digits near zero.
inline double rotation_angle(const Mat3& a, const Mat3& b) {
  const double c = ((a * b.transpose()).trace() - 1.0) / 2.0;
  if (c > 0.0) return 2.0 * std::asin(std::min(1.0, (a - b).norm() / (2.0 * std::numbers::sqrt2)));
  return std::acos(std::clamp(c, -1.0, 1.0));
}

/// Sum over pairs of arccos(clamp((tr(R_gen R_gt^T) - 1) / 2, -1, 1)), radians.
inline double rotation_distance(const PoseSet& gen, const PoseSet& gt) {
  if (gen.size() != gt.size()) throw Error(ErrorCode::kLengthMismatch, "pose sets differ in length");
  if (gen.size() == 0) throw Error(ErrorCode::kLengthMismatch, "pose sets are empty");
  check_poses(gen);
  check_poses(gt);
  double sum = 0.0;
  for (std::size_t i = 0; i < gen.size(); ++i) sum += rotation_angle(gen.rotations[i], gt.rotations[i]);
  return sum;
}

/// Sum over pairs of ||T_gt - T_gen||_2.
inline double translation_distance(const PoseSet& gen, const PoseSet& gt) {
  if (gen.translations.size() != gt.translations.size()) {
    throw Error(ErrorCode::kLengthMismatch, "pose sets differ in length");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < gen.translations.size(); ++i) {
    const Vec3 d = gt.translations[i] - gen.translations[i];
    sum += std::sqrt(d.x() * d.x() + d.y() * d.y() + d.z() * d.z());
  }
  return sum;
}

}  // namespace scomp
