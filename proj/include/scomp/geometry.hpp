#pragma once

// Pointmap <-> depth projection, unprojection and z-buffer splatting of
// coloured point clouds into partial views.

#include "scomp/camera.hpp"
#include "scomp/core.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace scomp {

/// Near-plane culling distance, scene units.
inline constexpr double kZMin = 1e-6;

struct Pointmap {
  Grid<Vec3> points;
  Mask valid;

  Pointmap() = default;
  Pointmap(int w, int h) : points(w, h, Vec3::Zero()), valid(w, h, 0) {}
  [[nodiscard]] int width() const { return points.width; }
  [[nodiscard]] int height() const { return points.height; }
};

/// Metric depth along the camera z axis. z > 0 wherever valid.
struct DepthMap {
  Grid<double> z;
  Mask valid;

  DepthMap() = default;
  DepthMap(int w, int h) : z(w, h, 0.0), valid(w, h, 0) {}
  [[nodiscard]] int width() const { return z.width; }
  [[nodiscard]] int height() const { return z.height; }
};

struct PartialView {
  Image rgb;
  DepthMap depth;
  Mask rgb_valid;

  [[nodiscard]] int width() const { return rgb.width; }
  [[nodiscard]] int height() const { return rgb.height; }
  [[nodiscard]] const Mask& depth_valid() const { return depth.valid; }
};

/// Fully observed colour + depth frame.
struct RgbdFrame {
  Image rgb;
  DepthMap depth;

  [[nodiscard]] int width() const { return rgb.width; }
  [[nodiscard]] int height() const { return rgb.height; }
};

/// Fused global coloured point set. `source_iter` records the completion
/// iteration that added each point (0 = initial reconstruction).
struct SceneCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> colors;
  std::vector<int> source_iter;

  [[nodiscard]] std::size_t size() const { return points.size(); }
  [[nodiscard]] bool empty() const { return points.empty(); }

  void push_back(const Vec3& p, const Vec3& c, int iter) {
    points.push_back(p);
    colors.push_back(c);
    source_iter.push_back(iter);
  }

  bool operator==(const SceneCloud&) const = default;
};

namespace detail {

// Nearest integer with halves rounded up. Returns false when outside [0, extent).
inline bool round_to_pixel(double coord, int extent, int& out) {
  const double r = std::floor(coord + 0.5);
  if (!(r >= 0.0) || r >= static_cast<double>(extent)) return false;
  out = static_cast<int>(r);
  return true;
}

// Projects a world point; false when culled or off-image.
inline bool project_point(const Camera& cam, const Vec3& world, int w, int h, int& px, int& py, double& z) {
  const Vec3 xc = cam.to_camera(world);
  z = xc.z();
  if (!(z > kZMin)) return false;
  const double u = cam.fx * (xc.x() / z) + cam.cx;
  const double v = cam.fy * (xc.y() / z) + cam.cy;
  return round_to_pixel(u, w, px) && round_to_pixel(v, h, py);
}

}  // namespace detail

/// Z-buffer projection of every valid pointmap entry into an out_w x out_h
/// depth map. Equal depths resolve to the lowest point index.
inline DepthMap project_pointmap(const Pointmap& pm, const Camera& cam, int out_w, int out_h) {
  validate(cam);
  if (!pm.points.same_shape(pm.valid)) throw Error(ErrorCode::kShapeMismatch, "pointmap mask shape");
  if (count_valid(pm.valid) == 0) throw Error(ErrorCode::kEmptyPointmap, "pointmap has no valid points");
  DepthMap out(out_w, out_h);
  for (std::size_t i = 0; i < pm.points.size(); ++i) {
    if (!pm.valid.data[i]) continue;
    const Vec3& p = pm.points.data[i];
    if (!is_finite(p)) throw Error(ErrorCode::kNonFiniteInput, "valid pointmap entry is not finite");
    int px = 0;
    int py = 0;
    double z = 0.0;
    if (!detail::project_point(cam, p, out_w, out_h, px, py, z)) continue;
    const std::size_t k = out.z.index(px, py);
    // strict less-than keeps the first (lowest index) point on ties
    if (!out.valid.data[k] || z < out.z.data[k]) {
      out.z.data[k] = z;
      out.valid.data[k] = 1;
    }
  }
  return out;
}

/// Lifts every valid pixel to world space: X = R^T (K^-1 [u v 1]^T z) - R^T T.
inline Pointmap unproject_depth(const DepthMap& dm, const Camera& cam) {
  validate(cam);
  if (!dm.z.same_shape(dm.valid)) throw Error(ErrorCode::kShapeMismatch, "depth mask shape");
  const Mat3 rt = cam.R.transpose();
  const Vec3 rt_t = rt * cam.T;
  Pointmap pm(dm.width(), dm.height());
  for (int y = 0; y < dm.height(); ++y) {
    for (int x = 0; x < dm.width(); ++x) {
      if (!dm.valid(x, y)) continue;
      const double z = dm.z(x, y);
      const Vec3 ray((x - cam.cx) / cam.fx, (y - cam.cy) / cam.fy, 1.0);
      pm.points(x, y) = rt * (ray * z) - rt_t;
      pm.valid(x, y) = 1;
    }
  }
  return pm;
}

/// Splats a coloured cloud into the camera; nearest depth wins, ties go to the
/// lowest point index. Covered pixels are valid for both colour and depth.
inline PartialView render_partial_view(const SceneCloud& cloud, const Camera& cam, int out_w, int out_h) {
  validate(cam);
  if (cloud.empty()) throw Error(ErrorCode::kEmptyCloud, "cannot render an empty cloud");
  if (cloud.colors.size() != cloud.points.size()) throw Error(ErrorCode::kShapeMismatch, "cloud colour count");
  PartialView view;
  view.rgb = Image(out_w, out_h, Vec3::Zero());
  view.depth = DepthMap(out_w, out_h);
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const Vec3& p = cloud.points[i];
    if (!is_finite(p)) throw Error(ErrorCode::kNonFiniteInput, "cloud point is not finite");
    int px = 0;
    int py = 0;
    double z = 0.0;
    if (!detail::project_point(cam, p, out_w, out_h, px, py, z)) continue;
    const std::size_t k = view.depth.z.index(px, py);
    if (!view.depth.valid.data[k] || z < view.depth.z.data[k]) {
      view.depth.z.data[k] = z;
      view.depth.valid.data[k] = 1;
      view.rgb.data[k] = cloud.colors[i];
    }
  }
  view.rgb_valid = view.depth.valid;
  return view;
}

/// Appends every valid pixel of a frame to `cloud` with the given provenance tag.
inline void append_frame(SceneCloud& cloud, const RgbdFrame& frame, const Camera& cam, int iter) {
  const Pointmap pm = unproject_depth(frame.depth, cam);
  for (std::size_t i = 0; i < pm.points.size(); ++i) {
    if (pm.valid.data[i]) cloud.push_back(pm.points.data[i], frame.rgb.data[i], iter);
  }
}

/// Metric depth -> inverse depth (1/z); validity is preserved.
inline DepthMap to_inverse_depth(const DepthMap& dm) {
  DepthMap out = dm;
  for (std::size_t i = 0; i < out.z.size(); ++i) out.z.data[i] = out.valid.data[i] ? 1.0 / dm.z.data[i] : 0.0;
  return out;
}

inline DepthMap from_inverse_depth(const DepthMap& inv) {
  DepthMap out = inv;
  for (std::size_t i = 0; i < out.z.size(); ++i) {
    const bool ok = inv.valid.data[i] && inv.z.data[i] > 0.0 && std::isfinite(inv.z.data[i]);
    out.valid.data[i] = ok ? 1 : 0;
    out.z.data[i] = ok ? 1.0 / inv.z.data[i] : 0.0;
  }
  return out;
}

}  // namespace scomp
