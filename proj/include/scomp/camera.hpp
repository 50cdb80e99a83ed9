#pragma once

#include "scomp/core.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <numbers>

namespace scomp {

/// Pinhole camera with a world-to-camera pose: x_cam = R * X + T.
/// Image x grows right, y grows down, z looks forward.
struct Camera {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  Mat3 R = Mat3::Identity();
  Vec3 T = Vec3::Zero();

  [[nodiscard]] Mat3 K() const {
    Mat3 k;
    k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
    return k;
  }

  /// Camera centre in world coordinates.
  [[nodiscard]] Vec3 center() const { return -(R.transpose() * T); }

  [[nodiscard]] Vec3 to_camera(const Vec3& world) const { return R * world + T; }

  bool operator==(const Camera& o) const {
    return fx == o.fx && fy == o.fy && cx == o.cx && cy == o.cy && R == o.R && T == o.T;
  }
};

inline bool is_rotation(const Mat3& r, double tol) {
  if (!r.allFinite()) return false;
  const double ortho = (r * r.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

/// Throws InvalidCamera unless fx, fy > 0 and R is a proper rotation within 1e-9.
inline void validate(const Camera& cam) {
  if (!(cam.fx > 0.0) || !(cam.fy > 0.0) || !std::isfinite(cam.fx) || !std::isfinite(cam.fy)) {
    throw Error(ErrorCode::kInvalidCamera, "focal lengths must be positive and finite");
  }
  if (!std::isfinite(cam.cx) || !std::isfinite(cam.cy) || !cam.T.allFinite()) {
    throw Error(ErrorCode::kInvalidCamera, "principal point and translation must be finite");
  }
  if (!is_rotation(cam.R, 1e-9)) {
    throw Error(ErrorCode::kInvalidCamera, "R is not orthonormal with det +1");
  }
}

/// Camera at `eye` looking at `target`; `up` is the world up direction.
inline Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double fx, double fy, double cx,
                      double cy) {
  const Vec3 forward = (target - eye).normalized();
  const Vec3 right = forward.cross(up).normalized();
  const Vec3 down = forward.cross(right);
  Camera cam;
  cam.fx = fx;
  cam.fy = fy;
  cam.cx = cx;
  cam.cy = cy;
  cam.R.row(0) = right.transpose();
  cam.R.row(1) = down.transpose();
  cam.R.row(2) = forward.transpose();
  cam.T = -(cam.R * eye);
  return cam;
}

/// Square-pixel intrinsics for a horizontal field of view (radians), principal
/// point at the image centre.
inline Camera with_fov(Camera cam, int width, int height, double hfov) {
  cam.fx = 0.5 * width / std::tan(0.5 * hfov);
  cam.fy = cam.fx;
  cam.cx = 0.5 * (width - 1);
  cam.cy = 0.5 * (height - 1);
  return cam;
}

}  // namespace scomp
