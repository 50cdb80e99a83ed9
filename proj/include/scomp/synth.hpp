#pragma once

// Procedural box rooms built from textured axis-aligned quads, an exact
// ray-cast renderer over them, and stride-based training pair construction.

#include "scomp/camera.hpp"
#include "scomp/core.hpp"
#include "scomp/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

namespace scomp {

/// Axis-aligned rectangle on the plane x[axis] = offset. `lo`/`hi` bound the
/// two in-plane coordinates ordered (axis + 1) % 3, (axis + 2) % 3.
struct Quad {
  int axis = 0;
  double offset = 0.0;
  std::array<double, 2> lo{};
  std::array<double, 2> hi{};
  Vec3 base_color = Vec3::Constant(0.5);
  double frequency = 1.0;
  std::uint64_t texture_seed = 0;

  bool operator==(const Quad&) const = default;
};

struct Aabb {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  [[nodiscard]] bool contains(const Vec3& p, double tol = 0.0) const {
    return (p.array() >= min.array() - tol).all() && (p.array() <= max.array() + tol).all();
  }
  bool operator==(const Aabb&) const = default;
};

struct SyntheticScene {
  std::uint64_t seed = 0;
  std::vector<Quad> quads;
  Aabb bounds;
  /// Height of the camera rig above the floor.
  double eye_height = 1.2;

  bool operator==(const SyntheticScene&) const = default;
};

namespace detail {

inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline double lattice(std::int64_t i, std::int64_t j, std::uint64_t seed) {
  const std::uint64_t h = mix64(seed ^ mix64(static_cast<std::uint64_t>(i) ^ mix64(static_cast<std::uint64_t>(j))));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

inline double smooth(double t) { return t * t * (3.0 - 2.0 * t); }

inline double value_noise(double u, double v, std::uint64_t seed) {
  const double fu = std::floor(u);
  const double fv = std::floor(v);
  const auto i = static_cast<std::int64_t>(fu);
  const auto j = static_cast<std::int64_t>(fv);
  const double su = smooth(u - fu);
  const double sv = smooth(v - fv);
  const double a = lattice(i, j, seed);
  const double b = lattice(i + 1, j, seed);
  const double c = lattice(i, j + 1, seed);
  const double d = lattice(i + 1, j + 1, seed);
  return (a + (b - a) * su) + ((c + (d - c) * su) - (a + (b - a) * su)) * sv;
}

}  // namespace detail

/// Three-octave value noise in [0, 1].
inline double octave_noise(double u, double v, std::uint64_t seed) {
  double sum = 0.0;
  double amp = 4.0 / 7.0;
  double freq = 1.0;
  for (int o = 0; o < 3; ++o) {
    sum += amp * detail::value_noise(u * freq, v * freq, seed + static_cast<std::uint64_t>(o) * 7919U);
    amp *= 0.5;
    freq *= 2.0;
  }
  return sum;
}

/// Surface colour as a pure function of the in-plane position.
inline Vec3 quad_color(const Quad& q, const Vec3& p) {
  const double u = p[(q.axis + 1) % 3] * q.frequency;
  const double v = p[(q.axis + 2) % 3] * q.frequency;
  const double n0 = octave_noise(u, v, q.texture_seed);
  const double n1 = octave_noise(u + 17.3, v - 4.1, q.texture_seed ^ 0xabcdefULL);
  Vec3 c = q.base_color * (0.45 + 0.55 * n0);
  c += Vec3(0.15, 0.1, 0.05) * (n1 - 0.5);
  return c.cwiseMax(0.0).cwiseMin(1.0);
}

namespace detail {

inline Quad make_quad(int axis, double offset, double lo0, double hi0, double lo1, double hi1, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Quad q;
  q.axis = axis;
  q.offset = offset;
  q.lo = {lo0, lo1};
  q.hi = {hi0, hi1};
  q.base_color = Vec3(0.25 + 0.7 * unit(rng), 0.25 + 0.7 * unit(rng), 0.25 + 0.7 * unit(rng));
  q.frequency = 1.5 + 2.5 * unit(rng);
  q.texture_seed = rng();
  return q;
}

// Box sitting on the floor: top face and four sides.
inline void add_box(std::vector<Quad>& quads, const Vec3& lo, const Vec3& hi, std::mt19937_64& rng) {
  // axis 1 (y): in-plane order (z, x)
  quads.push_back(make_quad(1, hi.y(), lo.z(), hi.z(), lo.x(), hi.x(), rng));
  // axis 0 (x): in-plane order (y, z)
  quads.push_back(make_quad(0, lo.x(), lo.y(), hi.y(), lo.z(), hi.z(), rng));
  quads.push_back(make_quad(0, hi.x(), lo.y(), hi.y(), lo.z(), hi.z(), rng));
  // axis 2 (z): in-plane order (x, y)
  quads.push_back(make_quad(2, lo.z(), lo.x(), hi.x(), lo.y(), hi.y(), rng));
  quads.push_back(make_quad(2, hi.z(), lo.x(), hi.x(), lo.y(), hi.y(), rng));
}

}  // namespace detail

/// Closed room (4 walls, floor, ceiling) with 1-3 boxes kept clear of the
/// central camera region. Deterministic in `seed`.
inline SyntheticScene generate_scene(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double hx = 2.0 + unit(rng);
  const double hz = 2.0 + unit(rng);
  const double h = 2.4 + 0.6 * unit(rng);

  SyntheticScene s;
  s.seed = seed;
  s.bounds = {Vec3(-hx, 0.0, -hz), Vec3(hx, h, hz)};
  auto& q = s.quads;
  q.push_back(detail::make_quad(1, 0.0, -hz, hz, -hx, hx, rng));  // floor
  q.push_back(detail::make_quad(1, h, -hz, hz, -hx, hx, rng));    // ceiling
  q.push_back(detail::make_quad(0, -hx, 0.0, h, -hz, hz, rng));
  q.push_back(detail::make_quad(0, hx, 0.0, h, -hz, hz, rng));
  q.push_back(detail::make_quad(2, -hz, -hx, hx, 0.0, h, rng));
  q.push_back(detail::make_quad(2, hz, -hx, hx, 0.0, h, rng));

  const int n_boxes = 1 + static_cast<int>(rng() % 3);
  for (int b = 0; b < n_boxes; ++b) {
    const double angle = 2.0 * std::numbers::pi * (b + unit(rng) * 0.6) / n_boxes;
    const double sx = 0.2 + 0.25 * unit(rng);
    const double sz = 0.2 + 0.25 * unit(rng);
    const double sy = 0.4 + 0.8 * unit(rng);
    const double max_r = std::min(hx - sx, hz - sz) - 0.1;
    const double r = 1.3 + (max_r - 1.3) * unit(rng);
    const Vec3 c(r * std::cos(angle), 0.0, r * std::sin(angle));
    detail::add_box(q, Vec3(c.x() - sx, 0.0, c.z() - sz), Vec3(c.x() + sx, sy, c.z() + sz), rng);
  }
  return s;
}

/// Intersection of a ray with a quad; returns the ray parameter or +inf.
inline double intersect(const Quad& q, const Vec3& origin, const Vec3& dir) {
  const double dn = dir[q.axis];
  if (dn == 0.0) return std::numeric_limits<double>::infinity();
  const double t = (q.offset - origin[q.axis]) / dn;
  if (!(t > kZMin)) return std::numeric_limits<double>::infinity();
  const int a0 = (q.axis + 1) % 3;
  const int a1 = (q.axis + 2) % 3;
  const double p0 = origin[a0] + t * dir[a0];
  const double p1 = origin[a1] + t * dir[a1];
  if (p0 < q.lo[0] || p0 > q.hi[0] || p1 < q.lo[1] || p1 > q.hi[1]) return std::numeric_limits<double>::infinity();
  return t;
}

/// Per-pixel ray casting through pixel centres. The ray direction has unit
/// camera-z component, so the hit parameter is the metric depth. Ties go to
/// the lowest quad index; pixels without a hit are invalid.
inline RgbdFrame render_exact(const SyntheticScene& scene, const Camera& cam, int w, int h) {
  validate(cam);
  const Vec3 origin = cam.center();
  if (!scene.bounds.contains(origin)) throw Error(ErrorCode::kInvalidCamera, "camera centre outside scene bounds");
  const Mat3 rt = cam.R.transpose();
  RgbdFrame f;
  f.rgb = Image(w, h, Vec3::Zero());
  f.depth = DepthMap(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Vec3 dir = rt * Vec3((x - cam.cx) / cam.fx, (y - cam.cy) / cam.fy, 1.0);
      double best = std::numeric_limits<double>::infinity();
      std::size_t hit = 0;
      for (std::size_t k = 0; k < scene.quads.size(); ++k) {
        const double t = intersect(scene.quads[k], origin, dir);
        if (t < best) {
          best = t;
          hit = k;
        }
      }
      if (!std::isfinite(best)) continue;
      f.depth.z(x, y) = best;
      f.depth.valid(x, y) = 1;
      f.rgb(x, y) = quad_color(scene.quads[hit], origin + best * dir);
    }
  }
  return f;
}

/// Smallest distance from `p` to any quad (plane distance where the
/// projection falls inside the quad).
inline double surface_residual(const SyntheticScene& scene, const Vec3& p) {
  double best = std::numeric_limits<double>::infinity();
  for (const Quad& q : scene.quads) {
    const int a0 = (q.axis + 1) % 3;
    const int a1 = (q.axis + 2) % 3;
    const double tol = 1e-9;
    if (p[a0] < q.lo[0] - tol || p[a0] > q.hi[0] + tol || p[a1] < q.lo[1] - tol || p[a1] > q.hi[1] + tol) continue;
    best = std::min(best, std::abs(p[q.axis] - q.offset));
  }
  return best;
}

/// Cameras on a horizontal circle at eye height, looking outward with yaw
/// advancing by `yaw_step` radians per frame.
inline std::vector<Camera> orbit_cameras(const SyntheticScene& scene, int count, int w, int h, double radius,
                                         double yaw_step, double yaw0 = 0.0,
                                         double hfov = 70.0 * std::numbers::pi / 180.0) {
  std::vector<Camera> cams;
  cams.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double yaw = yaw0 + i * yaw_step;
    const Vec3 dir(std::cos(yaw), 0.0, std::sin(yaw));
    const Vec3 eye = Vec3(0.0, scene.eye_height, 0.0) + radius * Vec3(-std::sin(yaw), 0.0, std::cos(yaw));
    Camera cam = look_at(eye, eye + dir, Vec3::UnitY(), 1.0, 1.0, 0.0, 0.0);
    cams.push_back(with_fov(cam, w, h, hfov));
  }
  return cams;
}

struct TrainingPair {
  PartialView condition;
  RgbdFrame target;
  /// Full render of the source frame, used as the reference view.
  Image reference;
  int source_index = 0;
  int target_index = 0;
};

/// Splats the exact geometry of the source frame into the target camera.
inline TrainingPair make_pair(const SyntheticScene& scene, const Camera& source, const Camera& target, int w, int h) {
  const RgbdFrame src = render_exact(scene, source, w, h);
  SceneCloud cloud;
  append_frame(cloud, src, source, 0);
  TrainingPair p;
  p.condition = render_partial_view(cloud, target, w, h);
  p.target = render_exact(scene, target, w, h);
  p.reference = src.rgb;
  return p;
}

/// Groups of five frames {a, a+s_1, ...} at the given strides; every frame in
/// a group becomes a target whose condition is a randomly chosen member of the
/// group projected into it (the frame itself included).
inline std::vector<TrainingPair> make_training_pairs(const SyntheticScene& scene, const std::vector<Camera>& cams,
                                                     const std::vector<int>& strides, int n_pairs, int w, int h,
                                                     std::uint64_t seed) {
  if (strides.empty() || n_pairs < 0) throw Error(ErrorCode::kInvalidRange, "need strides and n_pairs >= 0");
  const int max_stride = *std::max_element(strides.begin(), strides.end());
  if (static_cast<int>(cams.size()) < max_stride + 1) {
    throw Error(ErrorCode::kTrajectoryTooShort, "trajectory shorter than max stride + 1");
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> anchor_dist(0, static_cast<int>(cams.size()) - 1 - max_stride);
  std::vector<TrainingPair> out;
  out.reserve(static_cast<std::size_t>(n_pairs));
  while (static_cast<int>(out.size()) < n_pairs) {
    const int anchor = anchor_dist(rng);
    std::vector<int> group{anchor};
    for (int s : strides) group.push_back(anchor + s);
    std::uniform_int_distribution<std::size_t> pick(0, group.size() - 1);
    for (int tgt : group) {
      if (static_cast<int>(out.size()) == n_pairs) break;
      const int src = group[pick(rng)];
      TrainingPair p = make_pair(scene, cams[static_cast<std::size_t>(src)], cams[static_cast<std::size_t>(tgt)], w, h);
      p.source_index = src;
      p.target_index = tgt;
      out.push_back(std::move(p));
    }
  }
  return out;
}

}  // namespace scomp
