#pragma once

// Shared value types for the scomp library: grids, latent tensors, the error
// type and a few numeric helpers used across modules.

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace scomp {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic>;

enum class ErrorCode {
  kEmptyPointmap,
  kNonFiniteInput,
  kEmptyCloud,
  kTooFewSamples,
  kDegenerateRange,
  kCodecShapeMismatch,
  kIndivisibleShape,
  kSingularFit,
  kInvalidRange,
  kStepOutOfRange,
  kShapeMismatch,
  kEmptyBatch,
  kDivergenceDetected,
  kNonFiniteState,
  kShapeIndivisible,
  kDimMismatch,
  kInsufficientOverlap,
  kLengthMismatch,
  kNonRotation,
  kTooSmall,
  kTrajectoryTooShort,
  kVersionUnsupported,
  kMissingBlob,
  kNonRotationOnLoad,
  kIoFailure,
  kInvalidCamera,
  kUnsupportedMetric,
  kParseError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyPointmap: return "EmptyPointmap";
    case ErrorCode::kNonFiniteInput: return "NonFiniteInput";
    case ErrorCode::kEmptyCloud: return "EmptyCloud";
    case ErrorCode::kTooFewSamples: return "TooFewSamples";
    case ErrorCode::kDegenerateRange: return "DegenerateRange";
    case ErrorCode::kCodecShapeMismatch: return "CodecShapeMismatch";
    case ErrorCode::kIndivisibleShape: return "IndivisibleShape";
    case ErrorCode::kSingularFit: return "SingularFit";
    case ErrorCode::kInvalidRange: return "InvalidRange";
    case ErrorCode::kStepOutOfRange: return "StepOutOfRange";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kEmptyBatch: return "EmptyBatch";
    case ErrorCode::kDivergenceDetected: return "DivergenceDetected";
    case ErrorCode::kNonFiniteState: return "NonFiniteState";
    case ErrorCode::kShapeIndivisible: return "ShapeIndivisible";
    case ErrorCode::kDimMismatch: return "DimMismatch";
    case ErrorCode::kInsufficientOverlap: return "InsufficientOverlap";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kNonRotation: return "NonRotation";
    case ErrorCode::kTooSmall: return "TooSmall";
    case ErrorCode::kTrajectoryTooShort: return "TrajectoryTooShort";
    case ErrorCode::kVersionUnsupported: return "VersionUnsupported";
    case ErrorCode::kMissingBlob: return "MissingBlob";
    case ErrorCode::kNonRotationOnLoad: return "NonRotationOnLoad";
    case ErrorCode::kIoFailure: return "IoFailure";
    case ErrorCode::kInvalidCamera: return "InvalidCamera";
    case ErrorCode::kUnsupportedMetric: return "UnsupportedMetric";
    case ErrorCode::kParseError: return "ParseError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Row-major H x W grid of values, indexed (x, y).
template <typename T>
struct Grid {
  int width = 0;
  int height = 0;
  std::vector<T> data;

  Grid() = default;
  Grid(int w, int h, const T& init = T{})
      : width(w), height(h), data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), init) {}

  [[nodiscard]] T& operator()(int x, int y) { return data[index(x, y)]; }
  [[nodiscard]] const T& operator()(int x, int y) const { return data[index(x, y)]; }

  [[nodiscard]] std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x);
  }
  [[nodiscard]] std::size_t size() const { return data.size(); }
  [[nodiscard]] bool same_shape(int w, int h) const { return width == w && height == h; }
  template <typename U>
  [[nodiscard]] bool same_shape(const Grid<U>& o) const {
    return width == o.width && height == o.height;
  }

  bool operator==(const Grid&) const = default;
};

// uint8_t rather than bool so masks are addressable and serializable.
using Mask = Grid<std::uint8_t>;
using Image = Grid<Vec3>;

inline std::size_t count_valid(const Mask& m) {
  std::size_t n = 0;
  for (auto v : m.data) n += v ? 1 : 0;
  return n;
}

/// Channel-major latent tensor (C x H x W).
struct Tensor3 {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  Tensor3() = default;
  Tensor3(int c, int h, int w, double init = 0.0)
      : channels(c), height(h), width(w),
        data(static_cast<std::size_t>(c) * static_cast<std::size_t>(h) * static_cast<std::size_t>(w), init) {}

  [[nodiscard]] double& at(int c, int y, int x) { return data[index(c, y, x)]; }
  [[nodiscard]] double at(int c, int y, int x) const { return data[index(c, y, x)]; }
  [[nodiscard]] std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * static_cast<std::size_t>(height) + static_cast<std::size_t>(y)) *
               static_cast<std::size_t>(width) +
           static_cast<std::size_t>(x);
  }
  [[nodiscard]] std::size_t plane() const {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  }
  [[nodiscard]] bool same_shape(const Tensor3& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }

  bool operator==(const Tensor3&) const = default;
};

/// Pairwise (cascade) summation; result is independent of thread count.
inline double pairwise_sum(std::span<const double> v) {
  constexpr std::size_t kLeaf = 16;
  if (v.size() <= kLeaf) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

inline double pairwise_mean(std::span<const double> v) {
  return v.empty() ? 0.0 : pairwise_sum(v) / static_cast<double>(v.size());
}

inline bool is_finite(const Vec3& p) {
  return std::isfinite(p.x()) && std::isfinite(p.y()) && std::isfinite(p.z());
}

}  // namespace scomp
