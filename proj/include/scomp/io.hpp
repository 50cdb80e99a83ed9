#pragma once

// On-disk formats: PFM depth, PNG colour/mask (libpng), binary PLY clouds,
// the JSON-manifest scene container, trajectory files, model checkpoints and
// completion stats.

#include "scomp/camera.hpp"
#include "scomp/core.hpp"
#include "scomp/denoiser.hpp"
#include "scomp/diffusion.hpp"
#include "scomp/geometry.hpp"
#include "scomp/pipeline.hpp"
#include "scomp/synth.hpp"

#include <png.h>

#include "json.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace scomp {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace detail {

template <typename U>
void put_le(std::string& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f32(std::string& out, float f) { put_le(out, std::bit_cast<std::uint32_t>(f)); }
inline void put_f64(std::string& out, double d) { put_le(out, std::bit_cast<std::uint64_t>(d)); }
inline void put_u32(std::string& out, std::uint32_t v) { put_le(out, v); }

class ByteReader {
 public:
  explicit ByteReader(std::string bytes, std::size_t pos = 0) : bytes_(std::move(bytes)), pos_(pos) {}

  template <typename U>
  U get_le() {
    if (pos_ + sizeof(U) > bytes_.size()) throw Error(ErrorCode::kIoFailure, "unexpected end of data");
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(U);
    return v;
  }
  float f32() { return std::bit_cast<float>(get_le<std::uint32_t>()); }
  double f64() { return std::bit_cast<double>(get_le<std::uint64_t>()); }
  std::uint32_t u32() { return get_le<std::uint32_t>(); }
  std::uint8_t u8() { return get_le<std::uint8_t>(); }
  std::string str(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw Error(ErrorCode::kIoFailure, "unexpected end of data");
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  [[nodiscard]] bool at_end() const { return pos_ == bytes_.size(); }

 private:
  std::string bytes_;
  std::size_t pos_;
};

}  // namespace detail

inline std::string read_file(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::kMissingBlob, "missing file " + path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot write " + path.string());
}

// ---------------------------------------------------------------------------
// PFM: single channel, little-endian float32, rows stored bottom-up.

inline std::string encode_pfm(const Grid<double>& g) {
  std::string out = "Pf\n" + std::to_string(g.width) + " " + std::to_string(g.height) + "\n-1.0\n";
  for (int y = g.height - 1; y >= 0; --y)
    for (int x = 0; x < g.width; ++x) detail::put_f32(out, static_cast<float>(g(x, y)));
  return out;
}

inline void write_pfm(const fs::path& path, const Grid<double>& g) { write_file(path, encode_pfm(g)); }

inline Grid<double> read_pfm(const fs::path& path) {
  const std::string bytes = read_file(path);
  std::istringstream hdr(bytes);
  std::string magic, dims, scale_line;
  std::getline(hdr, magic);
  std::getline(hdr, dims);
  std::getline(hdr, scale_line);
  if (magic != "Pf" || !hdr) throw Error(ErrorCode::kIoFailure, "not a single-channel PFM: " + path.string());
  int w = 0;
  int h = 0;
  std::istringstream(dims) >> w >> h;
  const double scale = std::stod(scale_line);
  if (w <= 0 || h <= 0) throw Error(ErrorCode::kIoFailure, "bad PFM dimensions");
  if (scale >= 0.0) throw Error(ErrorCode::kIoFailure, "big-endian PFM is not supported");
  detail::ByteReader rd(bytes, static_cast<std::size_t>(hdr.tellg()));
  Grid<double> g(w, h, 0.0);
  for (int y = h - 1; y >= 0; --y)
    for (int x = 0; x < w; ++x) g(x, y) = rd.f32();
  return g;
}

// ---------------------------------------------------------------------------
// PNG through the libpng simplified API.

inline void write_png(const fs::path& path, int w, int h, bool rgb, const std::vector<std::uint8_t>& pixels) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(w);
  img.height = static_cast<png_uint_32>(h);
  img.format = rgb ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&img, path.c_str(), 0, pixels.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw Error(ErrorCode::kIoFailure, "png write failed: " + msg);
  }
}

struct PngData {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
};

inline PngData read_png(const fs::path& path, bool rgb) {
  if (!fs::exists(path)) throw Error(ErrorCode::kMissingBlob, "missing file " + path.string());
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw Error(ErrorCode::kIoFailure, "png read failed: " + std::string(img.message));
  }
  img.format = rgb ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  PngData d{static_cast<int>(img.width), static_cast<int>(img.height), std::vector<std::uint8_t>(PNG_IMAGE_SIZE(img))};
  if (!png_image_finish_read(&img, nullptr, d.pixels.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw Error(ErrorCode::kIoFailure, "png decode failed: " + msg);
  }
  return d;
}

inline std::uint8_t to_u8(double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

inline void write_rgb_png(const fs::path& path, const Image& img) {
  std::vector<std::uint8_t> px;
  px.reserve(img.size() * 3);
  for (const Vec3& c : img.data)
    for (int k = 0; k < 3; ++k) px.push_back(to_u8(c[k]));
  write_png(path, img.width, img.height, true, px);
}

inline Image read_rgb_png(const fs::path& path) {
  const PngData d = read_png(path, true);
  Image img(d.width, d.height, Vec3::Zero());
  for (std::size_t i = 0; i < img.size(); ++i)
    img.data[i] = Vec3(d.pixels[3 * i], d.pixels[3 * i + 1], d.pixels[3 * i + 2]) / 255.0;
  return img;
}

inline void write_mask_png(const fs::path& path, const Mask& m) {
  std::vector<std::uint8_t> px(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) px[i] = m.data[i] ? 255 : 0;
  write_png(path, m.width, m.height, false, px);
}

inline Mask read_mask_png(const fs::path& path) {
  const PngData d = read_png(path, false);
  Mask m(d.width, d.height, 0);
  for (std::size_t i = 0; i < m.size(); ++i) m.data[i] = d.pixels[i] >= 128 ? 1 : 0;
  return m;
}

// ---------------------------------------------------------------------------
// Binary little-endian PLY: float x, y, z + uchar red, green, blue.

inline std::string encode_ply(const SceneCloud& cloud) {
  if (cloud.empty()) throw Error(ErrorCode::kEmptyCloud, "refusing to export an empty cloud");
  std::string out =
      "ply\nformat binary_little_endian 1.0\nelement vertex " + std::to_string(cloud.size()) +
      "\nproperty float x\nproperty float y\nproperty float z\n"
      "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
  out.reserve(out.size() + cloud.size() * 15);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (int k = 0; k < 3; ++k) detail::put_f32(out, static_cast<float>(cloud.points[i][k]));
    for (int k = 0; k < 3; ++k) out.push_back(static_cast<char>(to_u8(cloud.colors[i][k])));
  }
  return out;
}

inline void export_ply(const SceneCloud& cloud, const fs::path& path) { write_file(path, encode_ply(cloud)); }

inline SceneCloud read_ply(const fs::path& path) {
  const std::string bytes = read_file(path);
  const std::string end_marker = "end_header\n";
  const std::size_t end = bytes.find(end_marker);
  if (end == std::string::npos) throw Error(ErrorCode::kIoFailure, "PLY header not terminated");
  std::istringstream hdr(bytes.substr(0, end));
  std::string line;
  std::size_t count = 0;
  std::vector<std::string> props;
  bool binary_le = false;
  std::getline(hdr, line);
  if (line != "ply") throw Error(ErrorCode::kIoFailure, "not a PLY file");
  while (std::getline(hdr, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "format") {
      std::string fmt;
      ls >> fmt;
      binary_le = fmt == "binary_little_endian";
    } else if (key == "element") {
      std::string name;
      ls >> name >> count;
      if (name != "vertex") throw Error(ErrorCode::kIoFailure, "unsupported PLY element " + name);
    } else if (key == "property") {
      std::string type, name;
      ls >> type >> name;
      props.push_back(type + " " + name);
    }
  }
  const std::vector<std::string> expected{"float x", "float y", "float z", "uchar red", "uchar green", "uchar blue"};
  if (!binary_le || props != expected) throw Error(ErrorCode::kIoFailure, "unsupported PLY layout");
  detail::ByteReader rd(bytes, end + end_marker.size());
  SceneCloud cloud;
  for (std::size_t i = 0; i < count; ++i) {
    const float x = rd.f32();
    const float y = rd.f32();
    const float z = rd.f32();
    const double r = rd.u8();
    const double g = rd.u8();
    const double b = rd.u8();
    cloud.push_back(Vec3(x, y, z), Vec3(r, g, b) / 255.0, 0);
  }
  if (!rd.at_end()) throw Error(ErrorCode::kIoFailure, "PLY body longer than the header vertex count");
  return cloud;
}

// ---------------------------------------------------------------------------
// JSON helpers.

inline json camera_to_json(const Camera& cam) {
  json r = json::array();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r.push_back(cam.R(i, j));
  return {{"fx", cam.fx}, {"fy", cam.fy}, {"cx", cam.cx}, {"cy", cam.cy},
          {"R", r},       {"T", {cam.T.x(), cam.T.y(), cam.T.z()}}};
}

/// Parses a camera; rotation validity is the caller's concern.
inline Camera camera_from_json(const json& j) {
  Camera cam;
  cam.fx = j.at("fx").get<double>();
  cam.fy = j.at("fy").get<double>();
  cam.cx = j.at("cx").get<double>();
  cam.cy = j.at("cy").get<double>();
  const auto& r = j.at("R");
  const auto& t = j.at("T");
  if (r.size() != 9 || t.size() != 3) throw Error(ErrorCode::kParseError, "camera needs 9 R and 3 T values");
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) cam.R(i, k) = r.at(static_cast<std::size_t>(3 * i + k)).get<double>();
  for (int i = 0; i < 3; ++i) cam.T[i] = t.at(static_cast<std::size_t>(i)).get<double>();
  return cam;
}

inline json vec_to_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }
inline Vec3 vec_from_json(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

inline json scene_to_json(const SyntheticScene& s) {
  json quads = json::array();
  for (const Quad& q : s.quads) {
    quads.push_back({{"axis", q.axis},
                     {"offset", q.offset},
                     {"lo", {q.lo[0], q.lo[1]}},
                     {"hi", {q.hi[0], q.hi[1]}},
                     {"color", vec_to_json(q.base_color)},
                     {"frequency", q.frequency},
                     {"texture_seed", q.texture_seed}});
  }
  return {{"seed", s.seed},
          {"eye_height", s.eye_height},
          {"bounds", {{"min", vec_to_json(s.bounds.min)}, {"max", vec_to_json(s.bounds.max)}}},
          {"quads", quads}};
}

inline SyntheticScene scene_from_json(const json& j) {
  SyntheticScene s;
  s.seed = j.at("seed").get<std::uint64_t>();
  s.eye_height = j.at("eye_height").get<double>();
  s.bounds = {vec_from_json(j.at("bounds").at("min")), vec_from_json(j.at("bounds").at("max"))};
  for (const json& q : j.at("quads")) {
    Quad quad;
    quad.axis = q.at("axis").get<int>();
    quad.offset = q.at("offset").get<double>();
    quad.lo = {q.at("lo").at(0).get<double>(), q.at("lo").at(1).get<double>()};
    quad.hi = {q.at("hi").at(0).get<double>(), q.at("hi").at(1).get<double>()};
    quad.base_color = vec_from_json(q.at("color"));
    quad.frequency = q.at("frequency").get<double>();
    quad.texture_seed = q.at("texture_seed").get<std::uint64_t>();
    if (quad.axis < 0 || quad.axis > 2 || !(quad.hi[0] > quad.lo[0]) || !(quad.hi[1] > quad.lo[1])) {
      throw Error(ErrorCode::kParseError, "degenerate quad in scene description");
    }
    s.quads.push_back(quad);
  }
  return s;
}

inline json read_json(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, path.string() + ": " + e.what());
  }
}

inline void write_json(const fs::path& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

// ---------------------------------------------------------------------------
// Scene container: manifest.json + per-frame PNG / PFM / mask PNG blobs.

inline constexpr int kContainerVersion = 1;

struct ContainerFrame {
  std::string name;
  Camera camera;
  RgbdFrame frame;
};

struct SceneContainer {
  int width = 0;
  int height = 0;
  std::vector<ContainerFrame> frames;
  std::optional<SyntheticScene> scene;
};

inline void save_scene(const SceneContainer& c, const fs::path& dir) {
  fs::create_directories(dir);
  json frames = json::array();
  for (const ContainerFrame& f : c.frames) {
    if (!f.frame.rgb.same_shape(c.width, c.height) || !f.frame.depth.z.same_shape(c.width, c.height)) {
      throw Error(ErrorCode::kShapeMismatch, "frame " + f.name + " does not match container size");
    }
    const std::string image = f.name + ".png";
    const std::string depth = f.name + ".pfm";
    const std::string mask = f.name + "_mask.png";
    Grid<double> z = f.frame.depth.z;
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (!f.frame.depth.valid.data[i]) z.data[i] = 0.0;
    }
    write_rgb_png(dir / image, f.frame.rgb);
    write_pfm(dir / depth, z);
    write_mask_png(dir / mask, f.frame.depth.valid);
    frames.push_back(
        {{"name", f.name}, {"camera", camera_to_json(f.camera)}, {"image", image}, {"depth", depth}, {"mask", mask}});
  }
  json manifest = {{"version", kContainerVersion}, {"width", c.width}, {"height", c.height}, {"frames", frames}};
  if (c.scene) manifest["scene"] = scene_to_json(*c.scene);
  write_json(dir / "manifest.json", manifest);
}

inline SceneContainer load_scene(const fs::path& dir) {
  const json m = read_json(dir / "manifest.json");
  try {
    if (m.at("version").get<int>() != kContainerVersion) {
      throw Error(ErrorCode::kVersionUnsupported, "container version " + m.at("version").dump());
    }
    SceneContainer c;
    c.width = m.at("width").get<int>();
    c.height = m.at("height").get<int>();
    for (const json& jf : m.at("frames")) {
      ContainerFrame f;
      f.name = jf.at("name").get<std::string>();
      f.camera = camera_from_json(jf.at("camera"));
      if (!is_rotation(f.camera.R, 1e-9)) {
        throw Error(ErrorCode::kNonRotationOnLoad, "frame " + f.name + " has a non-rotation R");
      }
      for (const char* key : {"image", "depth", "mask"}) {
        const fs::path p = dir / jf.at(key).get<std::string>();
        if (!fs::exists(p)) throw Error(ErrorCode::kMissingBlob, "frame " + f.name + " is missing " + p.string());
      }
      f.frame.rgb = read_rgb_png(dir / jf.at("image").get<std::string>());
      f.frame.depth.z = read_pfm(dir / jf.at("depth").get<std::string>());
      f.frame.depth.valid = read_mask_png(dir / jf.at("mask").get<std::string>());
      if (!f.frame.rgb.same_shape(c.width, c.height) || !f.frame.depth.z.same_shape(c.width, c.height) ||
          !f.frame.depth.valid.same_shape(c.width, c.height)) {
        throw Error(ErrorCode::kShapeMismatch, "frame " + f.name + " blobs do not match the manifest size");
      }
      c.frames.push_back(std::move(f));
    }
    if (m.contains("scene")) c.scene = scene_from_json(m.at("scene"));
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, "manifest: " + std::string(e.what()));
  }
}

// ---------------------------------------------------------------------------
// Trajectory file: {"version": 1, "width", "height", "cameras": [...]}, each
// camera optionally carrying a "name".

struct Trajectory {
  int width = 0;
  int height = 0;
  std::vector<Camera> cameras;
  std::vector<std::string> names;
};

inline std::string view_name(std::size_t index) {
  std::string digits = std::to_string(index);
  return "view_" + std::string(digits.size() < 3 ? 3 - digits.size() : 0, '0') + digits;
}

inline void save_trajectory(const Trajectory& t, const fs::path& path) {
  json cams = json::array();
  for (std::size_t i = 0; i < t.cameras.size(); ++i) {
    json c = camera_to_json(t.cameras[i]);
    c["name"] = i < t.names.size() ? t.names[i] : view_name(i);
    cams.push_back(c);
  }
  write_json(path, {{"version", 1}, {"width", t.width}, {"height", t.height}, {"cameras", cams}});
}

inline Trajectory load_trajectory(const fs::path& path) {
  const json j = read_json(path);
  try {
    if (j.at("version").get<int>() != 1) throw Error(ErrorCode::kVersionUnsupported, "trajectory version");
    Trajectory t;
    t.width = j.at("width").get<int>();
    t.height = j.at("height").get<int>();
    for (const json& c : j.at("cameras")) {
      Camera cam = camera_from_json(c);
      if (!is_rotation(cam.R, 1e-9)) throw Error(ErrorCode::kNonRotationOnLoad, "trajectory camera R");
      t.names.push_back(c.contains("name") ? c.at("name").get<std::string>() : view_name(t.cameras.size()));
      t.cameras.push_back(cam);
    }
    return t;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, "trajectory: " + std::string(e.what()));
  }
}

// ---------------------------------------------------------------------------
// Checkpoint. Little-endian layout:
//   char[8]  "SCMPCKPT"
//   u32      version (1)
//   u32 x 6  patch, d_model, hidden, n_emb, ref_grid, codec factor
//   u32      schedule steps;  f64 beta_start;  f64 beta_end
//   u32      tensor count, then per tensor:
//            u32 name length, name bytes, u32 rows, u32 cols, f64[rows * cols] row-major

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  DiffusionModel model;
  int schedule_steps = 100;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  int codec_factor = 1;
  Mat reference_projection;  // 5 x d_model extractor map
};

inline std::string encode_checkpoint(const Checkpoint& ck) {
  std::string out = "SCMPCKPT";
  detail::put_u32(out, kCheckpointVersion);
  const ModelConfig& c = ck.model.config;
  for (int v : {c.patch, c.d_model, c.hidden, c.n_emb, c.ref_grid, ck.codec_factor}) {
    detail::put_u32(out, static_cast<std::uint32_t>(v));
  }
  detail::put_u32(out, static_cast<std::uint32_t>(ck.schedule_steps));
  detail::put_f64(out, ck.beta_start);
  detail::put_f64(out, ck.beta_end);
  std::vector<std::pair<std::string, const Mat*>> tensors;
  ck.model.visit([&](const std::string& n, const Mat& m) { tensors.emplace_back(n, &m); });
  tensors.emplace_back("ref.projection", &ck.reference_projection);
  detail::put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, m] : tensors) {
    detail::put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    detail::put_u32(out, static_cast<std::uint32_t>(m->rows()));
    detail::put_u32(out, static_cast<std::uint32_t>(m->cols()));
    for (Eigen::Index i = 0; i < m->size(); ++i) detail::put_f64(out, m->data()[i]);
  }
  return out;
}

inline void save_checkpoint(const Checkpoint& ck, const fs::path& path) { write_file(path, encode_checkpoint(ck)); }

inline Checkpoint load_checkpoint(const fs::path& path) {
  detail::ByteReader rd(read_file(path));
  if (rd.str(8) != "SCMPCKPT") throw Error(ErrorCode::kParseError, "not a checkpoint file");
  const std::uint32_t version = rd.u32();
  if (version != kCheckpointVersion) throw Error(ErrorCode::kVersionUnsupported, "checkpoint version");
  Checkpoint ck;
  ModelConfig cfg;
  cfg.patch = static_cast<int>(rd.u32());
  cfg.d_model = static_cast<int>(rd.u32());
  cfg.hidden = static_cast<int>(rd.u32());
  cfg.n_emb = static_cast<int>(rd.u32());
  cfg.ref_grid = static_cast<int>(rd.u32());
  ck.codec_factor = static_cast<int>(rd.u32());
  ck.schedule_steps = static_cast<int>(rd.u32());
  ck.beta_start = rd.f64();
  ck.beta_end = rd.f64();
  ck.model = init_diffusion_model(cfg, 0);
  std::vector<std::pair<std::string, Mat*>> slots;
  ck.model.visit([&](const std::string& n, Mat& m) { slots.emplace_back(n, &m); });
  slots.emplace_back("ref.projection", &ck.reference_projection);
  const std::uint32_t count = rd.u32();
  if (count != slots.size()) throw Error(ErrorCode::kShapeMismatch, "checkpoint tensor count");
  for (auto& [name, m] : slots) {
    const std::string got = rd.str(rd.u32());
    if (got != name) throw Error(ErrorCode::kShapeMismatch, "expected tensor " + name + ", found " + got);
    const std::uint32_t rows = rd.u32();
    const std::uint32_t cols = rd.u32();
    if (name != "ref.projection" && (rows != m->rows() || cols != m->cols())) {
      throw Error(ErrorCode::kShapeMismatch, "tensor " + name + " shape");
    }
    m->resize(rows, cols);
    for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = rd.f64();
  }
  if (!rd.at_end()) throw Error(ErrorCode::kParseError, "trailing bytes in checkpoint");
  return ck;
}

// ---------------------------------------------------------------------------
// Completion stats: array of {iteration, points_added, scale, offset, residual_rms}.

inline json stats_to_json(const std::vector<StepStats>& stats) {
  json arr = json::array();
  for (const StepStats& s : stats) {
    arr.push_back({{"iteration", s.iteration},
                   {"points_added", s.points_added},
                   {"scale", s.scale},
                   {"offset", s.offset},
                   {"residual_rms", s.residual_rms}});
  }
  return arr;
}

}  // namespace scomp
