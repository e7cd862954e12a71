#include "spdh/geometry.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "json.hpp"

namespace spdh {

void PinholeIntrinsics::validate() const {
  SPDH_REQUIRE(fx > 0.0 && fy > 0.0, "intrinsics: focal lengths must be positive (fx=", fx,
               ", fy=", fy, ")");
  SPDH_REQUIRE(width > 0 && height > 0, "intrinsics: image size must be positive");
  SPDH_REQUIRE(cx >= 0.0 && cx < width, "intrinsics: cx=", cx, " outside [0, ", width, ")");
  SPDH_REQUIRE(cy >= 0.0 && cy < height, "intrinsics: cy=", cy, " outside [0, ", height, ")");
}

PinholeIntrinsics PinholeIntrinsics::rescaled(int new_w, int new_h) const {
  SPDH_REQUIRE(new_w > 0 && new_h > 0, "rescaled: new size must be positive");
  const double sx = static_cast<double>(new_w) / width;
  const double sy = static_cast<double>(new_h) / height;
  PinholeIntrinsics out;
  out.fx = fx * sx;
  out.fy = fy * sy;
  out.cx = cx * sx;
  out.cy = cy * sy;
  out.width = new_w;
  out.height = new_h;
  return out;
}

PinholeIntrinsics load_camera_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  SPDH_REQUIRE(in.good(), "cannot open camera file: ", path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw Error("camera JSON parse error in " + path.string() + ": " + e.what());
  }
  PinholeIntrinsics K;
  try {
    K.fx = j.at("fx").get<double>();
    K.fy = j.at("fy").get<double>();
    K.cx = j.at("cx").get<double>();
    K.cy = j.at("cy").get<double>();
    K.width = j.at("width").get<int>();
    K.height = j.at("height").get<int>();
  } catch (const std::exception& e) {
    throw Error("camera JSON schema error in " + path.string() + ": " + e.what());
  }
  K.validate();
  return K;
}

void save_camera_json(const std::filesystem::path& path, const PinholeIntrinsics& K) {
  nlohmann::json j{{"fx", K.fx}, {"fy", K.fy}, {"cx", K.cx},
                   {"cy", K.cy}, {"width", K.width}, {"height", K.height}};
  std::ofstream out(path);
  SPDH_REQUIRE(out.good(), "cannot write camera file: ", path.string());
  out << j.dump(2) << "\n";
}

size_t XyzImage::valid_count() const {
  size_t n = 0;
  for (auto m : valid) n += (m != 0);
  return n;
}

void NormalizationSpec::validate() const {
  SPDH_REQUIRE(x_lo < x_hi && y_lo < y_hi && z_lo < z_hi,
               "normalization: lower bound must be below upper bound for each axis");
}

XyzImage backproject(const DepthImage& depth, const PinholeIntrinsics& K) {
  K.validate();
  SPDH_REQUIRE(depth.width == K.width && depth.height == K.height,
               "backproject: depth is ", depth.width, "x", depth.height,
               " but intrinsics are ", K.width, "x", K.height);
  XyzImage out(depth.width, depth.height);
#pragma omp parallel for schedule(static)
  for (int v = 0; v < depth.height; ++v) {
    for (int u = 0; u < depth.width; ++u) {
      const size_t i = static_cast<size_t>(v) * depth.width + u;
      const float d = depth.data[i];
      if (d > 0.0f) {
        detail::pixel_to_xyz(u, v, d, K, &out.xyz[3 * i]);
        out.valid[i] = 1;
      }
    }
  }
  return out;
}

Eigen::Vector3d backproject_pixel(double u, double v, double depth_mm,
                                  const PinholeIntrinsics& K) {
  SPDH_REQUIRE(depth_mm > 0.0, "backproject_pixel: zero/negative depth is the invalid sentinel");
  return {(u - K.cx) * depth_mm / K.fx, (v - K.cy) * depth_mm / K.fy, depth_mm};
}

Eigen::Vector2d project(const Eigen::Vector3d& p_mm, const PinholeIntrinsics& K) {
  SPDH_REQUIRE(p_mm.z() > 0.0, "project: point behind camera (Z=", p_mm.z(), ")");
  return {K.fx * p_mm.x() / p_mm.z() + K.cx, K.fy * p_mm.y() / p_mm.z() + K.cy};
}

NormalizedXyz normalize_xyz(const XyzImage& img, const NormalizationSpec& spec) {
  spec.validate();
  double lo[3] = {spec.x_lo, spec.y_lo, spec.z_lo};
  double hi[3] = {spec.x_hi, spec.y_hi, spec.z_hi};
  if (spec.mode == NormalizationSpec::Mode::kPerImageMinMax) {
    for (int c = 0; c < 3; ++c) {
      lo[c] = std::numeric_limits<double>::infinity();
      hi[c] = -std::numeric_limits<double>::infinity();
    }
    const size_t n = static_cast<size_t>(img.width) * img.height;
    for (size_t i = 0; i < n; ++i) {
      if (!img.valid[i]) continue;
      for (int c = 0; c < 3; ++c) {
        const double v = img.xyz[3 * i + c];
        lo[c] = std::min(lo[c], v);
        hi[c] = std::max(hi[c], v);
      }
    }
    for (int c = 0; c < 3; ++c) {
      if (!(lo[c] < hi[c])) hi[c] = lo[c] + 1.0;  // degenerate channel
    }
  }
  NormalizedXyz out;
  out.width = img.width;
  out.height = img.height;
  out.data.assign(3 * static_cast<size_t>(img.width) * img.height, 0.0f);
  const size_t n = static_cast<size_t>(img.width) * img.height;
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(n); ++i) {
    if (!img.valid[i]) continue;
    for (int c = 0; c < 3; ++c)
      out.data[3 * i + c] = detail::normalize_channel(img.xyz[3 * i + c], lo[c], hi[c]);
  }
  return out;
}

DepthImage resize_depth(const DepthImage& depth, int new_w, int new_h) {
  SPDH_REQUIRE(new_w > 0 && new_h > 0, "resize_depth: new size must be positive");
  SPDH_REQUIRE(depth.width > 0 && depth.height > 0, "resize_depth: empty input");
  if (new_w == depth.width && new_h == depth.height) return depth;
  DepthImage out(new_w, new_h, depth.max_range);
  const double sx = static_cast<double>(depth.width) / new_w;
  const double sy = static_cast<double>(depth.height) / new_h;
#pragma omp parallel for schedule(static)
  for (int v = 0; v < new_h; ++v) {
    int sv = static_cast<int>((v + 0.5) * sy);
    sv = std::min(sv, depth.height - 1);
    for (int u = 0; u < new_w; ++u) {
      int su = static_cast<int>((u + 0.5) * sx);
      su = std::min(su, depth.width - 1);
      out.at(u, v) = depth.at(su, sv);
    }
  }
  return out;
}

}  // namespace spdh
