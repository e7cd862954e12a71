#include "spdh/viz.hpp"

#include <algorithm>
#include <cmath>

namespace spdh {

namespace {

void heat_color(double t, std::uint8_t* rgb) {
  t = std::clamp(t, 0.0, 1.0);
  // near (t=0) warm -> far (t=1) cool
  const double r = std::clamp(1.6 - 2.2 * t, 0.0, 1.0);
  const double g = std::clamp(1.2 - 2.4 * std::abs(t - 0.5), 0.0, 1.0);
  const double b = std::clamp(2.2 * t - 1.2, 0.0, 1.0);
  rgb[0] = static_cast<std::uint8_t>(std::lround(255.0 * r));
  rgb[1] = static_cast<std::uint8_t>(std::lround(255.0 * g));
  rgb[2] = static_cast<std::uint8_t>(std::lround(255.0 * b));
}

}  // namespace

RgbImage colorize_depth(const DepthImage& depth, double z_lo, double z_hi) {
  SPDH_REQUIRE(z_lo < z_hi, "colorize_depth: bad range");
  RgbImage img(depth.width, depth.height);
  for (int v = 0; v < depth.height; ++v)
    for (int u = 0; u < depth.width; ++u) {
      const float d = depth.at(u, v);
      if (d <= 0.0f) continue;  // black
      std::uint8_t rgb[3];
      heat_color((d - z_lo) / (z_hi - z_lo), rgb);
      img.set(u, v, rgb[0], rgb[1], rgb[2]);
    }
  return img;
}

RgbImage colorize_xyz(const NormalizedXyz& xyz) {
  RgbImage img(xyz.width, xyz.height);
  const size_t n = static_cast<size_t>(xyz.width) * xyz.height;
  for (size_t i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c)
      img.data[3 * i + c] =
          static_cast<std::uint8_t>(std::lround(255.0f * std::clamp(xyz.data[3 * i + c], 0.0f,
                                                                    1.0f)));
  return img;
}

void draw_line(RgbImage& img, int u0, int v0, int u1, int v1, std::uint8_t r, std::uint8_t g,
               std::uint8_t b) {
  const int du = std::abs(u1 - u0), dv = -std::abs(v1 - v0);
  const int su = u0 < u1 ? 1 : -1, sv = v0 < v1 ? 1 : -1;
  int err = du + dv;
  for (;;) {
    if (u0 >= 0 && u0 < img.width && v0 >= 0 && v0 < img.height) img.set(u0, v0, r, g, b);
    if (u0 == u1 && v0 == v1) break;
    const int e2 = 2 * err;
    if (e2 >= dv) {
      err += dv;
      u0 += su;
    }
    if (e2 <= du) {
      err += du;
      v0 += sv;
    }
  }
}

void draw_disc(RgbImage& img, int cu, int cv, int radius, std::uint8_t r, std::uint8_t g,
               std::uint8_t b) {
  for (int dv = -radius; dv <= radius; ++dv)
    for (int du = -radius; du <= radius; ++du) {
      if (du * du + dv * dv > radius * radius) continue;
      const int u = cu + du, v = cv + dv;
      if (u >= 0 && u < img.width && v >= 0 && v < img.height) img.set(u, v, r, g, b);
    }
}

void draw_skeleton(RgbImage& img, const JointSet3D& joints, const PinholeIntrinsics& K,
                   const std::vector<int>& parents) {
  auto pixel = [&](size_t j, long* u, long* v) {
    const Eigen::Vector3d& p = joints.positions_mm[j];
    if (!(p.z() > 0.0)) return false;
    *u = std::lround(K.fx * p.x() / p.z() + K.cx);
    *v = std::lround(K.fy * p.y() / p.z() + K.cy);
    return true;
  };
  if (parents.size() == joints.size()) {
    for (size_t j = 0; j < joints.size(); ++j) {
      if (parents[j] < 0) continue;
      long u0, v0, u1, v1;
      if (!pixel(j, &u0, &v0) || !pixel(static_cast<size_t>(parents[j]), &u1, &v1)) continue;
      draw_line(img, static_cast<int>(u0), static_cast<int>(v0), static_cast<int>(u1),
                static_cast<int>(v1), 60, 120, 255);
    }
  }
  for (size_t j = 0; j < joints.size(); ++j) {
    long u, v;
    if (!pixel(j, &u, &v)) continue;
    if (joints.visible[j])
      draw_disc(img, static_cast<int>(u), static_cast<int>(v), 2, 0, 255, 0);
    else
      draw_disc(img, static_cast<int>(u), static_cast<int>(v), 2, 255, 0, 0);
  }
}

void save_heatmap_png(const std::filesystem::path& path, const std::vector<float>& map,
                      int height, int width) {
  SPDH_REQUIRE(map.size() == static_cast<size_t>(height) * width, "save_heatmap_png: bad size");
  std::vector<std::uint16_t> px(map.size());
  for (size_t i = 0; i < map.size(); ++i) {
    double q = std::round(static_cast<double>(map[i]) * 65535.0);
    px[i] = static_cast<std::uint16_t>(std::clamp(q, 0.0, 65535.0));
  }
  write_png_gray16(path, px, width, height);
}

}  // namespace spdh
