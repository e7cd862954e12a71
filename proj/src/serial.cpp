#include "spdh/serial.hpp"

#include <limits>

namespace spdh::serial {

XyzImage backproject(const DepthImage& depth, const PinholeIntrinsics& K) {
  K.validate();
  SPDH_REQUIRE(depth.width == K.width && depth.height == K.height,
               "backproject: depth/intrinsics size mismatch");
  XyzImage out(depth.width, depth.height);
  for (int v = 0; v < depth.height; ++v) {
    for (int u = 0; u < depth.width; ++u) {
      const size_t i = static_cast<size_t>(v) * depth.width + u;
      const float d = depth.data[i];
      if (d > 0.0f) {
        spdh::detail::pixel_to_xyz(u, v, d, K, &out.xyz[3 * i]);
        out.valid[i] = 1;
      }
    }
  }
  return out;
}

NormalizedXyz normalize_xyz(const XyzImage& img, const NormalizationSpec& spec) {
  spec.validate();
  double lo[3] = {spec.x_lo, spec.y_lo, spec.z_lo};
  double hi[3] = {spec.x_hi, spec.y_hi, spec.z_hi};
  const size_t n = static_cast<size_t>(img.width) * img.height;
  if (spec.mode == NormalizationSpec::Mode::kPerImageMinMax) {
    for (int c = 0; c < 3; ++c) {
      lo[c] = std::numeric_limits<double>::infinity();
      hi[c] = -std::numeric_limits<double>::infinity();
    }
    for (size_t i = 0; i < n; ++i) {
      if (!img.valid[i]) continue;
      for (int c = 0; c < 3; ++c) {
        const double v = img.xyz[3 * i + c];
        lo[c] = std::min(lo[c], v);
        hi[c] = std::max(hi[c], v);
      }
    }
    for (int c = 0; c < 3; ++c)
      if (!(lo[c] < hi[c])) hi[c] = lo[c] + 1.0;
  }
  NormalizedXyz out;
  out.width = img.width;
  out.height = img.height;
  out.data.assign(3 * n, 0.0f);
  for (size_t i = 0; i < n; ++i) {
    if (!img.valid[i]) continue;
    for (int c = 0; c < 3; ++c)
      out.data[3 * i + c] = spdh::detail::normalize_channel(img.xyz[3 * i + c], lo[c], hi[c]);
  }
  return out;
}

SpdhStack encode(const JointSet3D& joints, const PinholeIntrinsics& K, double sigma_m,
                 const ZQuantization& quant, int height, int width, const EncodeOptions& opts) {
  joints.validate();
  quant.validate();
  SPDH_REQUIRE(sigma_m > 0.0, "encode: sigma_m must be positive");
  SPDH_REQUIRE(K.width == width && K.height == height, "encode: intrinsics/shape mismatch");
  const size_t n = joints.size();
  SpdhStack stack;
  stack.width = width;
  stack.uv_height = height;
  stack.quant = quant;
  stack.sigma_m = sigma_m;
  stack.joint_names = joints.names;
  stack.visible.assign(n, 0);
  stack.uv_maps.assign(n, std::vector<float>(static_cast<size_t>(height) * width, 0.0f));
  stack.uz_maps.assign(n, std::vector<float>(static_cast<size_t>(quant.num_slices) * width, 0.0f));
  for (size_t j = 0; j < n; ++j) {
    const Eigen::Vector3d& p = joints.positions_mm[j];
    SPDH_REQUIRE(!joints.visible[j] || p.allFinite(), "encode: joint ", joints.names[j],
                 " has non-finite coordinates");
    if (!joint_encodable(p, joints.visible[j], K, quant)) continue;
    stack.visible[j] = 1;
    const double pu = K.fx * p.x() / p.z() + K.cx;
    const double pv = K.fy * p.y() / p.z() + K.cy;
    spdh::detail::fill_uv_map(stack.uv_maps[j].data(), height, width, pu, pv,
                              sigma_uv_px(sigma_m, K.fx, p.z()), opts.pdf_prefactor);
    spdh::detail::fill_uz_map(stack.uz_maps[j].data(), quant, width, p.x(), p.z(), sigma_m, K.fx,
                              K.cx, opts.pdf_prefactor);
  }
  return stack;
}

JointSet3D decode(const SpdhStack& stack, const PinholeIntrinsics& K, const DecodeOptions& opts) {
  stack.validate();
  SPDH_REQUIRE(K.width == stack.width && K.height == stack.uv_height,
               "decode: stack/intrinsics mismatch");
  const size_t n = stack.joints();
  JointSet3D out;
  out.names = stack.joint_names;
  out.positions_mm.assign(n, Eigen::Vector3d::Zero());
  out.visible.assign(n, 0);
  for (size_t j = 0; j < n; ++j) spdh::detail::decode_joint(stack, K, opts, j, out);
  return out;
}

DepthImage render_prims(const PrimScene& prims, const PinholeIntrinsics& K,
                        const NoiseModel& noise, std::uint64_t seed) {
  K.validate();
  noise.validate();
  DepthImage depth(K.width, K.height);
  for (int v = 0; v < K.height; ++v) {
    const double dy = (v - K.cy) / K.fy;
    for (int u = 0; u < K.width; ++u) {
      const double dx = (u - K.cx) / K.fx;
      const double t = spdh::detail::trace_ray(prims, dx, dy);
      if (!std::isfinite(t)) continue;
      const size_t idx = static_cast<size_t>(v) * K.width + u;
      depth.data[idx] = spdh::detail::apply_noise(t, noise, depth.max_range, seed, idx);
    }
  }
  return depth;
}

DepthImage pointcloud_to_depth(const std::vector<Eigen::Vector3d>& cloud,
                               const PinholeIntrinsics& K, int height, int width) {
  SPDH_REQUIRE(height > 0 && width > 0, "pointcloud_to_depth: empty raster");
  DepthImage out(width, height);
  for (const auto& p : cloud) {
    if (!(p.z() > 0.0)) continue;
    const long u = std::lround(K.fx * p.x() / p.z() + K.cx);
    const long v = std::lround(K.fy * p.y() / p.z() + K.cy);
    if (u < 0 || u >= width || v < 0 || v >= height) continue;
    float& cell = out.data[static_cast<size_t>(v) * width + u];
    const float z = static_cast<float>(p.z());
    if (cell == 0.0f || z < cell) cell = z;
  }
  return out;
}

}  // namespace spdh::serial
