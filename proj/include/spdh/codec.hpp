#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "spdh/geometry.hpp"

namespace spdh {

/// Quantization of the restricted depth interval [z_min, z_max] into
/// num_slices slices of thickness delta_z. Slice i has metric center
/// z_min + i*delta_z; the slice count is the uz heatmap height.
struct ZQuantization {
  double z_min = 500.0;   // mm
  double z_max = 3380.0;  // mm
  double delta_z = 15.0;  // mm
  int num_slices = 192;

  double slice_center(int i) const { return z_min + i * delta_z; }
  int slice_of(double z_mm) const {
    int i = static_cast<int>(std::lround((z_mm - z_min) / delta_z));
    if (i < 0) i = 0;
    if (i >= num_slices) i = num_slices - 1;
    return i;
  }
  bool contains(double z_mm) const { return z_mm >= z_min && z_mm <= z_max; }
  void validate() const;
};

ZQuantization make_quantization(double z_min, double z_max, double delta_z);

/// Named 3D joints in the camera frame (mm) with visibility flags.
struct JointSet3D {
  std::vector<std::string> names;
  std::vector<Eigen::Vector3d> positions_mm;
  std::vector<std::uint8_t> visible;

  size_t size() const { return positions_mm.size(); }
  void validate() const;
};

/// Per-joint uv (image plane) and uz (depth-slice x column) heatmaps.
/// uv maps are uv_height x width, uz maps are quant.num_slices x width.
struct SpdhStack {
  int width = 0;
  int uv_height = 0;
  ZQuantization quant;
  double sigma_m = 50.0;  // mm
  std::vector<std::string> joint_names;
  std::vector<std::uint8_t> visible;             // encodability per joint
  std::vector<std::vector<float>> uv_maps;       // n x (uv_height*width)
  std::vector<std::vector<float>> uz_maps;       // n x (num_slices*width)

  size_t joints() const { return uv_maps.size(); }
  void validate() const;
};

struct EncodeOptions {
  /// false: maps are peak-normalized so the maximum cell is exactly 1.0.
  /// true: multiply the Gaussian by 1/(2*pi*sigma) instead (uv uses the
  /// per-joint pixel sigma, uz the metric sigma). Argmax is unaffected.
  bool pdf_prefactor = false;
};

struct DecodeOptions {
  enum class Refine { kNone, kQuadratic };
  double peak_threshold = 0.1;
  Refine uv_refine = Refine::kNone;
  // Quadratic by default: the pure integer argmax of the uz map can land on
  // the slice adjacent to the joint's nearest one (the grid is a perspective
  // fan in the XZ plane, so X-residuals differ across slices), exceeding the
  // dz/2 recovery bound by up to (z_max/(2 fx))^2/(2 dz). The 3-point
  // log-parabola along the depth axis is exact for encoded maps and keeps
  // |Z_hat - Z| <= dz/2; the fitted offset is clamped to half a slice around
  // the argmax and snapped to dz/4096 steps so rescaling the maps cannot
  // flip output bits.
  Refine uz_refine = Refine::kQuadratic;
};

/// Per-joint uv Gaussian stddev in pixels: sigma_m * fx / Z.
inline double sigma_uv_px(double sigma_m_mm, double fx, double z_mm) {
  return sigma_m_mm * fx / z_mm;
}

/// A joint is encodable when it is visible, finite, inside the quantized
/// depth range, and projects inside the uv image.
bool joint_encodable(const Eigen::Vector3d& p_mm, std::uint8_t input_visible,
                     const PinholeIntrinsics& K, const ZQuantization& quant);

std::vector<std::vector<float>> encode_uv(const JointSet3D& joints, const PinholeIntrinsics& K,
                                          double sigma_m, const ZQuantization& quant,
                                          int height, int width,
                                          const EncodeOptions& opts = {},
                                          std::vector<std::uint8_t>* encodable_out = nullptr);

std::vector<std::vector<float>> encode_uz(const JointSet3D& joints, const PinholeIntrinsics& K,
                                          double sigma_m, const ZQuantization& quant, int width,
                                          const EncodeOptions& opts = {},
                                          std::vector<std::uint8_t>* encodable_out = nullptr);

/// Full SPDH encoding. K must describe the (height, width) raster the stack
/// is encoded for.
SpdhStack encode(const JointSet3D& joints, const PinholeIntrinsics& K, double sigma_m,
                 const ZQuantization& quant, int height, int width,
                 const EncodeOptions& opts = {});

/// Heatmaps -> metric joints. Joints whose peak value (min of the two maps'
/// peaks) falls below opts.peak_threshold are flagged invisible.
JointSet3D decode(const SpdhStack& stack, const PinholeIntrinsics& K,
                  const DecodeOptions& opts = {});

// Serialization. `base` is a path without extension; writes base.spdh (raw
// container: magic "SPDHSTCK", u32 n, uv_height, width, num_slices, then uv
// maps then uz maps as little-endian f32) plus a base.json sidecar with
// quant, sigma_m, joint_names, visibility and optionally the camera. With
// with_png, also writes base_uv.png / base_uz.png: the per-joint pages
// stacked vertically in one 16-bit PNG per space, values round(v*65535).
void save_stack(const std::filesystem::path& base, const SpdhStack& stack,
                const PinholeIntrinsics* camera = nullptr, bool with_png = false);
SpdhStack load_stack(const std::filesystem::path& path_or_base,
                     PinholeIntrinsics* camera_out = nullptr);

namespace detail {

// Gaussians are evaluated inside a 10-sigma window and left exactly zero
// outside. Peak-normalized maps shift the exponent by the in-window minimum
// squared distance so the maximum cell is exactly 1.0. Shared by the OpenMP
// encoders and the serial reference.
constexpr double kGaussWindowSigmas = 10.0;

void fill_uv_map(float* map, int height, int width, double pu, double pv, double sigma_px,
                 bool pdf_prefactor);
void fill_uz_map(float* map, const ZQuantization& quant, int width, double xj, double zj,
                 double sigma_m, double fx, double cx, bool pdf_prefactor);

// Decode one joint of a validated stack into out (sized beforehand).
void decode_joint(const SpdhStack& stack, const PinholeIntrinsics& K, const DecodeOptions& opts,
                  size_t j, JointSet3D& out);

}  // namespace detail

}  // namespace spdh
