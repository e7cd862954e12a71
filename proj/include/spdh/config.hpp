#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "spdh/augment.hpp"
#include "spdh/codec.hpp"
#include "spdh/metrics.hpp"
#include "spdh/synth.hpp"

namespace spdh {

/// Everything a pipeline run needs; serialized as TOML with CLI flag
/// overrides on top. The effective config is dumped next to outputs so any
/// run can be reproduced from its artifacts.
struct RunConfig {
  std::string camera = "";  // camera JSON path; empty = bundled default

  // spdh
  double z_min = 500.0;
  double z_max = 3380.0;
  double delta_z = 15.0;
  double sigma_m = 50.0;
  int shape_h = 192;
  int shape_w = 384;
  double peak_threshold = 0.1;
  std::string uv_refine = "none";
  std::string uz_refine = "quadratic";
  bool pdf_prefactor = false;

  // augment
  AugmentSpec augment;
  std::string augment_about = "origin";  // or "centroid"

  // metrics
  std::vector<double> thresholds_mm{40.0, 60.0, 80.0, 100.0};
  std::string map_pooling = "pooled";  // or "per_frame"
  int baseline_window = 1;

  // synth
  double noise_sigma_mm = 3.0;
  double dropout = 0.01;
  double jitter_diameter_mm = 1000.0;
  int sequences = 1;
  int frames = 30;
  int motions = 10;

  std::uint64_t seed = 0;
  int jobs = 0;  // 0 = all hardware threads

  ZQuantization quantization() const { return make_quantization(z_min, z_max, delta_z); }
  EncodeOptions encode_options() const;
  DecodeOptions decode_options() const;
  EvalConfig eval_config() const;
  void validate() const;
};

RunConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const RunConfig& cfg);

}  // namespace spdh
