#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "spdh/codec.hpp"
#include "spdh/geometry.hpp"

namespace spdh {

enum class Norm { kL1, kL2 };

/// Mean per-joint distance between prediction and ground truth, in
/// centimeters. Joints with gt visibility=false are excluded; throws when no
/// joint is left.
double add_metric(const JointSet3D& pred, const JointSet3D& gt, Norm norm);

/// Fraction of (frame, joint) pairs with L2 error strictly below each
/// threshold (mm), pooled over all included joints of all frames.
std::vector<double> map_metric(const std::vector<JointSet3D>& preds,
                               const std::vector<JointSet3D>& gts,
                               const std::vector<double>& thresholds_mm);

/// The depth-sampling competitor: Z read from the depth map at the rounded
/// 2D joint location (0 -> invisible), X and Y by backprojection of the
/// subpixel coordinates. window=3 uses the median of nonzero depths in the
/// 3x3 neighborhood instead of the single pixel.
JointSet3D baseline_2d_to_3d(const std::vector<Eigen::Vector2d>& joints_uv,
                             const std::vector<std::string>& names, const DepthImage& depth,
                             const PinholeIntrinsics& K, int window = 1);

struct PoseMetricsReport {
  double add_l1_mean_cm = 0.0, add_l1_std_cm = 0.0;
  double add_l2_mean_cm = 0.0, add_l2_std_cm = 0.0;
  std::vector<std::pair<double, double>> map_at;  // (threshold mm, fraction)
  long num_frames = 0;
  long num_joints_evaluated = 0;
  long num_joints_excluded = 0;

  void validate() const;  // fraction monotonicity, std >= 0, L1 >= L2
};

struct EvalConfig {
  std::vector<double> thresholds_mm{40.0, 60.0, 80.0, 100.0};
  enum class MapPooling { kPooled, kPerFrameMean };
  MapPooling pooling = MapPooling::kPooled;
};

/// Aggregate predictions vs ground truth (aligned element-wise; the caller
/// matches frame ids). ADD std is across per-frame ADD values.
PoseMetricsReport evaluate_run(const std::vector<JointSet3D>& preds,
                               const std::vector<JointSet3D>& gts, const EvalConfig& config);

void save_report_json(const std::filesystem::path& path, const PoseMetricsReport& report);
PoseMetricsReport load_report_json(const std::filesystem::path& path);

/// Human-readable table; one row per labeled report.
std::string format_report_table(
    const std::vector<std::pair<std::string, PoseMetricsReport>>& rows);

}  // namespace spdh
