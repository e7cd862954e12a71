#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "spdh/codec.hpp"
#include "spdh/geometry.hpp"
#include "spdh/transform.hpp"

namespace spdh {

struct FrameRecord {
  std::string sequence_id;
  long frame_id = 0;
  std::filesystem::path depth_path;  // absolute; existence checked on load_frame_depth
  JointSet3D joints;                 // camera frame, mm
  PinholeIntrinsics camera;
  RigidTransform camera_pose;        // world <- camera
  std::uint64_t seed = 0;
};

struct SequenceInfo {
  std::string id;
  std::filesystem::path dir;  // relative to the dataset root
  long num_frames = 0;
};

struct Dataset {
  std::filesystem::path root;
  std::string chain_file;  // relative path, may be empty for converted data
  int joint_count = 0;
  std::vector<SequenceInfo> sequences;
  std::vector<FrameRecord> frames;  // grouped by sequence, frame order within
};

/// Reads manifest.toml + per-sequence annotations.jsonl, validating counts
/// and schemas up front. Depth pixels are only touched by load_frame_depth.
Dataset load_dataset(const std::filesystem::path& root);

DepthImage load_frame_depth(const FrameRecord& frame);

void write_manifest(const std::filesystem::path& root, const std::string& chain_file,
                    int joint_count, const std::vector<SequenceInfo>& sequences);

/// Per sequence, keep frames at positions 0, stride, 2*stride, ...
std::vector<FrameRecord> sample_every(const std::vector<FrameRecord>& frames, int stride);

/// Sequence-level split; the three id lists must partition the dataset's
/// sequence ids exactly.
struct SplitSpec {
  std::vector<std::string> train_ids, val_ids, test_ids;
};
struct SplitResult {
  std::vector<FrameRecord> train, val, test;
};
SplitResult split(const std::vector<FrameRecord>& frames, const SplitSpec& spec);

/// Ingest external data: a directory of 16-bit depth PNGs plus a joints CSV
/// with header frame_id,depth_file,joint,x_mm,y_mm,z_mm[,visible]. Emits a
/// single-sequence dataset under out_root (depth files are copied).
void convert_external(const std::filesystem::path& depth_dir,
                      const std::filesystem::path& joints_csv,
                      const std::filesystem::path& camera_json,
                      const std::filesystem::path& out_root);

}  // namespace spdh
