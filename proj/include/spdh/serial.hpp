#pragma once

// Plain-loop reference implementations of the OpenMP kernels. Kept for
// testing (bit-equality against the parallel paths) and for the benchmark.

#include "spdh/augment.hpp"
#include "spdh/codec.hpp"
#include "spdh/geometry.hpp"
#include "spdh/synth.hpp"

namespace spdh::serial {

XyzImage backproject(const DepthImage& depth, const PinholeIntrinsics& K);

NormalizedXyz normalize_xyz(const XyzImage& img, const NormalizationSpec& spec);

SpdhStack encode(const JointSet3D& joints, const PinholeIntrinsics& K, double sigma_m,
                 const ZQuantization& quant, int height, int width,
                 const EncodeOptions& opts = {});

JointSet3D decode(const SpdhStack& stack, const PinholeIntrinsics& K,
                  const DecodeOptions& opts = {});

DepthImage render_prims(const PrimScene& prims, const PinholeIntrinsics& K,
                        const NoiseModel& noise, std::uint64_t seed);

DepthImage pointcloud_to_depth(const std::vector<Eigen::Vector3d>& cloud,
                               const PinholeIntrinsics& K, int height, int width);

}  // namespace spdh::serial
