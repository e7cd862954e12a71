#include "spdh/codec.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "json.hpp"
#include "spdh/binary_io.hpp"
#include "spdh/image_io.hpp"

namespace spdh {

void ZQuantization::validate() const {
  SPDH_REQUIRE(delta_z > 0.0, "quantization: delta_z must be positive (got ", delta_z, ")");
  SPDH_REQUIRE(z_min < z_max, "quantization: z_min=", z_min, " must be below z_max=", z_max);
  SPDH_REQUIRE(num_slices >= 1, "quantization: num_slices must be >= 1");
  SPDH_REQUIRE(num_slices == static_cast<int>(std::lround((z_max - z_min) / delta_z)),
               "quantization: num_slices=", num_slices, " inconsistent with (z_max-z_min)/delta_z");
}

ZQuantization make_quantization(double z_min, double z_max, double delta_z) {
  SPDH_REQUIRE(delta_z > 0.0, "make_quantization: delta_z must be positive (got ", delta_z, ")");
  SPDH_REQUIRE(z_min < z_max, "make_quantization: z_min=", z_min, " must be below z_max=", z_max);
  ZQuantization q;
  q.z_min = z_min;
  q.z_max = z_max;
  q.delta_z = delta_z;
  q.num_slices = static_cast<int>(std::lround((z_max - z_min) / delta_z));
  SPDH_REQUIRE(q.num_slices >= 1, "make_quantization: empty depth range");
  return q;
}

void JointSet3D::validate() const {
  SPDH_REQUIRE(!positions_mm.empty(), "joint set: must contain at least one joint");
  SPDH_REQUIRE(names.size() == positions_mm.size() && visible.size() == positions_mm.size(),
               "joint set: names/positions/visibility sizes differ");
}

void SpdhStack::validate() const {
  quant.validate();
  SPDH_REQUIRE(sigma_m > 0.0, "stack: sigma_m must be positive");
  SPDH_REQUIRE(width > 0 && uv_height > 0, "stack: empty raster");
  const size_t n = uv_maps.size();
  SPDH_REQUIRE(n > 0, "stack: no joints");
  SPDH_REQUIRE(uz_maps.size() == n && joint_names.size() == n && visible.size() == n,
               "stack: per-joint arrays disagree on joint count");
  for (size_t j = 0; j < n; ++j) {
    SPDH_REQUIRE(uv_maps[j].size() == static_cast<size_t>(uv_height) * width,
                 "stack: uv map ", j, " has wrong size");
    SPDH_REQUIRE(uz_maps[j].size() == static_cast<size_t>(quant.num_slices) * width,
                 "stack: uz map ", j, " height must equal num_slices");
    for (float v : uv_maps[j])
      SPDH_REQUIRE(v >= 0.0f && std::isfinite(v), "stack: uv map ", j, " has invalid value");
    for (float v : uz_maps[j])
      SPDH_REQUIRE(v >= 0.0f && std::isfinite(v), "stack: uz map ", j, " has invalid value");
  }
}

bool joint_encodable(const Eigen::Vector3d& p_mm, std::uint8_t input_visible,
                     const PinholeIntrinsics& K, const ZQuantization& quant) {
  if (!input_visible) return false;
  if (!p_mm.allFinite()) return false;
  if (p_mm.z() <= 0.0 || !quant.contains(p_mm.z())) return false;
  const double u = K.fx * p_mm.x() / p_mm.z() + K.cx;
  const double v = K.fy * p_mm.y() / p_mm.z() + K.cy;
  return u >= 0.0 && u < K.width && v >= 0.0 && v < K.height;
}

namespace {

void require_finite_visible(const JointSet3D& joints) {
  for (size_t j = 0; j < joints.size(); ++j)
    SPDH_REQUIRE(!joints.visible[j] || joints.positions_mm[j].allFinite(),
                 "encode: joint ", joints.names[j], " has non-finite coordinates");
}

// Smallest squared distance from (pu,pv) to an in-image pixel center inside
// the evaluation window; bit-identical to the fill pass expressions.
double uv_min_d2(int height, int width, double pu, double pv, double sigma_px) {
  const double r = detail::kGaussWindowSigmas * sigma_px;
  int v0 = static_cast<int>(std::ceil(pv - r)), v1 = static_cast<int>(std::floor(pv + r));
  int u0 = static_cast<int>(std::ceil(pu - r)), u1 = static_cast<int>(std::floor(pu + r));
  if (v0 < 0) v0 = 0;
  if (v1 >= height) v1 = height - 1;
  if (u0 < 0) u0 = 0;
  if (u1 >= width) u1 = width - 1;
  double best = std::numeric_limits<double>::infinity();
  for (int v = v0; v <= v1; ++v) {
    const double dy = v - pv;
    for (int u = u0; u <= u1; ++u) {
      const double dx = u - pu;
      const double d2 = dx * dx + dy * dy;
      if (d2 < best) best = d2;
    }
  }
  return best;
}

double uz_min_d2(const ZQuantization& quant, int width, double xj, double zj, double sigma_m,
                 double fx, double cx) {
  const double r = detail::kGaussWindowSigmas * sigma_m;
  int i0 = static_cast<int>(std::ceil((zj - r - quant.z_min) / quant.delta_z));
  int i1 = static_cast<int>(std::floor((zj + r - quant.z_min) / quant.delta_z));
  if (i0 < 0) i0 = 0;
  if (i1 >= quant.num_slices) i1 = quant.num_slices - 1;
  double best = std::numeric_limits<double>::infinity();
  for (int i = i0; i <= i1; ++i) {
    const double slice_z = quant.slice_center(i);
    const double dz = slice_z - zj;
    int u0 = static_cast<int>(std::ceil(cx + fx * (xj - r) / slice_z));
    int u1 = static_cast<int>(std::floor(cx + fx * (xj + r) / slice_z));
    if (u0 < 0) u0 = 0;
    if (u1 >= width) u1 = width - 1;
    for (int u = u0; u <= u1; ++u) {
      const double dx = (u - cx) * slice_z / fx - xj;
      const double d2 = dx * dx + dz * dz;
      if (d2 < best) best = d2;
    }
  }
  return best;
}

}  // namespace

namespace detail {

void fill_uv_map(float* map, int height, int width, double pu, double pv, double sigma_px,
                 bool pdf_prefactor) {
  const double r = kGaussWindowSigmas * sigma_px;
  double d2_shift = 0.0;
  double amp = 1.0;
  if (pdf_prefactor) {
    amp = 1.0 / (2.0 * M_PI * sigma_px);
  } else {
    d2_shift = uv_min_d2(height, width, pu, pv, sigma_px);
    if (!std::isfinite(d2_shift)) return;  // window missed the raster entirely
  }
  int v0 = static_cast<int>(std::ceil(pv - r)), v1 = static_cast<int>(std::floor(pv + r));
  if (v0 < 0) v0 = 0;
  if (v1 >= height) v1 = height - 1;
  const double inv2s2 = 1.0 / (2.0 * sigma_px * sigma_px);
  for (int v = v0; v <= v1; ++v) {
    const double dy = v - pv;
    int u0 = static_cast<int>(std::ceil(pu - r)), u1 = static_cast<int>(std::floor(pu + r));
    if (u0 < 0) u0 = 0;
    if (u1 >= width) u1 = width - 1;
    float* row = map + static_cast<size_t>(v) * width;
    for (int u = u0; u <= u1; ++u) {
      const double dx = u - pu;
      const double d2 = dx * dx + dy * dy;
      row[u] = static_cast<float>(amp * std::exp(-(d2 - d2_shift) * inv2s2));
    }
  }
}

void fill_uz_map(float* map, const ZQuantization& quant, int width, double xj, double zj,
                 double sigma_m, double fx, double cx, bool pdf_prefactor) {
  const double r = kGaussWindowSigmas * sigma_m;
  double d2_shift = 0.0;
  double amp = 1.0;
  if (pdf_prefactor) {
    amp = 1.0 / (2.0 * M_PI * sigma_m);
  } else {
    d2_shift = uz_min_d2(quant, width, xj, zj, sigma_m, fx, cx);
    if (!std::isfinite(d2_shift)) return;
  }
  int i0 = static_cast<int>(std::ceil((zj - r - quant.z_min) / quant.delta_z));
  int i1 = static_cast<int>(std::floor((zj + r - quant.z_min) / quant.delta_z));
  if (i0 < 0) i0 = 0;
  if (i1 >= quant.num_slices) i1 = quant.num_slices - 1;
  const double inv2s2 = 1.0 / (2.0 * sigma_m * sigma_m);
  for (int i = i0; i <= i1; ++i) {
    const double slice_z = quant.slice_center(i);
    const double dz = slice_z - zj;
    int u0 = static_cast<int>(std::ceil(cx + fx * (xj - r) / slice_z));
    int u1 = static_cast<int>(std::floor(cx + fx * (xj + r) / slice_z));
    if (u0 < 0) u0 = 0;
    if (u1 >= width) u1 = width - 1;
    float* row = map + static_cast<size_t>(i) * width;
    for (int u = u0; u <= u1; ++u) {
      const double dx = (u - cx) * slice_z / fx - xj;
      const double d2 = dx * dx + dz * dz;
      row[u] = static_cast<float>(amp * std::exp(-(d2 - d2_shift) * inv2s2));
    }
  }
}

}  // namespace detail

std::vector<std::vector<float>> encode_uv(const JointSet3D& joints, const PinholeIntrinsics& K,
                                          double sigma_m, const ZQuantization& quant,
                                          int height, int width, const EncodeOptions& opts,
                                          std::vector<std::uint8_t>* encodable_out) {
  joints.validate();
  quant.validate();
  SPDH_REQUIRE(sigma_m > 0.0, "encode_uv: sigma_m must be positive");
  SPDH_REQUIRE(height > 0 && width > 0, "encode_uv: empty raster");
  require_finite_visible(joints);
  const size_t n = joints.size();
  std::vector<std::vector<float>> maps(n);
  std::vector<std::uint8_t> enc(n, 0);
  for (size_t j = 0; j < n; ++j) maps[j].assign(static_cast<size_t>(height) * width, 0.0f);
#pragma omp parallel for schedule(dynamic)
  for (long long j = 0; j < static_cast<long long>(n); ++j) {
    const Eigen::Vector3d& p = joints.positions_mm[j];
    if (!joint_encodable(p, joints.visible[j], K, quant)) continue;
    enc[j] = 1;
    const double pu = K.fx * p.x() / p.z() + K.cx;
    const double pv = K.fy * p.y() / p.z() + K.cy;
    const double sigma_px = sigma_uv_px(sigma_m, K.fx, p.z());
    detail::fill_uv_map(maps[j].data(), height, width, pu, pv, sigma_px, opts.pdf_prefactor);
  }
  if (encodable_out) *encodable_out = enc;
  return maps;
}

std::vector<std::vector<float>> encode_uz(const JointSet3D& joints, const PinholeIntrinsics& K,
                                          double sigma_m, const ZQuantization& quant, int width,
                                          const EncodeOptions& opts,
                                          std::vector<std::uint8_t>* encodable_out) {
  joints.validate();
  quant.validate();
  SPDH_REQUIRE(sigma_m > 0.0, "encode_uz: sigma_m must be positive");
  SPDH_REQUIRE(width > 0, "encode_uz: empty raster");
  require_finite_visible(joints);
  const size_t n = joints.size();
  std::vector<std::vector<float>> maps(n);
  std::vector<std::uint8_t> enc(n, 0);
  for (size_t j = 0; j < n; ++j)
    maps[j].assign(static_cast<size_t>(quant.num_slices) * width, 0.0f);
#pragma omp parallel for schedule(dynamic)
  for (long long j = 0; j < static_cast<long long>(n); ++j) {
    const Eigen::Vector3d& p = joints.positions_mm[j];
    if (!joint_encodable(p, joints.visible[j], K, quant)) continue;
    enc[j] = 1;
    detail::fill_uz_map(maps[j].data(), quant, width, p.x(), p.z(), sigma_m, K.fx, K.cx,
                        opts.pdf_prefactor);
  }
  if (encodable_out) *encodable_out = enc;
  return maps;
}

SpdhStack encode(const JointSet3D& joints, const PinholeIntrinsics& K, double sigma_m,
                 const ZQuantization& quant, int height, int width, const EncodeOptions& opts) {
  SPDH_REQUIRE(K.width == width && K.height == height,
               "encode: intrinsics raster ", K.width, "x", K.height,
               " does not match requested shape ", width, "x", height);
  SpdhStack stack;
  stack.width = width;
  stack.uv_height = height;
  stack.quant = quant;
  stack.sigma_m = sigma_m;
  stack.joint_names = joints.names;
  stack.uv_maps = encode_uv(joints, K, sigma_m, quant, height, width, opts, &stack.visible);
  std::vector<std::uint8_t> enc_uz;
  stack.uz_maps = encode_uz(joints, K, sigma_m, quant, width, opts, &enc_uz);
  return stack;
}

namespace {

struct Peak {
  float value = 0.0f;
  size_t index = 0;
};

// Lowest linear index wins ties.
Peak argmax(const std::vector<float>& map) {
  Peak p;
  p.value = map.empty() ? 0.0f : map[0];
  for (size_t i = 1; i < map.size(); ++i) {
    if (map[i] > p.value) {
      p.value = map[i];
      p.index = i;
    }
  }
  return p;
}

// Vertex of the parabola through (x=-1,ym) (x=0,y0) (x=1,yp), in stencil
// units relative to x=0. Returns 0 when the stencil is unusable.
double log_parabola_offset(float vm, float v0, float vp) {
  if (!(vm > 0.0f) || !(v0 > 0.0f) || !(vp > 0.0f)) return 0.0;
  const double ym = std::log(static_cast<double>(vm));
  const double y0 = std::log(static_cast<double>(v0));
  const double yp = std::log(static_cast<double>(vp));
  const double den = ym - 2.0 * y0 + yp;
  if (!(den < -1e-12)) return 0.0;  // not concave: no peak to refine
  return 0.5 * (ym - yp) / den;
}

// Snap a refinement offset to 1/4096 steps: bit-level perturbations of the
// map values (e.g. rescaling) then cannot flip decoded output bits.
double snap_offset(double t, double lo, double hi) {
  if (t < lo) t = lo;
  if (t > hi) t = hi;
  return std::round(t * 4096.0) / 4096.0;
}

}  // namespace

namespace detail {

void decode_joint(const SpdhStack& stack, const PinholeIntrinsics& K, const DecodeOptions& opts,
                  size_t j, JointSet3D& out) {
  const int w = stack.width;
  const int h = stack.uv_height;
  const ZQuantization& q = stack.quant;
  const std::vector<float>& uv = stack.uv_maps[j];
  const std::vector<float>& uz = stack.uz_maps[j];
  const Peak puv = argmax(uv);
  const Peak puz = argmax(uz);

  const int u0 = static_cast<int>(puv.index % w);
  const int v0 = static_cast<int>(puv.index / w);
  double u_hat = u0, v_hat = v0;
  if (opts.uv_refine == DecodeOptions::Refine::kQuadratic && w >= 3 && h >= 3) {
    const int uc = std::clamp(u0, 1, w - 2);
    const int vc = std::clamp(v0, 1, h - 2);
    const size_t c = static_cast<size_t>(v0) * w + uc;
    const double du = log_parabola_offset(uv[c - 1], uv[c], uv[c + 1]) + (uc - u0);
    const size_t r = static_cast<size_t>(vc) * w + u0;
    const double dv = log_parabola_offset(uv[r - w], uv[r], uv[r + w]) + (vc - v0);
    u_hat = u0 + snap_offset(du, -0.5, 0.5);
    v_hat = v0 + snap_offset(dv, -0.5, 0.5);
  }

  const int zi = static_cast<int>(puz.index / w);
  const int zu = static_cast<int>(puz.index % w);
  double z_hat = q.slice_center(zi);
  if (opts.uz_refine == DecodeOptions::Refine::kQuadratic && q.num_slices >= 3) {
    const int ic = std::clamp(zi, 1, q.num_slices - 2);
    const size_t c = static_cast<size_t>(ic) * w + zu;
    const double toff = log_parabola_offset(uz[c - w], uz[c], uz[c + w]);
    // vertex in slice units relative to the argmax slice
    const double t = (ic - zi) + toff;
    z_hat = q.slice_center(zi) + snap_offset(t, -0.5, 0.5) * q.delta_z;
  }

  bool flagged = false;
  if (u_hat < 0.0) { u_hat = 0.0; flagged = true; }
  if (u_hat > w - 1.0) { u_hat = w - 1.0; flagged = true; }
  if (v_hat < 0.0) { v_hat = 0.0; flagged = true; }
  if (v_hat > h - 1.0) { v_hat = h - 1.0; flagged = true; }

  out.positions_mm[j] = Eigen::Vector3d((u_hat - K.cx) * z_hat / K.fx,
                                        (v_hat - K.cy) * z_hat / K.fy, z_hat);
  const float peak = std::min(puv.value, puz.value);
  out.visible[j] = (!flagged && peak >= opts.peak_threshold) ? 1 : 0;
}

}  // namespace detail

JointSet3D decode(const SpdhStack& stack, const PinholeIntrinsics& K, const DecodeOptions& opts) {
  stack.validate();
  SPDH_REQUIRE(K.width == stack.width && K.height == stack.uv_height,
               "decode: stack raster ", stack.width, "x", stack.uv_height,
               " does not match intrinsics ", K.width, "x", K.height);
  const size_t n = stack.joints();
  JointSet3D out;
  out.names = stack.joint_names;
  out.positions_mm.assign(n, Eigen::Vector3d::Zero());
  out.visible.assign(n, 0);
#pragma omp parallel for schedule(dynamic)
  for (long long j = 0; j < static_cast<long long>(n); ++j)
    detail::decode_joint(stack, K, opts, static_cast<size_t>(j), out);
  return out;
}

// ---------------------------------------------------------------------------
// serialization

namespace {

constexpr char kStackMagic[8] = {'S', 'P', 'D', 'H', 'S', 'T', 'C', 'K'};

std::vector<std::uint16_t> quantize_u16(const std::vector<std::vector<float>>& maps) {
  std::vector<std::uint16_t> out;
  if (maps.empty()) return out;
  out.reserve(maps.size() * maps[0].size());
  for (const auto& m : maps)
    for (float v : m) {
      double q = std::round(static_cast<double>(v) * 65535.0);
      if (q < 0.0) q = 0.0;
      if (q > 65535.0) q = 65535.0;
      out.push_back(static_cast<std::uint16_t>(q));
    }
  return out;
}

}  // namespace

void save_stack(const std::filesystem::path& base, const SpdhStack& stack,
                const PinholeIntrinsics* camera, bool with_png) {
  stack.validate();
  const size_t n = stack.joints();
  {
    std::ofstream out(base.string() + ".spdh", std::ios::binary);
    SPDH_REQUIRE(out.good(), "cannot write stack: ", base.string(), ".spdh");
    out.write(kStackMagic, 8);
    bin::write_le_u32(out, static_cast<std::uint32_t>(n));
    bin::write_le_u32(out, static_cast<std::uint32_t>(stack.uv_height));
    bin::write_le_u32(out, static_cast<std::uint32_t>(stack.width));
    bin::write_le_u32(out, static_cast<std::uint32_t>(stack.quant.num_slices));
    for (const auto& m : stack.uv_maps) bin::write_le_f32(out, m);
    for (const auto& m : stack.uz_maps) bin::write_le_f32(out, m);
    SPDH_REQUIRE(out.good(), "write failed: ", base.string(), ".spdh");
  }
  nlohmann::json j;
  j["n"] = n;
  j["uv_height"] = stack.uv_height;
  j["width"] = stack.width;
  j["quant"] = {{"z_min", stack.quant.z_min},
                {"z_max", stack.quant.z_max},
                {"delta_z", stack.quant.delta_z},
                {"num_slices", stack.quant.num_slices}};
  j["sigma_m"] = stack.sigma_m;
  j["joint_names"] = stack.joint_names;
  j["visible"] = std::vector<int>(stack.visible.begin(), stack.visible.end());
  if (camera)
    j["camera"] = {{"fx", camera->fx}, {"fy", camera->fy}, {"cx", camera->cx},
                   {"cy", camera->cy}, {"width", camera->width}, {"height", camera->height}};
  std::ofstream side(base.string() + ".json");
  SPDH_REQUIRE(side.good(), "cannot write sidecar: ", base.string(), ".json");
  side << j.dump(2) << "\n";

  if (with_png) {
    write_png_gray16(base.string() + "_uv.png", quantize_u16(stack.uv_maps), stack.width,
                     static_cast<int>(n) * stack.uv_height);
    write_png_gray16(base.string() + "_uz.png", quantize_u16(stack.uz_maps), stack.width,
                     static_cast<int>(n) * stack.quant.num_slices);
  }
}

SpdhStack load_stack(const std::filesystem::path& path_or_base, PinholeIntrinsics* camera_out) {
  std::filesystem::path base = path_or_base;
  if (base.extension() == ".spdh") base.replace_extension();
  const std::filesystem::path side_path = base.string() + ".json";
  std::ifstream side(side_path);
  SPDH_REQUIRE(side.good(), "cannot open stack sidecar: ", side_path.string());
  nlohmann::json j;
  try {
    side >> j;
  } catch (const std::exception& e) {
    throw Error("sidecar parse error in " + side_path.string() + ": " + e.what());
  }

  SpdhStack stack;
  try {
    stack.width = j.at("width").get<int>();
    stack.uv_height = j.at("uv_height").get<int>();
    const auto& q = j.at("quant");
    stack.quant.z_min = q.at("z_min").get<double>();
    stack.quant.z_max = q.at("z_max").get<double>();
    stack.quant.delta_z = q.at("delta_z").get<double>();
    stack.quant.num_slices = q.at("num_slices").get<int>();
    stack.sigma_m = j.at("sigma_m").get<double>();
    stack.joint_names = j.at("joint_names").get<std::vector<std::string>>();
    if (j.contains("visible")) {
      for (int v : j.at("visible").get<std::vector<int>>())
        stack.visible.push_back(v ? 1 : 0);
    }
    if (camera_out && j.contains("camera")) {
      const auto& c = j.at("camera");
      camera_out->fx = c.at("fx").get<double>();
      camera_out->fy = c.at("fy").get<double>();
      camera_out->cx = c.at("cx").get<double>();
      camera_out->cy = c.at("cy").get<double>();
      camera_out->width = c.at("width").get<int>();
      camera_out->height = c.at("height").get<int>();
    }
  } catch (const std::exception& e) {
    throw Error("sidecar schema error in " + side_path.string() + ": " + e.what());
  }
  const size_t n = j.at("n").get<size_t>();
  if (stack.visible.size() != n) stack.visible.assign(n, 1);

  const std::filesystem::path raw_path = base.string() + ".spdh";
  std::ifstream in(raw_path, std::ios::binary);
  SPDH_REQUIRE(in.good(), "cannot open stack: ", raw_path.string());
  char magic[8];
  in.read(magic, 8);
  SPDH_REQUIRE(in.good() && std::memcmp(magic, kStackMagic, 8) == 0,
               raw_path.string(), ": not a stack file (bad magic)");
  const std::uint32_t fn = bin::read_le_u32(in);
  const std::uint32_t fh = bin::read_le_u32(in);
  const std::uint32_t fw = bin::read_le_u32(in);
  const std::uint32_t fs = bin::read_le_u32(in);
  SPDH_REQUIRE(fn == n && fh == static_cast<std::uint32_t>(stack.uv_height) &&
                   fw == static_cast<std::uint32_t>(stack.width) &&
                   fs == static_cast<std::uint32_t>(stack.quant.num_slices),
               raw_path.string(), ": header disagrees with sidecar");
  stack.uv_maps.assign(n, std::vector<float>(static_cast<size_t>(stack.uv_height) * stack.width));
  stack.uz_maps.assign(
      n, std::vector<float>(static_cast<size_t>(stack.quant.num_slices) * stack.width));
  for (auto& m : stack.uv_maps) bin::read_le_f32(in, m);
  for (auto& m : stack.uz_maps) bin::read_le_f32(in, m);
  SPDH_REQUIRE(in.good(), raw_path.string(), ": truncated stack file");
  stack.validate();
  return stack;
}

}  // namespace spdh
