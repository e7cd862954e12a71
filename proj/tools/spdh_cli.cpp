#include <omp.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "spdh/augment.hpp"
#include "spdh/codec.hpp"
#include "spdh/config.hpp"
#include "spdh/dataset_io.hpp"
#include "spdh/geometry.hpp"
#include "spdh/image_io.hpp"
#include "spdh/log.hpp"
#include "spdh/metrics.hpp"
#include "spdh/robot_model.hpp"
#include "spdh/synth.hpp"
#include "spdh/viz.hpp"

namespace fs = std::filesystem;
using namespace spdh;

namespace {

fs::path data_dir() {
  return fs::path(SPDH_DATA_DIR);
}

fs::path resolve_camera(const RunConfig& cfg) {
  if (!cfg.camera.empty()) return cfg.camera;
  return data_dir() / "cameras" / "desk_tof_512x424.json";
}

void apply_jobs(const RunConfig& cfg) {
  if (cfg.jobs > 0) omp_set_num_threads(cfg.jobs);
}

void dump_effective_config(const RunConfig& cfg, const fs::path& out) {
  fs::path dir = out;
  if (dir.has_extension()) dir = dir.parent_path();
  if (dir.empty()) dir = ".";
  fs::create_directories(dir);
  save_config(dir / "effective_config.toml", cfg);
}

// Flag overrides shared by all subcommands. Values latch into `cfg` after
// parsing (flags win over --config).
struct CommonFlags {
  std::string config_path, camera, shape, thresholds;
  double z_min = -1, z_max = -1, delta_z = -1, sigma_m = -1, peak_threshold = -1;
  long seed = -1;
  int jobs = -1;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "run-config TOML");
    app->add_option("--camera", camera, "camera intrinsics JSON");
    app->add_option("--z-min", z_min, "depth range lower bound (mm)");
    app->add_option("--z-max", z_max, "depth range upper bound (mm)");
    app->add_option("--delta-z", delta_z, "depth slice thickness (mm)");
    app->add_option("--sigma-m", sigma_m, "metric Gaussian stddev (mm)");
    app->add_option("--shape", shape, "encoding raster HxW, e.g. 192x384");
    app->add_option("--thresholds", thresholds, "mAP thresholds mm, comma separated");
    app->add_option("--seed", seed, "RNG seed");
    app->add_option("--jobs", jobs, "worker threads (0 = all cores)");
    app->add_option("--peak-threshold", peak_threshold, "decode visibility threshold");
  }

  RunConfig build() const {
    RunConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    if (!camera.empty()) cfg.camera = camera;
    if (z_min >= 0) cfg.z_min = z_min;
    if (z_max >= 0) cfg.z_max = z_max;
    if (delta_z >= 0) cfg.delta_z = delta_z;
    if (sigma_m >= 0) cfg.sigma_m = sigma_m;
    if (peak_threshold >= 0) cfg.peak_threshold = peak_threshold;
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    if (jobs >= 0) cfg.jobs = jobs;
    if (!shape.empty()) {
      const size_t x = shape.find('x');
      SPDH_REQUIRE(x != std::string::npos, "--shape must be HxW, got '", shape, "'");
      cfg.shape_h = std::stoi(shape.substr(0, x));
      cfg.shape_w = std::stoi(shape.substr(x + 1));
    }
    if (!thresholds.empty()) {
      cfg.thresholds_mm.clear();
      std::stringstream ss(thresholds);
      std::string tok;
      while (std::getline(ss, tok, ',')) cfg.thresholds_mm.push_back(std::stod(tok));
    }
    cfg.validate();
    return cfg;
  }
};

// ---------------------------------------------------------------------- synth

int cmd_synth(const RunConfig& cfg, const std::string& chain_flag, const fs::path& out) {
  apply_jobs(cfg);
  const fs::path chain_path =
      chain_flag.empty() ? bundled_chain_path(data_dir()) : fs::path(chain_flag);
  const RobotChain chain = load_chain(chain_path);
  const PinholeIntrinsics camera = load_camera_json(resolve_camera(cfg));

  SceneSpec scene;
  scene.chain = chain;
  scene.camera = camera;
  scene.noise = {cfg.noise_sigma_mm, cfg.dropout};
  scene.ground_plane_y_mm = -800.0;
  scene.table = AxisBox{{0.0, -60.0, 0.0}, {700.0, 60.0, 450.0}};

  fs::create_directories(out);
  save_chain(out / "chain.json", chain);

  std::vector<SequenceInfo> infos;
  for (int s = 0; s < cfg.sequences; ++s) {
    char seq_name[32];
    std::snprintf(seq_name, sizeof(seq_name), "seq_%03d", s);
    SequenceSpec seq;
    seq.num_frames = cfg.frames;
    seq.seed = splitmix64(cfg.seed ^ (0x5eed0000ULL + s));
    seq.jitter_diameter_mm = cfg.jitter_diameter_mm;
    Rng script_rng(seq.seed, 0x5c17);
    seq.script = scripted_pick_n_place(chain, cfg.motions, script_rng);
    generate_sequence(scene, seq, out / seq_name);
    infos.push_back({seq_name, seq_name, cfg.frames});
    log::info("synth: wrote %s (%d frames)", seq_name, cfg.frames);
  }
  write_manifest(out, "chain.json", static_cast<int>(chain.size()), infos);
  dump_effective_config(cfg, out);
  std::printf("synth: %d sequence(s) x %d frames -> %s\n", cfg.sequences, cfg.frames,
              out.string().c_str());
  return 0;
}

// --------------------------------------------------------------------- encode

int cmd_encode(const RunConfig& cfg, const fs::path& dataset_root, const fs::path& out,
               bool with_png) {
  apply_jobs(cfg);
  const Dataset ds = load_dataset(dataset_root);
  const ZQuantization quant = cfg.quantization();
  const EncodeOptions opts = cfg.encode_options();
  fs::create_directories(out);
  for (const auto& seq : ds.sequences) fs::create_directories(out / seq.dir);

  const long long total = static_cast<long long>(ds.frames.size());
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < total; ++i) {
    const FrameRecord& frame = ds.frames[i];
    const PinholeIntrinsics K = frame.camera.rescaled(cfg.shape_w, cfg.shape_h);
    const SpdhStack stack =
        encode(frame.joints, K, cfg.sigma_m, quant, cfg.shape_h, cfg.shape_w, opts);
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%06ld", frame.frame_id);
    save_stack(out / frame.sequence_id / name, stack, &K, with_png);
  }
  dump_effective_config(cfg, out);
  std::printf("encode: %lld stack(s) -> %s\n", total, out.string().c_str());
  return 0;
}

// --------------------------------------------------------------------- decode

nlohmann::json joints_to_json(const JointSet3D& joints) {
  nlohmann::json arr = nlohmann::json::array();
  for (size_t j = 0; j < joints.size(); ++j) {
    const auto& p = joints.positions_mm[j];
    arr.push_back({{"name", joints.names[j]},
                   {"xyz_mm", {p.x(), p.y(), p.z()}},
                   {"visible", joints.visible[j] != 0}});
  }
  return arr;
}

int cmd_decode(const RunConfig& cfg, const fs::path& input, const fs::path& out,
               const std::string& baseline_dataset) {
  apply_jobs(cfg);
  struct Pred {
    std::string sequence_id;
    long frame_id;
    JointSet3D joints;
  };
  std::vector<Pred> preds;
  int missing = 0;

  if (!baseline_dataset.empty()) {
    // depth-sampling competitor: ground-truth 2D joints + depth lookup
    const Dataset ds = load_dataset(baseline_dataset);
    preds.resize(ds.frames.size());
    const long long total = static_cast<long long>(ds.frames.size());
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < total; ++i) {
      const FrameRecord& frame = ds.frames[i];
      const DepthImage depth = load_frame_depth(frame);
      JointSet3D result;
      result.names = frame.joints.names;
      result.positions_mm.assign(frame.joints.size(), Eigen::Vector3d::Zero());
      result.visible.assign(frame.joints.size(), 0);
      for (size_t j = 0; j < frame.joints.size(); ++j) {
        const Eigen::Vector3d& p = frame.joints.positions_mm[j];
        if (!(p.z() > 0.0)) continue;
        const Eigen::Vector2d uv = project(p, frame.camera);
        const long iu = std::lround(uv.x()), iv = std::lround(uv.y());
        if (iu < 0 || iu >= depth.width || iv < 0 || iv >= depth.height) continue;
        const JointSet3D one = baseline_2d_to_3d({uv}, {frame.joints.names[j]}, depth,
                                                 frame.camera, cfg.baseline_window);
        result.positions_mm[j] = one.positions_mm[0];
        result.visible[j] = one.visible[0];
      }
      preds[i] = {frame.sequence_id, frame.frame_id, std::move(result)};
    }
  } else {
    // collect stack sidecars, sorted for a deterministic output order
    std::vector<fs::path> sidecars;
    for (const auto& entry : fs::recursive_directory_iterator(input)) {
      if (!entry.is_regular_file()) continue;
      const fs::path p = entry.path();
      if (p.extension() == ".json" && p.filename().string().rfind("frame_", 0) == 0)
        sidecars.push_back(p);
    }
    std::sort(sidecars.begin(), sidecars.end());
    SPDH_REQUIRE(!sidecars.empty(), "decode: no stacks found under ", input.string());

    preds.resize(sidecars.size());
    std::vector<std::string> errors(sidecars.size());
    const long long total = static_cast<long long>(sidecars.size());
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < total; ++i) {
      fs::path base = sidecars[i];
      base.replace_extension();
      if (!fs::exists(base.string() + ".spdh")) {
        errors[i] = "missing stack file: " + base.string() + ".spdh";
        continue;
      }
      PinholeIntrinsics K;
      bool have_cam = false;
      try {
        SpdhStack stack = load_stack(base, &K);
        have_cam = K.width > 0;
        if (!have_cam) {
          K = load_camera_json(resolve_camera(cfg)).rescaled(stack.width, stack.uv_height);
        }
        const JointSet3D joints = decode(stack, K, cfg.decode_options());
        const std::string seq =
            base.parent_path() == input ? "seq_000" : base.parent_path().filename().string();
        const long frame_id = std::stol(base.filename().string().substr(6));
        preds[i] = {seq, frame_id, joints};
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
    for (const auto& e : errors)
      if (!e.empty()) {
        std::fprintf(stderr, "decode error: %s\n", e.c_str());
        ++missing;
      }
    if (missing > 0) {
      std::erase_if(preds, [](const Pred& p) { return p.joints.positions_mm.empty(); });
    }
  }

  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  std::ofstream of(out);
  SPDH_REQUIRE(of.good(), "cannot write predictions: ", out.string());
  for (const Pred& p : preds) {
    nlohmann::json rec;
    rec["sequence_id"] = p.sequence_id;
    rec["frame_id"] = p.frame_id;
    rec["joints"] = joints_to_json(p.joints);
    of << rec.dump() << "\n";
  }
  dump_effective_config(cfg, out);
  std::printf("decode: %zu prediction(s) -> %s\n", preds.size(), out.string().c_str());
  return missing > 0 ? 1 : 0;
}

// ----------------------------------------------------------------------- eval

std::map<std::string, JointSet3D> load_predictions(const fs::path& path) {
  std::ifstream in(path);
  SPDH_REQUIRE(in.good(), "cannot open predictions: ", path.string());
  std::map<std::string, JointSet3D> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
      throw Error("predictions line " + std::to_string(line_no) + ": " + e.what());
    }
    JointSet3D joints;
    for (const auto& joint : rec.at("joints")) {
      joints.names.push_back(joint.at("name").get<std::string>());
      const auto& p = joint.at("xyz_mm");
      joints.positions_mm.emplace_back(p[0].get<double>(), p[1].get<double>(),
                                       p[2].get<double>());
      joints.visible.push_back(joint.at("visible").get<bool>() ? 1 : 0);
    }
    const std::string key = rec.value("sequence_id", std::string("seq_000")) + "/" +
                            std::to_string(rec.at("frame_id").get<long>());
    out[key] = std::move(joints);
  }
  return out;
}

PoseMetricsReport eval_one(const Dataset& ds, const std::map<std::string, JointSet3D>& preds,
                           const RunConfig& cfg) {
  std::vector<JointSet3D> pred_list, gt_list;
  for (const FrameRecord& frame : ds.frames) {
    const std::string key = frame.sequence_id + "/" + std::to_string(frame.frame_id);
    auto it = preds.find(key);
    if (it == preds.end()) continue;
    pred_list.push_back(it->second);
    gt_list.push_back(frame.joints);
  }
  SPDH_REQUIRE(!gt_list.empty(), "eval: no frame ids in common between predictions and dataset");
  for (const auto& [key, joints] : preds) {
    (void)joints;
    const auto slash = key.find('/');
    bool known = false;
    for (const FrameRecord& frame : ds.frames)
      if (frame.sequence_id == key.substr(0, slash) &&
          std::to_string(frame.frame_id) == key.substr(slash + 1)) {
        known = true;
        break;
      }
    SPDH_REQUIRE(known, "eval: prediction for unknown frame '", key, "'");
  }
  return evaluate_run(pred_list, gt_list, cfg.eval_config());
}

int cmd_eval(const RunConfig& cfg, const fs::path& dataset_root, const fs::path& pred_path,
             const std::string& baseline_path, const fs::path& out) {
  apply_jobs(cfg);
  const Dataset ds = load_dataset(dataset_root);
  std::vector<std::pair<std::string, PoseMetricsReport>> rows;
  rows.emplace_back("spdh", eval_one(ds, load_predictions(pred_path), cfg));
  if (!baseline_path.empty())
    rows.emplace_back("baseline", eval_one(ds, load_predictions(baseline_path), cfg));

  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  save_report_json(out, rows.front().second);
  if (rows.size() > 1) {
    fs::path bpath = out;
    bpath.replace_filename(out.stem().string() + "_baseline" + out.extension().string());
    save_report_json(bpath, rows[1].second);
  }
  dump_effective_config(cfg, out);
  std::fputs(format_report_table(rows).c_str(), stdout);
  return 0;
}

// ------------------------------------------------------------------------ viz

int cmd_viz(const RunConfig& cfg, const fs::path& dataset_root, const std::string& stacks_dir,
            const std::string& sequence, long frame_id, const fs::path& out) {
  const Dataset ds = load_dataset(dataset_root);
  const std::string seq = sequence.empty() ? ds.sequences.front().id : sequence;
  const FrameRecord* frame = nullptr;
  for (const auto& f : ds.frames)
    if (f.sequence_id == seq && (frame_id < 0 ? frame == nullptr : f.frame_id == frame_id))
      frame = &f;
  SPDH_REQUIRE(frame, "viz: frame not found (sequence '", seq, "', frame ", frame_id, ")");

  fs::create_directories(out);
  const DepthImage depth = load_frame_depth(*frame);

  RgbImage depth_rgb = colorize_depth(depth, cfg.z_min, cfg.z_max);
  write_png_rgb8(out / "depth.png", depth_rgb);

  NormalizationSpec norm;
  norm.z_lo = cfg.z_min;
  norm.z_hi = cfg.z_max;
  write_png_rgb8(out / "xyz.png", colorize_xyz(normalize_xyz(backproject(depth, frame->camera),
                                                             norm)));

  std::vector<int> parents;
  if (!ds.chain_file.empty()) {
    const RobotChain chain = load_chain(ds.root / ds.chain_file);
    if (chain.size() == frame->joints.size())
      for (const auto& j : chain.joints) parents.push_back(j.parent);
  }
  RgbImage overlay = colorize_depth(depth, cfg.z_min, cfg.z_max);
  draw_skeleton(overlay, frame->joints, frame->camera, parents);
  write_png_rgb8(out / "overlay.png", overlay);

  int heatmaps = 0;
  if (!stacks_dir.empty()) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%06ld", frame->frame_id);
    const SpdhStack stack = load_stack(fs::path(stacks_dir) / seq / name);
    for (size_t j = 0; j < stack.joints(); ++j) {
      char uvname[64], uzname[64];
      std::snprintf(uvname, sizeof(uvname), "uv_%02zu_%s.png", j, stack.joint_names[j].c_str());
      std::snprintf(uzname, sizeof(uzname), "uz_%02zu_%s.png", j, stack.joint_names[j].c_str());
      save_heatmap_png(out / uvname, stack.uv_maps[j], stack.uv_height, stack.width);
      save_heatmap_png(out / uzname, stack.uz_maps[j], stack.quant.num_slices, stack.width);
      heatmaps += 2;
    }
  }
  std::printf("viz: wrote depth/xyz/overlay + %d heatmap page(s) -> %s\n", heatmaps,
              out.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-perspective decoupled heatmaps for depth-based robot pose estimation"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string out, chain, stacks, baseline, sequence, input;
  long frame_id = -1;
  bool with_png = false;

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic depth dataset");
  flags.attach(synth);
  synth->add_option("--chain", chain, "robot chain JSON (default: bundled 16-joint chain)");
  int synth_frames = -1, synth_sequences = -1, synth_motions = -1;
  double noise_sigma = -1, dropout = -1, jitter = -1;
  synth->add_option("--frames", synth_frames, "frames per sequence");
  synth->add_option("--sequences", synth_sequences, "number of sequences");
  synth->add_option("--motions", synth_motions, "pick-n-place motions per sequence");
  synth->add_option("--noise-sigma", noise_sigma, "depth noise stddev (mm)");
  synth->add_option("--dropout", dropout, "depth dropout probability");
  synth->add_option("--jitter", jitter, "camera jitter sphere diameter (mm)");
  synth->add_option("--out", out, "output dataset directory")->required();

  CLI::App* encode = app.add_subcommand("encode", "encode dataset annotations into SPDH stacks");
  flags.attach(encode);
  encode->add_option("input", input, "dataset root")->required();
  encode->add_option("--out", out, "output stacks directory")->required();
  encode->add_flag("--png", with_png, "also write 16-bit PNG heatmap pages");

  CLI::App* decode = app.add_subcommand("decode", "decode SPDH stacks into 3D joint predictions");
  flags.attach(decode);
  decode->add_option("input", input, "stacks directory (or dataset root with --baseline)");
  decode->add_option("--baseline", baseline,
                     "dataset root: emit the depth-sampling baseline predictions instead");
  decode->add_option("--out", out, "predictions JSONL path")->required();

  CLI::App* eval = app.add_subcommand("eval", "evaluate predictions against a dataset");
  flags.attach(eval);
  eval->add_option("dataset", input, "dataset root")->required();
  std::string pred_path;
  eval->add_option("predictions", pred_path, "predictions JSONL")->required();
  eval->add_option("--baseline", baseline, "second predictions JSONL for a comparison table");
  eval->add_option("--out", out, "report JSON path")->required();

  CLI::App* viz = app.add_subcommand("viz", "render depth/XYZ/heatmap/overlay PNGs");
  flags.attach(viz);
  viz->add_option("dataset", input, "dataset root")->required();
  viz->add_option("--stacks", stacks, "stacks directory (adds heatmap pages)");
  viz->add_option("--sequence", sequence, "sequence id (default: first)");
  viz->add_option("--frame", frame_id, "frame id (default: first of the sequence)");
  viz->add_option("--out", out, "output directory")->required();

  CLI::App* convert = app.add_subcommand("convert", "ingest external depth PNGs + joints CSV");
  std::string depth_dir, joints_csv, camera_json;
  convert->add_option("--depth-dir", depth_dir, "directory of 16-bit depth PNGs")->required();
  convert->add_option("--joints-csv", joints_csv, "joints CSV")->required();
  convert->add_option("--camera", camera_json, "camera intrinsics JSON")->required();
  convert->add_option("--out", out, "output dataset root")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (convert->parsed()) {
      convert_external(depth_dir, joints_csv, camera_json, out);
      std::printf("convert: dataset written to %s\n", out.c_str());
      return 0;
    }
    RunConfig cfg = flags.build();
    if (synth->parsed()) {
      if (synth_frames > 0) cfg.frames = synth_frames;
      if (synth_sequences > 0) cfg.sequences = synth_sequences;
      if (synth_motions > 0) cfg.motions = synth_motions;
      if (noise_sigma >= 0) cfg.noise_sigma_mm = noise_sigma;
      if (dropout >= 0) cfg.dropout = dropout;
      if (jitter >= 0) cfg.jitter_diameter_mm = jitter;
      cfg.validate();
      return cmd_synth(cfg, chain, out);
    }
    if (encode->parsed()) return cmd_encode(cfg, input, out, with_png);
    if (decode->parsed()) {
      SPDH_REQUIRE(!input.empty() || !baseline.empty(),
                   "decode: provide a stacks directory or --baseline <dataset>");
      return cmd_decode(cfg, input, out, baseline);
    }
    if (eval->parsed()) return cmd_eval(cfg, input, pred_path, baseline, out);
    if (viz->parsed()) return cmd_viz(cfg, input, stacks, sequence, frame_id, out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
