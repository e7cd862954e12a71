#include "spdh/dataset_io.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "spdh/image_io.hpp"
#include "spdh/tomlmini.hpp"

namespace spdh {

namespace {

RigidTransform pose_from_json(const nlohmann::json& j) {
  RigidTransform t;
  const auto rpy = j.at("rotation_rpy_rad");
  t.rotation = rotation_rpy(rpy[0].get<double>(), rpy[1].get<double>(), rpy[2].get<double>());
  const auto tr = j.at("translation_mm");
  t.translation = {tr[0].get<double>(), tr[1].get<double>(), tr[2].get<double>()};
  return t;
}

PinholeIntrinsics intrinsics_from_json(const nlohmann::json& j) {
  PinholeIntrinsics K;
  K.fx = j.at("fx").get<double>();
  K.fy = j.at("fy").get<double>();
  K.cx = j.at("cx").get<double>();
  K.cy = j.at("cy").get<double>();
  K.width = j.at("width").get<int>();
  K.height = j.at("height").get<int>();
  K.validate();
  return K;
}

FrameRecord parse_annotation_line(const std::string& line, const SequenceInfo& seq,
                                  const std::filesystem::path& seq_dir, int line_no) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const std::exception& e) {
    throw Error("sequence '" + seq.id + "' annotations line " + std::to_string(line_no) + ": " +
                e.what());
  }
  FrameRecord rec;
  rec.sequence_id = seq.id;
  try {
    rec.frame_id = j.at("frame_id").get<long>();
    for (const auto& joint : j.at("joints")) {
      rec.joints.names.push_back(joint.at("name").get<std::string>());
      const auto& p = joint.at("xyz_mm");
      rec.joints.positions_mm.emplace_back(p[0].get<double>(), p[1].get<double>(),
                                           p[2].get<double>());
      rec.joints.visible.push_back(joint.at("visible").get<bool>() ? 1 : 0);
    }
    rec.camera = intrinsics_from_json(j.at("camera").at("intrinsics"));
    if (j.at("camera").contains("pose")) rec.camera_pose = pose_from_json(j.at("camera").at("pose"));
    if (j.contains("seed")) rec.seed = j.at("seed").get<std::uint64_t>();
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error("sequence '" + seq.id + "' annotations line " + std::to_string(line_no) +
                ": schema error: " + e.what());
  }
  char name[32];
  std::snprintf(name, sizeof(name), "depth_%06ld.png", rec.frame_id);
  rec.depth_path = seq_dir / name;
  return rec;
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& root) {
  const auto manifest_path = root / "manifest.toml";
  SPDH_REQUIRE(std::filesystem::exists(manifest_path),
               "missing manifest: ", manifest_path.string());
  const toml::Table manifest = toml::parse_file(manifest_path);

  Dataset ds;
  ds.root = root;
  ds.chain_file = toml::get_string_or(manifest, "chain", "");
  ds.joint_count = static_cast<int>(toml::get_int(manifest, "joint_count"));
  const std::string units = toml::get_string_or(manifest, "units", "mm");
  SPDH_REQUIRE(units == "mm", "manifest: unsupported units '", units, "'");

  const toml::Value* seqs = toml::find(manifest, "sequence");
  SPDH_REQUIRE(seqs && seqs->is_table_array(), "manifest: no [[sequence]] entries");
  for (const toml::Table& s : std::get<toml::TableArray>(seqs->data)) {
    SequenceInfo info;
    info.id = toml::get_string(s, "id");
    info.dir = toml::get_string(s, "dir");
    info.num_frames = toml::get_int(s, "frames");
    ds.sequences.push_back(std::move(info));
  }

  for (const SequenceInfo& seq : ds.sequences) {
    const auto seq_dir = root / seq.dir;
    const auto ann_path = seq_dir / "annotations.jsonl";
    std::ifstream ann(ann_path);
    SPDH_REQUIRE(ann.good(), "sequence '", seq.id, "': cannot open ", ann_path.string());
    std::string line;
    int line_no = 0;
    long frames_seen = 0;
    while (std::getline(ann, line)) {
      ++line_no;
      if (line.empty()) continue;
      FrameRecord rec = parse_annotation_line(line, seq, seq_dir, line_no);
      SPDH_REQUIRE(static_cast<int>(rec.joints.size()) == ds.joint_count,
                   "sequence '", seq.id, "' frame ", rec.frame_id, ": has ",
                   rec.joints.size(), " joints but the dataset declares ", ds.joint_count);
      ds.frames.push_back(std::move(rec));
      ++frames_seen;
    }
    SPDH_REQUIRE(frames_seen == seq.num_frames, "sequence '", seq.id, "': manifest declares ",
                 seq.num_frames, " frames but annotations contain ", frames_seen);
  }
  return ds;
}

DepthImage load_frame_depth(const FrameRecord& frame) {
  SPDH_REQUIRE(std::filesystem::exists(frame.depth_path),
               "depth file missing: ", frame.depth_path.string());
  return load_depth(frame.depth_path);
}

void write_manifest(const std::filesystem::path& root, const std::string& chain_file,
                    int joint_count, const std::vector<SequenceInfo>& sequences) {
  toml::Table manifest;
  manifest["units"] = toml::Value("mm");
  if (!chain_file.empty()) manifest["chain"] = toml::Value(chain_file);
  manifest["joint_count"] = toml::Value(joint_count);
  toml::TableArray seqs;
  for (const auto& s : sequences) {
    toml::Table entry;
    entry["id"] = toml::Value(s.id);
    entry["dir"] = toml::Value(s.dir.generic_string());
    entry["frames"] = toml::Value(static_cast<std::int64_t>(s.num_frames));
    seqs.push_back(std::move(entry));
  }
  manifest["sequence"] = toml::Value(std::move(seqs));
  toml::write_file(root / "manifest.toml", manifest);
}

std::vector<FrameRecord> sample_every(const std::vector<FrameRecord>& frames, int stride) {
  SPDH_REQUIRE(stride >= 1, "sample_every: stride must be >= 1");
  std::vector<FrameRecord> out;
  std::map<std::string, long> position;
  for (const FrameRecord& f : frames) {
    const long pos = position[f.sequence_id]++;
    if (pos % stride == 0) out.push_back(f);
  }
  return out;
}

SplitResult split(const std::vector<FrameRecord>& frames, const SplitSpec& spec) {
  std::set<std::string> dataset_ids;
  for (const auto& f : frames) dataset_ids.insert(f.sequence_id);

  std::map<std::string, int> assignment;  // 0 train, 1 val, 2 test
  auto assign = [&](const std::vector<std::string>& ids, int bucket) {
    for (const auto& id : ids) {
      SPDH_REQUIRE(dataset_ids.count(id), "split: unknown sequence id '", id, "'");
      SPDH_REQUIRE(!assignment.count(id), "split: sequence id '", id,
                   "' assigned to more than one split");
      assignment[id] = bucket;
    }
  };
  assign(spec.train_ids, 0);
  assign(spec.val_ids, 1);
  assign(spec.test_ids, 2);
  for (const auto& id : dataset_ids)
    SPDH_REQUIRE(assignment.count(id), "split: sequence id '", id, "' not assigned to any split");

  SplitResult out;
  for (const FrameRecord& f : frames) {
    switch (assignment.at(f.sequence_id)) {
      case 0: out.train.push_back(f); break;
      case 1: out.val.push_back(f); break;
      default: out.test.push_back(f); break;
    }
  }
  return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

void convert_external(const std::filesystem::path& depth_dir,
                      const std::filesystem::path& joints_csv,
                      const std::filesystem::path& camera_json,
                      const std::filesystem::path& out_root) {
  const PinholeIntrinsics K = load_camera_json(camera_json);

  std::ifstream csv(joints_csv);
  SPDH_REQUIRE(csv.good(), "cannot open joints CSV: ", joints_csv.string());
  std::string line;
  SPDH_REQUIRE(std::getline(csv, line), "joints CSV is empty: ", joints_csv.string());
  const auto header = split_csv_line(line);
  SPDH_REQUIRE(header.size() >= 6 && header[0] == "frame_id" && header[1] == "depth_file" &&
                   header[2] == "joint" && header[3] == "x_mm" && header[4] == "y_mm" &&
                   header[5] == "z_mm",
               "joints CSV: expected header frame_id,depth_file,joint,x_mm,y_mm,z_mm[,visible]");
  const bool has_visible = header.size() >= 7 && header[6] == "visible";

  struct FrameAccum {
    std::string depth_file;
    JointSet3D joints;
  };
  std::map<long, FrameAccum> frames;
  int line_no = 1;
  while (std::getline(csv, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    SPDH_REQUIRE(cells.size() >= (has_visible ? 7u : 6u), "joints CSV line ", line_no,
                 ": wrong column count");
    try {
      const long frame_id = std::stol(cells[0]);
      FrameAccum& acc = frames[frame_id];
      if (acc.depth_file.empty()) acc.depth_file = cells[1];
      SPDH_REQUIRE(acc.depth_file == cells[1], "joints CSV line ", line_no,
                   ": frame ", frame_id, " references two depth files");
      acc.joints.names.push_back(cells[2]);
      acc.joints.positions_mm.emplace_back(std::stod(cells[3]), std::stod(cells[4]),
                                           std::stod(cells[5]));
      acc.joints.visible.push_back(has_visible ? (cells[6] == "1" || cells[6] == "true") : 1);
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw Error("joints CSV line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  SPDH_REQUIRE(!frames.empty(), "joints CSV contains no frames");

  const int joint_count = static_cast<int>(frames.begin()->second.joints.size());
  const auto seq_dir = out_root / "seq_000";
  std::filesystem::create_directories(seq_dir);
  save_camera_json(seq_dir / "camera.json", K);

  std::ofstream ann(seq_dir / "annotations.jsonl");
  SPDH_REQUIRE(ann.good(), "cannot write annotations in ", seq_dir.string());
  long out_frame = 0;
  for (const auto& [orig_id, acc] : frames) {
    SPDH_REQUIRE(static_cast<int>(acc.joints.size()) == joint_count, "frame ", orig_id,
                 ": joint count differs from first frame");
    const auto src = depth_dir / acc.depth_file;
    SPDH_REQUIRE(std::filesystem::exists(src), "depth file missing: ", src.string());
    char name[32];
    std::snprintf(name, sizeof(name), "depth_%06ld.png", out_frame);
    std::filesystem::copy_file(src, seq_dir / name,
                               std::filesystem::copy_options::overwrite_existing);

    nlohmann::json rec;
    rec["frame_id"] = out_frame;
    rec["joints"] = nlohmann::json::array();
    for (size_t j = 0; j < acc.joints.size(); ++j) {
      const auto& p = acc.joints.positions_mm[j];
      rec["joints"].push_back({{"name", acc.joints.names[j]},
                               {"xyz_mm", {p.x(), p.y(), p.z()}},
                               {"visible", acc.joints.visible[j] != 0}});
    }
    rec["camera"] = {{"intrinsics",
                      {{"fx", K.fx}, {"fy", K.fy}, {"cx", K.cx}, {"cy", K.cy},
                       {"width", K.width}, {"height", K.height}}}};
    rec["seed"] = 0;
    ann << rec.dump() << "\n";
    ++out_frame;
  }
  write_manifest(out_root, "", joint_count, {{"seq_000", "seq_000", out_frame}});
}

}  // namespace spdh
