#include <fstream>

#include "doctest.h"
#include "json.hpp"
#include "spdh/codec.hpp"
#include "spdh/image_io.hpp"
#include "testutil.hpp"

using testutil::run_cli;

namespace {

std::string q(const std::filesystem::path& p) {
  return p.string();
}

}  // namespace

TEST_CASE("cli: synth twice with one seed is byte-identical; config round trip too") {
  testutil::TempDir tmp("cli_synth");
  const std::string common = "synth --frames 2 --sequences 1 --seed 11 ";
  REQUIRE(run_cli(common + "--out " + q(tmp.path() / "a"), tmp.path() / "a.log") == 0);
  REQUIRE(run_cli(common + "--out " + q(tmp.path() / "b"), tmp.path() / "b.log") == 0);
  std::string why;
  CHECK_MESSAGE(testutil::trees_equal(tmp.path() / "a", tmp.path() / "b", &why), why);

  // rerunning from the dumped effective config reproduces the tree
  REQUIRE(run_cli("synth --config " + q(tmp.path() / "a" / "effective_config.toml") + " --out " +
                      q(tmp.path() / "c"),
                  tmp.path() / "c.log") == 0);
  CHECK_MESSAGE(testutil::trees_equal(tmp.path() / "a", tmp.path() / "c", &why), why);
}

TEST_CASE("cli: invalid configuration exits nonzero with a message") {
  testutil::TempDir tmp("cli_bad");
  const int rc = run_cli("synth --delta-z 0 --frames 1 --out " + q(tmp.path() / "x"),
                         tmp.path() / "x.log");
  CHECK(rc != 0);
  std::ifstream log(tmp.path() / "x.log");
  std::string all((std::istreambuf_iterator<char>(log)), std::istreambuf_iterator<char>());
  CHECK(all.find("delta_z") != std::string::npos);
}

TEST_CASE("cli: encode produces sidecars with uz height 192 for both reference configs") {
  testutil::TempDir tmp("cli_enc");
  REQUIRE(run_cli("synth --frames 1 --sequences 1 --seed 3 --out " + q(tmp.path() / "ds"),
                  tmp.path() / "s.log") == 0);
  REQUIRE(run_cli("encode " + q(tmp.path() / "ds") + " --out " + q(tmp.path() / "st"),
                  tmp.path() / "e.log") == 0);
  {
    std::ifstream side(tmp.path() / "st" / "seq_000" / "frame_000000.json");
    REQUIRE(side.good());
    nlohmann::json j;
    side >> j;
    CHECK(j["quant"]["num_slices"] == 192);
    CHECK(j["uv_height"] == 192);
  }
  // V-F variant: dz=30 over [0,5760] also gives 192 slices
  REQUIRE(run_cli("encode " + q(tmp.path() / "ds") + " --delta-z 30 --z-min 0 --z-max 5760 " +
                      "--out " + q(tmp.path() / "st30"),
                  tmp.path() / "e30.log") == 0);
  {
    std::ifstream side(tmp.path() / "st30" / "seq_000" / "frame_000000.json");
    REQUIRE(side.good());
    nlohmann::json j;
    side >> j;
    CHECK(j["quant"]["num_slices"] == 192);
  }
}

TEST_CASE("cli: decode round trip, missing stacks, and the peak threshold flag") {
  testutil::TempDir tmp("cli_dec");
  REQUIRE(run_cli("synth --frames 2 --sequences 1 --seed 5 --out " + q(tmp.path() / "ds"),
                  tmp.path() / "s.log") == 0);
  REQUIRE(run_cli("encode " + q(tmp.path() / "ds") + " --out " + q(tmp.path() / "st"),
                  tmp.path() / "e.log") == 0);
  REQUIRE(run_cli("decode " + q(tmp.path() / "st") + " --out " + q(tmp.path() / "pred.jsonl"),
                  tmp.path() / "d.log") == 0);

  // decoded joints agree with the annotations within the quantization bound
  std::ifstream pred(tmp.path() / "pred.jsonl");
  std::ifstream ann(tmp.path() / "ds" / "seq_000" / "annotations.jsonl");
  std::string pline, aline;
  int checked = 0;
  while (std::getline(pred, pline) && std::getline(ann, aline)) {
    const auto pj = nlohmann::json::parse(pline);
    const auto aj = nlohmann::json::parse(aline);
    REQUIRE(pj["joints"].size() == aj["joints"].size());
    for (size_t j = 0; j < pj["joints"].size(); ++j) {
      if (!pj["joints"][j]["visible"].get<bool>()) continue;
      const auto& pp = pj["joints"][j]["xyz_mm"];
      const auto& ap = aj["joints"][j]["xyz_mm"];
      const double dx = pp[0].get<double>() - ap[0].get<double>();
      const double dy = pp[1].get<double>() - ap[1].get<double>();
      const double dz = pp[2].get<double>() - ap[2].get<double>();
      CHECK(std::sqrt(dx * dx + dy * dy + dz * dz) <= 25.0);  // coarse 512->384 resampling bound
      ++checked;
    }
  }
  CHECK(checked > 10);

  // --peak-threshold above 1.0 marks everything invisible
  REQUIRE(run_cli("decode " + q(tmp.path() / "st") + " --peak-threshold 1.1 --out " +
                      q(tmp.path() / "none.jsonl"),
                  tmp.path() / "d2.log") == 0);
  std::ifstream none(tmp.path() / "none.jsonl");
  while (std::getline(none, pline)) {
    const auto pj = nlohmann::json::parse(pline);
    for (const auto& joint : pj["joints"]) CHECK(!joint["visible"].get<bool>());
  }

  // a missing .spdh file is listed per frame and fails the run
  std::filesystem::remove(tmp.path() / "st" / "seq_000" / "frame_000001.spdh");
  const int rc = run_cli("decode " + q(tmp.path() / "st") + " --out " +
                             q(tmp.path() / "broken.jsonl"),
                         tmp.path() / "d3.log");
  CHECK(rc != 0);
  std::ifstream log(tmp.path() / "d3.log");
  std::string all((std::istreambuf_iterator<char>(log)), std::istreambuf_iterator<char>());
  CHECK(all.find("frame_000001") != std::string::npos);
}

TEST_CASE("cli: eval perfect predictions give mAP 1.0 at every threshold") {
  testutil::TempDir tmp("cli_eval");
  REQUIRE(run_cli("synth --frames 2 --sequences 1 --seed 8 --out " + q(tmp.path() / "ds"),
                  tmp.path() / "s.log") == 0);
  // use the annotations themselves as predictions
  std::ifstream ann(tmp.path() / "ds" / "seq_000" / "annotations.jsonl");
  std::ofstream pred(tmp.path() / "pred.jsonl");
  std::string line;
  while (std::getline(ann, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line);
    nlohmann::json rec;
    rec["sequence_id"] = "seq_000";
    rec["frame_id"] = j["frame_id"];
    rec["joints"] = j["joints"];
    pred << rec.dump() << "\n";
  }
  pred.close();
  REQUIRE(run_cli("eval " + q(tmp.path() / "ds") + " " + q(tmp.path() / "pred.jsonl") +
                      " --out " + q(tmp.path() / "report.json"),
                  tmp.path() / "ev.log") == 0);
  std::ifstream rep(tmp.path() / "report.json");
  nlohmann::json r;
  rep >> r;
  CHECK(r["add"]["l1"]["mean"] == 0.0);
  for (const auto& m : r["map"]) CHECK(m["fraction"] == 1.0);
}

TEST_CASE("cli: viz emits 2n heatmap pages plus one overlay") {
  testutil::TempDir tmp("cli_viz");
  REQUIRE(run_cli("synth --frames 1 --sequences 1 --seed 4 --out " + q(tmp.path() / "ds"),
                  tmp.path() / "s.log") == 0);
  REQUIRE(run_cli("encode " + q(tmp.path() / "ds") + " --out " + q(tmp.path() / "st"),
                  tmp.path() / "e.log") == 0);
  REQUIRE(run_cli("viz " + q(tmp.path() / "ds") + " --stacks " + q(tmp.path() / "st") +
                      " --out " + q(tmp.path() / "viz"),
                  tmp.path() / "v.log") == 0);
  int uv = 0, uz = 0;
  for (const auto& e : std::filesystem::directory_iterator(tmp.path() / "viz")) {
    const std::string name = e.path().filename().string();
    if (name.rfind("uv_", 0) == 0) ++uv;
    if (name.rfind("uz_", 0) == 0) ++uz;
  }
  CHECK(uv == 16);
  CHECK(uz == 16);
  CHECK(std::filesystem::exists(tmp.path() / "viz" / "overlay.png"));
  CHECK(std::filesystem::exists(tmp.path() / "viz" / "depth.png"));
}

TEST_CASE("cli: viz overlay markers land on the annotation projections") {
  testutil::TempDir tmp("cli_ovl");
  REQUIRE(run_cli("synth --frames 1 --sequences 1 --seed 12 --noise-sigma 0 --dropout 0 --out " +
                      q(tmp.path() / "ds"),
                  tmp.path() / "s.log") == 0);
  REQUIRE(run_cli("viz " + q(tmp.path() / "ds") + " --out " + q(tmp.path() / "viz"),
                  tmp.path() / "v.log") == 0);
  const spdh::RgbImage overlay = spdh::read_png_rgb8(tmp.path() / "viz" / "overlay.png");
  std::ifstream ann(tmp.path() / "ds" / "seq_000" / "annotations.jsonl");
  std::string line;
  std::getline(ann, line);
  const auto rec = nlohmann::json::parse(line);
  const auto& K = rec["camera"]["intrinsics"];
  const double fx = K["fx"], fy = K["fy"], cx = K["cx"], cy = K["cy"];
  auto is_marker = [&](int u, int v) {
    if (u < 0 || u >= overlay.width || v < 0 || v >= overlay.height) return false;
    const size_t i = 3 * (static_cast<size_t>(v) * overlay.width + u);
    const bool green = overlay.data[i] == 0 && overlay.data[i + 1] == 255 &&
                       overlay.data[i + 2] == 0;
    const bool red = overlay.data[i] == 255 && overlay.data[i + 1] == 0 &&
                     overlay.data[i + 2] == 0;
    return green || red;
  };
  int inspected = 0;
  for (const auto& joint : rec["joints"]) {
    const auto& p = joint["xyz_mm"];
    const double z = p[2].get<double>();
    if (z <= 0.0) continue;
    const long u = std::lround(fx * p[0].get<double>() / z + cx);
    const long v = std::lround(fy * p[1].get<double>() / z + cy);
    if (u < 2 || u >= overlay.width - 2 || v < 2 || v >= overlay.height - 2) continue;
    ++inspected;
    bool found = false;
    for (int dv = -1; dv <= 1 && !found; ++dv)
      for (int du = -1; du <= 1 && !found; ++du)
        found = is_marker(static_cast<int>(u) + du, static_cast<int>(v) + dv);
    CHECK_MESSAGE(found, "no marker near joint projection (", u, ", ", v, ")");
  }
  CHECK(inspected >= 12);
}
