#include "spdh/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace spdh {

namespace {

void require_aligned(const JointSet3D& pred, const JointSet3D& gt) {
  SPDH_REQUIRE(pred.size() == gt.size(), "metrics: joint count mismatch (", pred.size(), " vs ",
               gt.size(), ")");
  for (size_t j = 0; j < gt.size(); ++j)
    SPDH_REQUIRE(pred.names[j] == gt.names[j], "metrics: joint order mismatch at ", j, " ('",
                 pred.names[j], "' vs '", gt.names[j], "')");
}

}  // namespace

double add_metric(const JointSet3D& pred, const JointSet3D& gt, Norm norm) {
  require_aligned(pred, gt);
  double sum = 0.0;
  long count = 0;
  for (size_t j = 0; j < gt.size(); ++j) {
    if (!gt.visible[j]) continue;
    const Eigen::Vector3d d = pred.positions_mm[j] - gt.positions_mm[j];
    sum += (norm == Norm::kL2) ? d.norm() : d.cwiseAbs().sum();
    ++count;
  }
  SPDH_REQUIRE(count > 0, "add_metric: no visible ground-truth joints to evaluate");
  return sum / count / 10.0;  // mm -> cm
}

std::vector<double> map_metric(const std::vector<JointSet3D>& preds,
                               const std::vector<JointSet3D>& gts,
                               const std::vector<double>& thresholds_mm) {
  SPDH_REQUIRE(!preds.empty() && preds.size() == gts.size(),
               "map_metric: empty or misaligned frame lists");
  SPDH_REQUIRE(std::is_sorted(thresholds_mm.begin(), thresholds_mm.end()),
               "map_metric: thresholds must be sorted ascending");
  std::vector<long> hits(thresholds_mm.size(), 0);
  long total = 0;
  for (size_t f = 0; f < gts.size(); ++f) {
    require_aligned(preds[f], gts[f]);
    for (size_t j = 0; j < gts[f].size(); ++j) {
      if (!gts[f].visible[j]) continue;
      const double err = (preds[f].positions_mm[j] - gts[f].positions_mm[j]).norm();
      ++total;
      for (size_t t = 0; t < thresholds_mm.size(); ++t)
        if (err < thresholds_mm[t]) ++hits[t];
    }
  }
  std::vector<double> fractions(thresholds_mm.size(), 0.0);
  if (total > 0)
    for (size_t t = 0; t < fractions.size(); ++t)
      fractions[t] = static_cast<double>(hits[t]) / total;
  return fractions;
}

JointSet3D baseline_2d_to_3d(const std::vector<Eigen::Vector2d>& joints_uv,
                             const std::vector<std::string>& names, const DepthImage& depth,
                             const PinholeIntrinsics& K, int window) {
  SPDH_REQUIRE(joints_uv.size() == names.size(), "baseline: name count mismatch");
  SPDH_REQUIRE(window == 1 || window == 3, "baseline: window must be 1 or 3");
  JointSet3D out;
  out.names = names;
  out.positions_mm.assign(names.size(), Eigen::Vector3d::Zero());
  out.visible.assign(names.size(), 0);
  for (size_t j = 0; j < joints_uv.size(); ++j) {
    const double u = joints_uv[j].x();
    const double v = joints_uv[j].y();
    const long iu = std::lround(u);
    const long iv = std::lround(v);
    SPDH_REQUIRE(iu >= 0 && iu < depth.width && iv >= 0 && iv < depth.height,
                 "baseline: joint ", names[j], " 2D location (", u, ", ", v,
                 ") outside image bounds");
    float d = 0.0f;
    if (window == 1) {
      d = depth.at(static_cast<int>(iu), static_cast<int>(iv));
    } else {
      std::vector<float> vals;
      for (long dv = -1; dv <= 1; ++dv)
        for (long du = -1; du <= 1; ++du) {
          const long uu = iu + du, vv = iv + dv;
          if (uu < 0 || uu >= depth.width || vv < 0 || vv >= depth.height) continue;
          const float w = depth.at(static_cast<int>(uu), static_cast<int>(vv));
          if (w > 0.0f) vals.push_back(w);
        }
      if (!vals.empty()) {
        std::nth_element(vals.begin(), vals.begin() + vals.size() / 2, vals.end());
        d = vals[vals.size() / 2];
      }
    }
    if (!(d > 0.0f)) continue;  // sentinel: joint marked invisible
    const double z = static_cast<double>(d);
    out.positions_mm[j] = Eigen::Vector3d((u - K.cx) * z / K.fx, (v - K.cy) * z / K.fy, z);
    out.visible[j] = 1;
  }
  return out;
}

void PoseMetricsReport::validate() const {
  SPDH_REQUIRE(add_l1_std_cm >= 0.0 && add_l2_std_cm >= 0.0, "report: negative std");
  SPDH_REQUIRE(add_l1_mean_cm >= add_l2_mean_cm - 1e-12,
               "report: ADD L1 mean must be >= L2 mean");
  for (size_t t = 0; t + 1 < map_at.size(); ++t) {
    SPDH_REQUIRE(map_at[t].first <= map_at[t + 1].first, "report: thresholds not sorted");
    SPDH_REQUIRE(map_at[t].second <= map_at[t + 1].second + 1e-12,
                 "report: mAP must be non-decreasing in threshold");
  }
  for (const auto& [t, f] : map_at)
    SPDH_REQUIRE(f >= 0.0 && f <= 1.0, "report: fraction outside [0,1] at ", t, " mm");
}

PoseMetricsReport evaluate_run(const std::vector<JointSet3D>& preds,
                               const std::vector<JointSet3D>& gts, const EvalConfig& config) {
  SPDH_REQUIRE(!gts.empty(), "evaluate_run: no frames");
  SPDH_REQUIRE(preds.size() == gts.size(), "evaluate_run: frame count mismatch (", preds.size(),
               " vs ", gts.size(), ")");
  PoseMetricsReport report;
  report.num_frames = static_cast<long>(gts.size());

  std::vector<double> add_l1, add_l2;
  std::vector<std::vector<double>> frame_fractions;
  std::vector<long> hits(config.thresholds_mm.size(), 0);
  long total = 0;
  for (size_t f = 0; f < gts.size(); ++f) {
    require_aligned(preds[f], gts[f]);
    double s1 = 0.0, s2 = 0.0;
    long count = 0;
    std::vector<long> fhits(config.thresholds_mm.size(), 0);
    for (size_t j = 0; j < gts[f].size(); ++j) {
      if (!gts[f].visible[j]) {
        ++report.num_joints_excluded;
        continue;
      }
      const Eigen::Vector3d d = preds[f].positions_mm[j] - gts[f].positions_mm[j];
      const double l2 = d.norm();
      s1 += d.cwiseAbs().sum();
      s2 += l2;
      ++count;
      for (size_t t = 0; t < config.thresholds_mm.size(); ++t)
        if (l2 < config.thresholds_mm[t]) {
          ++hits[t];
          ++fhits[t];
        }
    }
    if (count == 0) continue;  // nothing evaluable in this frame
    total += count;
    report.num_joints_evaluated += count;
    add_l1.push_back(s1 / count / 10.0);
    add_l2.push_back(s2 / count / 10.0);
    std::vector<double> ff(config.thresholds_mm.size());
    for (size_t t = 0; t < ff.size(); ++t) ff[t] = static_cast<double>(fhits[t]) / count;
    frame_fractions.push_back(std::move(ff));
  }
  SPDH_REQUIRE(total > 0, "evaluate_run: no visible ground-truth joints in any frame");

  auto mean_std = [](const std::vector<double>& xs, double* mean, double* std_out) {
    double s = 0.0;
    for (double x : xs) s += x;
    *mean = s / xs.size();
    double ss = 0.0;
    for (double x : xs) ss += (x - *mean) * (x - *mean);
    *std_out = std::sqrt(ss / xs.size());  // population std across frames
  };
  mean_std(add_l1, &report.add_l1_mean_cm, &report.add_l1_std_cm);
  mean_std(add_l2, &report.add_l2_mean_cm, &report.add_l2_std_cm);

  for (size_t t = 0; t < config.thresholds_mm.size(); ++t) {
    double fraction = 0.0;
    if (config.pooling == EvalConfig::MapPooling::kPooled) {
      fraction = static_cast<double>(hits[t]) / total;
    } else {
      for (const auto& ff : frame_fractions) fraction += ff[t];
      fraction /= frame_fractions.size();
    }
    report.map_at.emplace_back(config.thresholds_mm[t], fraction);
  }
  report.validate();
  return report;
}

void save_report_json(const std::filesystem::path& path, const PoseMetricsReport& report) {
  report.validate();
  nlohmann::json j;
  j["add"] = {{"l1", {{"mean", report.add_l1_mean_cm}, {"std", report.add_l1_std_cm}}},
              {"l2", {{"mean", report.add_l2_mean_cm}, {"std", report.add_l2_std_cm}}}};
  j["map"] = nlohmann::json::array();
  for (const auto& [t, f] : report.map_at)
    j["map"].push_back({{"threshold_mm", t}, {"fraction", f}});
  j["frames"] = report.num_frames;
  j["joints"] = report.num_joints_evaluated;
  j["excluded"] = report.num_joints_excluded;
  std::ofstream out(path);
  SPDH_REQUIRE(out.good(), "cannot write report: ", path.string());
  out << j.dump(2) << "\n";
}

PoseMetricsReport load_report_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  SPDH_REQUIRE(in.good(), "cannot open report: ", path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw Error("report parse error in " + path.string() + ": " + e.what());
  }
  PoseMetricsReport r;
  try {
    r.add_l1_mean_cm = j.at("add").at("l1").at("mean").get<double>();
    r.add_l1_std_cm = j.at("add").at("l1").at("std").get<double>();
    r.add_l2_mean_cm = j.at("add").at("l2").at("mean").get<double>();
    r.add_l2_std_cm = j.at("add").at("l2").at("std").get<double>();
    for (const auto& e : j.at("map"))
      r.map_at.emplace_back(e.at("threshold_mm").get<double>(), e.at("fraction").get<double>());
    r.num_frames = j.at("frames").get<long>();
    r.num_joints_evaluated = j.at("joints").get<long>();
    r.num_joints_excluded = j.at("excluded").get<long>();
  } catch (const std::exception& e) {
    throw Error("report schema error in " + path.string() + ": " + e.what());
  }
  r.validate();
  return r;
}

std::string format_report_table(
    const std::vector<std::pair<std::string, PoseMetricsReport>>& rows) {
  std::ostringstream os;
  os << "               ";
  if (!rows.empty())
    for (const auto& [t, f] : rows.front().second.map_at) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "  mAP@%-3.0fmm", t);
      os << buf;
    }
  os << "   ADD L1 (cm)      ADD L2 (cm)\n";
  for (const auto& [label, r] : rows) {
    char head[32];
    std::snprintf(head, sizeof(head), "%-15s", label.c_str());
    os << head;
    for (const auto& [t, f] : r.map_at) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "  %8.2f%%", 100.0 * f);
      os << buf;
    }
    char tail[64];
    std::snprintf(tail, sizeof(tail), "   %6.2f +- %-5.2f  %6.2f +- %-5.2f\n", r.add_l1_mean_cm,
                  r.add_l1_std_cm, r.add_l2_mean_cm, r.add_l2_std_cm);
    os << tail;
  }
  return os.str();
}

}  // namespace spdh
