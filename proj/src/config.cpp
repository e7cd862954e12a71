#include "spdh/config.hpp"

#include "spdh/tomlmini.hpp"

namespace spdh {

EncodeOptions RunConfig::encode_options() const {
  EncodeOptions opts;
  opts.pdf_prefactor = pdf_prefactor;
  return opts;
}

DecodeOptions RunConfig::decode_options() const {
  auto refine = [](const std::string& s, const char* which) {
    if (s == "none") return DecodeOptions::Refine::kNone;
    if (s == "quadratic") return DecodeOptions::Refine::kQuadratic;
    throw Error(std::string("config: ") + which + " must be 'none' or 'quadratic', got '" + s +
                "'");
  };
  DecodeOptions opts;
  opts.peak_threshold = peak_threshold;
  opts.uv_refine = refine(uv_refine, "uv_refine");
  opts.uz_refine = refine(uz_refine, "uz_refine");
  return opts;
}

EvalConfig RunConfig::eval_config() const {
  EvalConfig cfg;
  cfg.thresholds_mm = thresholds_mm;
  if (map_pooling == "pooled")
    cfg.pooling = EvalConfig::MapPooling::kPooled;
  else if (map_pooling == "per_frame")
    cfg.pooling = EvalConfig::MapPooling::kPerFrameMean;
  else
    throw Error("config: map_pooling must be 'pooled' or 'per_frame', got '" + map_pooling + "'");
  return cfg;
}

void RunConfig::validate() const {
  quantization().validate();
  SPDH_REQUIRE(sigma_m > 0.0, "config: sigma_m must be positive");
  SPDH_REQUIRE(shape_h > 0 && shape_w > 0, "config: shape must be positive");
  SPDH_REQUIRE(std::is_sorted(thresholds_mm.begin(), thresholds_mm.end()),
               "config: thresholds must be sorted ascending");
  SPDH_REQUIRE(baseline_window == 1 || baseline_window == 3,
               "config: baseline_window must be 1 or 3");
  SPDH_REQUIRE(sequences >= 1 && frames >= 1 && motions >= 1,
               "config: sequences/frames/motions must be >= 1");
  SPDH_REQUIRE(jobs >= 0, "config: jobs must be >= 0");
  augment.validate();
  NoiseModel{noise_sigma_mm, dropout}.validate();
  decode_options();
  eval_config();
  SPDH_REQUIRE(augment_about == "origin" || augment_about == "centroid",
               "config: augment.about must be 'origin' or 'centroid'");
}

RunConfig load_config(const std::filesystem::path& path) {
  const toml::Table root = toml::parse_file(path);
  RunConfig cfg;
  cfg.camera = toml::get_string_or(root, "camera", cfg.camera);
  cfg.seed = static_cast<std::uint64_t>(toml::get_int_or(root, "seed", 0));
  cfg.jobs = static_cast<int>(toml::get_int_or(root, "jobs", 0));

  if (const toml::Value* v = toml::find(root, "spdh")) {
    const toml::Table& t = v->as_table("spdh");
    cfg.z_min = toml::get_float_or(t, "z_min", cfg.z_min);
    cfg.z_max = toml::get_float_or(t, "z_max", cfg.z_max);
    cfg.delta_z = toml::get_float_or(t, "delta_z", cfg.delta_z);
    cfg.sigma_m = toml::get_float_or(t, "sigma_m", cfg.sigma_m);
    if (const toml::Value* shape = toml::find(t, "shape")) {
      const auto& arr = shape->as_array("shape");
      SPDH_REQUIRE(arr.size() == 2, "config: spdh.shape must be [h, w]");
      cfg.shape_h = static_cast<int>(arr[0].as_int("shape"));
      cfg.shape_w = static_cast<int>(arr[1].as_int("shape"));
    }
    cfg.peak_threshold = toml::get_float_or(t, "peak_threshold", cfg.peak_threshold);
    cfg.uv_refine = toml::get_string_or(t, "uv_refine", cfg.uv_refine);
    cfg.uz_refine = toml::get_string_or(t, "uz_refine", cfg.uz_refine);
    cfg.pdf_prefactor = toml::get_bool_or(t, "pdf_prefactor", cfg.pdf_prefactor);
  }
  if (const toml::Value* v = toml::find(root, "augment")) {
    const toml::Table& t = v->as_table("augment");
    if (toml::find(t, "rot_deg")) {
      const auto r = toml::get_float_array(t, "rot_deg");
      SPDH_REQUIRE(r.size() == 2, "config: augment.rot_deg must be [lo, hi]");
      cfg.augment.rot_lo_deg = r[0];
      cfg.augment.rot_hi_deg = r[1];
    }
    if (toml::find(t, "trans_mm")) {
      const auto r = toml::get_float_array(t, "trans_mm");
      SPDH_REQUIRE(r.size() == 2, "config: augment.trans_mm must be [lo, hi]");
      cfg.augment.trans_lo_mm = r[0];
      cfg.augment.trans_hi_mm = r[1];
    }
    cfg.augment_about = toml::get_string_or(t, "about", cfg.augment_about);
    cfg.augment.about = (cfg.augment_about == "centroid") ? AugmentSpec::About::kCentroid
                                                          : AugmentSpec::About::kOrigin;
  }
  if (const toml::Value* v = toml::find(root, "metrics")) {
    const toml::Table& t = v->as_table("metrics");
    if (toml::find(t, "thresholds_mm")) cfg.thresholds_mm = toml::get_float_array(t, "thresholds_mm");
    cfg.map_pooling = toml::get_string_or(t, "pooling", cfg.map_pooling);
    cfg.baseline_window = static_cast<int>(toml::get_int_or(t, "baseline_window",
                                                            cfg.baseline_window));
  }
  if (const toml::Value* v = toml::find(root, "synth")) {
    const toml::Table& t = v->as_table("synth");
    cfg.noise_sigma_mm = toml::get_float_or(t, "noise_sigma_mm", cfg.noise_sigma_mm);
    cfg.dropout = toml::get_float_or(t, "dropout", cfg.dropout);
    cfg.jitter_diameter_mm = toml::get_float_or(t, "jitter_diameter_mm", cfg.jitter_diameter_mm);
    cfg.sequences = static_cast<int>(toml::get_int_or(t, "sequences", cfg.sequences));
    cfg.frames = static_cast<int>(toml::get_int_or(t, "frames", cfg.frames));
    cfg.motions = static_cast<int>(toml::get_int_or(t, "motions", cfg.motions));
  }
  cfg.validate();
  return cfg;
}

void save_config(const std::filesystem::path& path, const RunConfig& cfg) {
  toml::Table root;
  root["camera"] = toml::Value(cfg.camera);
  root["seed"] = toml::Value(static_cast<std::int64_t>(cfg.seed));
  root["jobs"] = toml::Value(cfg.jobs);

  toml::Table spdh;
  spdh["z_min"] = toml::Value(cfg.z_min);
  spdh["z_max"] = toml::Value(cfg.z_max);
  spdh["delta_z"] = toml::Value(cfg.delta_z);
  spdh["sigma_m"] = toml::Value(cfg.sigma_m);
  spdh["shape"] = toml::Value(toml::Array{toml::Value(cfg.shape_h), toml::Value(cfg.shape_w)});
  spdh["peak_threshold"] = toml::Value(cfg.peak_threshold);
  spdh["uv_refine"] = toml::Value(cfg.uv_refine);
  spdh["uz_refine"] = toml::Value(cfg.uz_refine);
  spdh["pdf_prefactor"] = toml::Value(cfg.pdf_prefactor);
  root["spdh"] = toml::Value(std::move(spdh));

  toml::Table augment;
  augment["rot_deg"] = toml::Value(
      toml::Array{toml::Value(cfg.augment.rot_lo_deg), toml::Value(cfg.augment.rot_hi_deg)});
  augment["trans_mm"] = toml::Value(
      toml::Array{toml::Value(cfg.augment.trans_lo_mm), toml::Value(cfg.augment.trans_hi_mm)});
  augment["about"] = toml::Value(cfg.augment_about);
  root["augment"] = toml::Value(std::move(augment));

  toml::Table metrics;
  toml::Array thresholds;
  for (double t : cfg.thresholds_mm) thresholds.push_back(toml::Value(t));
  metrics["thresholds_mm"] = toml::Value(std::move(thresholds));
  metrics["pooling"] = toml::Value(cfg.map_pooling);
  metrics["baseline_window"] = toml::Value(cfg.baseline_window);
  root["metrics"] = toml::Value(std::move(metrics));

  toml::Table synth;
  synth["noise_sigma_mm"] = toml::Value(cfg.noise_sigma_mm);
  synth["dropout"] = toml::Value(cfg.dropout);
  synth["jitter_diameter_mm"] = toml::Value(cfg.jitter_diameter_mm);
  synth["sequences"] = toml::Value(cfg.sequences);
  synth["frames"] = toml::Value(cfg.frames);
  synth["motions"] = toml::Value(cfg.motions);
  root["synth"] = toml::Value(std::move(synth));

  toml::write_file(path, root);
}

}  // namespace spdh
