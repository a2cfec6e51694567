#include <cmath>
#include <functional>
#include <map>

#include "toothseg/pipeline.hpp"

namespace toothseg {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::Ours: return "ours";
    case Method::OtsuBaseline: return "otsu";
    case Method::HsvBaseline: return "hsv";
  }
  return "ours";
}

Method parse_method(std::string_view name) {
  if (name == "ours") return Method::Ours;
  if (name == "otsu" || name == "otsu_baseline") return Method::OtsuBaseline;
  if (name == "hsv" || name == "hsv_baseline") return Method::HsvBaseline;
  fail(ErrorCode::InvalidConfig, "unknown method '" + std::string(name) + "' (expected ours, otsu or hsv)");
}

namespace {

using Setter = std::function<void(const Json&, const std::string&)>;

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  fail(ErrorCode::InvalidConfig, "config key '" + key + "': " + what);
}

double as_number(const Json& v, const std::string& key) {
  if (!v.is_number()) bad(key, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) bad(key, "expected a finite number");
  return d;
}

int as_int(const Json& v, const std::string& key) {
  if (!v.is_number_integer()) bad(key, "expected an integer");
  return v.get<int>();
}

bool as_bool(const Json& v, const std::string& key) {
  if (!v.is_boolean()) bad(key, "expected true or false");
  return v.get<bool>();
}

// "auto" maps to 0.
int as_int_or_auto(const Json& v, const std::string& key) {
  if (v.is_string() && v.get<std::string>() == "auto") return 0;
  if (!v.is_number_integer()) bad(key, "expected an integer or \"auto\"");
  return v.get<int>();
}

void apply(const Json& obj, const std::string& prefix, const std::map<std::string, Setter>& setters) {
  if (!obj.is_object()) bad(prefix.empty() ? "<root>" : prefix, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    const auto it = setters.find(key);
    if (it == setters.end()) fail(ErrorCode::InvalidConfig, "unknown config key '" + path + "'");
    it->second(value, path);
  }
}

Hsv as_hsv(const Json& v, const std::string& key) {
  if (!v.is_array() || v.size() != 3) bad(key, "expected [h, s, v]");
  return {static_cast<float>(as_number(v[0], key + "[0]")), static_cast<float>(as_number(v[1], key + "[1]")),
          static_cast<float>(as_number(v[2], key + "[2]"))};
}

void apply_range(HsvRange& range, const Json& v, const std::string& key) {
  apply(v, key, {{"lo", [&](const Json& j, const std::string& k) { range.lo = as_hsv(j, k); }},
                 {"hi", [&](const Json& j, const std::string& k) { range.hi = as_hsv(j, k); }}});
}

Json hsv_json(const Hsv& h) {
  return Json::array({round_significant(h.h), round_significant(h.s), round_significant(h.v)});
}

}  // namespace

void validate(const PipelineConfig& cfg) {
  if (!(cfg.sigma > 0.0)) fail(ErrorCode::InvalidConfig, "sigma must be > 0");
  if (!(cfg.conf_threshold >= 0.0 && cfg.conf_threshold <= 1.0)) {
    fail(ErrorCode::InvalidConfig, "conf_threshold must be in [0, 1]");
  }
  if (cfg.max_peaks < 1) fail(ErrorCode::InvalidConfig, "max_peaks must be >= 1");
  if (cfg.closing.radius < 1) fail(ErrorCode::InvalidConfig, "closing radius must be >= 1");
  validate(cfg.crf);
  validate(cfg.watershed);
  validate(cfg.inpainting);
  for (const HsvRange* r : {&cfg.hsv.mask1, &cfg.hsv.mask2}) {
    for (const Hsv* h : {&r->lo, &r->hi}) {
      if (!(h->h >= 0.0F && h->h <= 360.0F && h->s >= 0.0F && h->s <= 1.0F && h->v >= 0.0F && h->v <= 1.0F)) {
        fail(ErrorCode::InvalidConfig, "hsv thresholds must have h in [0,360], s and v in [0,1]");
      }
    }
  }
}

PipelineConfig config_from_json(const Json& doc, PipelineConfig cfg) {
  apply(doc, "",
        {
            {"method",
             [&](const Json& v, const std::string& k) {
               if (!v.is_string()) bad(k, "expected a string");
               cfg.method = parse_method(v.get<std::string>());
             }},
            {"inpaint", [&](const Json& v, const std::string& k) { cfg.inpaint = as_bool(v, k); }},
            {"sigma", [&](const Json& v, const std::string& k) { cfg.sigma = as_number(v, k); }},
            {"conf_threshold", [&](const Json& v, const std::string& k) { cfg.conf_threshold = as_number(v, k); }},
            {"max_peaks", [&](const Json& v, const std::string& k) { cfg.max_peaks = as_int(v, k); }},
            {"closing",
             [&](const Json& v, const std::string& k) {
               apply(v, k,
                     {{"shape",
                       [&](const Json& j, const std::string& kk) {
                         if (j == "square") {
                           cfg.closing.shape = SeShape::Square;
                         } else if (j == "disk") {
                           cfg.closing.shape = SeShape::Disk;
                         } else {
                           bad(kk, "expected \"square\" or \"disk\"");
                         }
                       }},
                      {"radius", [&](const Json& j, const std::string& kk) { cfg.closing.radius = as_int(j, kk); }}});
             }},
            {"crf",
             [&](const Json& v, const std::string& k) {
               CrfParams& c = cfg.crf;
               apply(v, k,
                     {{"w_app", [&](const Json& j, const std::string& kk) { c.w_app = as_number(j, kk); }},
                      {"theta_alpha", [&](const Json& j, const std::string& kk) { c.theta_alpha = as_number(j, kk); }},
                      {"theta_beta", [&](const Json& j, const std::string& kk) { c.theta_beta = as_number(j, kk); }},
                      {"w_smooth", [&](const Json& j, const std::string& kk) { c.w_smooth = as_number(j, kk); }},
                      {"theta_gamma", [&](const Json& j, const std::string& kk) { c.theta_gamma = as_number(j, kk); }},
                      {"iterations", [&](const Json& j, const std::string& kk) { c.iterations = as_int(j, kk); }},
                      {"window_radius",
                       [&](const Json& j, const std::string& kk) { c.window_radius = as_int_or_auto(j, kk); }},
                      {"p_fg", [&](const Json& j, const std::string& kk) { c.p_fg = as_number(j, kk); }},
                      {"sample_stride",
                       [&](const Json& j, const std::string& kk) { c.sample_stride = as_int_or_auto(j, kk); }}});
             }},
            {"watershed",
             [&](const Json& v, const std::string& k) {
               WatershedParams& w = cfg.watershed;
               apply(v, k,
                     {{"alpha",
                       [&](const Json& j, const std::string& kk) {
                         if (j.is_string() && j.get<std::string>() == "auto") {
                           w.alpha.reset();
                         } else {
                           w.alpha = as_number(j, kk);
                         }
                       }},
                      {"peak_fraction",
                       [&](const Json& j, const std::string& kk) { w.peak_fraction = as_number(j, kk); }},
                      {"min_prominence",
                       [&](const Json& j, const std::string& kk) { w.min_prominence = as_number(j, kk); }},
                      {"expected_count",
                       [&](const Json& j, const std::string& kk) {
                         if (j.is_null()) {
                           w.expected_count.reset();
                         } else {
                           w.expected_count = as_int(j, kk);
                         }
                       }},
                      {"connectivity", [&](const Json& j, const std::string& kk) {
                         const int c = as_int(j, kk);
                         if (c != 4 && c != 8) bad(kk, "expected 4 or 8");
                         w.connectivity = c == 4 ? Connectivity::Four : Connectivity::Eight;
                       }}});
             }},
            {"hsv",
             [&](const Json& v, const std::string& k) {
               apply(v, k,
                     {{"mask1", [&](const Json& j, const std::string& kk) { apply_range(cfg.hsv.mask1, j, kk); }},
                      {"mask2", [&](const Json& j, const std::string& kk) { apply_range(cfg.hsv.mask2, j, kk); }}});
             }},
            {"inpainting",
             [&](const Json& v, const std::string& k) {
               InpaintConfig& ic = cfg.inpainting;
               apply(v, k,
                     {{"method",
                       [&](const Json& j, const std::string& kk) {
                         if (j == "navier_stokes") {
                           ic.method = InpaintMethod::NavierStokes;
                         } else if (j == "harmonic") {
                           ic.method = InpaintMethod::Harmonic;
                         } else {
                           bad(kk, "expected \"navier_stokes\" or \"harmonic\"");
                         }
                       }},
                      {"iterations", [&](const Json& j, const std::string& kk) { ic.iterations = as_int(j, kk); }},
                      {"dt", [&](const Json& j, const std::string& kk) { ic.dt = as_number(j, kk); }},
                      {"spot_value_threshold",
                       [&](const Json& j, const std::string& kk) { ic.spot_value_threshold = as_int(j, kk); }},
                      {"spot_dilation",
                       [&](const Json& j, const std::string& kk) { ic.spot_dilation = as_int(j, kk); }}});
             }},
        });
  validate(cfg);
  return cfg;
}

Json config_to_json(const PipelineConfig& cfg) {
  const CrfParams& c = cfg.crf;
  const WatershedParams& w = cfg.watershed;
  const InpaintConfig& ic = cfg.inpainting;
  Json doc;
  doc["method"] = std::string(to_string(cfg.method));
  doc["inpaint"] = cfg.inpaint;
  doc["sigma"] = round_significant(cfg.sigma);
  doc["conf_threshold"] = round_significant(cfg.conf_threshold);
  doc["max_peaks"] = cfg.max_peaks;
  doc["closing"] = {{"shape", cfg.closing.shape == SeShape::Square ? "square" : "disk"},
                    {"radius", cfg.closing.radius}};
  Json crf;
  crf["w_app"] = round_significant(c.w_app);
  crf["theta_alpha"] = round_significant(c.theta_alpha);
  crf["theta_beta"] = round_significant(c.theta_beta);
  crf["w_smooth"] = round_significant(c.w_smooth);
  crf["theta_gamma"] = round_significant(c.theta_gamma);
  crf["iterations"] = c.iterations;
  crf["window_radius"] = c.window_radius == 0 ? Json("auto") : Json(c.window_radius);
  crf["p_fg"] = round_significant(c.p_fg);
  crf["sample_stride"] = c.sample_stride == 0 ? Json("auto") : Json(c.sample_stride);
  doc["crf"] = std::move(crf);
  Json ws;
  ws["alpha"] = w.alpha ? Json(round_significant(*w.alpha)) : Json("auto");
  ws["peak_fraction"] = round_significant(w.peak_fraction);
  ws["min_prominence"] = round_significant(w.min_prominence);
  ws["expected_count"] = w.expected_count ? Json(*w.expected_count) : Json(nullptr);
  ws["connectivity"] = static_cast<int>(w.connectivity);
  doc["watershed"] = std::move(ws);
  doc["hsv"] = {{"mask1", {{"lo", hsv_json(cfg.hsv.mask1.lo)}, {"hi", hsv_json(cfg.hsv.mask1.hi)}}},
                {"mask2", {{"lo", hsv_json(cfg.hsv.mask2.lo)}, {"hi", hsv_json(cfg.hsv.mask2.hi)}}}};
  Json inp;
  inp["method"] = ic.method == InpaintMethod::NavierStokes ? "navier_stokes" : "harmonic";
  inp["iterations"] = ic.iterations;
  inp["dt"] = round_significant(ic.dt);
  inp["spot_value_threshold"] = ic.spot_value_threshold;
  inp["spot_dilation"] = ic.spot_dilation;
  doc["inpainting"] = std::move(inp);
  return doc;
}

PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base) {
  const Json doc = parse_json_file(path);
  try {
    return config_from_json(doc, std::move(base));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

}  // namespace toothseg
