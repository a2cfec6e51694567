#include "toothseg/pipeline.hpp"

#include <string>

#include "toothseg/fusion.hpp"
#include "toothseg/image_io.hpp"

namespace toothseg {

bool in_range(const Hsv& px, const HsvRange& range) {
  const bool hue_ok = range.lo.h <= range.hi.h ? (px.h >= range.lo.h && px.h <= range.hi.h)
                                                : (px.h >= range.lo.h || px.h <= range.hi.h);
  return hue_ok && px.s >= range.lo.s && px.s <= range.hi.s && px.v >= range.lo.v && px.v <= range.hi.v;
}

ImageRGB preprocess(const ImageRGB& img, const PipelineConfig& cfg) {
  if (!cfg.inpaint) return img;
  return inpaint(img, detect_bright_spots(img, cfg.inpainting), cfg.inpainting);
}

namespace {

SegmentationResult empty_result(int w, int h, std::string reason, StageArtifacts artifacts = {}) {
  SegmentationResult r;
  r.mask = BinaryMask(w, h);
  r.labels = LabelMap(w, h, 0);
  r.empty = true;
  r.empty_reason = std::move(reason);
  r.artifacts = std::move(artifacts);
  return r;
}

// Otsu on an 8-bit image; nullopt when the image is constant.
std::optional<BinaryMask> otsu_mask(const GrayImage& gray) {
  try {
    return threshold_above(gray, otsu_threshold(gray));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConstantInput) return std::nullopt;
    throw;
  }
}

void finish_from_components(SegmentationResult& r) {
  Components comps = connected_components(r.mask, Connectivity::Eight);
  r.labels = std::move(comps.labels);
  r.label_count = comps.count;
  r.empty = r.label_count == 0;
  if (r.empty) r.empty_reason = "no foreground pixels";
}

// Distance -> boost -> markers -> flood, shared by the full method and the
// prompted mode. `fg` must be nonempty.
void split_teeth(SegmentationResult& r, const BinaryMask& fg, const ScalarMap& heat,
                 std::span<const Keypoint> keypoints, const WatershedParams& params) {
  ScalarMap dist = distance_transform(fg);
  ScalarMap boosted = boost_topography(dist, heat, params.alpha);
  MarkerSet markers = select_markers(boosted, fg, keypoints, params);
  LabelMap flooded = watershed_flood(boosted, markers.labels, fg, params.connectivity, markers.background_label);

  r.mask = labels_to_mask(flooded, markers.background_label);
  r.labels = flooded;
  for (std::uint32_t& v : r.labels.pixels()) {
    if (v == markers.background_label) v = 0;
  }
  r.label_count = markers.tooth_count;
  r.empty = r.label_count == 0 || count_foreground(r.mask) == 0;
  if (r.empty) r.empty_reason = "no tooth markers";

  r.artifacts.distance = std::move(dist);
  r.artifacts.boosted = std::move(boosted);
  r.artifacts.markers = std::move(markers.labels);
  r.artifacts.labels = r.labels;
}

}  // namespace

SegmentationResult segment_ours(const ImageRGB& img, std::span<const FeatureStack> stacks,
                                const HeatmapBundle& bundle, const PipelineConfig& cfg) {
  validate(cfg);
  validate_bundle(bundle);
  const int w = img.width(), h = img.height();
  if (bundle.input_width() != w || bundle.input_height() != h) {
    fail(ErrorCode::DimensionMismatch, "heatmap grid " + std::to_string(bundle.heatmap.width()) + "x" +
                                           std::to_string(bundle.heatmap.height()) + " at stride " +
                                           std::to_string(bundle.stride) + " does not cover a " +
                                           std::to_string(w) + "x" + std::to_string(h) + " image");
  }
  const ImageRGB clean = preprocess(img, cfg);

  StageArtifacts art;
  art.fused = fuse(stacks, w, h);
  const std::optional<BinaryMask> coarse = otsu_mask(quantize_unit_map(*art.fused));
  if (!coarse) return empty_result(w, h, "fused feature map is constant", std::move(art));
  art.otsu_mask = *coarse;
  art.closed = morphology(*coarse, MorphOp::Close, cfg.closing);
  art.crf_mask = refine(clean, unary_from_mask(*art.closed, cfg.crf.p_fg), cfg.crf);

  SegmentationResult r;
  r.keypoints = decode_heatmap(bundle, cfg.conf_threshold, cfg.max_peaks);
  r.artifacts = std::move(art);
  const BinaryMask& fg = *r.artifacts.crf_mask;
  if (count_foreground(fg) == 0) {
    auto keypoints = std::move(r.keypoints);
    r = empty_result(w, h, "CRF removed all foreground", std::move(r.artifacts));
    r.keypoints = std::move(keypoints);
    return r;
  }
  const ScalarMap heat = bilinear_resize(bundle.heatmap, w, h);
  split_teeth(r, fg, heat, r.keypoints, cfg.watershed);
  return r;
}

SegmentationResult segment_otsu_baseline(const ImageRGB& img, const PipelineConfig& cfg) {
  validate(cfg);
  const ImageRGB clean = preprocess(img, cfg);
  const std::optional<BinaryMask> coarse = otsu_mask(rgb_to_gray(clean));
  if (!coarse) return empty_result(img.width(), img.height(), "image is constant");

  SegmentationResult r;
  r.artifacts.otsu_mask = *coarse;
  r.artifacts.closed = morphology(*coarse, MorphOp::Close, cfg.closing);
  r.mask = fill_holes(*r.artifacts.closed);
  finish_from_components(r);
  r.artifacts.labels = r.labels;
  return r;
}

SegmentationResult segment_hsv_baseline(const ImageRGB& img, const PipelineConfig& cfg) {
  validate(cfg);
  const HsvImage hsv = rgb_to_hsv(preprocess(img, cfg));
  BinaryMask merged(img.width(), img.height());
  for (std::size_t i = 0; i < hsv.size(); ++i) {
    merged[i] = (in_range(hsv[i], cfg.hsv.mask1) || in_range(hsv[i], cfg.hsv.mask2)) ? 1 : 0;
  }
  SegmentationResult r;
  r.artifacts.otsu_mask = merged;
  r.mask = morphology(merged, MorphOp::Close, cfg.closing);
  r.artifacts.closed = r.mask;
  finish_from_components(r);
  r.artifacts.labels = r.labels;
  return r;
}

SegmentationResult keypoint_prompted_segment(const ImageRGB& img, std::span<const Keypoint> keypoints,
                                             const PipelineConfig& cfg) {
  validate(cfg);
  if (keypoints.empty()) fail(ErrorCode::NoKeypoints, "prompted segmentation needs at least one keypoint");
  const int w = img.width(), h = img.height();
  const HeatmapBundle prompts = render_heatmap(keypoints, w, h, 1, cfg.sigma);

  const ImageRGB clean = preprocess(img, cfg);
  const std::optional<BinaryMask> coarse = otsu_mask(rgb_to_gray(clean));
  if (!coarse) return empty_result(w, h, "image is constant");

  SegmentationResult r;
  r.keypoints.assign(keypoints.begin(), keypoints.end());
  r.artifacts.otsu_mask = *coarse;
  r.artifacts.closed = morphology(*coarse, MorphOp::Close, cfg.closing);
  const BinaryMask& fg = *r.artifacts.closed;
  if (count_foreground(fg) == 0) {
    auto art = std::move(r.artifacts);
    return empty_result(w, h, "no foreground pixels", std::move(art));
  }
  WatershedParams params = cfg.watershed;
  params.expected_count = static_cast<int>(keypoints.size());
  split_teeth(r, fg, prompts.heatmap, keypoints, params);
  return r;
}

void write_debug_artifacts(const StageArtifacts& a, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create debug directory " + dir.string() + ": " + ec.message());
  auto scalar = [&](const std::optional<ScalarMap>& m, const std::string& stem) {
    if (!m) return;
    write_fmap(*m, dir / (stem + ".fmap"));
    save_scalar_png(*m, dir / (stem + ".png"));
  };
  auto mask = [&](const std::optional<BinaryMask>& m, const std::string& stem) {
    if (m) save_mask(*m, dir / (stem + ".png"));
  };
  auto labels = [&](const std::optional<LabelMap>& m, const std::string& stem) {
    if (m) save_label_png(*m, dir / (stem + ".png"));
  };
  scalar(a.fused, "01_fused");
  mask(a.otsu_mask, "02_otsu");
  mask(a.closed, "03_closed");
  mask(a.crf_mask, "04_crf");
  scalar(a.distance, "05_distance");
  scalar(a.boosted, "06_boosted");
  labels(a.markers, "07_markers");
  labels(a.labels, "08_labels");
}

}  // namespace toothseg
