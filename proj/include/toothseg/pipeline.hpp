#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "toothseg/classical.hpp"
#include "toothseg/crf.hpp"
#include "toothseg/inpaint.hpp"
#include "toothseg/keypoints.hpp"
#include "toothseg/report.hpp"
#include "toothseg/watershed.hpp"

namespace toothseg {

enum class Method { Ours, OtsuBaseline, HsvBaseline };

std::string_view to_string(Method method);
Method parse_method(std::string_view name);

/// Inclusive HSV box. A hue range with lo > hi wraps through 0 degrees.
struct HsvRange {
  Hsv lo;
  Hsv hi;
};

bool in_range(const Hsv& px, const HsvRange& range);

struct HsvThresholds {
  HsvRange mask1{{0.0F, 0.0F, 0.62F}, {360.0F, 0.30F, 1.0F}};   // bright, weakly saturated enamel
  HsvRange mask2{{15.0F, 0.02F, 0.45F}, {75.0F, 0.30F, 1.0F}};  // warmer, darker enamel
};

struct PipelineConfig {
  Method method = Method::Ours;
  bool inpaint = false;
  double sigma = kDefaultHeatmapSigma;  // heatmap cells; prompt heatmaps use stride 1
  double conf_threshold = kDefaultConfThreshold;
  int max_peaks = kDefaultMaxPeaks;
  StructuringElement closing;
  CrfParams crf;
  WatershedParams watershed;
  HsvThresholds hsv;
  InpaintConfig inpainting;
};

void validate(const PipelineConfig& cfg);

/// Unknown keys and ill-typed values raise InvalidConfig.
PipelineConfig config_from_json(const Json& doc, PipelineConfig base = {});
Json config_to_json(const PipelineConfig& cfg);
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});

struct StageArtifacts {
  std::optional<ScalarMap> fused;
  std::optional<BinaryMask> otsu_mask;
  std::optional<BinaryMask> closed;
  std::optional<BinaryMask> crf_mask;
  std::optional<ScalarMap> distance;
  std::optional<ScalarMap> boosted;
  std::optional<LabelMap> markers;
  std::optional<LabelMap> labels;
};

/// Writes every captured stage as 01_fused.* .. 08_labels.* into dir.
void write_debug_artifacts(const StageArtifacts& artifacts, const std::filesystem::path& dir);

struct SegmentationResult {
  BinaryMask mask;
  LabelMap labels;  // 0 = background, 1..label_count = teeth / components
  std::uint32_t label_count = 0;
  bool empty = false;  // the method produced no foreground (e.g. constant input)
  std::string empty_reason;
  std::vector<Keypoint> keypoints;  // decoded or prompted keypoints, when used
  StageArtifacts artifacts;
};

SegmentationResult segment_ours(const ImageRGB& img, std::span<const FeatureStack> stacks,
                                const HeatmapBundle& bundle, const PipelineConfig& cfg);
SegmentationResult segment_otsu_baseline(const ImageRGB& img, const PipelineConfig& cfg);
SegmentationResult segment_hsv_baseline(const ImageRGB& img, const PipelineConfig& cfg);

/// Otsu foreground (no hole filling) split by a watershed seeded from the
/// given keypoints; expected_count = number of keypoints. Throws NoKeypoints.
SegmentationResult keypoint_prompted_segment(const ImageRGB& img, std::span<const Keypoint> keypoints,
                                             const PipelineConfig& cfg);

/// Applies the configured bright-spot inpainting when cfg.inpaint is set.
ImageRGB preprocess(const ImageRGB& img, const PipelineConfig& cfg);

}  // namespace toothseg
