#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "toothseg/keypoints.hpp"
#include "toothseg/metrics.hpp"

namespace toothseg {

enum class View { Lower, Front, Upper };

std::string_view to_string(View view);
View parse_view(std::string_view name);

/// mt19937_64 with hand-written uniform and Box-Muller normal draws, so a
/// seed produces the same stream with every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform();  // [0, 1)
  double uniform(double lo, double hi);
  int uniform_int(int lo, int hi);  // inclusive
  double normal(double mean = 0.0, double stddev = 1.0);
  bool chance(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

struct SynthConfig {
  View view = View::Lower;
  int size = 512;
  int teeth_min = 0;  // 0 = view default (10..16 jaw, 18..24 front)
  int teeth_max = 0;
  double color_jitter = 8.0;      // per-tooth RGB stddev
  double specular_prob = 0.3;     // per tooth
  double spot_radius_min = 1.5;   // px at 256, scaled with size
  double spot_radius_max = 3.0;
  double noise_std = 5.0;         // per-pixel RGB stddev
  double kp_jitter = 1.0;         // px at 256, scaled with size
  double illumination = 0.6;      // vignetting strength
  double sigma = kDefaultHeatmapSigma;
  int stack_channels = 8;
  double stack_noise = 0.12;
  int stack_artifacts = 2;        // spurious activation blobs
  double artifact_amplitude = 0.35;
  double drop_prob = 0.0;         // chance a tooth is missing from the heatmap
  int spurious_peaks = 0;         // extra heatmap peaks off the teeth
  std::uint64_t seed = 0;
};

void validate(const SynthConfig& cfg);

struct SyntheticScene {
  View view = View::Lower;
  ImageRGB image;
  BinaryMask gt_mask;
  LabelMap gt_labels;  // tooth i -> label i + 1
  std::vector<Keypoint> gt_keypoints;
  std::vector<Keypoint> tooth_centers;
  BinaryMask spots;
  std::vector<FeatureStack> stacks;  // strides 4, 4, 8
  HeatmapBundle bundle;              // stride 4
};

SyntheticScene generate_scene(const SynthConfig& cfg);

/// Seed of scene `index` of `view` in a dataset generated from `seed`.
std::uint64_t scene_seed(std::uint64_t seed, View view, int index);
std::string scene_id(View view, std::uint64_t seed, int index);

struct DatasetConfig {
  SynthConfig base;  // view and seed are overridden per scene
  std::vector<View> views{View::Lower};
  int count = 1;
  bool service_layout = false;  // also write images/ and sequences.json
};

/// Writes <id>.png, <id>_mask.png, <id>_kps.json, <id>_s{0,1,2}.fmap,
/// <id>_heat.fmap, <id>_offx.fmap, <id>_offy.fmap per scene plus
/// manifest.json and keypoints.json. Returns the manifest entries.
std::vector<ManifestEntry> generate_dataset(const DatasetConfig& cfg, const std::filesystem::path& out_dir);

/// Reloads a scene written by generate_dataset (view taken from the caller).
SyntheticScene load_scene(const std::filesystem::path& dir, const std::string& image_id, View view);

}  // namespace toothseg
