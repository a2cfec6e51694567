#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "toothseg/imaging.hpp"
#include "toothseg/report.hpp"

namespace toothseg {

struct MaskScore {
  double iou = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
};

/// Pixel-set scores; 0/0 gives 0 except IoU of two empty masks, which is 1.
MaskScore mask_score(const BinaryMask& pred, const BinaryMask& gt);

inline const std::vector<std::string> kViews = {"lower", "front", "upper"};

struct ManifestEntry {
  std::string image_id;
  std::string view;
};

/// {"images":[{"image_id": str, "view": str}]}
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
Json manifest_to_json(const std::vector<ManifestEntry>& entries);

struct ImageScore {
  std::string image_id;
  std::string view;
  MaskScore score;
  bool skipped = false;  // mask sizes differ; not part of any mean
  std::string error;
};

/// Mean of the four ratio metrics (pixel counts are summed).
struct MeanScore {
  double iou = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t count = 0;
};

MeanScore mean_score(const std::vector<const MaskScore*>& scores);

struct EvalReport {
  std::vector<ImageScore> per_image;
  std::vector<std::pair<std::string, MeanScore>> per_view;  // lower, front, upper order; present views only
  MeanScore overall;
};

EvalReport build_report(std::vector<ImageScore> rows);

/// Looks up `<id>_mask.png`, then `<id>.png`, in each directory. Throws
/// MissingMask naming the id and directory when neither exists.
std::filesystem::path find_mask_file(const std::filesystem::path& dir, const std::string& image_id);

EvalReport evaluate_dirs(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                         const std::vector<ManifestEntry>& manifest);

Json report_to_json(const EvalReport& report);

}  // namespace toothseg
