#include "toothseg/keypoint_io.hpp"

#include <cmath>

namespace toothseg {

std::vector<KeypointSet> keypoint_sets_from_json(const Json& doc) {
  if (!doc.is_object() || !doc.contains("images") || !doc["images"].is_array()) {
    fail(ErrorCode::CorruptFile, "keypoint file needs an \"images\" array");
  }
  std::vector<KeypointSet> sets;
  for (const Json& entry : doc["images"]) {
    if (!entry.is_object() || !entry.contains("image_id") || !entry["image_id"].is_string() ||
        !entry.contains("keypoints") || !entry["keypoints"].is_array()) {
      fail(ErrorCode::CorruptFile, "keypoint entry needs image_id and keypoints");
    }
    KeypointSet set;
    set.image_id = entry["image_id"].get<std::string>();
    for (const Json& pt : entry["keypoints"]) {
      if (!pt.is_array() || pt.size() < 2 || pt.size() > 3 || !pt[0].is_number() || !pt[1].is_number()) {
        fail(ErrorCode::CorruptFile, "keypoint must be [x, y] or [x, y, score] in image " + set.image_id);
      }
      Keypoint kp{pt[0].get<double>(), pt[1].get<double>(), pt.size() == 3 ? pt[2].get<double>() : 1.0};
      if (!std::isfinite(kp.x) || !std::isfinite(kp.y)) fail(ErrorCode::CorruptFile, "non-finite keypoint");
      set.keypoints.push_back(kp);
    }
    sets.push_back(std::move(set));
  }
  return sets;
}

Json keypoint_sets_to_json(std::span<const KeypointSet> sets) {
  Json images = Json::array();
  for (const KeypointSet& set : sets) {
    Json points = Json::array();
    for (const Keypoint& kp : set.keypoints) {
      points.push_back(Json::array({round_significant(kp.x), round_significant(kp.y)}));
    }
    images.push_back({{"image_id", set.image_id}, {"keypoints", std::move(points)}});
  }
  return {{"images", std::move(images)}};
}

std::vector<KeypointSet> read_keypoint_file(const std::filesystem::path& path) {
  const Json doc = parse_json_file(path);
  try {
    return keypoint_sets_from_json(doc);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

void write_keypoint_file(const std::filesystem::path& path, std::span<const KeypointSet> sets) {
  write_report(path, keypoint_sets_to_json(sets));
}

}  // namespace toothseg
