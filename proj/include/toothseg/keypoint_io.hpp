#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "toothseg/keypoints.hpp"
#include "toothseg/report.hpp"

namespace toothseg {

/// One image's keypoints in the list file
/// {"images":[{"image_id":"...","keypoints":[[x,y],...]}]}.
struct KeypointSet {
  std::string image_id;
  std::vector<Keypoint> keypoints;
};

std::vector<KeypointSet> keypoint_sets_from_json(const Json& doc);
Json keypoint_sets_to_json(std::span<const KeypointSet> sets);

std::vector<KeypointSet> read_keypoint_file(const std::filesystem::path& path);
void write_keypoint_file(const std::filesystem::path& path, std::span<const KeypointSet> sets);

}  // namespace toothseg
