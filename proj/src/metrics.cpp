#include "toothseg/metrics.hpp"

#include <algorithm>

#include "toothseg/image_io.hpp"

namespace toothseg {

namespace {

double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

Json mean_json(const MeanScore& m) {
  return {{"iou", round_significant(m.iou)},
          {"precision", round_significant(m.precision)},
          {"recall", round_significant(m.recall)},
          {"f1", round_significant(m.f1)},
          {"count", m.count}};
}

}  // namespace

MaskScore mask_score(const BinaryMask& pred, const BinaryMask& gt) {
  if (!pred.same_size(gt)) {
    fail(ErrorCode::DimensionMismatch, "predicted mask is " + std::to_string(pred.width()) + "x" +
                                           std::to_string(pred.height()) + ", ground truth is " +
                                           std::to_string(gt.width()) + "x" + std::to_string(gt.height()));
  }
  MaskScore s;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] != 0, g = gt[i] != 0;
    s.tp += (p && g) ? 1 : 0;
    s.fp += (p && !g) ? 1 : 0;
    s.fn += (!p && g) ? 1 : 0;
  }
  const std::uint64_t uni = s.tp + s.fp + s.fn;
  s.iou = uni == 0 ? 1.0 : ratio(s.tp, uni);
  s.precision = ratio(s.tp, s.tp + s.fp);
  s.recall = ratio(s.tp, s.tp + s.fn);
  const double pr = s.precision + s.recall;
  s.f1 = pr > 0.0 ? 2.0 * s.precision * s.recall / pr : 0.0;
  return s;
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  const Json doc = parse_json_file(path);
  if (!doc.is_object() || !doc.contains("images") || !doc["images"].is_array()) {
    fail(ErrorCode::CorruptFile, path.string() + ": manifest needs an \"images\" array");
  }
  std::vector<ManifestEntry> entries;
  for (const Json& e : doc["images"]) {
    if (!e.is_object() || !e.contains("image_id") || !e["image_id"].is_string() || !e.contains("view") ||
        !e["view"].is_string()) {
      fail(ErrorCode::CorruptFile, path.string() + ": manifest entries need string image_id and view");
    }
    ManifestEntry entry{e["image_id"].get<std::string>(), e["view"].get<std::string>()};
    if (std::find(kViews.begin(), kViews.end(), entry.view) == kViews.end()) {
      fail(ErrorCode::CorruptFile, path.string() + ": image " + entry.image_id + " has unknown view '" +
                                       entry.view + "' (expected lower, front or upper)");
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

Json manifest_to_json(const std::vector<ManifestEntry>& entries) {
  Json images = Json::array();
  for (const ManifestEntry& e : entries) images.push_back({{"image_id", e.image_id}, {"view", e.view}});
  return {{"images", std::move(images)}};
}

MeanScore mean_score(const std::vector<const MaskScore*>& scores) {
  MeanScore m;
  m.count = scores.size();
  if (scores.empty()) return m;
  for (const MaskScore* s : scores) {
    m.iou += s->iou;
    m.precision += s->precision;
    m.recall += s->recall;
    m.f1 += s->f1;
  }
  const auto n = static_cast<double>(scores.size());
  m.iou /= n;
  m.precision /= n;
  m.recall /= n;
  m.f1 /= n;
  return m;
}

EvalReport build_report(std::vector<ImageScore> rows) {
  EvalReport report;
  report.per_image = std::move(rows);
  std::vector<const MaskScore*> all;
  for (const std::string& view : kViews) {
    std::vector<const MaskScore*> subset;
    bool present = false;
    for (const ImageScore& row : report.per_image) {
      if (row.view != view) continue;
      present = true;
      if (!row.skipped) subset.push_back(&row.score);
    }
    if (present) report.per_view.emplace_back(view, mean_score(subset));
    all.insert(all.end(), subset.begin(), subset.end());
  }
  report.overall = mean_score(all);
  return report;
}

std::filesystem::path find_mask_file(const std::filesystem::path& dir, const std::string& image_id) {
  for (const std::string& name : {image_id + "_mask.png", image_id + ".png"}) {
    const std::filesystem::path p = dir / name;
    if (std::filesystem::is_regular_file(p)) return p;
  }
  fail(ErrorCode::MissingMask, "no mask for image '" + image_id + "' in " + dir.string());
}

EvalReport evaluate_dirs(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                         const std::vector<ManifestEntry>& manifest) {
  std::vector<ImageScore> rows;
  rows.reserve(manifest.size());
  for (const ManifestEntry& e : manifest) {
    const BinaryMask pred = load_mask(find_mask_file(pred_dir, e.image_id));
    const BinaryMask gt = load_mask(find_mask_file(gt_dir, e.image_id));
    ImageScore row{e.image_id, e.view, {}, false, {}};
    try {
      row.score = mask_score(pred, gt);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::DimensionMismatch) throw;
      row.skipped = true;
      row.error = err.detail();
    }
    rows.push_back(std::move(row));
  }
  return build_report(std::move(rows));
}

Json report_to_json(const EvalReport& report) {
  Json rows = Json::array();
  for (const ImageScore& r : report.per_image) {
    Json row = {{"image_id", r.image_id}, {"view", r.view}};
    if (r.skipped) {
      row["skipped"] = true;
      row["error"] = r.error;
    } else {
      row["iou"] = round_significant(r.score.iou);
      row["precision"] = round_significant(r.score.precision);
      row["recall"] = round_significant(r.score.recall);
      row["f1"] = round_significant(r.score.f1);
    }
    rows.push_back(std::move(row));
  }
  Json per_view = Json::object();
  for (const auto& [view, m] : report.per_view) per_view[view] = mean_json(m);
  return {{"per_image", std::move(rows)}, {"per_view", std::move(per_view)}, {"overall", mean_json(report.overall)}};
}

}  // namespace toothseg
