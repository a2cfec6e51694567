#include "toothseg/cli.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "toothseg/image_io.hpp"
#include "toothseg/keypoint_io.hpp"
#include "toothseg/metrics.hpp"
#include "toothseg/pipeline.hpp"
#include "toothseg/service.hpp"
#include "toothseg/synth.hpp"

namespace toothseg {

namespace {

// Error raised inside a named processing stage.
class StageError : public std::runtime_error {
 public:
  StageError(const std::string& stage, const Error& cause)
      : std::runtime_error("stage '" + stage + "' failed: " + cause.what()) {}
};

template <typename F>
auto stage(const std::string& name, F&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw StageError(name, e);
  }
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

unsigned default_jobs() { return std::max(1U, std::thread::hardware_concurrency()); }

// Runs fn(i) for i in [0, n) on `jobs` workers; the first failure is rethrown.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max(1U, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        const std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

struct SegmentInputs {
  std::vector<std::filesystem::path> features;
  std::filesystem::path heatmap;
  std::vector<std::filesystem::path> offsets;
  int stride = 4;
};

HeatmapBundle load_bundle(const SegmentInputs& in) {
  HeatmapBundle bundle;
  bundle.stride = in.stride;
  bundle.heatmap = read_scalar_fmap(in.heatmap);
  if (in.offsets.empty()) {
    bundle.offset_x = ScalarMap(bundle.heatmap.width(), bundle.heatmap.height(), 0.0F);
    bundle.offset_y = bundle.offset_x;
  } else {
    bundle.offset_x = read_scalar_fmap(in.offsets.at(0));
    bundle.offset_y = read_scalar_fmap(in.offsets.at(1));
  }
  validate_bundle(bundle);
  return bundle;
}

SegmentationResult run_method(const ImageRGB& img, const SegmentInputs& in, const PipelineConfig& cfg) {
  if (cfg.method == Method::OtsuBaseline) return stage("otsu baseline", [&] { return segment_otsu_baseline(img, cfg); });
  if (cfg.method == Method::HsvBaseline) return stage("hsv baseline", [&] { return segment_hsv_baseline(img, cfg); });
  const std::vector<FeatureStack> stacks = stage("load features", [&] {
    std::vector<FeatureStack> s;
    for (const auto& p : in.features) s.push_back(read_fmap(p));
    return s;
  });
  const HeatmapBundle bundle = stage("load heatmap", [&] { return load_bundle(in); });
  return stage("segmentation", [&] { return segment_ours(img, stacks, bundle, cfg); });
}

// Synthetic-dataset naming: <id>_s0.fmap, <id>_s1.fmap, ..., <id>_heat.fmap, <id>_offx/_offy.fmap.
SegmentInputs dataset_inputs(const std::filesystem::path& dir, const std::string& id, int stride) {
  SegmentInputs in;
  for (int s = 0;; ++s) {
    const auto p = dir / (id + "_s" + std::to_string(s) + ".fmap");
    if (!std::filesystem::exists(p)) break;
    in.features.push_back(p);
  }
  in.heatmap = dir / (id + "_heat.fmap");
  in.offsets = {dir / (id + "_offx.fmap"), dir / (id + "_offy.fmap")};
  in.stride = stride;
  return in;
}

Json keypoint_report(const std::vector<KeypointSet>& gt, const std::vector<KeypointSet>& pred, int t_max,
                     std::vector<MatchResult>& matches) {
  std::map<std::string, const KeypointSet*> by_id;
  for (const KeypointSet& p : pred) {
    if (!by_id.emplace(p.image_id, &p).second) {
      fail(ErrorCode::CorruptFile, "prediction file lists image " + p.image_id + " twice");
    }
  }
  for (const KeypointSet& p : pred) {
    const bool known = std::any_of(gt.begin(), gt.end(), [&](const KeypointSet& g) { return g.image_id == p.image_id; });
    if (!known) fail(ErrorCode::CorruptFile, "prediction for unknown image " + p.image_id);
  }

  Json per_image = Json::array();
  std::vector<double> distances;
  std::size_t unmatched_pred = 0, unmatched_gt = 0;
  for (const KeypointSet& g : gt) {
    const auto it = by_id.find(g.image_id);
    const std::vector<Keypoint> none;
    const std::vector<Keypoint>& p = it == by_id.end() ? none : it->second->keypoints;
    MatchResult m = match_keypoints(p, g.keypoints);
    Json row = {{"image_id", g.image_id}, {"pairs", m.pairs.size()}};
    if (!m.pairs.empty()) {
      const DistanceStats st = distance_stats(m);
      row["mean_distance"] = round_significant(st.mean);
      row["median_distance"] = round_significant(st.median);
    } else {
      row["mean_distance"] = nullptr;
      row["median_distance"] = nullptr;
    }
    row["unmatched_pred"] = m.unmatched_pred.size();
    row["unmatched_gt"] = m.unmatched_gt.size();
    per_image.push_back(std::move(row));
    for (const MatchPair& pair : m.pairs) distances.push_back(pair.distance);
    unmatched_pred += m.unmatched_pred.size();
    unmatched_gt += m.unmatched_gt.size();
    matches.push_back(std::move(m));
  }

  Json doc;
  doc["images"] = gt.size();
  doc["pairs"] = distances.size();
  if (distances.empty()) {
    doc["mean_distance"] = nullptr;
    doc["median_distance"] = nullptr;
  } else {
    const DistanceStats st = distance_stats(distances);
    doc["mean_distance"] = round_significant(st.mean);
    doc["median_distance"] = round_significant(st.median);
  }
  doc["unmatched_pred"] = unmatched_pred;
  doc["unmatched_gt"] = unmatched_gt;
  const ThresholdSweep sweep = threshold_sweep(std::span<const MatchResult>(matches), t_max);
  Json rows = Json::array();
  for (std::size_t i = 0; i < sweep.thresholds.size(); ++i) {
    rows.push_back({{"threshold", round_significant(sweep.thresholds[i])},
                    {"precision", round_significant(sweep.precision[i])},
                    {"recall", round_significant(sweep.recall[i])},
                    {"f1", round_significant(sweep.f1[i])}});
  }
  doc["sweep"] = std::move(rows);
  doc["per_image"] = std::move(per_image);
  return doc;
}

std::string sweep_csv(const Json& report) {
  std::string csv = "threshold,precision,recall,f1\n";
  for (const Json& r : report["sweep"]) {
    csv += format_number(r["threshold"].get<double>()) + "," + format_number(r["precision"].get<double>()) + "," +
           format_number(r["recall"].get<double>()) + "," + format_number(r["f1"].get<double>()) + "\n";
  }
  return csv;
}

std::string masks_csv(const EvalReport& report) {
  std::string csv = "image_id,view,iou,precision,recall,f1\n";
  for (const ImageScore& r : report.per_image) {
    if (r.skipped) continue;
    csv += r.image_id + "," + r.view + "," + format_number(r.score.iou) + "," + format_number(r.score.precision) +
           "," + format_number(r.score.recall) + "," + format_number(r.score.f1) + "\n";
  }
  return csv;
}

// Output files may name directories that do not exist yet.
const std::filesystem::path& with_parent(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  return path;
}

void save_any_image(const ImageRGB& img, const std::filesystem::path& path) {
  if (path.extension() == ".ppm") {
    save_ppm(img, path);
  } else {
    save_image(img, path);
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Weakly supervised teeth segmentation toolkit", "toothseg"};
  app.set_version_flag("--version", std::string(TOOTHSEG_VERSION));
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dental dataset");
  std::filesystem::path synth_out;
  DatasetConfig dataset;
  std::string synth_views = "lower";
  dataset.base.size = 512;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--count", dataset.count, "Scenes per view")->capture_default_str();
  synth->add_option("--seed", dataset.base.seed, "Dataset seed")->capture_default_str();
  synth->add_option("--views", synth_views, "Comma-separated views: lower,front,upper")->capture_default_str();
  synth->add_option("--size", dataset.base.size, "Image size in px (multiple of 8)")->capture_default_str();
  synth->add_option("--teeth-min", dataset.base.teeth_min, "Minimum teeth per image (0 = view default)")
      ->capture_default_str();
  synth->add_option("--teeth-max", dataset.base.teeth_max, "Maximum teeth per image (0 = view default)")
      ->capture_default_str();
  synth->add_option("--specular-prob", dataset.base.specular_prob, "Chance of a highlight per tooth")
      ->capture_default_str();
  synth->add_option("--noise", dataset.base.noise_std, "Pixel noise stddev")->capture_default_str();
  synth->add_option("--sigma", dataset.base.sigma, "Heatmap Gaussian sigma in cells")->capture_default_str();
  synth->add_flag("--service-layout", dataset.service_layout, "Also write images/ and sequences.json for serve");

  // segment
  auto* segment = app.add_subcommand("segment", "Segment one image, or every image of a manifest");
  std::filesystem::path seg_image, seg_config, seg_out, seg_labels, seg_debug;
  std::filesystem::path seg_manifest, seg_data_dir, seg_out_dir;
  std::string seg_method;
  bool seg_inpaint = false;
  unsigned seg_jobs = default_jobs();
  SegmentInputs seg_inputs;
  segment->add_option("--image", seg_image, "Input image (PNG or PPM)");
  segment->add_option("--method", seg_method, "ours | otsu | hsv (default: config, else ours)")
      ->check(CLI::IsMember({"ours", "otsu", "hsv"}));
  segment->add_option("--features", seg_inputs.features, "Feature stack FMAP files (method ours)");
  segment->add_option("--heatmap", seg_inputs.heatmap, "Keypoint heatmap FMAP (method ours)");
  segment->add_option("--offsets", seg_inputs.offsets, "Offset maps OX.fmap OY.fmap")->expected(2);
  segment->add_option("--stride", seg_inputs.stride, "Heatmap stride in px")->capture_default_str();
  segment->add_flag("--inpaint", seg_inpaint, "Inpaint bright spots first");
  segment->add_option("--config", seg_config, "Pipeline config JSON");
  segment->add_option("--out", seg_out, "Output mask PNG");
  segment->add_option("--labels", seg_labels, "Output 16-bit label PNG");
  segment->add_option("--debug-dir", seg_debug, "Write every intermediate stage here");
  segment->add_option("--manifest", seg_manifest, "Batch mode: manifest JSON");
  segment->add_option("--data-dir", seg_data_dir, "Batch mode: dataset directory (default: manifest's directory)");
  segment->add_option("--out-dir", seg_out_dir, "Batch mode: directory for <id>.png masks");
  segment->add_option("--jobs", seg_jobs, "Batch mode: worker threads")->capture_default_str();

  // inpaint
  auto* inpaint_cmd = app.add_subcommand("inpaint", "Remove bright specular spots from an image");
  std::filesystem::path inp_image, inp_out, inp_config, inp_spots;
  inpaint_cmd->add_option("--image", inp_image, "Input image")->required();
  inpaint_cmd->add_option("--out", inp_out, "Output image (.png or .ppm)")->required();
  inpaint_cmd->add_option("--config", inp_config, "Pipeline config JSON (inpainting section)");
  inpaint_cmd->add_option("--spots", inp_spots, "Also write the detected spot mask");

  // eval-masks
  auto* eval_masks = app.add_subcommand("eval-masks", "Score predicted masks against ground truth");
  std::filesystem::path em_pred, em_gt, em_manifest, em_report, em_csv;
  eval_masks->add_option("--pred", em_pred, "Directory of predicted masks")->required();
  eval_masks->add_option("--gt", em_gt, "Directory of ground-truth masks")->required();
  eval_masks->add_option("--manifest", em_manifest, "Manifest JSON")->required();
  eval_masks->add_option("--report", em_report, "Report JSON")->required();
  eval_masks->add_option("--csv", em_csv, "Optional per-image CSV");

  // eval-keypoints
  auto* eval_kps = app.add_subcommand("eval-keypoints", "Match keypoints and sweep distance thresholds");
  std::filesystem::path ek_pred, ek_gt, ek_report, ek_csv;
  int ek_tmax = 29;
  eval_kps->add_option("--pred", ek_pred, "Predicted keypoints JSON")->required();
  eval_kps->add_option("--gt", ek_gt, "Ground-truth keypoints JSON")->required();
  eval_kps->add_option("--t-max", ek_tmax, "Largest distance threshold (px)")->capture_default_str()->check(
      CLI::NonNegativeNumber);
  eval_kps->add_option("--report", ek_report, "Report JSON")->required();
  eval_kps->add_option("--csv", ek_csv, "Optional sweep CSV");

  // serve
  auto* serve = app.add_subcommand("serve", "Run the annotation and segmentation HTTP service");
  int port = 8080;
  std::string host = "127.0.0.1";
  std::filesystem::path serve_data, serve_config, serve_static;
  serve->add_option("--port", port, "TCP port")->capture_default_str();
  serve->add_option("--host", host, "Bind address")->capture_default_str();
  serve->add_option("--data-dir", serve_data, "Data directory (images/, sequences.json, annotations/)")->required();
  serve->add_option("--config", serve_config, "Pipeline config JSON");
  serve->add_option("--static", serve_static, "Directory of UI assets to serve at /");

  // config
  auto* config_cmd = app.add_subcommand("config", "Write the default pipeline config");
  std::filesystem::path cfg_out;
  config_cmd->add_option("--out", cfg_out, "Output JSON file")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << TOOTHSEG_VERSION << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "toothseg: " << e.what() << "\n";
    const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return 1;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  auto usage = [&](const std::string& message) {
    err << "toothseg " << command << ": " << message << "\n" << app.get_subcommands().front()->help();
    return 1;
  };

  try {
    if (command == "synth") {
      dataset.views.clear();
      for (const std::string& v : split_list(synth_views)) dataset.views.push_back(parse_view(v));
      const auto manifest = stage("synthesis", [&] { return generate_dataset(dataset, synth_out); });
      out << "wrote " << manifest.size() << " scenes to " << synth_out.string() << "\n";
      return 0;
    }

    if (command == "segment") {
      PipelineConfig cfg;
      if (!seg_config.empty()) cfg = stage("load config", [&] { return load_config(seg_config); });
      if (!seg_method.empty()) cfg.method = parse_method(seg_method);
      if (seg_inpaint) cfg.inpaint = true;

      if (!seg_manifest.empty()) {
        if (seg_out_dir.empty()) return usage("--out-dir is required with --manifest");
        const std::filesystem::path data = seg_data_dir.empty() ? seg_manifest.parent_path() : seg_data_dir;
        const auto entries = stage("load manifest", [&] { return read_manifest(seg_manifest); });
        std::filesystem::create_directories(seg_out_dir);
        std::vector<std::string> empty_ids(entries.size());
        parallel_for(entries.size(), seg_jobs, [&](std::size_t i) {
          const std::string& id = entries[i].image_id;
          const ImageRGB img = stage("load image " + id, [&] { return load_image(data / (id + ".png")); });
          const SegmentationResult r = run_method(img, dataset_inputs(data, id, seg_inputs.stride), cfg);
          stage("write mask " + id, [&] {
            save_mask(r.mask, seg_out_dir / (id + ".png"));
            return 0;
          });
          if (r.empty) empty_ids[i] = id;
        });
        for (const std::string& id : empty_ids) {
          if (!id.empty()) err << "note: " << id << " produced an empty segmentation\n";
        }
        out << "segmented " << entries.size() << " images into " << seg_out_dir.string() << "\n";
        return 0;
      }

      if (seg_image.empty()) return usage("--image is required (or --manifest for batch mode)");
      if (cfg.method == Method::Ours) {
        if (seg_inputs.features.empty()) return usage("--features is required for method ours");
        if (seg_inputs.heatmap.empty()) return usage("--heatmap is required for method ours");
      }
      const ImageRGB img = stage("load image", [&] { return load_image(seg_image); });
      const SegmentationResult r = run_method(img, seg_inputs, cfg);
      const std::filesystem::path mask_path =
          seg_out.empty() ? std::filesystem::path(seg_image.stem().string() + "_mask.png") : seg_out;
      stage("write outputs", [&] {
        save_mask(r.mask, with_parent(mask_path));
        if (!seg_labels.empty()) save_label_png(r.labels, with_parent(seg_labels));
        if (!seg_debug.empty()) write_debug_artifacts(r.artifacts, seg_debug);
        return 0;
      });
      if (r.empty) err << "note: empty segmentation (" << r.empty_reason << ")\n";
      out << "wrote " << mask_path.string() << " (" << r.label_count << " regions)\n";
      return 0;
    }

    if (command == "inpaint") {
      PipelineConfig cfg;
      if (!inp_config.empty()) cfg = stage("load config", [&] { return load_config(inp_config); });
      const ImageRGB img = stage("load image", [&] { return load_image(inp_image); });
      const BinaryMask spots = stage("detect spots", [&] { return detect_bright_spots(img, cfg.inpainting); });
      const ImageRGB filled = stage("inpainting", [&] { return inpaint(img, spots, cfg.inpainting); });
      stage("write outputs", [&] {
        save_any_image(filled, with_parent(inp_out));
        if (!inp_spots.empty()) save_mask(spots, with_parent(inp_spots));
        return 0;
      });
      out << "inpainted " << count_foreground(spots) << " spot pixels into " << inp_out.string() << "\n";
      return 0;
    }

    if (command == "eval-masks") {
      const auto entries = stage("load manifest", [&] { return read_manifest(em_manifest); });
      const EvalReport report = stage("evaluation", [&] { return evaluate_dirs(em_pred, em_gt, entries); });
      stage("write report", [&] {
        write_report(with_parent(em_report), report_to_json(report));
        if (!em_csv.empty()) write_text_file(with_parent(em_csv), masks_csv(report));
        return 0;
      });
      for (const ImageScore& r : report.per_image) {
        if (r.skipped) err << "warning: skipped " << r.image_id << ": " << r.error << "\n";
      }
      out << "mean IoU " << format_number(report.overall.iou) << " over " << report.overall.count << " images\n";
      return 0;
    }

    if (command == "eval-keypoints") {
      const auto gt = stage("load ground truth", [&] { return read_keypoint_file(ek_gt); });
      const auto pred = stage("load predictions", [&] { return read_keypoint_file(ek_pred); });
      std::vector<MatchResult> matches;
      const Json report = stage("evaluation", [&] { return keypoint_report(gt, pred, ek_tmax, matches); });
      stage("write report", [&] {
        write_report(with_parent(ek_report), report);
        if (!ek_csv.empty()) write_text_file(with_parent(ek_csv), sweep_csv(report));
        return 0;
      });
      out << "matched " << report["pairs"].get<std::size_t>() << " keypoint pairs\n";
      return 0;
    }

    if (command == "serve") {
      ServiceOptions options;
      options.data_dir = serve_data;
      if (!serve_config.empty()) options.config = stage("load config", [&] { return load_config(serve_config); });
      if (!serve_static.empty()) options.static_dir = serve_static;
      stage("serve", [&] {
        run_server(options, host, port);
        return 0;
      });
      return 0;
    }

    if (command == "config") {
      stage("write config", [&] {
        write_report(with_parent(cfg_out), config_to_json(PipelineConfig{}));
        return 0;
      });
      return 0;
    }
  } catch (const StageError& e) {
    err << "toothseg " << command << ": " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    err << "toothseg " << command << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "toothseg " << command << ": internal error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace toothseg
