// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "../oracles.hpp"
#include "toothseg/classical.hpp"
#include "toothseg/crf.hpp"
#include "toothseg/hungarian.hpp"
#include "toothseg/image_io.hpp"
#include "toothseg/inpaint.hpp"
#include "toothseg/keypoint_io.hpp"
#include "toothseg/keypoints.hpp"
#include "toothseg/metrics.hpp"
#include "toothseg/pipeline.hpp"
#include "toothseg/report.hpp"
#include "toothseg/service.hpp"
#include "toothseg/synth.hpp"
#include "toothseg/watershed.hpp"

using namespace toothseg;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& why) {
    if (!ok && pass) {
      pass = false;
      detail << "first failure: " << why << "; ";
    }
  }
};

int failures = 0;

void check(const std::string& name, const std::function<void(Outcome&)>& body) {
  Outcome o;
  try {
    body(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail << "exception: " << e.what();
  }
  if (!o.pass) ++failures;
  std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.str().c_str());
  std::fflush(stdout);
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

SyntheticScene scene(View view, std::uint64_t seed, int size, double specular_prob = 0.3) {
  SynthConfig c;
  c.view = view;
  c.size = size;
  c.seed = seed;
  c.specular_prob = specular_prob;
  return generate_scene(c);
}

std::string slurp(const fs::path& p) {
  const auto bytes = read_file_bytes(p);
  return {bytes.begin(), bytes.end()};
}

// Every regular file under `a` exists under `b` with the same bytes, and vice versa.
bool same_tree(const fs::path& a, const fs::path& b, std::string& diff) {
  std::set<fs::path> names;
  for (const fs::path& root : {a, b}) {
    for (const auto& e : fs::recursive_directory_iterator(root)) {
      if (e.is_regular_file()) names.insert(fs::relative(e.path(), root));
    }
  }
  for (const fs::path& rel : names) {
    if (!fs::exists(a / rel) || !fs::exists(b / rel) || slurp(a / rel) != slurp(b / rel)) {
      diff = rel.string();
      return false;
    }
  }
  return !names.empty();
}

int run_cli_binary(const std::string& args) {
  const std::string cmd = std::string("\"") + TOOTHSEG_CLI + "\" " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

void assignment_oracle(Outcome& o) {
  std::mt19937_64 rng(1001);
  std::uniform_int_distribution<int> dim(1, 7), value(0, 800);
  const auto start = Clock::now();
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    CostMatrix c(dim(rng), dim(rng));
    // Multiples of 1/8 keep every partial sum exact.
    for (int r = 0; r < c.rows(); ++r) {
      for (int k = 0; k < c.cols(); ++k) c(r, k) = value(rng) / 8.0;
    }
    const Assignment a = hungarian(c);
    double recomputed = 0.0;
    for (const auto& [r, k] : a.pairs) recomputed += c(r, k);
    const bool ok = a.total_cost == oracle::brute_force_assignment(c) && recomputed == a.total_cost &&
                    a.pairs.size() == static_cast<std::size_t>(std::min(c.rows(), c.cols()));
    if (!ok) ++mismatches;
  }
  const double secs = seconds_since(start);
  o.require(mismatches == 0, std::to_string(mismatches) + " mismatching matrices");
  o.require(secs < 10.0, "took too long");
  o.detail << "1000 matrices, " << mismatches << " mismatches, " << secs << " s";
}

void otsu_oracle(Outcome& o) {
  std::mt19937_64 rng(1002);
  std::uniform_int_distribution<int> style(0, 2), bins(2, 256), bin(0, 255);
  std::uniform_int_distribution<std::uint64_t> count(0, 5000);
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    Histogram h{};
    switch (style(rng)) {
      case 0:  // dense
        for (auto& v : h) v = count(rng);
        break;
      case 1: {  // a few occupied bins
        const int n = bins(rng) % 8 + 2;
        for (int k = 0; k < n; ++k) h[static_cast<std::size_t>(bin(rng))] += count(rng) + 1;
        break;
      }
      default: {  // two noisy modes
        std::normal_distribution<double> a(bin(rng), 12.0), b(bin(rng), 20.0);
        for (int k = 0; k < 4000; ++k) {
          const double v = k % 3 == 0 ? a(rng) : b(rng);
          h[static_cast<std::size_t>(std::clamp(static_cast<int>(std::lround(v)), 0, 255))] += 1;
        }
      }
    }
    const int expected = oracle::otsu_scan(h);
    int got = -1;
    try {
      got = otsu_threshold(h);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ConstantInput) throw;
    }
    if (got != expected) ++mismatches;
  }
  o.require(mismatches == 0, std::to_string(mismatches) + " mismatching histograms");
  o.detail << "1000 histograms, " << mismatches << " mismatches";
}

void edt_oracle(Outcome& o) {
  std::mt19937_64 rng(1003);
  std::uniform_int_distribution<int> dim(1, 32);
  std::uniform_real_distribution<double> density(0.05, 0.98);
  int mismatches = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int w = dim(rng), h = dim(rng);
    const BinaryMask m = trial % 2 == 0 ? oracle::random_mask(rng, w, h, density(rng))
                                        : oracle::random_blobs(rng, w, h, 3, 1.5, 9.0);
    if (squared_distance_transform(m) != oracle::brute_force_sq_edt(m)) ++mismatches;
  }
  o.require(mismatches == 0, std::to_string(mismatches) + " mismatching masks");
  o.detail << "200 masks, " << mismatches << " mismatches";
}

void heatmap_round_trip(Outcome& o) {
  std::vector<double> errors;
  int missing = 0;
  for (int i = 0; i < 100; ++i) {
    const View view = static_cast<View>(i % 3);
    const SyntheticScene s = scene(view, scene_seed(1004, view, i), 256);
    const HeatmapBundle b = render_heatmap(s.gt_keypoints, 64, 64, 4);
    const std::vector<Keypoint> decoded = decode_heatmap(b);
    const MatchResult m = match_keypoints(decoded, s.gt_keypoints);
    missing += static_cast<int>(m.unmatched_gt.size() + m.unmatched_pred.size());
    for (const MatchPair& p : m.pairs) errors.push_back(p.distance);
  }
  const DistanceStats st = distance_stats(errors);
  const double worst = errors.empty() ? 0.0 : *std::max_element(errors.begin(), errors.end());
  o.require(missing == 0, std::to_string(missing) + " keypoints not recovered");
  o.require(st.median <= 1.0, "median error above 1 px");
  o.require(worst <= 2.0, "max error above 2 px");
  o.detail << "100 scenes, " << errors.size() << " keypoints, median " << st.median << " px, max " << worst << " px";
}

void sweep_semantics(Outcome& o) {
  const std::vector<Keypoint> pred{{0.0, 0.0, 1.0}}, gt{{3.0, 4.0, 1.0}};
  const ThresholdSweep single = threshold_sweep(match_keypoints(pred, gt), 20);
  for (int t = 0; t <= 20; ++t) {
    const double want = t <= 5 ? 0.0 : 1.0;
    o.require(single.precision[t] == want && single.recall[t] == want, "single pair at t=" + std::to_string(t));
  }

  std::mt19937_64 rng(1005);
  std::uniform_int_distribution<int> n(0, 12);
  std::uniform_real_distribution<double> coord(0.0, 100.0), jitter(-15.0, 15.0);
  int fixtures = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Keypoint> g, p;
    const int ng = n(rng), extra = n(rng) % 4;
    for (int k = 0; k < ng; ++k) g.push_back({coord(rng), coord(rng), 1.0});
    for (const Keypoint& k : g) {
      if (rng() % 5 != 0) p.push_back({k.x + jitter(rng), k.y + jitter(rng), 1.0});
    }
    for (int k = 0; k < extra; ++k) p.push_back({coord(rng), coord(rng), 1.0});
    const ThresholdSweep sw = threshold_sweep(match_keypoints(p, g), 40);
    for (std::size_t t = 1; t < sw.recall.size(); ++t) {
      o.require(sw.recall[t] >= sw.recall[t - 1], "recall decreased in fixture " + std::to_string(trial));
    }
    ++fixtures;
  }
  o.detail << "single pair exact for t=0..20, recall monotone on " << fixtures << " random fixtures";
}

void crf_sanity(Outcome& o) {
  std::mt19937_64 rng(1006);
  std::uniform_int_distribution<int> dim(8, 40), channel(0, 255);
  double worst = 0.0;
  int identity_failures = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const int w = dim(rng), h = dim(rng);
    ImageRGB img(w, h);
    for (Rgb& px : img.pixels()) {
      px = {static_cast<std::uint8_t>(channel(rng)), static_cast<std::uint8_t>(channel(rng)),
            static_cast<std::uint8_t>(channel(rng))};
    }
    const BinaryMask mask = trial % 2 == 0 ? oracle::random_mask(rng, w, h, 0.5)
                                           : oracle::random_blobs(rng, w, h, 3, 2.0, 8.0);
    const ProbabilityField unary = unary_from_mask(mask, 0.9);

    CrfParams zero;
    zero.w_app = 0.0;
    zero.w_smooth = 0.0;
    if (refine(img, unary, zero) != mask) ++identity_failures;

    CrfParams p;
    p.window_radius = 12;
    p.sample_stride = trial % 3 == 0 ? 1 : 0;
    int calls = 0;
    refine(img, unary, p, [&](int iteration, const ProbabilityField& q) {
      ++calls;
      o.require(iteration == calls, "observer iteration order");
      for (std::size_t i = 0; i < q.q_fg.size(); ++i) {
        worst = std::max(worst, std::abs(static_cast<double>(q.q_fg[i]) + q.q_bg[i] - 1.0));
      }
    });
    o.require(calls == 5, "expected 5 iterations");
  }
  o.require(identity_failures == 0, std::to_string(identity_failures) + " zero-weight outputs differ from input");
  o.require(worst <= 1e-6, "normalization error above 1e-6");
  o.detail << "20 fixtures, zero-weight identity failures " << identity_failures << ", max |q_fg+q_bg-1| " << worst;
}

void watershed_contract(Outcome& o) {
  std::mt19937_64 rng(1007);
  std::uniform_int_distribution<int> blobs(2, 7);
  int fixtures = 0, with_expected = 0;
  for (int trial = 0; fixtures < 50; ++trial) {
    const int w = 64, h = 48;
    std::uniform_real_distribution<double> ux(6.0, w - 6.0), uy(6.0, h - 6.0), ur(3.5, 7.0);
    BinaryMask fg(w, h);
    std::vector<Keypoint> centers;
    const int k = blobs(rng);
    for (int b = 0; b < k; ++b) {
      const double cx = ux(rng), cy = uy(rng), r = ur(rng);
      centers.push_back({cx, cy, 1.0});
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          // Slightly elliptic discs so overlapping teeth form necks.
          if (std::pow((x + 0.5 - cx) / r, 2) + std::pow((y + 0.5 - cy) / (1.3 * r), 2) <= 1.0) fg(x, y) = 1;
        }
      }
    }
    ScalarMap heat(w, h, 0.0F);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double v = 0.0;
        for (const Keypoint& c : centers) {
          v = std::max(v, std::exp(-(std::pow(x + 0.5 - c.x, 2) + std::pow(y + 0.5 - c.y, 2)) / (2.0 * 9.0)));
        }
        heat(x, y) = static_cast<float>(v);
      }
    }
    ++fixtures;

    WatershedParams params;
    const ScalarMap topo = boost_topography(distance_transform(fg), heat, params.alpha);
    const std::uint32_t available = select_markers(topo, fg, {}, params).tooth_count;
    if (fixtures % 2 == 0) {
      params.expected_count = static_cast<int>(rng() % available) + 1;
      ++with_expected;
    }
    const MarkerSet ms = select_markers(topo, fg, centers, params);
    const LabelMap out = watershed_flood(topo, ms.labels, fg, params.connectivity, ms.background_label);
    const std::string tag = "fixture " + std::to_string(fixtures);

    std::vector<std::set<std::uint32_t>> inside(ms.tooth_count + 1);
    std::set<std::uint32_t> present;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const std::uint32_t l = out[i];
      if (l >= 1 && l <= ms.tooth_count) {
        present.insert(l);
        o.require(fg[i] != 0, tag + ": tooth label outside input foreground");
        const std::uint32_t m = ms.labels[i];
        if (m >= 1 && m <= ms.tooth_count) inside[l].insert(m);
      }
    }
    for (std::uint32_t l = 1; l <= ms.tooth_count; ++l) {
      o.require(inside[l] == std::set<std::uint32_t>{l}, tag + ": basin " + std::to_string(l) + " marker count");
    }
    o.require(present.size() == ms.tooth_count, tag + ": empty basin");
    const BinaryMask out_fg = labels_to_mask(out, ms.background_label);
    for (std::size_t i = 0; i < out_fg.size(); ++i) o.require(!out_fg[i] || fg[i], tag + ": output fg not in input fg");
    if (params.expected_count) {
      o.require(present.size() == static_cast<std::size_t>(*params.expected_count), tag + ": label count");
    }
  }
  o.detail << fixtures << " fixtures (" << with_expected << " with expected_count)";
}

void end_to_end(Outcome& o) {
  const auto start = Clock::now();
  double ours_all = 0.0, otsu_all = 0.0;
  for (View view : {View::Lower, View::Front, View::Upper}) {
    std::vector<double> ours, otsu;
    for (int i = 0; i < 30; ++i) {
      const SyntheticScene s = scene(view, scene_seed(1008, view, i), 256);
      ours.push_back(mask_score(segment_ours(s.image, s.stacks, s.bundle, PipelineConfig{}).mask, s.gt_mask).iou);
      otsu.push_back(mask_score(segment_otsu_baseline(s.image, PipelineConfig{}).mask, s.gt_mask).iou);
    }
    const double mo = mean(ours), mb = mean(otsu);
    ours_all += mo / 3.0;
    otsu_all += mb / 3.0;
    o.require(mo >= 0.80, std::string(to_string(view)) + ": ours below 0.80");
    o.require(mo >= mb + 0.05, std::string(to_string(view)) + ": margin over otsu below 0.05");
    o.detail << to_string(view) << " ours " << mo << " otsu " << mb << "; ";
  }
  const double secs = seconds_since(start);
  o.require(secs < 300.0, "runtime above 5 min");
  o.detail << "overall ours " << ours_all << " otsu " << otsu_all << ", 90 scenes at 256x256 in " << secs << " s";
}

void inpainting_effect(Outcome& o) {
  PipelineConfig plain, inpainted;
  inpainted.inpaint = true;
  std::vector<double> without, with;
  for (View view : {View::Lower, View::Front, View::Upper}) {
    std::vector<double> a, b;
    for (int i = 0; i < 10; ++i) {
      const SyntheticScene s = scene(view, scene_seed(1009, view, i), 256, 1.0);
      a.push_back(mask_score(segment_otsu_baseline(s.image, plain).mask, s.gt_mask).recall);
      b.push_back(mask_score(segment_otsu_baseline(s.image, inpainted).mask, s.gt_mask).recall);
    }
    o.detail << to_string(view) << " recall " << mean(a) << " -> " << mean(b) << "; ";
    without.insert(without.end(), a.begin(), a.end());
    with.insert(with.end(), b.begin(), b.end());
  }
  o.require(mean(with) >= mean(without), "inpainting lowered mean recall");
  o.detail << "overall " << mean(without) << " -> " << mean(with) << "; ";

  ImageRGB img(64, 64, Rgb{120, 92, 81});
  const ImageRGB clean = img;
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      if (std::hypot(x - 20.0, y - 30.0) <= 3.0 || std::hypot(x - 45.0, y - 12.0) <= 2.0 || (x == 50 && y == 50)) {
        img(x, y) = {255, 255, 252};
      }
    }
  }
  int worst = 0;
  for (InpaintMethod method : {InpaintMethod::NavierStokes, InpaintMethod::Harmonic}) {
    InpaintConfig cfg;
    cfg.method = method;
    const BinaryMask spots = detect_bright_spots(img, cfg);
    const ImageRGB out = inpaint(img, spots, cfg);
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (!spots[i]) continue;
      worst = std::max({worst, std::abs(out[i].r - clean[i].r), std::abs(out[i].g - clean[i].g),
                        std::abs(out[i].b - clean[i].b)});
    }
  }
  o.require(worst <= 2, "constant image restored off by more than 2");
  o.detail << "constant image max error " << worst << "/255";
}

void determinism(Outcome& o) {
  const fs::path root = oracle::scratch_dir("acceptance_determinism");
  for (const char* run : {"a", "b"}) {
    const fs::path d = root / run;
    const std::string ds = (d / "ds").string();
    o.require(run_cli_binary("synth --out \"" + ds + "\" --count 2 --seed 9 --views lower,front,upper --size 128") == 0,
              "synth failed");

    // Keypoint predictions decoded from the synthetic heatmaps.
    std::vector<KeypointSet> preds;
    for (const ManifestEntry& e : read_manifest(d / "ds" / "manifest.json")) {
      preds.push_back({e.image_id, decode_heatmap(load_scene(d / "ds", e.image_id, parse_view(e.view)).bundle)});
    }
    write_keypoint_file(d / "pred_kps.json", preds);

    const std::string manifest = (d / "ds" / "manifest.json").string();
    o.require(run_cli_binary("segment --manifest \"" + manifest + "\" --method ours --out-dir \"" +
                             (d / "seg").string() + "\"") == 0,
              "segment failed");
    const std::string id = scene_id(View::Front, 9, 1);
    o.require(run_cli_binary("segment --image \"" + ds + "/" + id + ".png\" --method otsu --inpaint --out \"" +
                             (d / "single" / "mask.png").string() + "\"") == 0,
              "single segment failed");
    o.require(run_cli_binary("eval-masks --pred \"" + (d / "seg").string() + "\" --gt \"" + ds + "\" --manifest \"" +
                             manifest + "\" --report \"" + (d / "eval" / "masks.json").string() + "\" --csv \"" +
                             (d / "eval" / "masks.csv").string() + "\"") == 0,
              "eval-masks failed");
    o.require(run_cli_binary("eval-keypoints --pred \"" + (d / "pred_kps.json").string() + "\" --gt \"" + ds +
                             "/keypoints.json\" --report \"" + (d / "eval" / "kps.json").string() + "\" --csv \"" +
                             (d / "eval" / "kps.csv").string() + "\"") == 0,
              "eval-keypoints failed");
  }
  for (const char* sub : {"ds", "seg", "single", "eval"}) {
    std::string diff;
    const bool same = same_tree(root / "a" / sub, root / "b" / sub, diff);
    o.require(same, std::string(sub) + " differs at " + diff);
  }
  o.detail << "synth, segment (batch ours, single otsu+inpaint), eval-masks, eval-keypoints byte-identical";
}

void service_contract(Outcome& o) {
  const fs::path dir = oracle::scratch_dir("acceptance_service");
  DatasetConfig cfg;
  cfg.base.size = 256;
  cfg.base.seed = 1010;
  cfg.views = {View::Lower, View::Front, View::Upper};
  cfg.count = 1;
  cfg.service_layout = true;
  generate_dataset(cfg, dir);
  Service service(ServiceOptions{dir, PipelineConfig{}, std::nullopt});
  const SequenceRecord& seq = service.sequences().at(0);

  Json views = Json::array();
  for (const SequenceView& v : seq.views) {
    views.push_back({{"view", v.view}, {"image_id", v.image_id}, {"teeth", {{{"x", 0.5}, {"y", 0.4}}}}});
  }
  Json doc = {{"schema_version", 1}, {"sequence_id", seq.sequence_id}, {"captured_at", seq.captured_at}, {"views", views}};

  Json bad = doc;
  bad["views"][1]["teeth"][0]["y"] = -0.2;
  const HttpResponse invalid = service.post_annotation(bad.dump());
  const Json invalid_body = Json::parse(invalid.body);
  o.require(invalid.status == 400 && invalid_body.value("field", "") == "views[1].teeth[0].y",
            "schema violation did not name views[1].teeth[0].y");

  const int first = service.post_annotation(doc.dump()).status;
  const int second = service.post_annotation(doc.dump()).status;
  o.require(first == 201, "first POST returned " + std::to_string(first));
  o.require(second == 409, "second POST returned " + std::to_string(second));

  std::size_t prompts = 0;
  for (const SequenceView& v : seq.views) {
    const SyntheticScene s = load_scene(dir, v.image_id, parse_view(v.view));
    Json kps = Json::array();
    for (const Keypoint& k : s.gt_keypoints) kps.push_back({{"x_px", k.x}, {"y_px", k.y}});
    const std::string req = Json{{"image_id", v.image_id}, {"keypoints", kps}}.dump();
    const HttpResponse a = service.post_segment(req);
    const HttpResponse b = service.post_segment(req);
    o.require(a.status == 200, v.view + ": segment returned " + std::to_string(a.status));
    o.require(a.body == b.body, v.view + ": segment not deterministic");
    const Json out = Json::parse(a.body);
    o.require(out.value("label_count", std::size_t{0}) == s.gt_keypoints.size(),
              v.view + ": label_count " + out.value("label_count", Json()).dump() + " vs " +
                  std::to_string(s.gt_keypoints.size()) + " prompts");
    prompts += s.gt_keypoints.size();
  }
  o.detail << "400 names field, POSTs " << first << "/" << second << ", /api/segment deterministic over " << prompts
           << " prompts in 3 views";
}

}  // namespace

int main() {
  check("assignment_oracle", assignment_oracle);
  check("otsu_oracle", otsu_oracle);
  check("distance_transform_oracle", edt_oracle);
  check("heatmap_round_trip", heatmap_round_trip);
  check("threshold_sweep_semantics", sweep_semantics);
  check("crf_sanity", crf_sanity);
  check("watershed_contract", watershed_contract);
  check("end_to_end_ordering", end_to_end);
  check("inpainting_effect", inpainting_effect);
  check("determinism", determinism);
  check("service_contract", service_contract);
  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
