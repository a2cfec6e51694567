#include "toothseg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "toothseg/classical.hpp"
#include "toothseg/image_io.hpp"
#include "toothseg/keypoint_io.hpp"

namespace toothseg {

std::string_view to_string(View view) {
  switch (view) {
    case View::Lower: return "lower";
    case View::Front: return "front";
    case View::Upper: return "upper";
  }
  return "lower";
}

View parse_view(std::string_view name) {
  if (name == "lower") return View::Lower;
  if (name == "front") return View::Front;
  if (name == "upper") return View::Upper;
  fail(ErrorCode::InvalidArgument, "unknown view '" + std::string(name) + "' (expected lower, front or upper)");
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

int Rng::uniform_int(int lo, int hi) {
  const auto span = static_cast<double>(hi - lo + 1);
  return std::min(hi, lo + static_cast<int>(uniform() * span));
}

double Rng::normal(double mean, double stddev) {
  const double u1 = uniform();
  const double u2 = uniform();
  return mean + stddev * std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void validate(const SynthConfig& c) {
  if (c.size < 64 || c.size % 8 != 0) fail(ErrorCode::InvalidConfig, "synth size must be >= 64 and a multiple of 8");
  if (c.teeth_min < 0 || c.teeth_max < 0 || (c.teeth_min > 0 && c.teeth_min < 2) || c.teeth_max > 32 ||
      (c.teeth_min > 0 && c.teeth_max > 0 && c.teeth_min > c.teeth_max)) {
    fail(ErrorCode::InvalidConfig, "teeth range must satisfy 2 <= min <= max <= 32");
  }
  const double probs[] = {c.specular_prob, c.drop_prob};
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) fail(ErrorCode::InvalidConfig, "probabilities must be in [0, 1]");
  }
  const double nonneg[] = {c.color_jitter, c.noise_std, c.kp_jitter, c.illumination, c.stack_noise,
                           c.artifact_amplitude, c.spot_radius_min};
  for (double v : nonneg) {
    if (!(v >= 0.0)) fail(ErrorCode::InvalidConfig, "synth noise and jitter settings must be >= 0");
  }
  if (c.spot_radius_max < c.spot_radius_min) fail(ErrorCode::InvalidConfig, "spot radius range is empty");
  if (c.illumination >= 1.0) fail(ErrorCode::InvalidConfig, "illumination must be < 1");
  if (!(c.sigma > 0.0)) fail(ErrorCode::InvalidConfig, "sigma must be > 0");
  if (c.stack_channels < 1) fail(ErrorCode::InvalidConfig, "stack_channels must be >= 1");
  if (c.stack_artifacts < 0 || c.spurious_peaks < 0) fail(ErrorCode::InvalidConfig, "counts must be >= 0");
}

namespace {

struct Color {
  double r, g, b;
};

Color operator*(Color c, double k) { return {c.r * k, c.g * k, c.b * k}; }

Color jitter(Rng& rng, Color c, double sd) {
  return {c.r + rng.normal(0.0, sd), c.g + rng.normal(0.0, sd), c.b + rng.normal(0.0, sd)};
}

struct Tooth {
  double cx, cy;
  double a, b;    // semi-axes along / across the local direction
  double angle;   // direction of the `a` axis
  Color color;

  // Squared normalized radius of point (px, py); <= 1 inside.
  double rho2(double px, double py) const {
    const double dx = px - cx, dy = py - cy;
    const double c = std::cos(angle), s = std::sin(angle);
    const double u = dx * c + dy * s;
    const double v = -dx * s + dy * c;
    return (u * u) / (a * a) + (v * v) / (b * b);
  }
};

struct Layout {
  std::vector<Tooth> teeth;
  // Background color per pixel, before lighting.
  std::vector<Color> background;
};

std::pair<int, int> teeth_range(const SynthConfig& cfg) {
  const bool front = cfg.view == View::Front;
  const int lo = cfg.teeth_min > 0 ? cfg.teeth_min : (front ? 18 : 10);
  const int hi = cfg.teeth_max > 0 ? cfg.teeth_max : (front ? 24 : 16);
  return {lo, std::max(lo, hi)};
}

// Off-white enamel: shared brightness jitter, a yellow tint, a per-tooth
// shade, and a little independent channel noise.
Color tooth_color(Rng& rng, double jitter_sd) {
  const double bright = rng.normal(0.0, jitter_sd);
  const double yellow = rng.uniform(0.0, 24.0);
  Color c{232.0 + bright, 226.0 + bright - 0.3 * yellow, 212.0 + bright - yellow};
  return jitter(rng, c * rng.uniform(0.8, 1.0), 0.3 * jitter_sd);
}

Layout jaw_layout(const SynthConfig& cfg, Rng& rng, int n) {
  const double S = cfg.size;
  const bool upper = cfg.view == View::Upper;
  const double cx = S / 2.0 + rng.normal(0.0, 0.02 * S);
  const double cy0 = 0.70 * S + rng.normal(0.0, 0.015 * S);
  const double A = 0.33 * S * rng.uniform(0.95, 1.05);
  const double B = 0.49 * S * rng.uniform(0.95, 1.05);
  const double T = 0.5 * std::numbers::pi * 1.05;

  // Arc-length table of x = cx + A sin t, y = cy0 - B cos t.
  constexpr int kSamples = 4001;
  std::vector<double> ts(kSamples), cum(kSamples, 0.0);
  for (int k = 0; k < kSamples; ++k) ts[k] = -T + 2.0 * T * k / (kSamples - 1);
  for (int k = 1; k < kSamples; ++k) {
    const double dx = A * (std::sin(ts[k]) - std::sin(ts[k - 1]));
    const double dy = B * (std::cos(ts[k]) - std::cos(ts[k - 1]));
    cum[k] = cum[k - 1] + std::hypot(dx, dy);
  }
  const double length = cum.back();
  auto t_at = [&](double s) {
    const auto it = std::lower_bound(cum.begin(), cum.end(), s);
    const auto k = static_cast<std::size_t>(std::clamp<long>(it - cum.begin(), 1, kSamples - 1));
    const double f = (s - cum[k - 1]) / std::max(1e-12, cum[k] - cum[k - 1]);
    return ts[k - 1] + f * (ts[k] - ts[k - 1]);
  };

  std::vector<double> weight(n);
  double weight_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double pos = std::abs(2.0 * (i + 0.5) / n - 1.0);
    weight[i] = 1.0 + 0.7 * std::pow(pos, 1.5);
    weight_sum += weight[i];
  }
  Layout layout;
  double s = 0.015 * length;
  for (int i = 0; i < n; ++i) {
    const double span = weight[i] / weight_sum * length * 0.97;
    const double t = t_at(s + span / 2.0);
    s += span;
    Tooth tooth{};
    tooth.cx = cx + A * std::sin(t);
    tooth.cy = cy0 - B * std::cos(t);
    tooth.angle = std::atan2(B * std::sin(t), A * std::cos(t));
    tooth.a = 0.40 * span * rng.uniform(0.95, 1.05);
    tooth.b = std::min(0.55 * span * rng.uniform(1.0, 1.15), 0.075 * S);
    tooth.color = tooth_color(rng, cfg.color_jitter);
    if (upper) {
      tooth.cy = S - tooth.cy;
      tooth.angle = -tooth.angle;
    }
    layout.teeth.push_back(tooth);
  }

  const Color gum = jitter(rng, {175.0, 88.0, 98.0}, 6.0);
  const Color inner = upper ? jitter(rng, {150.0, 70.0, 78.0}, 6.0) : jitter(rng, {160.0, 62.0, 72.0}, 6.0);
  const Color throat{90.0, 38.0, 44.0};
  const Color lips = jitter(rng, {125.0, 48.0, 55.0}, 6.0);
  const Color skin = jitter(rng, {130.0, 88.0, 74.0}, 6.0);
  const int size = cfg.size;
  layout.background.resize(static_cast<std::size_t>(size) * size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double px = x + 0.5;
      const double py = upper ? S - (y + 0.5) : y + 0.5;
      const double nx = (px - cx) / A, ny = (py - cy0) / B;
      const double rho = std::hypot(nx, ny);
      const double t = std::atan2(nx, -ny);
      Color c = skin;
      if (std::abs(t) > T + 0.15 && rho < 1.2) {
        c = throat;
      } else if (std::abs(rho - 1.0) < 0.16) {
        c = gum;
      } else if (rho < 1.0) {
        c = inner;
      } else if (rho < 1.42) {
        c = lips;
      }
      layout.background[static_cast<std::size_t>(y) * size + x] = c;
    }
  }
  return layout;
}

Layout front_layout(const SynthConfig& cfg, Rng& rng, int n) {
  const double S = cfg.size;
  const double cx = S / 2.0 + rng.normal(0.0, 0.01 * S);
  const double y_upper = 0.405 * S, y_lower = 0.575 * S;
  const double h_upper = 0.075 * S, h_lower = 0.062 * S;
  constexpr double kShrink = 0.88;
  Layout layout;

  auto row = [&](int count, double y, double half_height, double span) {
    // Widths ordered from the middle outwards, mirrored on both sides.
    std::vector<double> order;
    for (int k = 0; static_cast<int>(order.size()) < count; ++k) {
      if (count % 2 == 1 && k == 0) {
        order.push_back(1.0);
        continue;
      }
      const double w = std::pow(kShrink, k);
      order.push_back(w);
      if (static_cast<int>(order.size()) < count) order.push_back(w);
    }
    double total = 0.0;
    for (double w : order) total += w;
    const double w0 = span / total;

    // Left and right halves grow outwards from the center.
    std::vector<std::pair<double, double>> centers;  // (x, width)
    if (count % 2 == 1) {
      centers.emplace_back(cx, w0);
      double left = cx - w0 / 2.0, right = cx + w0 / 2.0;
      for (std::size_t k = 1; k < order.size(); k += 2) {
        const double w = order[k] * w0;
        centers.emplace_back(left - w / 2.0, w);
        centers.emplace_back(right + w / 2.0, w);
        left -= w;
        right += w;
      }
    } else {
      double left = cx, right = cx;
      for (std::size_t k = 0; k < order.size(); k += 2) {
        const double w = order[k] * w0;
        centers.emplace_back(left - w / 2.0, w);
        centers.emplace_back(right + w / 2.0, w);
        left -= w;
        right += w;
      }
    }
    std::sort(centers.begin(), centers.end());
    for (const auto& [x, w] : centers) {
      Tooth tooth{};
      tooth.cx = x;
      tooth.cy = y + rng.normal(0.0, 0.004 * S);
      tooth.angle = 0.0;
      tooth.a = 0.41 * w;
      tooth.b = half_height * (0.8 + 0.2 * w / w0) * rng.uniform(0.95, 1.02);
      tooth.color = tooth_color(rng, cfg.color_jitter);
      layout.teeth.push_back(tooth);
    }
  };
  const int n_upper = (n + 1) / 2;
  row(n_upper, y_upper, h_upper, 0.80 * S);
  row(n - n_upper, y_lower, h_lower, 0.72 * S);

  const Color gum = jitter(rng, {175.0, 88.0, 98.0}, 6.0);
  const Color cavity{80.0, 34.0, 40.0};
  const Color lips = jitter(rng, {150.0, 60.0, 70.0}, 6.0);
  const Color skin = jitter(rng, {130.0, 88.0, 74.0}, 6.0);
  const double mx = S / 2.0, my = 0.49 * S, ma = 0.44 * S, mb = 0.24 * S;
  const int size = cfg.size;
  layout.background.resize(static_cast<std::size_t>(size) * size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double px = x + 0.5, py = y + 0.5;
      const double rho = std::hypot((px - mx) / ma, (py - my) / mb);
      Color c = skin;
      if (rho < 1.0) {
        c = (py < y_upper || py > y_lower) ? gum : cavity;
      } else if (rho < 1.25) {
        c = lips;
      }
      layout.background[static_cast<std::size_t>(y) * size + x] = c;
    }
  }
  return layout;
}

// Rasterizes teeth by pixel center; false if two teeth overlap or touch.
bool rasterize(const std::vector<Tooth>& teeth, int size, LabelMap& labels) {
  labels = LabelMap(size, size, 0);
  for (std::size_t i = 0; i < teeth.size(); ++i) {
    const Tooth& t = teeth[i];
    const double r = std::max(t.a, t.b) + 1.0;
    const int x0 = std::max(0, static_cast<int>(std::floor(t.cx - r)));
    const int x1 = std::min(size - 1, static_cast<int>(std::ceil(t.cx + r)));
    const int y0 = std::max(0, static_cast<int>(std::floor(t.cy - r)));
    const int y1 = std::min(size - 1, static_cast<int>(std::ceil(t.cy + r)));
    bool any = false;
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        if (t.rho2(x + 0.5, y + 0.5) > 1.0) continue;
        if (labels(x, y) != 0) return false;
        labels(x, y) = static_cast<std::uint32_t>(i + 1);
        any = true;
      }
    }
    if (!any) return false;
  }
  BinaryMask mask(size, size);
  for (std::size_t i = 0; i < labels.size(); ++i) mask[i] = labels[i] ? 1 : 0;
  return connected_components(mask, Connectivity::Eight).count == teeth.size();
}

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::clamp<long>(std::lround(v), 0, 255)); }

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

SyntheticScene generate_scene(const SynthConfig& cfg) {
  validate(cfg);
  Rng rng(splitmix64(cfg.seed));
  const int size = cfg.size;
  const double S = size;
  const double scale = S / 256.0;
  const auto [lo, hi] = teeth_range(cfg);
  const int n = rng.uniform_int(lo, hi);

  Layout layout = cfg.view == View::Front ? front_layout(cfg, rng, n) : jaw_layout(cfg, rng, n);

  SyntheticScene scene;
  scene.view = cfg.view;
  bool ok = rasterize(layout.teeth, size, scene.gt_labels);
  for (int attempt = 0; !ok && attempt < 20; ++attempt) {
    for (Tooth& t : layout.teeth) {
      t.a *= 0.93;
      t.b *= 0.93;
    }
    ok = rasterize(layout.teeth, size, scene.gt_labels);
  }
  if (!ok) fail(ErrorCode::InvalidConfig, "cannot place that many separated teeth at this image size");

  scene.gt_mask = BinaryMask(size, size);
  for (std::size_t i = 0; i < scene.gt_labels.size(); ++i) scene.gt_mask[i] = scene.gt_labels[i] ? 1 : 0;

  // Keypoints: tooth centers plus jitter, kept on the tooth itself.
  for (std::size_t i = 0; i < layout.teeth.size(); ++i) {
    const Tooth& t = layout.teeth[i];
    scene.tooth_centers.push_back({t.cx, t.cy, 1.0});
    Keypoint kp{t.cx + rng.normal(0.0, cfg.kp_jitter * scale), t.cy + rng.normal(0.0, cfg.kp_jitter * scale), 1.0};
    const int kx = static_cast<int>(std::floor(kp.x)), ky = static_cast<int>(std::floor(kp.y));
    if (!scene.gt_labels.contains(kx, ky) || scene.gt_labels(kx, ky) != i + 1) kp = {t.cx, t.cy, 1.0};
    scene.gt_keypoints.push_back(kp);
  }

  // Image: background + teeth with darker rims, vignetting, sensor noise.
  const double light_x = S / 2.0 + rng.normal(0.0, 0.12 * S);
  const double light_y = S / 2.0 + rng.normal(0.0, 0.12 * S);
  const double strength = cfg.illumination * rng.uniform(0.8, 1.2);
  scene.image = ImageRGB(size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const std::size_t idx = scene.image.index(x, y);
      Color c = layout.background[idx];
      if (const std::uint32_t label = scene.gt_labels[idx]) {
        const Tooth& t = layout.teeth[label - 1];
        const double rho = std::sqrt(t.rho2(x + 0.5, y + 0.5));
        const double rim = std::clamp((rho - 0.75) / 0.25, 0.0, 1.0);
        c = t.color * (1.0 - 0.22 * rim * rim);
      }
      const double d = std::hypot(x + 0.5 - light_x, y + 0.5 - light_y) / (0.75 * S);
      const double light = 1.0 - strength * std::min(1.0, d * d);
      c = c * light;
      scene.image[idx] = {to_byte(c.r + rng.normal(0.0, cfg.noise_std)), to_byte(c.g + rng.normal(0.0, cfg.noise_std)),
                          to_byte(c.b + rng.normal(0.0, cfg.noise_std))};
    }
  }

  // Specular highlights: saturated disks with a faint halo, on teeth (clipped
  // to the tooth) and on the wet gum and lips around them.
  scene.spots = BinaryMask(size, size);
  auto paint_spot = [&](double sx, double sy, double r, std::uint32_t own) {
    const int x0 = std::max(0, static_cast<int>(std::floor(sx - r - 1.0)));
    const int x1 = std::min(size - 1, static_cast<int>(std::ceil(sx + r + 1.0)));
    const int y0 = std::max(0, static_cast<int>(std::floor(sy - r - 1.0)));
    const int y1 = std::min(size - 1, static_cast<int>(std::ceil(sy + r + 1.0)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        if (scene.gt_labels(x, y) != own) continue;
        const double d = std::hypot(x + 0.5 - sx, y + 0.5 - sy);
        Rgb& px = scene.image(x, y);
        if (d <= r) {
          const std::uint8_t v = to_byte(255.0 - rng.uniform(0.0, 6.0));
          px = {v, v, v};
          scene.spots(x, y) = 1;
        } else if (d <= r + 1.0) {
          px = {to_byte(0.5 * (px.r + 250.0)), to_byte(0.5 * (px.g + 250.0)), to_byte(0.5 * (px.b + 250.0))};
        }
      }
    }
  };
  for (std::size_t i = 0; i < layout.teeth.size(); ++i) {
    const Tooth& t = layout.teeth[i];
    if (!rng.chance(cfg.specular_prob)) continue;
    const double r = rng.uniform(cfg.spot_radius_min, cfg.spot_radius_max) * scale;
    const double ang = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double off = rng.uniform(0.0, 0.4);
    paint_spot(t.cx + off * t.a * std::cos(ang + t.angle), t.cy + off * t.b * std::sin(ang + t.angle), r,
               static_cast<std::uint32_t>(i + 1));
  }
  for (const Tooth& t : layout.teeth) {
    if (!rng.chance(cfg.specular_prob)) continue;
    const double r = rng.uniform(cfg.spot_radius_min, cfg.spot_radius_max) * scale;
    const double ang = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double reach = std::max(t.a, t.b) * rng.uniform(1.3, 2.2);
    paint_spot(t.cx + reach * std::cos(ang), t.cy + reach * std::sin(ang), r, 0);
  }

  // Pseudo feature stacks: block coverage of the mask per channel with gain,
  // bias, noise and a few shared spurious blobs, rectified.
  struct Blob {
    double x, y, amp;
  };
  std::vector<Blob> blobs;
  for (int k = 0; k < cfg.stack_artifacts; ++k) {
    blobs.push_back({rng.uniform(0.1, 0.9) * S, rng.uniform(0.1, 0.9) * S,
                     cfg.artifact_amplitude * rng.uniform(0.7, 1.0)});
  }
  const double blob_sigma = 0.04 * S;
  for (int stride : {4, 4, 8}) {
    const int g = size / stride;
    FeatureStack stack(cfg.stack_channels, g, g);
    std::vector<double> base(static_cast<std::size_t>(g) * g);
    for (int gy = 0; gy < g; ++gy) {
      for (int gx = 0; gx < g; ++gx) {
        int covered = 0;
        for (int y = gy * stride; y < (gy + 1) * stride; ++y) {
          for (int x = gx * stride; x < (gx + 1) * stride; ++x) covered += scene.gt_mask(x, y);
        }
        double v = static_cast<double>(covered) / (stride * stride);
        const double px = (gx + 0.5) * stride, py = (gy + 0.5) * stride;
        for (const Blob& b : blobs) {
          const double d2 = (px - b.x) * (px - b.x) + (py - b.y) * (py - b.y);
          v += b.amp * std::exp(-d2 / (2.0 * blob_sigma * blob_sigma));
        }
        base[static_cast<std::size_t>(gy) * g + gx] = v;
      }
    }
    for (int c = 0; c < cfg.stack_channels; ++c) {
      const double gain = rng.uniform(0.6, 1.4);
      const double bias = rng.uniform(0.0, 0.05);
      auto plane = stack.channel(c);
      for (std::size_t i = 0; i < plane.size(); ++i) {
        plane[i] = static_cast<float>(std::max(0.0, gain * base[i] + bias + rng.normal(0.0, cfg.stack_noise)));
      }
    }
    scene.stacks.push_back(std::move(stack));
  }

  std::vector<Keypoint> heat_points;
  for (const Keypoint& kp : scene.gt_keypoints) {
    if (!rng.chance(cfg.drop_prob)) heat_points.push_back(kp);
  }
  for (int k = 0; k < cfg.spurious_peaks; ++k) {
    heat_points.push_back({rng.uniform(0.0, S - 1.0), rng.uniform(0.0, S - 1.0), 1.0});
  }
  scene.bundle = render_heatmap(heat_points, size / 4, size / 4, 4, cfg.sigma);
  return scene;
}

std::uint64_t scene_seed(std::uint64_t seed, View view, int index) {
  return splitmix64(seed * 3 + static_cast<std::uint64_t>(view) + (static_cast<std::uint64_t>(index) << 20));
}

std::string scene_id(View view, std::uint64_t seed, int index) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s_s%llu_%03d", std::string(to_string(view)).c_str(),
                static_cast<unsigned long long>(seed), index);
  return buf;
}

namespace {

std::string timestamp(int index) {
  const int hour = index % 24;
  const int day = 1 + (index / 24) % 28;
  const int month = 1 + (index / (24 * 28)) % 12;
  const int year = 2024 + index / (24 * 28 * 12);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:00:00Z", year, month, day, hour);
  return buf;
}

}  // namespace

std::vector<ManifestEntry> generate_dataset(const DatasetConfig& cfg, const std::filesystem::path& out_dir) {
  if (cfg.count < 1) fail(ErrorCode::InvalidArgument, "scene count must be >= 1");
  if (cfg.views.empty()) fail(ErrorCode::InvalidArgument, "at least one view is required");
  validate(cfg.base);
  if (cfg.service_layout) {
    for (View v : {View::Lower, View::Front, View::Upper}) {
      if (std::find(cfg.views.begin(), cfg.views.end(), v) == cfg.views.end()) {
        fail(ErrorCode::InvalidArgument, "the service layout needs all three views");
      }
    }
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create " + out_dir.string() + ": " + ec.message());
  if (cfg.service_layout) {
    std::filesystem::create_directories(out_dir / "images", ec);
    if (!ec) std::filesystem::create_directories(out_dir / "annotations", ec);
    if (ec) fail(ErrorCode::IoError, "cannot create service layout in " + out_dir.string() + ": " + ec.message());
  }

  std::vector<ManifestEntry> manifest;
  std::vector<KeypointSet> all_keypoints;
  for (View view : cfg.views) {
    for (int i = 0; i < cfg.count; ++i) {
      SynthConfig sc = cfg.base;
      sc.view = view;
      sc.seed = scene_seed(cfg.base.seed, view, i);
      const SyntheticScene scene = generate_scene(sc);
      const std::string id = scene_id(view, cfg.base.seed, i);
      const std::filesystem::path stem = out_dir / id;

      save_image(scene.image, stem.string() + ".png");
      save_mask(scene.gt_mask, stem.string() + "_mask.png");
      const KeypointSet set{id, scene.gt_keypoints};
      write_keypoint_file(stem.string() + "_kps.json", std::span(&set, 1));
      for (std::size_t s = 0; s < scene.stacks.size(); ++s) {
        write_fmap(scene.stacks[s], stem.string() + "_s" + std::to_string(s) + ".fmap");
      }
      write_fmap(scene.bundle.heatmap, stem.string() + "_heat.fmap");
      write_fmap(scene.bundle.offset_x, stem.string() + "_offx.fmap");
      write_fmap(scene.bundle.offset_y, stem.string() + "_offy.fmap");
      if (cfg.service_layout) save_image(scene.image, out_dir / "images" / (id + ".png"));

      manifest.push_back({id, std::string(to_string(view))});
      all_keypoints.push_back(set);
    }
  }
  write_report(out_dir / "manifest.json", manifest_to_json(manifest));
  write_keypoint_file(out_dir / "keypoints.json", all_keypoints);

  if (cfg.service_layout) {
    Json sequences = Json::array();
    for (int i = 0; i < cfg.count; ++i) {
      char seq_id[64];
      std::snprintf(seq_id, sizeof seq_id, "seq_s%llu_%03d", static_cast<unsigned long long>(cfg.base.seed), i);
      Json views = Json::array();
      for (View v : {View::Lower, View::Front, View::Upper}) {
        const std::string id = scene_id(v, cfg.base.seed, i);
        views.push_back({{"view", std::string(to_string(v))}, {"image_id", id}, {"image_file", "images/" + id + ".png"}});
      }
      sequences.push_back({{"sequence_id", seq_id}, {"captured_at", timestamp(i)}, {"views", std::move(views)}});
    }
    write_report(out_dir / "sequences.json", {{"sequences", std::move(sequences)}});
  }
  return manifest;
}

SyntheticScene load_scene(const std::filesystem::path& dir, const std::string& image_id, View view) {
  const std::string stem = (dir / image_id).string();
  SyntheticScene scene;
  scene.view = view;
  scene.image = load_image(stem + ".png");
  scene.gt_mask = load_mask(stem + "_mask.png");
  const auto sets = read_keypoint_file(stem + "_kps.json");
  if (sets.size() != 1) fail(ErrorCode::CorruptFile, stem + "_kps.json: expected exactly one image entry");
  scene.gt_keypoints = sets[0].keypoints;
  for (int s = 0; s < 3; ++s) scene.stacks.push_back(read_fmap(stem + "_s" + std::to_string(s) + ".fmap"));
  scene.bundle.heatmap = read_scalar_fmap(stem + "_heat.fmap");
  scene.bundle.offset_x = read_scalar_fmap(stem + "_offx.fmap");
  scene.bundle.offset_y = read_scalar_fmap(stem + "_offy.fmap");
  if (scene.bundle.heatmap.width() == 0 || scene.image.width() % scene.bundle.heatmap.width() != 0) {
    fail(ErrorCode::CorruptFile, stem + "_heat.fmap: heatmap does not tile the image");
  }
  scene.bundle.stride = scene.image.width() / scene.bundle.heatmap.width();
  Components comps = connected_components(scene.gt_mask, Connectivity::Eight);
  scene.gt_labels = std::move(comps.labels);
  return scene;
}

}  // namespace toothseg
