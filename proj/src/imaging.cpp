#include "toothseg/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace toothseg {

FeatureStack::FeatureStack(int channels, int width, int height, float fill)
    : channels_(channels), width_(width), height_(height) {
  if (channels < 1 || width < 1 || height < 1) {
    fail(ErrorCode::InvalidArgument, "feature stack needs at least 1 channel and 1x1 size");
  }
  data_.assign(static_cast<std::size_t>(channels) * plane_size(), fill);
}

FeatureStack::FeatureStack(int channels, int width, int height, std::vector<float> data)
    : channels_(channels), width_(width), height_(height), data_(std::move(data)) {
  if (channels < 1 || width < 1 || height < 1) {
    fail(ErrorCode::InvalidArgument, "feature stack needs at least 1 channel and 1x1 size");
  }
  if (data_.size() != static_cast<std::size_t>(channels) * plane_size()) {
    fail(ErrorCode::InvalidArgument, "feature stack data length does not match C*H*W");
  }
  require_finite(data_, "feature stack");
}

void require_finite(std::span<const float> values, const char* what) {
  for (float v : values) {
    if (!std::isfinite(v)) fail(ErrorCode::InvalidArgument, std::string(what) + " contains a non-finite value");
  }
}

std::uint8_t rgb_to_gray(Rgb px) {
  const double y = 0.299 * px.r + 0.587 * px.g + 0.114 * px.b;
  return static_cast<std::uint8_t>(std::clamp<long>(std::lround(y), 0, 255));
}

GrayImage rgb_to_gray(const ImageRGB& img) {
  GrayImage out(img.width(), img.height());
  for (std::size_t i = 0; i < img.size(); ++i) out[i] = rgb_to_gray(img[i]);
  return out;
}

Hsv rgb_to_hsv(Rgb px) {
  const float r = px.r / 255.0F;
  const float g = px.g / 255.0F;
  const float b = px.b / 255.0F;
  const float hi = std::max({r, g, b});
  const float lo = std::min({r, g, b});
  const float delta = hi - lo;

  Hsv out;
  out.v = hi;
  out.s = hi > 0.0F ? delta / hi : 0.0F;
  if (delta <= 0.0F) return out;

  float h = 0.0F;
  if (px.r >= px.g && px.r >= px.b) {
    h = 60.0F * std::fmod((g - b) / delta, 6.0F);
  } else if (px.g >= px.b) {
    h = 60.0F * ((b - r) / delta + 2.0F);
  } else {
    h = 60.0F * ((r - g) / delta + 4.0F);
  }
  if (h < 0.0F) h += 360.0F;
  if (h >= 360.0F) h -= 360.0F;
  out.h = h;
  return out;
}

Rgb hsv_to_rgb(Hsv hsv) {
  const float c = hsv.v * hsv.s;
  const float hp = std::fmod(hsv.h, 360.0F) / 60.0F;
  const float x = c * (1.0F - std::fabs(std::fmod(hp, 2.0F) - 1.0F));
  float r = 0, g = 0, b = 0;
  switch (static_cast<int>(hp)) {
    case 0: r = c; g = x; break;
    case 1: r = x; g = c; break;
    case 2: g = c; b = x; break;
    case 3: g = x; b = c; break;
    case 4: r = x; b = c; break;
    default: r = c; b = x; break;
  }
  const float m = hsv.v - c;
  auto to_byte = [](float f) {
    return static_cast<std::uint8_t>(std::clamp<long>(std::lround(f * 255.0F), 0, 255));
  };
  return {to_byte(r + m), to_byte(g + m), to_byte(b + m)};
}

HsvImage rgb_to_hsv(const ImageRGB& img) {
  HsvImage out(img.width(), img.height());
  for (std::size_t i = 0; i < img.size(); ++i) out[i] = rgb_to_hsv(img[i]);
  return out;
}

namespace {

struct Tap {
  int i0;
  int i1;
  double frac;
};

// Source taps for half-pixel-center sampling: src = (dst + 0.5) * in/out - 0.5.
std::vector<Tap> make_taps(int in_size, int out_size) {
  std::vector<Tap> taps(static_cast<std::size_t>(out_size));
  const double scale = static_cast<double>(in_size) / out_size;
  for (int d = 0; d < out_size; ++d) {
    double s = (d + 0.5) * scale - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(in_size - 1));
    const int i0 = static_cast<int>(std::floor(s));
    const int i1 = std::min(i0 + 1, in_size - 1);
    taps[static_cast<std::size_t>(d)] = {i0, i1, s - i0};
  }
  return taps;
}

void check_target(int w, int h) {
  if (w < 1 || h < 1) fail(ErrorCode::InvalidArgument, "resize target must be at least 1x1");
}

}  // namespace

ScalarMap bilinear_resize(const ScalarMap& map, int new_width, int new_height) {
  check_target(new_width, new_height);
  if (map.empty()) fail(ErrorCode::InvalidArgument, "cannot resize an empty map");
  if (map.width() == new_width && map.height() == new_height) return map;

  const auto xs = make_taps(map.width(), new_width);
  const auto ys = make_taps(map.height(), new_height);
  ScalarMap out(new_width, new_height);
  for (int y = 0; y < new_height; ++y) {
    const Tap& ty = ys[static_cast<std::size_t>(y)];
    for (int x = 0; x < new_width; ++x) {
      const Tap& tx = xs[static_cast<std::size_t>(x)];
      const double top = map(tx.i0, ty.i0) + (map(tx.i1, ty.i0) - double{map(tx.i0, ty.i0)}) * tx.frac;
      const double bot = map(tx.i0, ty.i1) + (map(tx.i1, ty.i1) - double{map(tx.i0, ty.i1)}) * tx.frac;
      out(x, y) = static_cast<float>(top + (bot - top) * ty.frac);
    }
  }
  return out;
}

ImageRGB bilinear_resize(const ImageRGB& img, int new_width, int new_height) {
  check_target(new_width, new_height);
  if (img.empty()) fail(ErrorCode::InvalidArgument, "cannot resize an empty image");
  if (img.width() == new_width && img.height() == new_height) return img;

  const auto xs = make_taps(img.width(), new_width);
  const auto ys = make_taps(img.height(), new_height);
  ImageRGB out(new_width, new_height);
  auto lerp_channel = [&](std::uint8_t Rgb::*ch, const Tap& tx, const Tap& ty) {
    const double a = img(tx.i0, ty.i0).*ch, b = img(tx.i1, ty.i0).*ch;
    const double c = img(tx.i0, ty.i1).*ch, d = img(tx.i1, ty.i1).*ch;
    const double top = a + (b - a) * tx.frac;
    const double bot = c + (d - c) * tx.frac;
    return static_cast<std::uint8_t>(std::clamp<long>(std::lround(top + (bot - top) * ty.frac), 0, 255));
  };
  for (int y = 0; y < new_height; ++y) {
    const Tap& ty = ys[static_cast<std::size_t>(y)];
    for (int x = 0; x < new_width; ++x) {
      const Tap& tx = xs[static_cast<std::size_t>(x)];
      out(x, y) = {lerp_channel(&Rgb::r, tx, ty), lerp_channel(&Rgb::g, tx, ty), lerp_channel(&Rgb::b, tx, ty)};
    }
  }
  return out;
}

BinaryMask nearest_resize(const BinaryMask& mask, int new_width, int new_height) {
  check_target(new_width, new_height);
  if (mask.width() == new_width && mask.height() == new_height) return mask;
  BinaryMask out(new_width, new_height);
  for (int y = 0; y < new_height; ++y) {
    const int sy = std::min(mask.height() - 1, static_cast<int>((y + 0.5) * mask.height() / new_height));
    for (int x = 0; x < new_width; ++x) {
      const int sx = std::min(mask.width() - 1, static_cast<int>((x + 0.5) * mask.width() / new_width));
      out(x, y) = mask(sx, sy);
    }
  }
  return out;
}

std::pair<float, float> min_max(const ScalarMap& map) {
  if (map.empty()) return {0.0F, 0.0F};
  const auto [lo, hi] = std::minmax_element(map.values().begin(), map.values().end());
  return {*lo, *hi};
}

ScalarMap minmax_normalize(const ScalarMap& map) {
  const auto [lo, hi] = min_max(map);
  ScalarMap out(map.width(), map.height(), 0.0F);
  if (!(hi > lo)) return out;
  const double range = static_cast<double>(hi) - lo;
  for (std::size_t i = 0; i < map.size(); ++i) {
    out[i] = static_cast<float>((static_cast<double>(map[i]) - lo) / range);
  }
  return out;
}

ScalarMap to_scalar_map(const BinaryMask& mask) {
  ScalarMap out(mask.width(), mask.height());
  for (std::size_t i = 0; i < mask.size(); ++i) out[i] = mask[i] ? 1.0F : 0.0F;
  return out;
}

std::size_t count_foreground(const BinaryMask& mask) {
  return static_cast<std::size_t>(std::count_if(mask.values().begin(), mask.values().end(),
                                                [](std::uint8_t v) { return v != 0; }));
}

}  // namespace toothseg
