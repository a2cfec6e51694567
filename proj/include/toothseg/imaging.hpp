#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "toothseg/error.hpp"

namespace toothseg {

/// Row-major 2-D raster. The optional Tag keeps rasters that share a pixel
/// type (gray images and binary masks) from converting into each other.
template <typename T, typename Tag = void>
class Grid {
 public:
  using value_type = T;

  Grid() = default;

  Grid(int width, int height, T fill = T{}) : width_(width), height_(height) {
    if (width < 0 || height < 0) fail(ErrorCode::InvalidArgument, "negative raster size");
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }

  Grid(int width, int height, std::vector<T> data)
      : width_(width), height_(height), data_(std::move(data)) {
    if (width < 0 || height < 0 ||
        data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
      fail(ErrorCode::InvalidArgument, "raster data length does not match width*height");
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  T& operator()(int x, int y) noexcept { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const noexcept { return data_[index(x, y)]; }
  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<T> pixels() noexcept { return data_; }
  std::span<const T> pixels() const noexcept { return data_; }
  const std::vector<T>& values() const noexcept { return data_; }

  template <typename U, typename UTag>
  bool same_size(const Grid<U, UTag>& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// h in degrees [0, 360), s and v in [0, 1].
struct Hsv {
  float h = 0.0F;
  float s = 0.0F;
  float v = 0.0F;
};

struct MaskTag {};

using ImageRGB = Grid<Rgb>;
using GrayImage = Grid<std::uint8_t>;
using ScalarMap = Grid<float>;
using BinaryMask = Grid<std::uint8_t, MaskTag>;  // 1 = tooth, 0 = background
using LabelMap = Grid<std::uint32_t>;            // 0 = background/unlabeled
using HsvImage = Grid<Hsv>;

/// C x H x W float tensor, channel-major then row-major.
class FeatureStack {
 public:
  FeatureStack() = default;
  FeatureStack(int channels, int width, int height, float fill = 0.0F);
  FeatureStack(int channels, int width, int height, std::vector<float> data);

  int channels() const noexcept { return channels_; }
  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t plane_size() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }

  float& at(int c, int x, int y) noexcept { return data_[offset(c, x, y)]; }
  float at(int c, int x, int y) const noexcept { return data_[offset(c, x, y)]; }

  std::span<float> channel(int c) noexcept { return {data_.data() + c * plane_size(), plane_size()}; }
  std::span<const float> channel(int c) const noexcept {
    return {data_.data() + c * plane_size(), plane_size()};
  }
  const std::vector<float>& values() const noexcept { return data_; }

  friend bool operator==(const FeatureStack&, const FeatureStack&) = default;

 private:
  std::size_t offset(int c, int x, int y) const noexcept {
    return static_cast<std::size_t>(c) * plane_size() +
           static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int channels_ = 0;
  int width_ = 0;
  int height_ = 0;
  std::vector<float> data_;
};

/// Throws InvalidArgument if any value is NaN or infinite.
void require_finite(std::span<const float> values, const char* what);

/// BT.601 luma, rounded to nearest.
GrayImage rgb_to_gray(const ImageRGB& img);
std::uint8_t rgb_to_gray(Rgb px);

Hsv rgb_to_hsv(Rgb px);
Rgb hsv_to_rgb(Hsv hsv);
HsvImage rgb_to_hsv(const ImageRGB& img);

/// Half-pixel-center bilinear sampling with clamped borders.
ScalarMap bilinear_resize(const ScalarMap& map, int new_width, int new_height);
ImageRGB bilinear_resize(const ImageRGB& img, int new_width, int new_height);
BinaryMask nearest_resize(const BinaryMask& mask, int new_width, int new_height);

std::pair<float, float> min_max(const ScalarMap& map);

/// (x - min) / (max - min); a constant map becomes all zeros.
ScalarMap minmax_normalize(const ScalarMap& map);

ScalarMap to_scalar_map(const BinaryMask& mask);
std::size_t count_foreground(const BinaryMask& mask);

}  // namespace toothseg
