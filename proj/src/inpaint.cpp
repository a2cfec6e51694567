#include "toothseg/inpaint.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "toothseg/classical.hpp"

namespace toothseg {

void validate(const InpaintConfig& cfg) {
  if (cfg.iterations < 1) fail(ErrorCode::InvalidConfig, "inpaint iterations must be >= 1");
  if (!(cfg.dt > 0.0)) fail(ErrorCode::InvalidConfig, "inpaint dt must be > 0");
  if (cfg.spot_value_threshold < 0 || cfg.spot_value_threshold > 255) {
    fail(ErrorCode::InvalidConfig, "spot_value_threshold must be in 0..255");
  }
  if (cfg.spot_dilation < 0) fail(ErrorCode::InvalidConfig, "spot_dilation must be >= 0");
}

BinaryMask detect_bright_spots(const ImageRGB& img, const InpaintConfig& cfg) {
  validate(cfg);
  BinaryMask spots(img.width(), img.height());
  for (std::size_t i = 0; i < img.size(); ++i) {
    const Rgb px = img[i];
    spots[i] = std::min({px.r, px.g, px.b}) >= cfg.spot_value_threshold ? 1 : 0;
  }
  if (cfg.spot_dilation > 0) spots = dilate(spots, {SeShape::Square, cfg.spot_dilation});
  return spots;
}

namespace {

constexpr int kDx[4] = {1, -1, 0, 0};
constexpr int kDy[4] = {0, 0, 1, -1};

class ChannelField {
 public:
  ChannelField(int w, int h) : w_(w), h_(h), v_(static_cast<std::size_t>(w) * h) {}

  double& operator()(int x, int y) { return v_[static_cast<std::size_t>(y) * w_ + x]; }
  // Neumann (clamped) access for derivative stencils.
  double at(int x, int y) const {
    x = std::clamp(x, 0, w_ - 1);
    y = std::clamp(y, 0, h_ - 1);
    return v_[static_cast<std::size_t>(y) * w_ + x];
  }

 private:
  int w_;
  int h_;
  std::vector<double> v_;
};

// Each spot component starts at the mean of the known pixels bordering it.
void initialize_spots(ChannelField& f, const BinaryMask& spots, const Components& comps) {
  std::vector<double> sum(comps.count + 1, 0.0);
  std::vector<double> count(comps.count + 1, 0.0);
  for (int y = 0; y < spots.height(); ++y) {
    for (int x = 0; x < spots.width(); ++x) {
      const std::uint32_t label = comps.labels(x, y);
      if (label == 0) continue;
      for (int k = 0; k < 4; ++k) {
        const int nx = x + kDx[k], ny = y + kDy[k];
        if (spots.contains(nx, ny) && !spots(nx, ny)) {
          sum[label] += f(nx, ny);
          count[label] += 1.0;
        }
      }
    }
  }
  for (int y = 0; y < spots.height(); ++y) {
    for (int x = 0; x < spots.width(); ++x) {
      const std::uint32_t label = comps.labels(x, y);
      if (label != 0) f(x, y) = count[label] > 0 ? sum[label] / count[label] : 0.0;
    }
  }
}

void gauss_seidel(ChannelField& f, const BinaryMask& spots, const std::vector<std::pair<int, int>>& cells,
                  int sweeps) {
  for (int it = 0; it < sweeps; ++it) {
    for (const auto& [x, y] : cells) {
      double sum = 0.0;
      int n = 0;
      for (int k = 0; k < 4; ++k) {
        const int nx = x + kDx[k], ny = y + kDy[k];
        if (!spots.contains(nx, ny)) continue;
        sum += f(nx, ny);
        ++n;
      }
      f(x, y) = sum / n;
    }
  }
}

double laplacian(const ChannelField& f, int x, int y) {
  return f.at(x + 1, y) + f.at(x - 1, y) + f.at(x, y + 1) + f.at(x, y - 1) - 4.0 * f.at(x, y);
}

// One explicit step of isophote transport followed by one curvature
// diffusion step, on values scaled to [0, 1].
void transport_step(ChannelField& f, const std::vector<std::pair<int, int>>& cells, double dt) {
  constexpr double kEps = 1e-8;
  std::vector<double> update(cells.size());

  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto [x, y] = cells[i];
    const double dlx = laplacian(f, x + 1, y) - laplacian(f, x - 1, y);
    const double dly = laplacian(f, x, y + 1) - laplacian(f, x, y - 1);
    const double ix = 0.5 * (f.at(x + 1, y) - f.at(x - 1, y));
    const double iy = 0.5 * (f.at(x, y + 1) - f.at(x, y - 1));
    const double norm = std::sqrt(ix * ix + iy * iy);
    if (norm < kEps) {
      update[i] = 0.0;
      continue;
    }
    // Isophote direction: gradient rotated by 90 degrees.
    const double beta = (dlx * -iy + dly * ix) / norm;
    const double c = f.at(x, y);
    const double ixb = c - f.at(x - 1, y), ixf = f.at(x + 1, y) - c;
    const double iyb = c - f.at(x, y - 1), iyf = f.at(x, y + 1) - c;
    auto sq = [](double v) { return v * v; };
    double grad = 0.0;
    if (beta > 0.0) {
      grad = std::sqrt(sq(std::min(ixb, 0.0)) + sq(std::max(ixf, 0.0)) + sq(std::min(iyb, 0.0)) + sq(std::max(iyf, 0.0)));
    } else {
      grad = std::sqrt(sq(std::max(ixb, 0.0)) + sq(std::min(ixf, 0.0)) + sq(std::max(iyb, 0.0)) + sq(std::min(iyf, 0.0)));
    }
    update[i] = beta * grad;
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto [x, y] = cells[i];
    f(x, y) = std::clamp(f(x, y) + dt * update[i], 0.0, 1.0);
  }

  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto [x, y] = cells[i];
    const double ix = 0.5 * (f.at(x + 1, y) - f.at(x - 1, y));
    const double iy = 0.5 * (f.at(x, y + 1) - f.at(x, y - 1));
    const double ixx = f.at(x + 1, y) - 2.0 * f.at(x, y) + f.at(x - 1, y);
    const double iyy = f.at(x, y + 1) - 2.0 * f.at(x, y) + f.at(x, y - 1);
    const double ixy = 0.25 * (f.at(x + 1, y + 1) - f.at(x + 1, y - 1) - f.at(x - 1, y + 1) + f.at(x - 1, y - 1));
    const double g2 = ix * ix + iy * iy;
    update[i] = g2 < kEps ? 0.0 : (ixx * iy * iy - 2.0 * ix * iy * ixy + iyy * ix * ix) / g2;
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto [x, y] = cells[i];
    f(x, y) = std::clamp(f(x, y) + dt * update[i], 0.0, 1.0);
  }
}

}  // namespace

ImageRGB inpaint(const ImageRGB& img, const BinaryMask& spots, const InpaintConfig& cfg) {
  validate(cfg);
  if (!img.same_size(spots)) fail(ErrorCode::DimensionMismatch, "spot mask and image differ in size");
  const std::size_t spot_count = count_foreground(spots);
  if (spot_count == 0) return img;
  if (spot_count == img.size()) fail(ErrorCode::SpotTouchesFullImage, "spot mask covers the whole image");

  const Components comps = connected_components(spots, Connectivity::Four);
  std::vector<std::pair<int, int>> cells;
  cells.reserve(spot_count);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (spots(x, y)) cells.emplace_back(x, y);
    }
  }

  ImageRGB out = img;
  for (std::uint8_t Rgb::*channel : {&Rgb::r, &Rgb::g, &Rgb::b}) {
    ChannelField f(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y) {
      for (int x = 0; x < img.width(); ++x) f(x, y) = img(x, y).*channel / 255.0;
    }
    initialize_spots(f, spots, comps);
    gauss_seidel(f, spots, cells, cfg.iterations);
    if (cfg.method == InpaintMethod::NavierStokes) {
      for (int it = 0; it < cfg.iterations; ++it) transport_step(f, cells, cfg.dt);
    }
    for (const auto& [x, y] : cells) {
      out(x, y).*channel = static_cast<std::uint8_t>(std::clamp<long>(std::lround(f(x, y) * 255.0), 0, 255));
    }
  }
  return out;
}

}  // namespace toothseg
