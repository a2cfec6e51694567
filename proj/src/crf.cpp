#include "toothseg/crf.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace toothseg {

void validate(const CrfParams& p) {
  if (!(p.w_app >= 0.0) || !(p.w_smooth >= 0.0)) fail(ErrorCode::InvalidConfig, "crf weights must be >= 0");
  if (!(p.theta_alpha > 0.0) || !(p.theta_beta > 0.0) || !(p.theta_gamma > 0.0)) {
    fail(ErrorCode::InvalidConfig, "crf thetas must be > 0");
  }
  if (p.iterations < 1) fail(ErrorCode::InvalidConfig, "crf iterations must be >= 1");
  if (p.window_radius < 0) fail(ErrorCode::InvalidConfig, "crf window_radius must be >= 1 (or 0 for auto)");
  if (!(p.p_fg > 0.0 && p.p_fg < 1.0)) fail(ErrorCode::InvalidConfig, "crf p_fg must be in (0, 1)");
  if (p.sample_stride < 0 || (p.sample_stride > 0 && p.sample_stride % 2 == 0)) {
    fail(ErrorCode::InvalidConfig, "crf sample_stride must be odd (or 0 for auto)");
  }
}

int effective_window_radius(const CrfParams& p) {
  if (p.window_radius > 0) return p.window_radius;
  return static_cast<int>(std::ceil(2.0 * std::max(p.theta_alpha, p.theta_gamma)));
}

int effective_sample_stride(const CrfParams& p) {
  if (p.sample_stride > 0) return p.sample_stride;
  return 2 * static_cast<int>(std::floor(p.theta_alpha / 10.0)) + 1;
}

ProbabilityField unary_from_mask(const BinaryMask& mask, double p_fg) {
  if (!(p_fg > 0.0 && p_fg < 1.0)) fail(ErrorCode::InvalidArgument, "p_fg must be in (0, 1)");
  ProbabilityField q{ScalarMap(mask.width(), mask.height()), ScalarMap(mask.width(), mask.height())};
  const auto hi = static_cast<float>(p_fg);
  const auto lo = static_cast<float>(1.0 - p_fg);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    q.q_fg[i] = mask[i] ? hi : lo;
    q.q_bg[i] = mask[i] ? lo : hi;
  }
  return q;
}

namespace {

struct Offset {
  int dx;
  int dy;
  float weight;  // spatial kernel value times the area it stands for
};

std::vector<Offset> appearance_offsets(const CrfParams& p, int radius, int stride) {
  const double inv = 1.0 / (2.0 * p.theta_alpha * p.theta_alpha);
  const int half = stride / 2;
  std::vector<Offset> offsets;
  auto add = [&](int dx, int dy, double area) {
    const double d2 = static_cast<double>(dx) * dx + static_cast<double>(dy) * dy;
    offsets.push_back({dx, dy, static_cast<float>(p.w_app * area * std::exp(-d2 * inv))});
  };
  for (int dy = -std::min(half, radius); dy <= std::min(half, radius); ++dy) {
    for (int dx = -std::min(half, radius); dx <= std::min(half, radius); ++dx) {
      if (dx != 0 || dy != 0) add(dx, dy, 1.0);
    }
  }
  const int cells = radius / stride;
  const double area = static_cast<double>(stride) * stride;
  for (int b = -cells; b <= cells; ++b) {
    for (int a = -cells; a <= cells; ++a) {
      if (a != 0 || b != 0) add(a * stride, b * stride, area);
    }
  }
  return offsets;
}

// Separable box-truncated Gaussian filter, excluding the center pixel's own
// contribution. Returns sum_j k(i,j) v_j for j != i.
void smooth_filter(const std::vector<double>& v, int w, int h, const std::vector<double>& taps, int radius,
                   std::vector<double>& tmp, std::vector<double>& out) {
  for (int y = 0; y < h; ++y) {
    const double* row = v.data() + static_cast<std::size_t>(y) * w;
    double* dst = tmp.data() + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) {
      const int lo = std::max(0, x - radius), hi = std::min(w - 1, x + radius);
      double s = 0.0;
      for (int k = lo; k <= hi; ++k) s += taps[static_cast<std::size_t>(std::abs(k - x))] * row[k];
      dst[x] = s;
    }
  }
  for (int y = 0; y < h; ++y) {
    const int lo = std::max(0, y - radius), hi = std::min(h - 1, y + radius);
    double* dst = out.data() + static_cast<std::size_t>(y) * w;
    std::fill(dst, dst + w, 0.0);
    for (int k = lo; k <= hi; ++k) {
      const double t = taps[static_cast<std::size_t>(std::abs(k - y))];
      const double* src = tmp.data() + static_cast<std::size_t>(k) * w;
      for (int x = 0; x < w; ++x) dst[x] += t * src[x];
    }
  }
  for (std::size_t i = 0; i < v.size(); ++i) out[i] -= taps[0] * taps[0] * v[i];
}

}  // namespace

BinaryMask refine(const ImageRGB& img, const ProbabilityField& unary, const CrfParams& params,
                  const CrfObserver& observer) {
  validate(params);
  if (!img.same_size(unary.q_fg) || !img.same_size(unary.q_bg)) {
    fail(ErrorCode::DimensionMismatch, "CRF unary field and image differ in size");
  }
  const int w = img.width(), h = img.height();
  const std::size_t n = img.size();

  std::vector<double> u_fg(n), u_bg(n);
  for (std::size_t i = 0; i < n; ++i) {
    u_fg[i] = -std::log(std::max(static_cast<double>(unary.q_fg[i]), 1e-12));
    u_bg[i] = -std::log(std::max(static_cast<double>(unary.q_bg[i]), 1e-12));
  }

  ProbabilityField q = unary;
  std::vector<double> q_fg(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = static_cast<double>(unary.q_fg[i]) + unary.q_bg[i];
    q_fg[i] = s > 0.0 ? unary.q_fg[i] / s : 0.5;
  }

  const int radius = effective_window_radius(params);
  const int stride = effective_sample_stride(params);

  std::vector<Offset> offsets;
  std::vector<float> color_lut;
  if (params.w_app > 0.0) {
    offsets = appearance_offsets(params, radius, stride);
    color_lut.resize(3 * 255 * 255 + 1);
    const double inv = 1.0 / (2.0 * params.theta_beta * params.theta_beta);
    for (std::size_t d2 = 0; d2 < color_lut.size(); ++d2) {
      color_lut[d2] = static_cast<float>(std::exp(-static_cast<double>(d2) * inv));
    }
  }
  std::vector<double> taps;
  std::vector<double> ones(n, 1.0), smooth_total(n), tmp(n), smooth_fg(n);
  if (params.w_smooth > 0.0) {
    // k(i,j) = w * g(dx) * g(dy); the weight is split evenly over both axes.
    const double inv = 1.0 / (2.0 * params.theta_gamma * params.theta_gamma);
    taps.resize(static_cast<std::size_t>(radius) + 1);
    for (int k = 0; k <= radius; ++k) taps[static_cast<std::size_t>(k)] = std::sqrt(params.w_smooth) * std::exp(-k * k * inv);
    smooth_filter(ones, w, h, taps, radius, tmp, smooth_total);
  }

  std::vector<double> app_fg(n), app_total(n);
  for (int it = 0; it < params.iterations; ++it) {
    std::fill(app_fg.begin(), app_fg.end(), 0.0);
    std::fill(app_total.begin(), app_total.end(), 0.0);
    for (const Offset& o : offsets) {
      const int x0 = std::max(0, -o.dx), x1 = std::min(w, w - o.dx);
      const int y0 = std::max(0, -o.dy), y1 = std::min(h, h - o.dy);
      for (int y = y0; y < y1; ++y) {
        const Rgb* row_i = &img(0, y);
        const Rgb* row_j = &img(0, y + o.dy);
        const double* qj = q_fg.data() + static_cast<std::size_t>(y + o.dy) * w + o.dx;
        double* mf = app_fg.data() + static_cast<std::size_t>(y) * w;
        double* mt = app_total.data() + static_cast<std::size_t>(y) * w;
        for (int x = x0; x < x1; ++x) {
          const Rgb a = row_i[x], b = row_j[x + o.dx];
          const int dr = a.r - b.r, dg = a.g - b.g, db = a.b - b.b;
          const double k = o.weight * color_lut[static_cast<std::size_t>(dr * dr + dg * dg + db * db)];
          mf[x] += k * qj[x];
          mt[x] += k;
        }
      }
    }
    if (params.w_smooth > 0.0) smooth_filter(q_fg, w, h, taps, radius, tmp, smooth_fg);

    for (std::size_t i = 0; i < n; ++i) {
      double m_fg = app_fg[i];
      double m_total = app_total[i];
      if (params.w_smooth > 0.0) {
        m_fg += smooth_fg[i];
        m_total += smooth_total[i];
      }
      // Potts: a label pays for the mass its neighbors put on the other label.
      const double e_fg = u_fg[i] + (m_total - m_fg);
      const double e_bg = u_bg[i] + m_fg;
      const double d = e_fg - e_bg;
      q_fg[i] = d > 0.0 ? std::exp(-d) / (1.0 + std::exp(-d)) : 1.0 / (1.0 + std::exp(d));
    }
    for (std::size_t i = 0; i < n; ++i) {
      q.q_fg[i] = static_cast<float>(q_fg[i]);
      q.q_bg[i] = static_cast<float>(1.0 - q_fg[i]);
    }
    if (observer) observer(it + 1, q);
  }

  BinaryMask out(w, h);
  for (std::size_t i = 0; i < n; ++i) out[i] = q.q_fg[i] > q.q_bg[i] ? 1 : 0;
  return out;
}

}  // namespace toothseg
