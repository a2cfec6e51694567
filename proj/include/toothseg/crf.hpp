#pragma once

#include <functional>

#include "toothseg/imaging.hpp"

namespace toothseg {

struct CrfParams {
  double w_app = 10.0;
  double theta_alpha = 80.0;  // px
  double theta_beta = 13.0;   // RGB intensity units
  double w_smooth = 3.0;
  double theta_gamma = 3.0;  // px
  int iterations = 5;
  int window_radius = 0;  // 0 = ceil(2 * max(theta_alpha, theta_gamma))
  double p_fg = 0.9;
  // Appearance-kernel sampling stride (odd). 1 = every pixel of the window;
  // 0 = derived from theta_alpha.
  int sample_stride = 0;
};

void validate(const CrfParams& params);
int effective_window_radius(const CrfParams& params);
int effective_sample_stride(const CrfParams& params);

/// Per-pixel two-label marginals.
struct ProbabilityField {
  ScalarMap q_bg;
  ScalarMap q_fg;

  int width() const noexcept { return q_fg.width(); }
  int height() const noexcept { return q_fg.height(); }
};

ProbabilityField unary_from_mask(const BinaryMask& mask, double p_fg);

using CrfObserver = std::function<void(int iteration, const ProbabilityField& q)>;

/// Mean-field inference with a Potts model and the usual appearance
/// (position + color) and smoothness (position) Gaussian kernels, both
/// truncated to a square window of radius window_radius. The smoothness
/// term is filtered exactly (it is separable). The appearance term visits
/// every offset in the central stride x stride block and one offset per
/// stride x stride cell elsewhere, weighted by the cell area; stride 1 is the
/// exact windowed sum. Returns argmax(Q) with ties going to background.
BinaryMask refine(const ImageRGB& img, const ProbabilityField& unary, const CrfParams& params,
                  const CrfObserver& observer = {});

}  // namespace toothseg
