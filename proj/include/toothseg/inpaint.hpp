#pragma once

#include "toothseg/imaging.hpp"

namespace toothseg {

enum class InpaintMethod { NavierStokes, Harmonic };

struct InpaintConfig {
  InpaintMethod method = InpaintMethod::NavierStokes;
  int iterations = 300;
  double dt = 0.1;
  int spot_value_threshold = 240;  // on min(R, G, B)
  int spot_dilation = 1;           // square radius, 0 = none
};

void validate(const InpaintConfig& cfg);

/// Specular highlights: min(R,G,B) >= threshold, dilated by spot_dilation.
BinaryMask detect_bright_spots(const ImageRGB& img, const InpaintConfig& cfg);

/// Refills pixels under `spots` from the surrounding colors; every pixel
/// outside `spots` is returned unchanged.
///
/// Harmonic: Gauss-Seidel sweeps of the discrete Laplace equation with the
/// known pixels as Dirichlet data. NavierStokes: the harmonic fill is used as
/// the initial state, then each step transports the smoothness estimate
/// (Laplacian) along isophotes with an upwind, slope-limited gradient
/// magnitude and follows with one curvature-driven anisotropic diffusion
/// step.
///
/// Throws SpotTouchesFullImage when no pixel lies outside the mask.
ImageRGB inpaint(const ImageRGB& img, const BinaryMask& spots, const InpaintConfig& cfg);

}  // namespace toothseg
