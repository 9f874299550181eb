#pragma once

#include "cgrp/ops.hpp"

namespace cgrp {

struct MsssimConfig {
  int64_t scales = 5;           // capped when the image pyramid runs out
  int64_t window = 11;
  double sigma = 1.5;
  double c1 = 0.01 * 0.01;      // (k1 * L)^2 at dynamic range 1
  double c2 = 0.03 * 0.03;
  bool single_scale = false;    // plain SSIM instead of the multi-scale product
};

/// Differentiable multi-scale structural similarity of two [N,1,H,W] tensors
/// in [0,1]. Standard scale weights (0.0448, 0.2856, 0.3001, 0.2363, 0.1333),
/// renormalized when fewer scales fit; scales are dropped with a one-time
/// warning per image size once the downsampled side falls below the window.
/// Identical inputs give exactly 1.
Var msssim(const Var& a, const Var& b, const MsssimConfig& cfg = {});

/// Number of scales that actually fit an H×W image under cfg.
int64_t msssim_usable_scales(int64_t h, int64_t w, const MsssimConfig& cfg);

}  // namespace cgrp
