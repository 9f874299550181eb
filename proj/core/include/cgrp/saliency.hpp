#pragma once

#include "cgrp/ops.hpp"

namespace cgrp {

/// Histogram-contrast saliency, per sample: S(p) = sum_b h(b) * |I(p) - v_b|
/// over 256 bins with centers v_b = b/255 and h the normalized intensity
/// histogram (bin(x) = min(255, floor(256 x))). The histogram is treated as
/// a constant of the input, so the backward pass is the almost-everywhere
/// exact sum of h(b) * sign(I(p) - v_b).
Var saliency(const Var& img);

struct SaliencyWeights {
  Var s_ir, s_vis;  // saliency maps
  Var w_ir, w_vis;  // blend weights, w_ir + w_vis = 1
};

/// w_ir = S_ir / (S_ir + S_vis + eps), w_vis = 1 - w_ir.
SaliencyWeights saliency_weights(const Var& ir, const Var& vis, double eps = 1e-8);

}  // namespace cgrp
