#pragma once

#include <string>

#include "cgrp/tensor.hpp"

namespace cgrp {

enum class Provenance { real_ir, real_vis, pseudo_ir, registered, fused };

std::string provenance_str(Provenance p);

/// Single-channel image: H×W raster with values in [0,1].
struct GrayImage {
  Tensor pixels;  // rank 2
  Provenance tag = Provenance::real_vis;

  int64_t height() const { return pixels.dim(0); }
  int64_t width() const { return pixels.dim(1); }
};

/// Clamps every pixel into [0,1]; applied at module boundaries only.
GrayImage make_image(Tensor pixels, Provenance tag);

/// Rec. 601 luma from interleaved RGB [H,W,3] in [0,1].
Tensor rgb_to_luma(const Tensor& rgb);

}  // namespace cgrp
