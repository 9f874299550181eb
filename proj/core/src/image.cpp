#include "cgrp/image.hpp"

#include <algorithm>

namespace cgrp {

std::string provenance_str(Provenance p) {
  switch (p) {
    case Provenance::real_ir: return "real-ir";
    case Provenance::real_vis: return "real-vis";
    case Provenance::pseudo_ir: return "pseudo-ir";
    case Provenance::registered: return "registered";
    case Provenance::fused: return "fused";
  }
  return "?";
}

GrayImage make_image(Tensor pixels, Provenance tag) {
  check_arg(pixels.rank() == 2, "GrayImage needs a rank-2 raster, got " + shape_str(pixels.shape()));
  check_arg(pixels.all_finite(), "GrayImage: non-finite pixels");
  for (int64_t i = 0; i < pixels.numel(); ++i) pixels[i] = std::clamp(pixels[i], 0.0, 1.0);
  return GrayImage{std::move(pixels), tag};
}

Tensor rgb_to_luma(const Tensor& rgb) {
  check_arg(rgb.rank() == 3 && rgb.dim(2) == 3, "rgb_to_luma expects [H,W,3]");
  int64_t h = rgb.dim(0), w = rgb.dim(1);
  Tensor out({h, w});
  for (int64_t i = 0; i < h * w; ++i) {
    const double* px = rgb.data() + i * 3;
    out[i] = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
  }
  return out;
}

}  // namespace cgrp
