#pragma once

#include <string>

#include "cgrp/tensor.hpp"

namespace cgrp {

/// Decoded PNG: grayscale raster in [0,1], plus the RGB planes when the
/// source had color (undefined tensor otherwise).
struct PngImage {
  Tensor gray;  // [H,W]
  Tensor rgb;   // [H,W,3] or undefined
  int bit_depth = 8;
};

PngImage read_png(const std::string& path);
Tensor read_png_gray(const std::string& path);

/// Quantizes to round(v * (2^depth - 1)); values are expected in [0,1].
void write_png_gray8(const Tensor& img, const std::string& path);
void write_png_gray16(const Tensor& img, const std::string& path);
void write_png_rgb8(const Tensor& rgb, const std::string& path);

}  // namespace cgrp
