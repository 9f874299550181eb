#pragma once

#include <cstdint>
#include <string>

#include "cgrp/image.hpp"
#include "cgrp/tensor.hpp"

namespace cgrp {

/// Dense pull-warp displacement field: warp output at p samples the input at
/// p + (dx(p), dy(p)). Units are pixels.
struct DeformationField {
  Tensor dx, dy;  // rank 2, same H×W

  int64_t height() const { return dx.dim(0); }
  int64_t width() const { return dx.dim(1); }

  static DeformationField zero(int64_t h, int64_t w);
  /// [1,2,H,W] layout used by the differentiable resampler (plane 0 = dx).
  Tensor packed() const;
  static DeformationField from_packed(const Tensor& t);
};

/// Affine map about the image center:
///   A(p) = R(rotation) * Shear(shear) * Scale(sx,sy) * (p - c) + c + (tx,ty)
struct AffineParams {
  double rotation_deg = 0.0;
  double tx = 0.0, ty = 0.0;
  double sx = 1.0, sy = 1.0;
  double shear_deg = 0.0;

  bool is_identity() const;
};

/// Bilinear pull-warp with border replication. Zero field returns the input
/// bit-exactly.
Tensor warp(const Tensor& img, const DeformationField& field);
GrayImage warp(const GrayImage& img, const DeformationField& field);

/// Field of the stacked warp: warp(img, compose(a, b)) ~= warp(warp(img, a), b).
/// Displacement: compose(a,b)(p) = b(p) + a(p + b(p)), bilinear lookup of a.
DeformationField compose(const DeformationField& a, const DeformationField& b);

/// Displacement field of the affine map: field(p) = A(p) - p, so the warp
/// output at p shows the input at A(p).
DeformationField affine_to_field(const AffineParams& params, int64_t h, int64_t w);

/// Smooth random field: per-plane uniform noise in [-1,1], Gaussian-blurred
/// with std sigma (border replicated), then rescaled so the maximum
/// displacement magnitude equals alpha. Deterministic in seed.
DeformationField elastic_field(double sigma, double alpha, uint64_t seed, int64_t h, int64_t w);

/// "DFLD" file format: magic, u32 H, u32 W, then row-major f32 dx and dy
/// planes, little-endian.
void save_field(const DeformationField& field, const std::string& path);
DeformationField load_field(const std::string& path);

/// Separable Gaussian blur of a rank-2 raster, kernel truncated at 3 sigma,
/// border replicated.
Tensor gaussian_blur(const Tensor& img, double sigma);

}  // namespace cgrp
