#pragma once

#include <vector>

#include "cgrp/autograd.hpp"

namespace cgrp::ops {

// ---- elementwise, with numpy-style broadcasting (dims equal or 1) ----
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);
/// Elementwise max; ties route the gradient to `a`.
Var maximum(const Var& a, const Var& b);

/// scale * v + shift
Var affine(const Var& v, double scale, double shift = 0.0);
inline Var neg(const Var& v) { return affine(v, -1.0); }

Var abs(const Var& v);
Var square(const Var& v);
Var sqrt(const Var& v);
Var log(const Var& v);
/// x^e for constant exponent; x must stay positive for non-integer e.
Var pow(const Var& v, double exponent);
Var sigmoid(const Var& v);
Var tanh(const Var& v);
Var relu(const Var& v);
Var leaky_relu(const Var& v, double slope = 0.2);
Var clamp(const Var& v, double lo, double hi);

// ---- reductions ----
Var reduce_sum(const Var& v, const std::vector<int64_t>& axes, bool keepdim);
Var reduce_mean(const Var& v, const std::vector<int64_t>& axes, bool keepdim);
Var sum_all(const Var& v);
Var mean_all(const Var& v);

// ---- shape ----
Var reshape(const Var& v, Shape shape);
/// Concatenate along the channel axis of NCHW tensors.
Var concat_channels(const std::vector<Var>& parts);
/// Channels [c0, c1) of an NCHW tensor.
Var slice_channels(const Var& v, int64_t c0, int64_t c1);

// ---- convolution & pooling (NCHW) ----
/// 2-D cross-correlation with zero padding. w: [O, I, kh, kw], optional b: [O].
Var conv2d(const Var& x, const Var& w, const Var& b, int64_t stride = 1, int64_t pad = 0);
Var conv2d(const Var& x, const Var& w, int64_t stride = 1, int64_t pad = 0);
Var max_pool2d(const Var& x, int64_t k = 2, int64_t stride = 2);
Var avg_pool2d(const Var& x, int64_t k = 2, int64_t stride = 2);

/// Edge-replicating pad of an NCHW tensor.
Var pad_edge(const Var& x, int64_t top, int64_t bottom, int64_t left, int64_t right);
/// Spatial crop: rows [y0, y0+h), cols [x0, x0+w).
Var crop(const Var& x, int64_t y0, int64_t x0, int64_t h, int64_t w);

/// Doubles H and W replicating each pixel.
Var upsample_nearest2x(const Var& x);
/// Doubles H and W; even output indices copy the source exactly, odd ones
/// average neighbours (border replicated).
Var upsample_bilinear2x(const Var& x);

// ---- resampling ----
/// Pull-warp: out(p) = bilinear(img, p + field(p)), border-replicated.
/// img: [N,C,H,W], field: [N,2,H,W] (plane 0 = dx, plane 1 = dy, pixels).
/// Differentiable w.r.t. both arguments.
Var warp_bilinear(const Var& img, const Var& field);

// ---- feature statistics ----
/// Batched Gram matrix of an NCHW feature map, normalized by C*H*W -> [N,C,C].
Var gram(const Var& features);

}  // namespace cgrp::ops
