#include <cmath>

#include "cgrp/ops.hpp"

namespace cgrp::ops {
namespace {

// Sample geometry for one target pixel: corner indices, fractions, and
// whether the clamp killed the derivative along each axis.
struct TapX {
  int64_t x0, x1;
  double fx;
  bool live;
};

inline TapX tap(double s, int64_t extent) {
  TapX t;
  double c = s < 0.0 ? 0.0 : (s > static_cast<double>(extent - 1) ? static_cast<double>(extent - 1) : s);
  t.x0 = static_cast<int64_t>(std::floor(c));
  t.x1 = t.x0 + 1 < extent ? t.x0 + 1 : extent - 1;
  t.fx = c - static_cast<double>(t.x0);
  t.live = s > 0.0 && s < static_cast<double>(extent - 1);
  return t;
}

}  // namespace

Var warp_bilinear(const Var& img, const Var& field) {
  const Tensor& iv = img.value();
  const Tensor& fv = field.value();
  check_arg(iv.rank() == 4, "warp_bilinear: image must be NCHW");
  check_arg(fv.rank() == 4 && fv.dim(1) == 2, "warp_bilinear: field must be [N,2,H,W]");
  check_arg(iv.dim(0) == fv.dim(0) && iv.dim(2) == fv.dim(2) && iv.dim(3) == fv.dim(3),
            "warp_bilinear: image " + shape_str(iv.shape()) + " vs field " + shape_str(fv.shape()));
  const int64_t n = iv.dim(0), c = iv.dim(1), h = iv.dim(2), w = iv.dim(3);

  Tensor out(iv.shape());
  for (int64_t ni = 0; ni < n; ++ni) {
    const double* dx = fv.data() + (ni * 2 + 0) * h * w;
    const double* dy = fv.data() + (ni * 2 + 1) * h * w;
    for (int64_t y = 0; y < h; ++y) {
      for (int64_t x = 0; x < w; ++x) {
        int64_t p = y * w + x;
        TapX tx = tap(static_cast<double>(x) + dx[p], w);
        TapX ty = tap(static_cast<double>(y) + dy[p], h);
        for (int64_t ci = 0; ci < c; ++ci) {
          const double* plane = iv.data() + (ni * c + ci) * h * w;
          double v00 = plane[ty.x0 * w + tx.x0], v10 = plane[ty.x0 * w + tx.x1];
          double v01 = plane[ty.x1 * w + tx.x0], v11 = plane[ty.x1 * w + tx.x1];
          out.data()[(ni * c + ci) * h * w + p] =
              (1.0 - ty.fx) * ((1.0 - tx.fx) * v00 + tx.fx * v10) +
              ty.fx * ((1.0 - tx.fx) * v01 + tx.fx * v11);
        }
      }
    }
  }

  return make_op(std::move(out), {img, field}, [img, field, n, c, h, w](Node& self) {
    const Tensor& iv = img.value();
    const Tensor& fv = field.value();
    const bool need_di = img.requires_grad();
    const bool need_df = field.requires_grad();
    for (int64_t ni = 0; ni < n; ++ni) {
      const double* dx = fv.data() + (ni * 2 + 0) * h * w;
      const double* dy = fv.data() + (ni * 2 + 1) * h * w;
      double* gdx = nullptr;
      double* gdy = nullptr;
      if (need_df) {
        Tensor& fg = field.node()->ensure_grad();
        gdx = fg.data() + (ni * 2 + 0) * h * w;
        gdy = fg.data() + (ni * 2 + 1) * h * w;
      }
      for (int64_t y = 0; y < h; ++y) {
        for (int64_t x = 0; x < w; ++x) {
          int64_t p = y * w + x;
          TapX tx = tap(static_cast<double>(x) + dx[p], w);
          TapX ty = tap(static_cast<double>(y) + dy[p], h);
          double sx = 0.0, sy = 0.0;
          for (int64_t ci = 0; ci < c; ++ci) {
            const double* plane = iv.data() + (ni * c + ci) * h * w;
            double g = self.grad.data()[(ni * c + ci) * h * w + p];
            if (g == 0.0) continue;
            double v00 = plane[ty.x0 * w + tx.x0], v10 = plane[ty.x0 * w + tx.x1];
            double v01 = plane[ty.x1 * w + tx.x0], v11 = plane[ty.x1 * w + tx.x1];
            if (need_df) {
              sx += g * ((1.0 - ty.fx) * (v10 - v00) + ty.fx * (v11 - v01));
              sy += g * ((1.0 - tx.fx) * (v01 - v00) + tx.fx * (v11 - v10));
            }
            if (need_di) {
              double* ig = img.node()->ensure_grad().data() + (ni * c + ci) * h * w;
              ig[ty.x0 * w + tx.x0] += g * (1.0 - ty.fx) * (1.0 - tx.fx);
              ig[ty.x0 * w + tx.x1] += g * (1.0 - ty.fx) * tx.fx;
              ig[ty.x1 * w + tx.x0] += g * ty.fx * (1.0 - tx.fx);
              ig[ty.x1 * w + tx.x1] += g * ty.fx * tx.fx;
            }
          }
          if (need_df) {
            if (tx.live) gdx[p] += sx;
            if (ty.live) gdy[p] += sy;
          }
        }
      }
    }
  });
}

}  // namespace cgrp::ops
