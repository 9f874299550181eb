#include <Eigen/Core>

#include <cstring>

#include "cgrp/ops.hpp"

namespace cgrp::ops {

Var pad_edge(const Var& x, int64_t top, int64_t bottom, int64_t left, int64_t right) {
  const Tensor& xv = x.value();
  check_arg(xv.rank() == 4, "pad_edge expects NCHW");
  check_arg(top >= 0 && bottom >= 0 && left >= 0 && right >= 0, "pad_edge: negative pad");
  int64_t n = xv.dim(0), c = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
  int64_t ho = h + top + bottom, wo = w + left + right;
  auto clampi = [](int64_t v, int64_t hi) { return v < 0 ? 0 : (v >= hi ? hi - 1 : v); };
  Tensor out({n, c, ho, wo});
  for (int64_t nc = 0; nc < n * c; ++nc) {
    const double* src = xv.data() + nc * h * w;
    double* dst = out.data() + nc * ho * wo;
    for (int64_t y = 0; y < ho; ++y)
      for (int64_t xx = 0; xx < wo; ++xx)
        dst[y * wo + xx] = src[clampi(y - top, h) * w + clampi(xx - left, w)];
  }
  return make_op(std::move(out), {x}, [x, n, c, h, w, ho, wo, top, left, clampi](Node& self) {
    if (!x.requires_grad()) return;
    Tensor& xg = x.node()->ensure_grad();
    for (int64_t nc = 0; nc < n * c; ++nc) {
      double* gsrc = xg.data() + nc * h * w;
      const double* g = self.grad.data() + nc * ho * wo;
      for (int64_t y = 0; y < ho; ++y)
        for (int64_t xx = 0; xx < wo; ++xx)
          gsrc[clampi(y - top, h) * w + clampi(xx - left, w)] += g[y * wo + xx];
    }
  });
}

Var crop(const Var& x, int64_t y0, int64_t x0, int64_t h, int64_t w) {
  const Tensor& xv = x.value();
  check_arg(xv.rank() == 4, "crop expects NCHW");
  int64_t n = xv.dim(0), c = xv.dim(1), hi = xv.dim(2), wi = xv.dim(3);
  check_arg(y0 >= 0 && x0 >= 0 && h >= 1 && w >= 1 && y0 + h <= hi && x0 + w <= wi,
            "crop: window out of range");
  Tensor out({n, c, h, w});
  for (int64_t nc = 0; nc < n * c; ++nc)
    for (int64_t y = 0; y < h; ++y)
      std::memcpy(out.data() + (nc * h + y) * w, xv.data() + (nc * hi + y0 + y) * wi + x0,
                  sizeof(double) * static_cast<size_t>(w));
  return make_op(std::move(out), {x}, [x, n, c, hi, wi, y0, x0, h, w](Node& self) {
    if (!x.requires_grad()) return;
    Tensor& xg = x.node()->ensure_grad();
    for (int64_t nc = 0; nc < n * c; ++nc)
      for (int64_t y = 0; y < h; ++y) {
        double* dst = xg.data() + (nc * hi + y0 + y) * wi + x0;
        const double* g = self.grad.data() + (nc * h + y) * w;
        for (int64_t xx = 0; xx < w; ++xx) dst[xx] += g[xx];
      }
  });
}

Var upsample_nearest2x(const Var& x) {
  const Tensor& xv = x.value();
  check_arg(xv.rank() == 4, "upsample_nearest2x expects NCHW");
  int64_t n = xv.dim(0), c = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
  Tensor out({n, c, 2 * h, 2 * w});
  for (int64_t nc = 0; nc < n * c; ++nc) {
    const double* src = xv.data() + nc * h * w;
    double* dst = out.data() + nc * 4 * h * w;
    for (int64_t y = 0; y < 2 * h; ++y)
      for (int64_t xx = 0; xx < 2 * w; ++xx)
        dst[y * 2 * w + xx] = src[(y / 2) * w + xx / 2];
  }
  return make_op(std::move(out), {x}, [x, n, c, h, w](Node& self) {
    if (!x.requires_grad()) return;
    Tensor& xg = x.node()->ensure_grad();
    for (int64_t nc = 0; nc < n * c; ++nc) {
      double* gsrc = xg.data() + nc * h * w;
      const double* g = self.grad.data() + nc * 4 * h * w;
      for (int64_t y = 0; y < 2 * h; ++y)
        for (int64_t xx = 0; xx < 2 * w; ++xx)
          gsrc[(y / 2) * w + xx / 2] += g[y * 2 * w + xx];
    }
  });
}

namespace {

// 1-D weights of the 2x bilinear scheme: output 2i copies input i, output
// 2i+1 averages inputs i and i+1 (replicated at the border).
inline void bilin_pair(int64_t o, int64_t extent, int64_t& i0, int64_t& i1, double& w0) {
  if (o % 2 == 0) {
    i0 = i1 = o / 2;
    w0 = 1.0;
  } else {
    i0 = o / 2;
    i1 = i0 + 1 < extent ? i0 + 1 : extent - 1;
    w0 = 0.5;
  }
}

}  // namespace

Var upsample_bilinear2x(const Var& x) {
  const Tensor& xv = x.value();
  check_arg(xv.rank() == 4, "upsample_bilinear2x expects NCHW");
  int64_t n = xv.dim(0), c = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
  Tensor out({n, c, 2 * h, 2 * w});
  for (int64_t nc = 0; nc < n * c; ++nc) {
    const double* src = xv.data() + nc * h * w;
    double* dst = out.data() + nc * 4 * h * w;
    for (int64_t y = 0; y < 2 * h; ++y) {
      int64_t y0, y1;
      double wy;
      bilin_pair(y, h, y0, y1, wy);
      for (int64_t xx = 0; xx < 2 * w; ++xx) {
        int64_t x0, x1;
        double wx;
        bilin_pair(xx, w, x0, x1, wx);
        double top = wx * src[y0 * w + x0] + (1.0 - wx) * src[y0 * w + x1];
        double bot = wx * src[y1 * w + x0] + (1.0 - wx) * src[y1 * w + x1];
        dst[y * 2 * w + xx] = wy * top + (1.0 - wy) * bot;
      }
    }
  }
  return make_op(std::move(out), {x}, [x, n, c, h, w](Node& self) {
    if (!x.requires_grad()) return;
    Tensor& xg = x.node()->ensure_grad();
    for (int64_t nc = 0; nc < n * c; ++nc) {
      double* gsrc = xg.data() + nc * h * w;
      const double* g = self.grad.data() + nc * 4 * h * w;
      for (int64_t y = 0; y < 2 * h; ++y) {
        int64_t y0, y1;
        double wy;
        bilin_pair(y, h, y0, y1, wy);
        for (int64_t xx = 0; xx < 2 * w; ++xx) {
          int64_t x0, x1;
          double wx;
          bilin_pair(xx, w, x0, x1, wx);
          double gv = g[y * 2 * w + xx];
          gsrc[y0 * w + x0] += gv * wy * wx;
          gsrc[y0 * w + x1] += gv * wy * (1.0 - wx);
          gsrc[y1 * w + x0] += gv * (1.0 - wy) * wx;
          gsrc[y1 * w + x1] += gv * (1.0 - wy) * (1.0 - wx);
        }
      }
    }
  });
}

Var gram(const Var& features) {
  const Tensor& f = features.value();
  check_arg(f.rank() == 4, "gram expects NCHW");
  int64_t n = f.dim(0), c = f.dim(1), h = f.dim(2), w = f.dim(3);
  int64_t m = h * w;
  double norm = 1.0 / static_cast<double>(c * m);

  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Tensor out({n, c, c});
  for (int64_t ni = 0; ni < n; ++ni) {
    Eigen::Map<const RowMat> fm(f.data() + ni * c * m, c, m);
    Eigen::Map<RowMat> gm(out.data() + ni * c * c, c, c);
    gm.noalias() = (fm * fm.transpose()) * norm;
  }
  return make_op(std::move(out), {features}, [features, n, c, m, norm](Node& self) {
    if (!features.requires_grad()) return;
    Tensor& fg = features.node()->ensure_grad();
    const Tensor& f = features.value();
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    for (int64_t ni = 0; ni < n; ++ni) {
      Eigen::Map<const RowMat> fm(f.data() + ni * c * m, c, m);
      Eigen::Map<const RowMat> gg(self.grad.data() + ni * c * c, c, c);
      Eigen::Map<RowMat> fgm(fg.data() + ni * c * m, c, m);
      // d/dF of sum(G .* dG) with G = F F^T * norm: (dG + dG^T) F * norm.
      fgm.noalias() += (gg + gg.transpose()) * fm * norm;
    }
  });
}

}  // namespace cgrp::ops
