#include <Eigen/Core>

#include "cgrp/ops.hpp"

namespace cgrp::ops {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

struct ConvDims {
  int64_t n, ci, h, w;      // input
  int64_t co, kh, kw;       // kernel
  int64_t stride, pad;
  int64_t ho, wo;           // output
  int64_t k() const { return ci * kh * kw; }
  int64_t m() const { return ho * wo; }
};

ConvDims conv_dims(const Tensor& x, const Tensor& w, int64_t stride, int64_t pad) {
  check_arg(x.rank() == 4, "conv2d input must be NCHW, got " + shape_str(x.shape()));
  check_arg(w.rank() == 4, "conv2d weight must be [O,I,kh,kw]");
  check_arg(stride >= 1 && pad >= 0, "conv2d: bad stride/pad");
  ConvDims d;
  d.n = x.dim(0), d.ci = x.dim(1), d.h = x.dim(2), d.w = x.dim(3);
  d.co = w.dim(0), d.kh = w.dim(2), d.kw = w.dim(3);
  check_arg(w.dim(1) == d.ci, "conv2d: weight expects " + std::to_string(w.dim(1)) +
                                  " input channels, got " + std::to_string(d.ci));
  d.stride = stride, d.pad = pad;
  d.ho = (d.h + 2 * pad - d.kh) / stride + 1;
  d.wo = (d.w + 2 * pad - d.kw) / stride + 1;
  check_arg(d.ho >= 1 && d.wo >= 1, "conv2d: kernel larger than padded input");
  return d;
}

// col is [K, M] row-major for one sample.
void im2col(const double* x, const ConvDims& d, double* col) {
  for (int64_t ci = 0; ci < d.ci; ++ci) {
    const double* plane = x + ci * d.h * d.w;
    for (int64_t ky = 0; ky < d.kh; ++ky) {
      for (int64_t kx = 0; kx < d.kw; ++kx) {
        double* row = col + ((ci * d.kh + ky) * d.kw + kx) * d.m();
        for (int64_t oy = 0; oy < d.ho; ++oy) {
          int64_t iy = oy * d.stride + ky - d.pad;
          double* out = row + oy * d.wo;
          if (iy < 0 || iy >= d.h) {
            std::fill(out, out + d.wo, 0.0);
            continue;
          }
          const double* src = plane + iy * d.w;
          for (int64_t ox = 0; ox < d.wo; ++ox) {
            int64_t ix = ox * d.stride + kx - d.pad;
            out[ox] = (ix >= 0 && ix < d.w) ? src[ix] : 0.0;
          }
        }
      }
    }
  }
}

void col2im_add(const double* col, const ConvDims& d, double* x) {
  for (int64_t ci = 0; ci < d.ci; ++ci) {
    double* plane = x + ci * d.h * d.w;
    for (int64_t ky = 0; ky < d.kh; ++ky) {
      for (int64_t kx = 0; kx < d.kw; ++kx) {
        const double* row = col + ((ci * d.kh + ky) * d.kw + kx) * d.m();
        for (int64_t oy = 0; oy < d.ho; ++oy) {
          int64_t iy = oy * d.stride + ky - d.pad;
          if (iy < 0 || iy >= d.h) continue;
          double* dst = plane + iy * d.w;
          const double* src = row + oy * d.wo;
          for (int64_t ox = 0; ox < d.wo; ++ox) {
            int64_t ix = ox * d.stride + kx - d.pad;
            if (ix >= 0 && ix < d.w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

}  // namespace

Var conv2d(const Var& x, const Var& w, const Var& b, int64_t stride, int64_t pad) {
  ConvDims d = conv_dims(x.value(), w.value(), stride, pad);
  if (b.defined())
    check_arg(b.value().rank() == 1 && b.value().dim(0) == d.co, "conv2d: bias must be [O]");

  Tensor out({d.n, d.co, d.ho, d.wo});
  Tensor col({d.k(), d.m()});
  CMapMat wm(w.value().data(), d.co, d.k());
  for (int64_t ni = 0; ni < d.n; ++ni) {
    im2col(x.value().data() + ni * d.ci * d.h * d.w, d, col.data());
    CMapMat cm(col.data(), d.k(), d.m());
    MapMat om(out.data() + ni * d.co * d.m(), d.co, d.m());
    om.noalias() = wm * cm;
    if (b.defined()) {
      for (int64_t co = 0; co < d.co; ++co) om.row(co).array() += b.value()[co];
    }
  }

  std::vector<Var> parents = b.defined() ? std::vector<Var>{x, w, b} : std::vector<Var>{x, w};
  return make_op(std::move(out), std::move(parents), [x, w, b, d](Node& self) {
    Tensor col({d.k(), d.m()});
    const bool need_dx = x.requires_grad();
    const bool need_dw = w.requires_grad();
    Tensor dcol = need_dx ? Tensor({d.k(), d.m()}) : Tensor();
    CMapMat wm(w.value().data(), d.co, d.k());
    for (int64_t ni = 0; ni < d.n; ++ni) {
      CMapMat gm(self.grad.data() + ni * d.co * d.m(), d.co, d.m());
      if (need_dw) {
        im2col(x.value().data() + ni * d.ci * d.h * d.w, d, col.data());
        CMapMat cm(col.data(), d.k(), d.m());
        MapMat dwm(w.node()->ensure_grad().data(), d.co, d.k());
        dwm.noalias() += gm * cm.transpose();
      }
      if (need_dx) {
        MapMat dcm(dcol.data(), d.k(), d.m());
        dcm.noalias() = wm.transpose() * gm;
        col2im_add(dcol.data(), d, x.node()->ensure_grad().data() + ni * d.ci * d.h * d.w);
      }
      if (b.defined() && b.requires_grad()) {
        Tensor& db = b.node()->ensure_grad();
        for (int64_t co = 0; co < d.co; ++co) db[co] += gm.row(co).sum();
      }
    }
  });
}

Var conv2d(const Var& x, const Var& w, int64_t stride, int64_t pad) {
  return conv2d(x, w, Var(), stride, pad);
}

Var max_pool2d(const Var& x, int64_t k, int64_t stride) {
  const Tensor& xv = x.value();
  check_arg(xv.rank() == 4, "max_pool2d expects NCHW");
  int64_t n = xv.dim(0), c = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
  int64_t ho = (h - k) / stride + 1, wo = (w - k) / stride + 1;
  check_arg(ho >= 1 && wo >= 1, "max_pool2d: window larger than input");

  Tensor out({n, c, ho, wo});
  auto argmax = std::make_shared<std::vector<int64_t>>(static_cast<size_t>(out.numel()));
  const double* xp = xv.data();
  double* op = out.data();
  int64_t oi = 0;
  for (int64_t nc = 0; nc < n * c; ++nc) {
    const double* plane = xp + nc * h * w;
    for (int64_t oy = 0; oy < ho; ++oy) {
      for (int64_t ox = 0; ox < wo; ++ox, ++oi) {
        double best = -1e300;
        int64_t bi = 0;
        for (int64_t ky = 0; ky < k; ++ky) {
          for (int64_t kx = 0; kx < k; ++kx) {
            int64_t idx = (oy * stride + ky) * w + ox * stride + kx;
            if (plane[idx] > best) best = plane[idx], bi = idx;
          }
        }
        op[oi] = best;
        (*argmax)[static_cast<size_t>(oi)] = nc * h * w + bi;
      }
    }
  }
  return make_op(std::move(out), {x}, [x, argmax](Node& self) {
    if (!x.requires_grad()) return;
    Tensor& xg = x.node()->ensure_grad();
    const double* g = self.grad.data();
    for (int64_t i = 0; i < self.value.numel(); ++i) xg[(*argmax)[static_cast<size_t>(i)]] += g[i];
  });
}

Var avg_pool2d(const Var& x, int64_t k, int64_t stride) {
  const Tensor& xv = x.value();
  check_arg(xv.rank() == 4, "avg_pool2d expects NCHW");
  int64_t n = xv.dim(0), c = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
  int64_t ho = (h - k) / stride + 1, wo = (w - k) / stride + 1;
  check_arg(ho >= 1 && wo >= 1, "avg_pool2d: window larger than input");
  double inv = 1.0 / static_cast<double>(k * k);

  Tensor out({n, c, ho, wo});
  const double* xp = xv.data();
  double* op = out.data();
  int64_t oi = 0;
  for (int64_t nc = 0; nc < n * c; ++nc) {
    const double* plane = xp + nc * h * w;
    for (int64_t oy = 0; oy < ho; ++oy)
      for (int64_t ox = 0; ox < wo; ++ox, ++oi) {
        double s = 0;
        for (int64_t ky = 0; ky < k; ++ky)
          for (int64_t kx = 0; kx < k; ++kx)
            s += plane[(oy * stride + ky) * w + ox * stride + kx];
        op[oi] = s * inv;
      }
  }
  return make_op(std::move(out), {x}, [x, n, c, h, w, ho, wo, k, stride, inv](Node& self) {
    if (!x.requires_grad()) return;
    Tensor& xg = x.node()->ensure_grad();
    const double* g = self.grad.data();
    int64_t oi = 0;
    for (int64_t nc = 0; nc < n * c; ++nc) {
      double* plane = xg.data() + nc * h * w;
      for (int64_t oy = 0; oy < ho; ++oy)
        for (int64_t ox = 0; ox < wo; ++ox, ++oi)
          for (int64_t ky = 0; ky < k; ++ky)
            for (int64_t kx = 0; kx < k; ++kx)
              plane[(oy * stride + ky) * w + ox * stride + kx] += g[oi] * inv;
    }
  });
}

}  // namespace cgrp::ops
