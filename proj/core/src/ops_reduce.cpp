#include <algorithm>

#include "cgrp/ops.hpp"

namespace cgrp::ops {
namespace {

Shape reduced_shape(const Shape& in, const std::vector<int64_t>& axes, bool keepdim) {
  Shape out;
  for (int64_t i = 0; i < static_cast<int64_t>(in.size()); ++i) {
    bool hit = std::find(axes.begin(), axes.end(), i) != axes.end();
    if (!hit)
      out.push_back(in[static_cast<size_t>(i)]);
    else if (keepdim)
      out.push_back(1);
  }
  return out;
}

}  // namespace

Var reduce_sum(const Var& v, const std::vector<int64_t>& axes, bool keepdim) {
  const Tensor& x = v.value();
  const Shape& in = x.shape();
  for (int64_t a : axes) check_arg(a >= 0 && a < x.rank(), "reduce axis out of range");

  // Strides of the input, with reduced axes mapping to output offset 0.
  std::vector<int64_t> in_strides(in.size()), out_strides(in.size());
  int64_t acc = 1;
  for (int64_t i = static_cast<int64_t>(in.size()) - 1; i >= 0; --i) {
    in_strides[static_cast<size_t>(i)] = acc;
    acc *= in[static_cast<size_t>(i)];
  }
  Shape oshape = reduced_shape(in, axes, keepdim);
  {
    int64_t oacc = 1;
    for (int64_t i = static_cast<int64_t>(in.size()) - 1; i >= 0; --i) {
      bool hit = std::find(axes.begin(), axes.end(), i) != axes.end();
      out_strides[static_cast<size_t>(i)] = hit ? 0 : oacc;
      if (!hit) oacc *= in[static_cast<size_t>(i)];
    }
  }

  auto map_index = [&, rank = in.size()](int64_t lin) {
    int64_t rem = lin, oi = 0;
    for (size_t i = 0; i < rank; ++i) {
      int64_t c = rem / in_strides[i];
      rem %= in_strides[i];
      oi += c * out_strides[i];
    }
    return oi;
  };

  Tensor out(oshape);
  const double* xp = x.data();
  double* op = out.data();
  for (int64_t lin = 0; lin < x.numel(); ++lin) op[map_index(lin)] += xp[lin];

  return make_op(std::move(out), {v}, [v, map_index](Node& self) {
    if (!v.requires_grad()) return;
    Tensor& vg = v.node()->ensure_grad();
    const double* g = self.grad.data();
    for (int64_t lin = 0; lin < vg.numel(); ++lin) vg[lin] += g[map_index(lin)];
  });
}

namespace {

// True division instead of a reciprocal multiply: a mean of exact ones must
// come out exactly one (the msssim identity depends on it).
Var div_by_count(const Var& v, double n) {
  Tensor out = v.value().clone();
  for (int64_t i = 0; i < out.numel(); ++i) out[i] /= n;
  return make_op(std::move(out), {v}, [v, n](Node& self) {
    if (!v.requires_grad()) return;
    Tensor& vg = v.node()->ensure_grad();
    for (int64_t i = 0; i < vg.numel(); ++i) vg[i] += self.grad[i] / n;
  });
}

}  // namespace

Var reduce_mean(const Var& v, const std::vector<int64_t>& axes, bool keepdim) {
  int64_t count = 1;
  for (int64_t a : axes) count *= v.shape()[static_cast<size_t>(a)];
  return div_by_count(reduce_sum(v, axes, keepdim), static_cast<double>(count));
}

Var sum_all(const Var& v) {
  Tensor out = Tensor::scalar(v.value().sum());
  return make_op(std::move(out), {v}, [v](Node& self) {
    if (!v.requires_grad()) return;
    Tensor& vg = v.node()->ensure_grad();
    double g = self.grad[0];
    for (int64_t i = 0; i < vg.numel(); ++i) vg[i] += g;
  });
}

Var mean_all(const Var& v) { return affine(sum_all(v), 1.0 / static_cast<double>(v.numel())); }

Var reshape(const Var& v, Shape shape) {
  Tensor out = v.value().reshaped(std::move(shape));
  return make_op(std::move(out), {v}, [v](Node& self) {
    if (!v.requires_grad()) return;
    Tensor& vg = v.node()->ensure_grad();
    const double* g = self.grad.data();
    for (int64_t i = 0; i < vg.numel(); ++i) vg[i] += g[i];
  });
}

Var concat_channels(const std::vector<Var>& parts) {
  check_arg(!parts.empty(), "concat of zero tensors");
  const Shape& s0 = parts[0].shape();
  check_arg(s0.size() == 4, "concat_channels expects NCHW");
  int64_t n = s0[0], h = s0[2], w = s0[3], ctot = 0;
  for (const Var& p : parts) {
    const Shape& s = p.shape();
    check_arg(s.size() == 4 && s[0] == n && s[2] == h && s[3] == w,
              "concat_channels shape mismatch");
    ctot += s[1];
  }
  Tensor out({n, ctot, h, w});
  int64_t plane = h * w;
  double* op = out.data();
  for (int64_t ni = 0; ni < n; ++ni) {
    int64_t coff = 0;
    for (const Var& p : parts) {
      int64_t c = p.shape()[1];
      const double* src = p.value().data() + ni * c * plane;
      std::copy(src, src + c * plane, op + (ni * ctot + coff) * plane);
      coff += c;
    }
  }
  return make_op(std::move(out), parts, [parts, n, ctot, plane](Node& self) {
    const double* g = self.grad.data();
    for (int64_t ni = 0; ni < n; ++ni) {
      int64_t coff = 0;
      for (const Var& p : parts) {
        int64_t c = p.shape()[1];
        if (p.requires_grad()) {
          Tensor& pg = p.node()->ensure_grad();
          double* dst = pg.data() + ni * c * plane;
          const double* src = g + (ni * ctot + coff) * plane;
          for (int64_t i = 0; i < c * plane; ++i) dst[i] += src[i];
        }
        coff += c;
      }
    }
  });
}

Var slice_channels(const Var& v, int64_t c0, int64_t c1) {
  const Shape& s = v.shape();
  check_arg(s.size() == 4, "slice_channels expects NCHW");
  check_arg(0 <= c0 && c0 < c1 && c1 <= s[1], "channel slice out of range");
  int64_t n = s[0], c = s[1], h = s[2], w = s[3], plane = h * w, cs = c1 - c0;
  Tensor out({n, cs, h, w});
  for (int64_t ni = 0; ni < n; ++ni) {
    const double* src = v.value().data() + (ni * c + c0) * plane;
    std::copy(src, src + cs * plane, out.data() + ni * cs * plane);
  }
  return make_op(std::move(out), {v}, [v, n, c, c0, cs, plane](Node& self) {
    if (!v.requires_grad()) return;
    Tensor& vg = v.node()->ensure_grad();
    const double* g = self.grad.data();
    for (int64_t ni = 0; ni < n; ++ni) {
      double* dst = vg.data() + (ni * c + c0) * plane;
      const double* src = g + ni * cs * plane;
      for (int64_t i = 0; i < cs * plane; ++i) dst[i] += src[i];
    }
  });
}

}  // namespace cgrp::ops
