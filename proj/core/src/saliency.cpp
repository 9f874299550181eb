#include "cgrp/saliency.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace cgrp {
namespace {

constexpr int kBins = 256;

inline int bin_of(double x) {
  int b = static_cast<int>(std::floor(x * 256.0));
  return std::clamp(b, 0, kBins - 1);
}

}  // namespace

Var saliency(const Var& img) {
  const Tensor& x = img.value();
  check_arg(x.rank() == 4 && x.dim(1) == 1, "saliency expects [N,1,H,W]");
  int64_t n = x.dim(0), m = x.dim(2) * x.dim(3);

  auto hists = std::make_shared<std::vector<std::array<double, kBins>>>(static_cast<size_t>(n));
  Tensor out(x.shape());
  for (int64_t ni = 0; ni < n; ++ni) {
    const double* px = x.data() + ni * m;
    auto& h = (*hists)[static_cast<size_t>(ni)];
    h.fill(0.0);
    for (int64_t i = 0; i < m; ++i) h[static_cast<size_t>(bin_of(px[i]))] += 1.0;
    for (double& v : h) v /= static_cast<double>(m);

    double* op = out.data() + ni * m;
    for (int64_t i = 0; i < m; ++i) {
      double s = 0.0;
      for (int b = 0; b < kBins; ++b)
        s += h[static_cast<size_t>(b)] * std::abs(px[i] - static_cast<double>(b) / 255.0);
      op[i] = s;
    }
  }

  return make_op(std::move(out), {img}, [img, hists, n, m](Node& self) {
    if (!img.requires_grad()) return;
    const Tensor& x = img.value();
    Tensor& xg = img.node()->ensure_grad();
    for (int64_t ni = 0; ni < n; ++ni) {
      const double* px = x.data() + ni * m;
      const double* g = self.grad.data() + ni * m;
      double* gx = xg.data() + ni * m;
      const auto& h = (*hists)[static_cast<size_t>(ni)];
      for (int64_t i = 0; i < m; ++i) {
        if (g[i] == 0.0) continue;
        double d = 0.0;
        for (int b = 0; b < kBins; ++b) {
          double diff = px[i] - static_cast<double>(b) / 255.0;
          if (diff > 0.0)
            d += h[static_cast<size_t>(b)];
          else if (diff < 0.0)
            d -= h[static_cast<size_t>(b)];
        }
        gx[i] += g[i] * d;
      }
    }
  });
}

SaliencyWeights saliency_weights(const Var& ir, const Var& vis, double eps) {
  check_arg(ir.value().same_shape(vis.value()), "saliency_weights: shape mismatch");
  SaliencyWeights sw;
  sw.s_ir = saliency(ir);
  sw.s_vis = saliency(vis);
  Var denom = ops::affine(ops::add(sw.s_ir, sw.s_vis), 1.0, eps);
  sw.w_ir = ops::div(sw.s_ir, denom);
  sw.w_vis = ops::affine(sw.w_ir, -1.0, 1.0);
  return sw;
}

}  // namespace cgrp
