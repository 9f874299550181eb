#include "cgrp/msssim.hpp"

#include <cmath>
#include <iostream>
#include <mutex>
#include <set>

namespace cgrp {
namespace {

const double kScaleWeights[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

Tensor gaussian_kernel(int64_t win, double sigma) {
  Tensor k({1, 1, win, win});
  double c = static_cast<double>(win - 1) / 2.0;
  double sum = 0.0;
  for (int64_t y = 0; y < win; ++y)
    for (int64_t x = 0; x < win; ++x) {
      double dy = static_cast<double>(y) - c, dx = static_cast<double>(x) - c;
      double v = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      k.at(0, 0, y, x) = v;
      sum += v;
    }
  for (int64_t i = 0; i < k.numel(); ++i) k[i] /= sum;
  return k;
}

void warn_once(int64_t h, int64_t w, const std::string& what) {
  static std::set<std::tuple<int64_t, int64_t, std::string>> seen;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  if (seen.emplace(h, w, what).second)
    std::cerr << "msssim: " << what << " for " << h << "x" << w << " inputs\n";
}

int64_t effective_window(int64_t h, int64_t w, int64_t window) {
  int64_t win = std::min({window, h, w});
  if (win % 2 == 0) --win;
  return win;
}

// Mean cs and mean l*cs of one scale, via Gaussian-windowed local statistics.
void ssim_scale(const Var& a, const Var& b, int64_t win, double sigma, double c1, double c2,
                Var& mean_cs, Var& mean_lcs) {
  Var kern = Var::constant(gaussian_kernel(win, sigma));
  auto blur = [&](const Var& v) { return ops::conv2d(v, kern, 1, 0); };
  Var mu_a = blur(a), mu_b = blur(b);
  Var mu_aa = ops::square(mu_a), mu_bb = ops::square(mu_b), mu_ab = ops::mul(mu_a, mu_b);
  Var var_a = ops::sub(blur(ops::square(a)), mu_aa);
  Var var_b = ops::sub(blur(ops::square(b)), mu_bb);
  Var cov = ops::sub(blur(ops::mul(a, b)), mu_ab);

  Var l = ops::div(ops::affine(ops::mul(mu_a, mu_b), 2.0, c1),
                   ops::affine(ops::add(mu_aa, mu_bb), 1.0, c1));
  Var cs = ops::div(ops::affine(cov, 2.0, c2), ops::affine(ops::add(var_a, var_b), 1.0, c2));
  mean_cs = ops::mean_all(cs);
  mean_lcs = ops::mean_all(ops::mul(l, cs));
}

}  // namespace

int64_t msssim_usable_scales(int64_t h, int64_t w, const MsssimConfig& cfg) {
  int64_t scales = 0;
  int64_t sh = h, sw = w;
  int64_t want = cfg.single_scale ? 1 : std::min<int64_t>(cfg.scales, 5);
  while (scales < want && std::min(sh, sw) >= 3) {
    ++scales;
    sh /= 2;
    sw /= 2;
    if (scales < want && std::min(sh, sw) < cfg.window) break;
  }
  return scales;
}

Var msssim(const Var& a, const Var& b, const MsssimConfig& cfg) {
  check_arg(a.value().same_shape(b.value()), "msssim: shape mismatch");
  check_arg(a.value().rank() == 4 && a.value().dim(1) == 1, "msssim expects [N,1,H,W]");
  int64_t h = a.value().dim(2), w = a.value().dim(3);
  check_arg(std::min(h, w) >= 3, "msssim: inputs smaller than 3x3");

  int64_t want = cfg.single_scale ? 1 : std::min<int64_t>(cfg.scales, 5);
  int64_t scales = msssim_usable_scales(h, w, cfg);
  if (scales < want) warn_once(h, w, "scale count reduced to " + std::to_string(scales));

  int64_t win = effective_window(h, w, cfg.window);
  if (win < cfg.window) warn_once(h, w, "window reduced to " + std::to_string(win));

  double wsum = 0.0;
  for (int64_t s = 0; s < scales; ++s) wsum += kScaleWeights[s];

  Var floor_v = Var::constant(Tensor::scalar(1e-6));
  Var result;
  Var ca = a, cb = b;
  for (int64_t s = 0; s < scales; ++s) {
    if (s > 0) {
      ca = ops::avg_pool2d(ca);
      cb = ops::avg_pool2d(cb);
      win = effective_window(ca.value().dim(2), ca.value().dim(3), cfg.window);
    }
    Var mean_cs, mean_lcs;
    ssim_scale(ca, cb, win, cfg.sigma, cfg.c1, cfg.c2, mean_cs, mean_lcs);
    Var term = s == scales - 1 ? mean_lcs : mean_cs;
    term = ops::maximum(term, floor_v);
    term = ops::pow(term, kScaleWeights[s] / wsum);
    result = s == 0 ? term : ops::mul(result, term);
  }
  return result;
}

}  // namespace cgrp
