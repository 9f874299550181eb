#include "cgrp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

namespace cgrp {
namespace {

void check_pair(const Tensor& a, const Tensor& b) {
  check_arg(a.rank() == 2 && b.rank() == 2, "metrics expect rank-2 rasters");
  check_arg(a.same_shape(b), "metrics: shape mismatch " + shape_str(a.shape()) + " vs " +
                                 shape_str(b.shape()));
}

int64_t bin_of(double x, int64_t bins) {
  auto b = static_cast<int64_t>(std::floor(x * static_cast<double>(bins)));
  return std::clamp<int64_t>(b, 0, bins - 1);
}

}  // namespace

double mse(const Tensor& a, const Tensor& b) {
  check_pair(a, b);
  double s = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / static_cast<double>(a.numel());
}

std::optional<double> ncc(const Tensor& a, const Tensor& b) {
  check_pair(a, b);
  double ma = a.mean(), mb = b.mean();
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i) {
    double da = a[i] - ma, db = b[i] - mb;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (saa == 0.0 || sbb == 0.0) return std::nullopt;
  return sab / std::sqrt(saa * sbb);
}

double entropy(const Tensor& a, int64_t bins) {
  check_arg(a.rank() == 2, "entropy expects a rank-2 raster");
  std::vector<double> h(static_cast<size_t>(bins), 0.0);
  for (int64_t i = 0; i < a.numel(); ++i) h[static_cast<size_t>(bin_of(a[i], bins))] += 1.0;
  double n = static_cast<double>(a.numel()), e = 0.0;
  for (double c : h)
    if (c > 0.0) e -= (c / n) * std::log(c / n);
  return e;
}

double mi(const Tensor& a, const Tensor& b, int64_t bins) {
  check_pair(a, b);
  std::vector<double> joint(static_cast<size_t>(bins * bins), 0.0);
  std::vector<double> ha(static_cast<size_t>(bins), 0.0), hb(static_cast<size_t>(bins), 0.0);
  for (int64_t i = 0; i < a.numel(); ++i) {
    int64_t ba = bin_of(a[i], bins), bb = bin_of(b[i], bins);
    joint[static_cast<size_t>(ba * bins + bb)] += 1.0;
    ha[static_cast<size_t>(ba)] += 1.0;
    hb[static_cast<size_t>(bb)] += 1.0;
  }
  double n = static_cast<double>(a.numel()), s = 0.0;
  for (int64_t i = 0; i < bins; ++i)
    for (int64_t j = 0; j < bins; ++j) {
      double pij = joint[static_cast<size_t>(i * bins + j)] / n;
      if (pij <= 0.0) continue;
      double pi = ha[static_cast<size_t>(i)] / n, pj = hb[static_cast<size_t>(j)] / n;
      s += pij * std::log(pij / (pi * pj));
    }
  return s;
}

std::optional<double> cc(const Tensor& fus, const Tensor& ir, const Tensor& vis) {
  auto c1 = ncc(fus, ir), c2 = ncc(fus, vis);
  if (!c1 || !c2) return std::nullopt;
  return 0.5 * (*c1 + *c2);
}

namespace {

// 2-D Gaussian taps for a win x win window.
std::vector<double> gauss2d(int64_t win, double sigma) {
  std::vector<double> k(static_cast<size_t>(win * win));
  double c = static_cast<double>(win - 1) / 2.0, sum = 0.0;
  for (int64_t y = 0; y < win; ++y)
    for (int64_t x = 0; x < win; ++x) {
      double dy = static_cast<double>(y) - c, dx = static_cast<double>(x) - c;
      double v = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      k[static_cast<size_t>(y * win + x)] = v;
      sum += v;
    }
  for (double& v : k) v /= sum;
  return k;
}

// Valid-region Gaussian filtering of a raster.
Tensor gfilt_valid(const Tensor& img, const std::vector<double>& k, int64_t win) {
  int64_t h = img.dim(0), w = img.dim(1);
  int64_t ho = h - win + 1, wo = w - win + 1;
  Tensor out({ho, wo});
  for (int64_t y = 0; y < ho; ++y)
    for (int64_t x = 0; x < wo; ++x) {
      double s = 0.0;
      for (int64_t ky = 0; ky < win; ++ky)
        for (int64_t kx = 0; kx < win; ++kx)
          s += k[static_cast<size_t>(ky * win + kx)] * img.at(y + ky, x + kx);
      out.at(y, x) = s;
    }
  return out;
}

Tensor subsample2(const Tensor& img) {
  int64_t h = (img.dim(0) + 1) / 2, w = (img.dim(1) + 1) / 2;
  Tensor out({h, w});
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x) out.at(y, x) = img.at(2 * y, 2 * x);
  return out;
}

}  // namespace

double ssim(const Tensor& a, const Tensor& b) {
  check_pair(a, b);
  int64_t win = std::min<int64_t>({11, a.dim(0), a.dim(1)});
  if (win % 2 == 0) --win;
  check_arg(win >= 1, "ssim: empty input");
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  auto k = gauss2d(win, 1.5);

  Tensor mu_a = gfilt_valid(a, k, win), mu_b = gfilt_valid(b, k, win);
  Tensor aa(a.shape()), bb(a.shape()), ab(a.shape());
  for (int64_t i = 0; i < a.numel(); ++i) {
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  Tensor s_aa = gfilt_valid(aa, k, win), s_bb = gfilt_valid(bb, k, win), s_ab = gfilt_valid(ab, k, win);

  double acc = 0.0;
  for (int64_t i = 0; i < mu_a.numel(); ++i) {
    double va = s_aa[i] - mu_a[i] * mu_a[i];
    double vb = s_bb[i] - mu_b[i] * mu_b[i];
    double vab = s_ab[i] - mu_a[i] * mu_b[i];
    acc += ((2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * vab + c2)) /
           ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2));
  }
  return acc / static_cast<double>(mu_a.numel());
}

std::optional<double> vif(const Tensor& dist, const Tensor& ref) {
  check_pair(dist, ref);
  const double sigma_nsq = 2.0, eps = 1e-10;
  Tensor r(ref.shape()), d(dist.shape());
  for (int64_t i = 0; i < ref.numel(); ++i) {
    r[i] = ref[i] * 255.0;
    d[i] = dist[i] * 255.0;
  }

  double num = 0.0, den = 0.0;
  for (int scale = 1; scale <= 4; ++scale) {
    int64_t n = (int64_t{1} << (5 - scale)) + 1;
    auto k = gauss2d(n, static_cast<double>(n) / 5.0);
    if (scale > 1) {
      if (r.dim(0) < n || r.dim(1) < n) break;
      r = subsample2(gfilt_valid(r, k, n));
      d = subsample2(gfilt_valid(d, k, n));
    }
    if (r.dim(0) < n || r.dim(1) < n) break;

    Tensor mu1 = gfilt_valid(r, k, n), mu2 = gfilt_valid(d, k, n);
    Tensor rr(r.shape()), dd(d.shape()), rd(r.shape());
    for (int64_t i = 0; i < r.numel(); ++i) {
      rr[i] = r[i] * r[i];
      dd[i] = d[i] * d[i];
      rd[i] = r[i] * d[i];
    }
    Tensor s11 = gfilt_valid(rr, k, n), s22 = gfilt_valid(dd, k, n), s12 = gfilt_valid(rd, k, n);

    for (int64_t i = 0; i < mu1.numel(); ++i) {
      double sigma1_sq = std::max(0.0, s11[i] - mu1[i] * mu1[i]);
      double sigma2_sq = std::max(0.0, s22[i] - mu2[i] * mu2[i]);
      double sigma12 = s12[i] - mu1[i] * mu2[i];

      double g = sigma12 / (sigma1_sq + eps);
      double sv_sq = sigma2_sq - g * sigma12;
      if (sigma1_sq < eps) {
        g = 0.0;
        sv_sq = sigma2_sq;
        sigma1_sq = 0.0;
      }
      if (sigma2_sq < eps) {
        g = 0.0;
        sv_sq = 0.0;
      }
      if (g < 0.0) {
        sv_sq = sigma2_sq;
        g = 0.0;
      }
      sv_sq = std::max(sv_sq, eps);
      num += std::log(1.0 + g * g * sigma1_sq / (sv_sq + sigma_nsq));
      den += std::log(1.0 + sigma1_sq / sigma_nsq);
    }
  }
  if (den == 0.0) return std::nullopt;
  return num / den;
}

void MetricsReport::finalize() {
  means.clear();
  excluded.clear();
  for (const auto& [metric, vals] : values) {
    double s = 0.0;
    int64_t n = 0;
    for (size_t i = 0; i < vals.size(); ++i) {
      if (vals[i]) {
        s += *vals[i];
        ++n;
      } else {
        excluded.push_back(items[i] + "/" + metric);
        std::cerr << "metrics: " << metric << " undefined for item " << items[i]
                  << ", excluded from the mean\n";
      }
    }
    if (n > 0) means[metric] = s / static_cast<double>(n);
  }
  item_count = static_cast<int64_t>(items.size());
}

MetricsReport evaluate_registration(const std::vector<PairRecord>& records,
                                    const Aligner& aligner) {
  check_arg(!records.empty(), "evaluate_registration: no records");
  MetricsReport rep;
  rep.mode = "registration";
  rep.corpus = records.front().corpus;
  for (const PairRecord& r : records) {
    GrayImage reg = aligner(r);
    check_arg(reg.pixels.same_shape(r.ir_aligned.pixels),
              "evaluate_registration: aligner changed the raster size for " + r.id);
    rep.items.push_back(r.id);
    rep.values["mse"].push_back(mse(reg.pixels, r.ir_aligned.pixels));
    rep.values["ncc"].push_back(ncc(reg.pixels, r.ir_aligned.pixels));
    rep.values["mi"].push_back(mi(reg.pixels, r.ir_aligned.pixels));
  }
  rep.finalize();
  return rep;
}

MetricsReport evaluate_fusion(const std::vector<PairRecord>& records,
                              const FusionPipeline& pipeline) {
  check_arg(!records.empty(), "evaluate_fusion: no records");
  MetricsReport rep;
  rep.mode = "fusion";
  rep.corpus = records.front().corpus;
  for (const PairRecord& r : records) {
    GrayImage fus = pipeline(r);
    check_arg(fus.pixels.same_shape(r.vis.pixels),
              "evaluate_fusion: pipeline changed the raster size for " + r.id);
    rep.items.push_back(r.id);
    rep.values["cc"].push_back(cc(fus.pixels, r.ir_aligned.pixels, r.vis.pixels));
    rep.values["ssim"].push_back(
        0.5 * (ssim(fus.pixels, r.ir_aligned.pixels) + ssim(fus.pixels, r.vis.pixels)));
    auto v1 = vif(fus.pixels, r.ir_aligned.pixels), v2 = vif(fus.pixels, r.vis.pixels);
    rep.values["vif"].push_back(v1 && v2 ? std::optional<double>(0.5 * (*v1 + *v2))
                                         : std::nullopt);
  }
  rep.finalize();
  return rep;
}

}  // namespace cgrp
