#include "cgrp/mrrn.hpp"

namespace cgrp {

using namespace ops;

Mrrn::Mrrn(const MrrnConfig& cfg, uint64_t seed) : cfg_(cfg) {
  check_arg(cfg.levels >= 1, "MrrnConfig: levels must be >= 1");
  check_arg(static_cast<int64_t>(cfg.widths.size()) == cfg.levels &&
                static_cast<int64_t>(cfg.est_widths.size()) == cfg.levels,
            "MrrnConfig: need one width and one est_width per level");
  std::mt19937_64 rng(seed);

  int64_t prev = 1;
  for (int64_t k = 0; k < cfg.levels; ++k) {
    int64_t w = cfg.widths[static_cast<size_t>(k)];
    std::string p = "fe" + std::to_string(k);
    fe_a_.emplace_back(params_, p + "a", prev, w, 3, k == 0 ? 1 : 2, 1, rng);
    fe_b_.emplace_back(params_, p + "b", w, w, 3, 1, 1, rng);
    prev = w;
  }
  for (int64_t k = 0; k < cfg.levels; ++k) {
    int64_t fw = 2 * cfg.widths[static_cast<size_t>(k)];
    int64_t ew = cfg.est_widths[static_cast<size_t>(k)];
    std::string pc = "mc" + std::to_string(k), pr = "mr" + std::to_string(k);
    mc_.push_back({nn::Conv2d(params_, pc + "0", fw + 2, ew, 3, 1, 1, rng),
                   nn::Conv2d(params_, pc + "1", ew, ew, 3, 1, 1, rng),
                   nn::Conv2d(params_, pc + "2", ew, 2, 3, 1, 1, rng)});
    mr_.push_back({nn::Conv2d(params_, pr + "0", 2, ew, 3, 1, 1, rng),
                   nn::Conv2d(params_, pr + "1", ew, ew, 3, 1, 1, rng),
                   nn::Conv2d(params_, pr + "2", ew, 2, 3, 1, 1, rng)});
  }
}

FeaturePyramid Mrrn::extract_pyramid(const Var& pseudo_ir, const Var& ir) const {
  check_arg(pseudo_ir.value().same_shape(ir.value()), "extract_pyramid: shape mismatch");
  check_arg(pseudo_ir.value().rank() == 4 && pseudo_ir.value().dim(1) == 1,
            "extract_pyramid expects [N,1,H,W]");
  int64_t div = int64_t{1} << (cfg_.levels - 1);
  check_arg(pseudo_ir.value().dim(2) % div == 0 && pseudo_ir.value().dim(3) % div == 0,
            "extract_pyramid: H and W must be divisible by " + std::to_string(div) +
                " (enable pad_inputs to pad instead)");

  auto stream = [&](const Var& x) {
    std::vector<Var> out;
    Var h = x;
    for (size_t k = 0; k < fe_a_.size(); ++k) {
      h = relu(fe_a_[k](h));
      h = relu(fe_b_[k](h));
      out.push_back(h);
    }
    return out;
  };
  std::vector<Var> sp = stream(pseudo_ir), si = stream(ir);
  FeaturePyramid pyr;
  for (size_t k = 0; k < sp.size(); ++k) pyr.levels.push_back(concat_channels({sp[k], si[k]}));
  return pyr;
}

LevelFields Mrrn::estimate_field(const FeaturePyramid& pyr) const {
  check_arg(static_cast<int64_t>(pyr.levels.size()) == cfg_.levels,
            "estimate_field: pyramid level count mismatch");
  LevelFields lf;
  lf.coarse.resize(pyr.levels.size());
  lf.refined.resize(pyr.levels.size());
  lf.warm.resize(pyr.levels.size());

  Var warm;
  for (int64_t k = cfg_.levels - 1; k >= 0; --k) {
    const Var& f = pyr.levels[static_cast<size_t>(k)];
    if (k == cfg_.levels - 1)
      warm = Var::constant(Tensor::zeros({f.value().dim(0), 2, f.value().dim(2), f.value().dim(3)}));
    lf.warm[static_cast<size_t>(k)] = warm;

    const auto& mc = mc_[static_cast<size_t>(k)];
    Var t = relu(mc[0](concat_channels({f, warm})));
    t = relu(mc[1](t));
    Var coarse = add(mc[2](t), warm);

    const auto& mr = mr_[static_cast<size_t>(k)];
    Var u = relu(mr[0](coarse));
    u = relu(mr[1](u));
    Var refined = add(mr[2](u), coarse);

    lf.coarse[static_cast<size_t>(k)] = coarse;
    lf.refined[static_cast<size_t>(k)] = refined;
    if (k > 0) warm = affine(upsample_bilinear2x(refined), 2.0);
  }
  lf.final_field = lf.refined[0];
  return lf;
}

Var Mrrn::register_image(const Var& ir, const Var& field) { return warp_bilinear(ir, field); }

Var Mrrn::predict_field(const Var& pseudo_ir, const Var& ir) const {
  int64_t div = int64_t{1} << (cfg_.levels - 1);
  int64_t h = pseudo_ir.value().dim(2), w = pseudo_ir.value().dim(3);
  if (cfg_.pad_inputs && (h % div != 0 || w % div != 0)) {
    int64_t ph = (div - h % div) % div, pw = (div - w % div) % div;
    Var a = pad_edge(pseudo_ir, 0, ph, 0, pw), b = pad_edge(ir, 0, ph, 0, pw);
    Var field = estimate_field(extract_pyramid(a, b)).final_field;
    return crop(field, 0, 0, h, w);
  }
  return estimate_field(extract_pyramid(pseudo_ir, ir)).final_field;
}

GrayImage Mrrn::register_image(const GrayImage& ir, const DeformationField& field) const {
  GrayImage out = warp(ir, field);
  out.tag = Provenance::registered;
  return out;
}

}  // namespace cgrp
