#include "cgrp/difn.hpp"

#include <random>

namespace cgrp {

using namespace ops;

Difn::Difn(const DifnConfig& cfg, uint64_t seed) : cfg_(cfg) {
  check_arg(cfg.width >= 1 && cfg.growth >= 1 && cfg.blocks >= 1, "DifnConfig: bad sizes");
  std::mt19937_64 rng(seed);
  const char* side[2] = {"ir", "vis"};
  for (size_t s = 0; s < 2; ++s) {
    std::string p = std::string("difn.") + side[s];
    stem_[s] = nn::Conv2d(params_, p + ".stem", 1, cfg.width, 3, 1, 1, rng);
    for (int64_t b = 0; b < cfg.blocks; ++b) {
      std::string bp = p + ".rdb" + std::to_string(b);
      rdb_[s].emplace_back(params_, bp + ".d0", cfg.width, cfg.growth, 3, 1, 1, rng);
      rdb_[s].emplace_back(params_, bp + ".d1", cfg.width + cfg.growth, cfg.growth, 3, 1, 1, rng);
      rdb_[s].emplace_back(params_, bp + ".lff", cfg.width + 2 * cfg.growth, cfg.width, 1, 1, 0, rng);
    }
    att_[s] = nn::Conv2d(params_, p + ".att", cfg.width, 1, 1, 1, 0, rng);
  }
  head_ = nn::Conv2d(params_, "difn.head", 2 * cfg.width, 1, 3, 1, 1, rng);
}

Var Difn::path(const Var& x, size_t which) const {
  Var h = relu(stem_[which](x));
  for (int64_t b = 0; b < cfg_.blocks; ++b) {
    const nn::Conv2d* c = &rdb_[which][static_cast<size_t>(3 * b)];
    Var d0 = relu(c[0](h));
    Var d1 = relu(c[1](concat_channels({h, d0})));
    Var lff = c[2](concat_channels({h, d0, d1}));
    h = add(h, lff);
  }
  return h;
}

DualFeatures Difn::extract_dual(const Var& ir_reg, const Var& vis) const {
  check_arg(ir_reg.value().same_shape(vis.value()), "extract_dual: shape mismatch");
  check_arg(ir_reg.value().rank() == 4 && ir_reg.value().dim(1) == 1,
            "extract_dual expects [N,1,H,W]");
  return {path(ir_reg, 0), path(vis, 1)};
}

Var Difn::attention(const DualFeatures& df) const {
  check_arg(df.f_ir.value().same_shape(df.f_vis.value()), "attention: feature shape mismatch");
  return sigmoid(mul(att_[0](df.f_ir), att_[1](df.f_vis)));
}

Var Difn::interact_fuse(const DualFeatures& df, bool use_ifm) const {
  if (!use_ifm) return head_(concat_channels({df.f_ir, df.f_vis}));
  Var att = attention(df);
  Var gate = affine(att, 1.0, 1.0);
  Var a_ir = mul(df.f_ir, gate);
  Var a_vis = mul(df.f_vis, gate);
  return head_(concat_channels({a_ir, a_vis}));
}

Var Difn::fuse(const Var& ir_reg, const Var& vis, bool use_ifm) const {
  return interact_fuse(extract_dual(ir_reg, vis), use_ifm);
}

GrayImage Difn::fuse(const GrayImage& ir_reg, const GrayImage& vis, bool use_ifm) const {
  check_arg(ir_reg.pixels.same_shape(vis.pixels), "fuse: image shape mismatch");
  int64_t h = ir_reg.height(), w = ir_reg.width();
  Var out = fuse(Var::constant(ir_reg.pixels.reshaped({1, 1, h, w})),
                 Var::constant(vis.pixels.reshaped({1, 1, h, w})), use_ifm);
  return make_image(out.value().reshaped({h, w}), Provenance::fused);
}

}  // namespace cgrp
