#include "cgrp/cpstn.hpp"

namespace cgrp {

using namespace ops;

Translator::Translator(nn::ParamMap& params, const std::string& prefix,
                       const TranslatorConfig& cfg, std::mt19937_64& rng)
    : cfg_(cfg) {
  check_arg(cfg.resblocks >= 1, "TranslatorConfig: resblocks must be >= 1");
  check_arg(cfg.depth >= 1, "TranslatorConfig: depth must be >= 1");
  check_arg(cfg.width >= 1, "TranslatorConfig: width must be >= 1");
  check_arg(cfg.norm == "instance" || cfg.norm == "none",
            "TranslatorConfig: unknown norm " + cfg.norm);
  check_arg(cfg.squash == "tanh", "TranslatorConfig: unknown squash " + cfg.squash);
  use_norm_ = cfg.norm == "instance";

  auto ch = [&](int64_t d) { return cfg.width << d; };
  stem_ = nn::Conv2d(params, prefix + ".stem", 1, ch(0), 7, 1, 3, rng);
  if (use_norm_) stem_norm_ = nn::InstanceNorm(params, prefix + ".stem_n", ch(0));
  for (int64_t d = 1; d <= cfg.depth; ++d) {
    down_.emplace_back(params, prefix + ".down" + std::to_string(d), ch(d - 1), ch(d), 3, 2, 1, rng);
    if (use_norm_) down_norm_.emplace_back(params, prefix + ".down" + std::to_string(d) + "_n", ch(d));
  }
  int64_t bw = ch(cfg.depth);
  for (int64_t r = 0; r < cfg.resblocks; ++r) {
    std::string rp = prefix + ".res" + std::to_string(r);
    res_a_.emplace_back(params, rp + "a", bw, bw, 3, 1, 1, rng);
    res_b_.emplace_back(params, rp + "b", bw, bw, 3, 1, 1, rng);
    if (use_norm_) {
      res_na_.emplace_back(params, rp + "a_n", bw);
      res_nb_.emplace_back(params, rp + "b_n", bw);
    }
  }
  for (int64_t d = cfg.depth; d >= 1; --d) {
    up_.emplace_back(params, prefix + ".up" + std::to_string(d), ch(d) + ch(d - 1), ch(d - 1), 3, 1, 1, rng);
    if (use_norm_) up_norm_.emplace_back(params, prefix + ".up" + std::to_string(d) + "_n", ch(d - 1));
  }
  head_ = nn::Conv2d(params, prefix + ".head", ch(0), 1, 7, 1, 3, rng);
}

Var Translator::forward(const Var& x) const {
  check_arg(x.value().rank() == 4 && x.value().dim(1) == 1,
            "Translator expects [N,1,H,W], got " + shape_str(x.shape()));
  int64_t div = int64_t{1} << cfg_.depth;
  check_arg(x.value().dim(2) % div == 0 && x.value().dim(3) % div == 0,
            "Translator: H and W must be divisible by " + std::to_string(div));

  auto act = [&](Var v, const nn::InstanceNorm* n) {
    if (use_norm_ && n) v = (*n)(v);
    return relu(v);
  };

  std::vector<Var> skips;
  Var h = act(stem_(x), use_norm_ ? &stem_norm_ : nullptr);
  for (size_t d = 0; d < down_.size(); ++d) {
    skips.push_back(h);
    h = act(down_[d](h), use_norm_ ? &down_norm_[d] : nullptr);
  }
  for (size_t r = 0; r < res_a_.size(); ++r) {
    Var t = res_a_[r](h);
    if (use_norm_) t = res_na_[r](t);
    t = res_b_[r](relu(t));
    if (use_norm_) t = res_nb_[r](t);
    h = add(h, t);
  }
  for (size_t d = 0; d < up_.size(); ++d) {
    h = upsample_nearest2x(h);
    h = concat_channels({h, skips[skips.size() - 1 - d]});
    h = act(up_[d](h), use_norm_ ? &up_norm_[d] : nullptr);
  }
  return affine(tanh(head_(h)), 0.5, 0.5);
}

PatchDiscriminator::PatchDiscriminator(nn::ParamMap& params, const std::string& prefix,
                                       int64_t width, int64_t pad, std::mt19937_64& rng) {
  check_arg(width >= 1 && (pad == 0 || pad == 1), "PatchDiscriminator: bad width/pad");
  int64_t w = width;
  convs_.emplace_back(params, prefix + ".c0", 1, w, 4, 2, pad, rng);
  convs_.emplace_back(params, prefix + ".c1", w, 2 * w, 4, 2, pad, rng);
  convs_.emplace_back(params, prefix + ".c2", 2 * w, 4 * w, 4, 2, pad, rng);
  convs_.emplace_back(params, prefix + ".c3", 4 * w, 8 * w, 4, 1, pad, rng);
  convs_.emplace_back(params, prefix + ".c4", 8 * w, 1, 4, 1, pad, rng);
  norms_.emplace_back(params, prefix + ".n1", 2 * w);
  norms_.emplace_back(params, prefix + ".n2", 4 * w);
  norms_.emplace_back(params, prefix + ".n3", 8 * w);
}

Var PatchDiscriminator::forward(const Var& x) const {
  Var h = leaky_relu(convs_[0](x));
  h = leaky_relu(norms_[0](convs_[1](h)));
  h = leaky_relu(norms_[1](convs_[2](h)));
  h = leaky_relu(norms_[2](convs_[3](h)));
  return convs_[4](h);
}

Cpstn::Cpstn(const TranslatorConfig& cfg, uint64_t seed, int64_t disc_width, int64_t disc_pad)
    : cfg_(cfg) {
  std::mt19937_64 rng(seed);
  g_a_ = Translator(gen_params_, "ga", cfg, rng);
  g_b_ = Translator(gen_params_, "gb", cfg, rng);
  d_ir_ = PatchDiscriminator(disc_params_, "dir", disc_width, disc_pad, rng);
  d_vis_ = PatchDiscriminator(disc_params_, "dvis", disc_width, disc_pad, rng);
}

Var Cpstn::translate(const Var& x, Direction dir) const {
  return dir == Direction::vis_to_ir ? g_a_.forward(x) : g_b_.forward(x);
}

GrayImage Cpstn::translate(const GrayImage& img, Direction dir) const {
  Tensor t = img.pixels.reshaped({1, 1, img.height(), img.width()});
  Var out = translate(Var::constant(t), dir);
  Tensor plane = out.value().reshaped({img.height(), img.width()});
  return make_image(plane, dir == Direction::vis_to_ir ? Provenance::pseudo_ir : Provenance::real_vis);
}

CyclePaths Cpstn::forward_cycles(const Var& vis, const Var& ir) const {
  check_arg(vis.value().same_shape(ir.value()), "forward_cycles: shape mismatch");
  CyclePaths p;
  p.pseudo_ir = g_a_.forward(vis);
  p.pseudo_vis = g_b_.forward(ir);
  p.cycled_ir = g_a_.forward(p.pseudo_vis);
  p.cycled_vis = g_b_.forward(p.pseudo_ir);
  return p;
}

Var Cpstn::discriminate(const Var& img, Domain domain) const {
  return domain == Domain::ir ? d_ir_.forward(img) : d_vis_.forward(img);
}

}  // namespace cgrp
