#include "cgrp/losses.hpp"

#include "cgrp/saliency.hpp"

namespace cgrp {

using namespace ops;

void LossWeights::validate() const {
  for (double v : {lambda_p, lambda_s, lambda_c, lambda_e, lambda_rev, lambda_sm, lambda_ssim,
                   lambda_jg, lambda_svs})
    check_arg(v >= 0.0, "LossWeights: weights must be non-negative");
  check_arg(layers.size() == omegas.size(), "LossWeights: layers and omegas differ in length");
  check_arg(!layers.empty(), "LossWeights: need at least one perceptual layer");
  check_arg(charbonnier_eps > 0.0 && saliency_eps > 0.0, "LossWeights: eps must be positive");
}

Var laplacian(const Var& x) {
  static const Tensor kernel = Tensor::from({0, 1, 0, 1, -4, 1, 0, 1, 0}, {1, 1, 3, 3});
  return conv2d(x, Var::constant(kernel), 1, 1);
}

Var charbonnier_mean(const Var& x, double eps) {
  return mean_all(sqrt(affine(square(x), 1.0, eps * eps)));
}

namespace {

Var sum_sq(const Var& v) { return sum_all(square(v)); }
Var sum_abs(const Var& v) { return sum_all(abs(v)); }

}  // namespace

Var pst_loss(const CyclePaths& paths, const Var& vis, const Var& ir, const Backbone& backbone,
             const LossWeights& w) {
  w.validate();
  auto f_vis = backbone.features(vis, w.layers);
  auto f_ir = backbone.features(ir, w.layers);
  auto f_cvis = backbone.features(paths.cycled_vis, w.layers);
  auto f_cir = backbone.features(paths.cycled_ir, w.layers);

  Var pcp = Var::constant(Tensor::scalar(0.0));
  Var sty = Var::constant(Tensor::scalar(0.0));
  for (size_t j = 0; j < w.layers.size(); ++j) {
    pcp = add(pcp, add(sum_sq(sub(f_vis[j], f_cvis[j])), sum_sq(sub(f_ir[j], f_cir[j]))));
    Var g = add(sum_sq(sub(gram(f_vis[j]), gram(f_cvis[j]))),
                sum_sq(sub(gram(f_ir[j]), gram(f_cir[j]))));
    sty = add(sty, affine(g, w.omegas[j]));
  }
  return add(affine(pcp, w.lambda_p), affine(sty, w.lambda_s));
}

Var cross_loss(const CyclePaths& paths, const LossWeights& w) {
  w.validate();
  Var d_ir = sub(paths.pseudo_ir, paths.cycled_ir);
  Var d_vis = sub(paths.pseudo_vis, paths.cycled_vis);
  Var content = add(mean_all(abs(d_ir)), mean_all(abs(d_vis)));
  Var edge = add(charbonnier_mean(laplacian(d_ir), w.charbonnier_eps),
                 charbonnier_mean(laplacian(d_vis), w.charbonnier_eps));
  return add(affine(content, w.lambda_c), affine(edge, w.lambda_e));
}

Var registration_loss(const Var& ir_reg, const Var& pseudo_ir, const Var& distorted_ir,
                      const Var& field, const Backbone& backbone, const LossWeights& w) {
  w.validate();
  check_arg(field.value().rank() == 4 && field.value().dim(1) == 2,
            "registration_loss: field must be [N,2,H,W]");

  auto f_reg = backbone.features(ir_reg, w.layers);
  auto f_pseudo = backbone.features(pseudo_ir, w.layers);
  Var forward_term = Var::constant(Tensor::scalar(0.0));
  for (size_t j = 0; j < w.layers.size(); ++j)
    forward_term = add(forward_term, sum_abs(sub(f_reg[j], f_pseudo[j])));

  Var back_warp = warp_bilinear(pseudo_ir, neg(field));
  auto f_back = backbone.features(back_warp, w.layers);
  auto f_dist = backbone.features(distorted_ir, w.layers);
  Var backward_term = Var::constant(Tensor::scalar(0.0));
  for (size_t j = 0; j < w.layers.size(); ++j)
    backward_term = add(backward_term, sum_abs(sub(f_back[j], f_dist[j])));

  int64_t hh = field.value().dim(2), ww = field.value().dim(3);
  Var gx = sub(crop(field, 0, 1, hh, ww - 1), crop(field, 0, 0, hh, ww - 1));
  Var gy = sub(crop(field, 1, 0, hh - 1, ww), crop(field, 0, 0, hh - 1, ww));
  Var smooth = add(sum_abs(gx), sum_abs(gy));

  return add(add(forward_term, affine(backward_term, w.lambda_rev)), affine(smooth, w.lambda_sm));
}

Var fusion_loss(const Var& fus, const Var& ir_reg, const Var& vis, const LossWeights& w) {
  w.validate();
  check_arg(fus.value().same_shape(ir_reg.value()) && fus.value().same_shape(vis.value()),
            "fusion_loss: shape mismatch");

  Var ssim_term = add(affine(msssim(fus, ir_reg, w.msssim), -1.0, 1.0),
                      affine(msssim(fus, vis, w.msssim), -1.0, 1.0));

  Var joint = maximum(laplacian(ir_reg), laplacian(vis));
  Var jg = mean_all(abs(sub(joint, laplacian(fus))));

  SaliencyWeights sw = saliency_weights(ir_reg, vis, w.saliency_eps);
  Var blend = add(mul(sw.w_ir, ir_reg), mul(sw.w_vis, vis));
  Var svs = mean_all(abs(sub(blend, fus)));

  return add(add(affine(ssim_term, w.lambda_ssim), affine(jg, w.lambda_jg)),
             affine(svs, w.lambda_svs));
}

Var gan_generator_loss(const Var& fake_scores) {
  return mean_all(square(affine(fake_scores, 1.0, -1.0)));
}

Var gan_discriminator_loss(const Var& real_scores, const Var& fake_scores) {
  return add(mean_all(square(affine(real_scores, 1.0, -1.0))), mean_all(square(fake_scores)));
}

TotalLoss total_loss(const std::vector<std::pair<std::string, Var>>& components) {
  check_arg(!components.empty(), "total_loss: no components");
  TotalLoss out;
  for (const auto& [name, term] : components) {
    check_arg(term.numel() == 1, "total_loss: component " + name + " is not scalar");
    out.parts.emplace_back(name, term.item());
    out.value = out.value.defined() ? add(out.value, term) : term;
  }
  return out;
}

}  // namespace cgrp
