#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cgrp/backbone.hpp"
#include "cgrp/cpstn.hpp"
#include "cgrp/msssim.hpp"
#include "cgrp/ops.hpp"

namespace cgrp {

struct LossWeights {
  double lambda_p = 1.0;
  double lambda_s = 100.0;
  double lambda_c = 8.0;
  double lambda_e = 8.0;
  double lambda_rev = 0.2;
  double lambda_sm = 10.0;
  double lambda_ssim = 1.0;
  double lambda_jg = 20.0;
  double lambda_svs = 5.0;
  std::vector<int64_t> layers = {2, 7, 12, 21, 30};
  std::vector<double> omegas = {1.0 / 32, 1.0 / 16, 1.0 / 8, 1.0, 1.0};
  double charbonnier_eps = 1e-3;
  double saliency_eps = 1e-8;
  MsssimConfig msssim;

  void validate() const;
};

/// 3x3 Laplacian [[0,1,0],[1,-4,1],[0,1,0]], zero padded, same size.
Var laplacian(const Var& x);
/// Elementwise sqrt(x^2 + eps^2), averaged.
Var charbonnier_mean(const Var& x, double eps);

/// Perceptual-style transfer loss over the two cycle routes:
/// lambda_p * sum_j ||psi_j(in) - psi_j(cycled)||_2^2 (summed over elements,
/// both routes) + lambda_s * sum_j omega_j ||G_j(in) - G_j(cycled)||_F^2.
Var pst_loss(const CyclePaths& paths, const Var& vis, const Var& ir, const Backbone& backbone,
             const LossWeights& w);

/// Cross regularization: lambda_c * mean-L1 of the two pseudo-vs-cycled pairs
/// + lambda_e * Charbonnier of their Laplacian differences.
Var cross_loss(const CyclePaths& paths, const LossWeights& w);

/// Bidirectional similarity + smoothness. Feature distances are elementwise
/// L1 sums over layers; the backward term warps pseudo_ir with the negated
/// field; smoothness is the plain sum of forward first differences of the
/// field, weighted lambda_sm.
Var registration_loss(const Var& ir_reg, const Var& pseudo_ir, const Var& distorted_ir,
                      const Var& field, const Backbone& backbone, const LossWeights& w);

/// MS-SSIM terms against both sources + joint-gradient L1 (means) +
/// saliency-blend L1 (mean).
Var fusion_loss(const Var& fus, const Var& ir_reg, const Var& vis, const LossWeights& w);

/// Least-squares adversarial terms.
Var gan_generator_loss(const Var& fake_scores);
Var gan_discriminator_loss(const Var& real_scores, const Var& fake_scores);

/// Sum of named components; the breakdown is also returned for logging.
struct TotalLoss {
  Var value;
  std::vector<std::pair<std::string, double>> parts;
};
TotalLoss total_loss(const std::vector<std::pair<std::string, Var>>& components);

}  // namespace cgrp
