#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "cgrp/image.hpp"
#include "cgrp/nn.hpp"

namespace cgrp {

struct TranslatorConfig {
  int64_t width = 16;      // base channel width
  int64_t depth = 2;       // stride-2 downsamplings
  int64_t resblocks = 9;   // bottleneck residual blocks
  std::string norm = "instance";  // "instance" | "none"
  std::string squash = "tanh";    // output squashing, remapped to [0,1]
};

/// U-shaped generator: conv7 stem, `depth` stride-2 encoders, residual
/// bottleneck, nearest-upsample decoders with skip concatenation, conv7 head
/// squashed into [0,1].
class Translator {
 public:
  Translator() = default;
  Translator(nn::ParamMap& params, const std::string& prefix, const TranslatorConfig& cfg,
             std::mt19937_64& rng);

  /// [N,1,H,W] -> [N,1,H,W]; H and W must be divisible by 2^depth.
  Var forward(const Var& x) const;

 private:
  TranslatorConfig cfg_;
  bool use_norm_ = true;
  nn::Conv2d stem_;
  nn::InstanceNorm stem_norm_;
  std::vector<nn::Conv2d> down_;
  std::vector<nn::InstanceNorm> down_norm_;
  std::vector<nn::Conv2d> res_a_, res_b_;
  std::vector<nn::InstanceNorm> res_na_, res_nb_;
  std::vector<nn::Conv2d> up_;
  std::vector<nn::InstanceNorm> up_norm_;
  nn::Conv2d head_;
};

/// 70x70-receptive-field patch discriminator (least-squares objective).
/// pad=0 removes border effects so constant inputs score constantly.
class PatchDiscriminator {
 public:
  PatchDiscriminator() = default;
  PatchDiscriminator(nn::ParamMap& params, const std::string& prefix, int64_t width,
                     int64_t pad, std::mt19937_64& rng);

  Var forward(const Var& x) const;

 private:
  std::vector<nn::Conv2d> convs_;
  std::vector<nn::InstanceNorm> norms_;  // layers 2..4
};

/// The four generator evaluations of the two cycle routes. cycled_ir doubles
/// as the hat-ir cross-path output (it is G_A applied to pseudo_vis), and
/// cycled_vis likewise.
struct CyclePaths {
  Var pseudo_ir;   // G_A(vis)
  Var pseudo_vis;  // G_B(ir)
  Var cycled_ir;   // G_A(G_B(ir))
  Var cycled_vis;  // G_B(G_A(vis))
};

enum class Direction { vis_to_ir, ir_to_vis };
enum class Domain { ir, vis };

/// Cross-modality perceptual style transfer network: paired cycle generators
/// plus per-domain patch discriminators.
class Cpstn {
 public:
  explicit Cpstn(const TranslatorConfig& cfg = {}, uint64_t seed = 1, int64_t disc_width = 32,
                 int64_t disc_pad = 1);

  Var translate(const Var& x, Direction dir) const;
  GrayImage translate(const GrayImage& img, Direction dir) const;
  CyclePaths forward_cycles(const Var& vis, const Var& ir) const;
  Var discriminate(const Var& img, Domain domain) const;

  const TranslatorConfig& config() const { return cfg_; }
  nn::ParamMap& gen_params() { return gen_params_; }
  nn::ParamMap& disc_params() { return disc_params_; }

 private:
  TranslatorConfig cfg_;
  nn::ParamMap gen_params_, disc_params_;
  Translator g_a_, g_b_;  // A: vis->ir, B: ir->vis
  PatchDiscriminator d_ir_, d_vis_;
};

}  // namespace cgrp
