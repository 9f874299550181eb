#pragma once

#include <cstdint>

#include "cgrp/image.hpp"
#include "cgrp/nn.hpp"

namespace cgrp {

struct DifnConfig {
  int64_t width = 32;   // feature channels per path
  int64_t growth = 16;  // dense-block growth
  int64_t blocks = 2;   // residual dense blocks per path
};

/// Same-shape feature maps from the two extraction paths.
struct DualFeatures {
  Var f_ir, f_vis;
};

/// Dual-path interaction fusion network: residual-dense extraction per
/// modality, a joint attention gate, and a single-channel reconstruction.
class Difn {
 public:
  explicit Difn(const DifnConfig& cfg = {}, uint64_t seed = 3);

  DualFeatures extract_dual(const Var& ir_reg, const Var& vis) const;
  /// sigmoid(conv1x1(f_ir) ⊙ conv1x1(f_vis)): single channel in (0,1).
  Var attention(const DualFeatures& df) const;
  /// Gates each path by (1 + A_tt), concatenates, reduces 3x3 to one channel.
  /// Unclamped; clamping happens at the GrayImage boundary. use_ifm=false is
  /// the ablation that fuses the raw concatenation without the gate.
  Var interact_fuse(const DualFeatures& df, bool use_ifm = true) const;
  Var fuse(const Var& ir_reg, const Var& vis, bool use_ifm = true) const;
  GrayImage fuse(const GrayImage& ir_reg, const GrayImage& vis, bool use_ifm = true) const;

  const DifnConfig& config() const { return cfg_; }
  nn::ParamMap& params() { return params_; }

 private:
  Var path(const Var& x, size_t which) const;

  DifnConfig cfg_;
  nn::ParamMap params_;
  nn::Conv2d stem_[2];
  std::vector<nn::Conv2d> rdb_[2];  // blocks * 3 convolutions, flattened
  nn::Conv2d att_[2];               // 1x1 projections, ir then vis
  nn::Conv2d head_;
};

}  // namespace cgrp
