#pragma once

#include <cstdint>
#include <vector>

#include "cgrp/geometry.hpp"
#include "cgrp/nn.hpp"

namespace cgrp {

struct MrrnConfig {
  int64_t levels = 3;
  std::vector<int64_t> widths = {16, 32, 64};       // SM-FE stream width per level
  std::vector<int64_t> est_widths = {32, 64, 144};  // estimator hidden width per level
  bool pad_inputs = false;  // pad to a level multiple instead of rejecting
};

/// Joint features per level; index 0 is full resolution, each level halves.
/// Channels at level k are 2 * widths[k] (the two shared-weight streams
/// concatenated, pseudo-infrared first).
struct FeaturePyramid {
  std::vector<Var> levels;
};

/// Per-level fields at level resolution, index 0 finest. refined[k] =
/// refine(coarse[k]) + coarse[k]; warm[k] is the upsampled, 2x-scaled
/// refined[k+1] seeding level k (zero at the coarsest level).
struct LevelFields {
  std::vector<Var> coarse, refined, warm;
  Var final_field;  // refined[0], full resolution, [N,2,H,W]
};

/// Multi-level refinement registration network.
class Mrrn {
 public:
  explicit Mrrn(const MrrnConfig& cfg = {}, uint64_t seed = 2);

  FeaturePyramid extract_pyramid(const Var& pseudo_ir, const Var& ir) const;
  LevelFields estimate_field(const FeaturePyramid& pyr) const;
  /// Pull-warp of the distorted infrared by the predicted field.
  static Var register_image(const Var& ir, const Var& field);

  /// extract + estimate; honors pad_inputs by padding to the level multiple
  /// and cropping the final field back.
  Var predict_field(const Var& pseudo_ir, const Var& ir) const;
  GrayImage register_image(const GrayImage& ir, const DeformationField& field) const;

  const MrrnConfig& config() const { return cfg_; }
  nn::ParamMap& params() { return params_; }

 private:
  MrrnConfig cfg_;
  nn::ParamMap params_;
  std::vector<nn::Conv2d> fe_a_, fe_b_;        // per level: stride conv + refine conv
  std::vector<std::vector<nn::Conv2d>> mc_, mr_;  // 3-layer stacks per level
};

}  // namespace cgrp
