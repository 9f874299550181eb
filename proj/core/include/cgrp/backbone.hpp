#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cgrp/ops.hpp"

namespace cgrp {

/// Frozen 19-layer convolutional perceptual backbone (VGG-19 feature layout:
/// 3x3 convolutions, ReLU, 2x2 max pools). Layer indices follow the usual
/// sequential numbering of that architecture; a tap at index j is the output
/// of the convolution sitting at j, before its ReLU. Valid taps:
/// 0, 2, 5, 7, 10, 12, 14, 16, 19, 21, 23, 25, 28, 30.
///
/// Weights are deterministic He-initialized stand-ins by default (no
/// pretrained download in this environment); load_weights() accepts a raw
/// "VGGW" blob for canonical weights. Either way the backbone is frozen and
/// gradients flow only through its inputs.
class Backbone {
 public:
  /// Builds layers up to max_index inclusive (cheaper shallow configs).
  explicit Backbone(int64_t max_index = 30, uint64_t seed = 77);

  /// x: [N,1,H,W] in [0,1]. Replicated to 3 channels and normalized by the
  /// canonical ImageNet statistics, then run through the stack; returns the
  /// feature map at each requested tap, in the given order.
  std::vector<Var> features(const Var& x, const std::vector<int64_t>& taps) const;

  /// "VGGW" blob: magic, u32 conv count, then per conv u32 O, u32 I followed
  /// by f32 weights [O,I,3,3] and f32 biases [O]. Must cover max_index.
  void load_weights(const std::string& path);

  int64_t max_index() const { return max_index_; }
  static const std::vector<int64_t>& conv_indices();

 private:
  int64_t max_index_;
  std::vector<Var> w_, b_;             // one per conv layer, frozen constants
  std::vector<int64_t> built_indices_;  // sequential index of each conv
};

}  // namespace cgrp
