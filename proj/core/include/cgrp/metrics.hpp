#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cgrp/datasets.hpp"
#include "cgrp/image.hpp"

namespace cgrp {

/// Mean squared difference.
double mse(const Tensor& a, const Tensor& b);
/// Pearson correlation of the flattened rasters; nullopt when either side is
/// constant (undefined), reported by the caller as an excluded item.
std::optional<double> ncc(const Tensor& a, const Tensor& b);
/// Shannon mutual information of the joint histogram, in nats.
double mi(const Tensor& a, const Tensor& b, int64_t bins = 256);
/// Shannon entropy under the same binning, in nats.
double entropy(const Tensor& a, int64_t bins = 256);

/// Mean of the Pearson correlations (fus, ir) and (fus, vis).
std::optional<double> cc(const Tensor& fus, const Tensor& ir, const Tensor& vis);
/// Single-scale SSIM, 11x11 Gaussian window (sigma 1.5), C1=(0.01)^2,
/// C2=(0.03)^2 at dynamic range 1. The window shrinks (kept odd) when the
/// image is smaller than 11.
double ssim(const Tensor& a, const Tensor& b);
/// Pixel-domain visual information fidelity, 4 scales, windows 17/9/5/3
/// (sigma N/5), internal 255 scaling, noise variance 2. nullopt when the
/// reference carries no information.
std::optional<double> vif(const Tensor& dist, const Tensor& ref);

/// Per-item metric rows plus arithmetic means; items whose metric came back
/// undefined are listed in `excluded` and skipped by that metric's mean.
struct MetricsReport {
  std::string corpus, checkpoint_id, config_hash, mode;  // mode: registration | fusion
  std::vector<std::string> items;
  std::map<std::string, std::vector<std::optional<double>>> values;  // metric -> per item
  std::map<std::string, double> means;
  std::vector<std::string> excluded;  // "item/metric" markers
  int64_t item_count = 0;

  void finalize();  // fills means/excluded from values
};

using Aligner = std::function<GrayImage(const PairRecord&)>;
using FusionPipeline = std::function<GrayImage(const PairRecord&)>;

/// Scores aligner output against the ground-truth aligned infrared.
MetricsReport evaluate_registration(const std::vector<PairRecord>& records,
                                    const Aligner& aligner);
/// Scores fused output against both sources (visible and aligned infrared);
/// cc uses both jointly, ssim and vif average over the two references.
MetricsReport evaluate_fusion(const std::vector<PairRecord>& records,
                              const FusionPipeline& pipeline);

}  // namespace cgrp
