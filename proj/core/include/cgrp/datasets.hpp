#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cgrp/geometry.hpp"
#include "cgrp/image.hpp"

namespace cgrp {

/// Aligned visible/infrared pair plus the synthetic misalignment applied to
/// the infrared side. ir_distorted = warp(ir_aligned, gt_field) always holds.
struct PairRecord {
  std::string corpus, id;
  uint64_t seed = 0;
  GrayImage vis, ir_aligned, ir_distorted;
  DeformationField gt_field;

  int64_t height() const { return vis.height(); }
  int64_t width() const { return vis.width(); }
};

struct ElasticSpec {
  double sigma = 4.0;
  double alpha = 0.0;
  uint64_t seed = 0;
};

/// Builds the misaligned pair. The aligned rasters are snapped to the 16-bit
/// grid and the ground-truth field to single precision before warping, so a
/// saved record reloads with its construction invariant intact.
PairRecord synthesize_pair(const GrayImage& vis, const GrayImage& ir_aligned,
                           const AffineParams& affine, const ElasticSpec& elastic,
                           const std::string& corpus, const std::string& id);

/// Co-located crops stacked into NCHW batches.
struct PatchBatch {
  Tensor vis, ir_distorted, ir_aligned;  // [B,1,P,P]
  Tensor gt_field;                       // [B,2,P,P]
  std::vector<int64_t> record_index;
  std::vector<std::pair<int64_t, int64_t>> offsets;  // (y, x)
};

PatchBatch sample_batch(const std::vector<PairRecord>& records, int64_t patch, int64_t count,
                        uint64_t seed);

struct SplitManifest {
  std::string corpus;
  std::vector<std::string> train, test;
};

/// Deterministic shuffle-and-cut. With overlap_train the train side keeps
/// every id (the unsupervised protocol); default is a disjoint split.
SplitManifest split_corpus(std::vector<std::string> ids, double test_fraction, uint64_t seed,
                           bool overlap_train = false);

void save_manifest(const SplitManifest& m, const std::string& path);
SplitManifest load_manifest(const std::string& path);

/// On-disk record layout under a directory, keyed by id:
///   <id>_vis.png, <id>_ir.png         16-bit grayscale
///   <id>_ir_distorted.png             16-bit preview
///   <id>_ir_distorted.raw32           full-precision raster, read back
///   <id>_field.dfld                   ground-truth field
///   <id>_meta.txt                     corpus and seed
void save_pair(const PairRecord& record, const std::string& dir);
PairRecord load_pair(const std::string& dir, const std::string& id);
std::vector<std::string> list_pair_ids(const std::string& dir);

/// "GR32" raster file: magic, u32 H, u32 W, row-major f32, little-endian.
void save_gray_raw32(const Tensor& img, const std::string& path);
Tensor load_gray_raw32(const std::string& path);

}  // namespace cgrp
