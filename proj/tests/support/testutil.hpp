#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cgrp/autograd.hpp"
#include "cgrp/tensor.hpp"

namespace cgrp::testutil {

// Closed-form sinusoid rasters; gen_reference.py builds the same doubles.
Tensor pattern_a(int64_t h, int64_t w);
Tensor pattern_b(int64_t h, int64_t w);

// Smooth scene of Gaussian blobs on a ramp, values in [0,1].
Tensor blob_scene(int64_t h, int64_t w, uint64_t seed);
// Monotone intensity remap standing in for the second modality.
Tensor modality_remap(const Tensor& vis);

// Plain-loop bilinear pull-warp with border replication, written without the
// library resampler so the two can be compared.
Tensor brute_warp(const Tensor& img, const Tensor& dx, const Tensor& dy);

struct FdResult {
  int probes = 0;
  double max_rel = 0.0;
};

// Central finite differences on randomly probed elements of each leaf versus
// the gradients of one backward() pass. `build` must rebuild the scalar loss
// from the leaves' current values.
FdResult fd_check(const std::vector<Var>& leaves, const std::function<Var()>& build,
                  int probes_per_leaf, uint64_t seed, double step = 1e-5);

// Unique directory under the system temp root, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::string& path() const { return path_; }
  std::string sub(const std::string& name) const { return path_ + "/" + name; }

 private:
  std::string path_;
};

bool files_identical(const std::string& a, const std::string& b);

}  // namespace cgrp::testutil
