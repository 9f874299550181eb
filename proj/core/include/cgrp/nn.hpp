#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cgrp/ops.hpp"

namespace cgrp::nn {

/// Ordered registry of named trainable tensors. Order is construction order
/// and defines optimizer-slot and checkpoint layout.
class ParamMap {
 public:
  struct Entry {
    std::string name;
    Var var;
  };

  Var add(const std::string& name, Tensor init);
  const std::vector<Entry>& entries() const { return entries_; }
  const Var* find(const std::string& name) const;
  int64_t count() const;  // total number of scalar parameters
  void zero_grad();

 private:
  std::vector<Entry> entries_;
};

/// 2-D convolution layer. Weights U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(ParamMap& params, const std::string& name, int64_t in_ch, int64_t out_ch, int64_t k,
         int64_t stride, int64_t pad, std::mt19937_64& rng, bool bias = true);

  Var operator()(const Var& x) const { return ops::conv2d(x, w_, b_, stride_, pad_); }
  const Var& weight() const { return w_; }
  const Var& bias() const { return b_; }

 private:
  Var w_, b_;
  int64_t stride_ = 1, pad_ = 0;
};

/// Instance normalization with learnable per-channel affine.
class InstanceNorm {
 public:
  InstanceNorm() = default;
  InstanceNorm(ParamMap& params, const std::string& name, int64_t channels, double eps = 1e-5);

  Var operator()(const Var& x) const;

 private:
  Var gamma_, beta_;
  double eps_ = 1e-5;
};

/// Adam with bias correction. Slots are keyed by parameter order.
class Adam {
 public:
  explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(ParamMap& params);

  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }
  int64_t t() const { return t_; }

  /// Moment tensors exposed for checkpointing; index follows param order.
  std::vector<Tensor>& m() { return m_; }
  std::vector<Tensor>& v() { return v_; }
  void set_t(int64_t t) { t_ = t; }

 private:
  double lr_, beta1_, beta2_, eps_;
  int64_t t_ = 0;
  std::vector<Tensor> m_, v_;
};

}  // namespace cgrp::nn
