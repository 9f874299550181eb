#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace cgrp {

using Shape = std::vector<int64_t>;

int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

/// Dense row-major tensor of doubles, rank 0..4.
///
/// Copies are shallow: they share the underlying buffer (numpy-style).
/// Use clone() for a deep copy. Operations in ops.hpp always allocate
/// fresh outputs; in-place mutation is reserved for owners of the buffer
/// (e.g. the optimizer updating parameters).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, double fill);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor full(Shape shape, double v) { return Tensor(std::move(shape), v); }
  static Tensor scalar(double v);
  static Tensor from(std::vector<double> values, Shape shape);
  /// Uniform samples in [lo, hi) from the given engine.
  static Tensor uniform(Shape shape, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0);
  static Tensor normal(Shape shape, std::mt19937_64& rng, double mean = 0.0, double stddev = 1.0);

  bool defined() const { return buf_ != nullptr; }
  const Shape& shape() const { return shape_; }
  int64_t rank() const { return static_cast<int64_t>(shape_.size()); }
  int64_t dim(int64_t i) const { return shape_[static_cast<size_t>(i)]; }
  int64_t numel() const { return shape_numel(shape_); }

  double* data() { return buf_->data(); }
  const double* data() const { return buf_->data(); }

  double& operator[](int64_t i) { return (*buf_)[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return (*buf_)[static_cast<size_t>(i)]; }

  // Row-major element access; rank must match.
  double& at(int64_t i, int64_t j) { return (*buf_)[static_cast<size_t>(i * shape_[1] + j)]; }
  double at(int64_t i, int64_t j) const { return (*buf_)[static_cast<size_t>(i * shape_[1] + j)]; }
  double& at(int64_t i, int64_t j, int64_t k) {
    return (*buf_)[static_cast<size_t>((i * shape_[1] + j) * shape_[2] + k)];
  }
  double at(int64_t i, int64_t j, int64_t k) const {
    return (*buf_)[static_cast<size_t>((i * shape_[1] + j) * shape_[2] + k)];
  }
  double& at(int64_t i, int64_t j, int64_t k, int64_t l) {
    return (*buf_)[static_cast<size_t>(((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l)];
  }
  double at(int64_t i, int64_t j, int64_t k, int64_t l) const {
    return (*buf_)[static_cast<size_t>(((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l)];
  }

  /// Scalar value of a one-element tensor.
  double item() const;

  Tensor clone() const;
  /// New view over the same buffer with a different shape (numel must match).
  Tensor reshaped(Shape shape) const;

  void fill(double v);
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;

  double min() const;
  double max() const;
  double sum() const;
  double mean() const { return sum() / static_cast<double>(numel()); }
  double abs_max() const;

 private:
  Shape shape_;
  std::shared_ptr<std::vector<double>> buf_;
};

/// Throws std::invalid_argument with `msg` unless `cond`.
void check_arg(bool cond, const std::string& msg);

}  // namespace cgrp
