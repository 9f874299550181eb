#include "cgrp/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace cgrp {

int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << "]";
  return os.str();
}

void check_arg(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  for (int64_t d : shape_) check_arg(d >= 0, "tensor dimension must be non-negative");
  buf_ = std::make_shared<std::vector<double>>(static_cast<size_t>(shape_numel(shape_)), 0.0);
}

Tensor::Tensor(Shape shape, double fill) : Tensor(std::move(shape)) {
  std::fill(buf_->begin(), buf_->end(), fill);
}

Tensor Tensor::scalar(double v) {
  Tensor t{Shape{}};
  (*t.buf_)[0] = v;
  return t;
}

Tensor Tensor::from(std::vector<double> values, Shape shape) {
  check_arg(static_cast<int64_t>(values.size()) == shape_numel(shape),
            "value count does not match shape " + shape_str(shape));
  Tensor t;
  t.shape_ = std::move(shape);
  t.buf_ = std::make_shared<std::vector<double>>(std::move(values));
  return t;
}

Tensor Tensor::uniform(Shape shape, std::mt19937_64& rng, double lo, double hi) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> dist(lo, hi);
  for (auto& v : *t.buf_) v = dist(rng);
  return t;
}

Tensor Tensor::normal(Shape shape, std::mt19937_64& rng, double mean, double stddev) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> dist(mean, stddev);
  for (auto& v : *t.buf_) v = dist(rng);
  return t;
}

double Tensor::item() const {
  check_arg(defined() && numel() == 1, "item() requires a one-element tensor");
  return (*buf_)[0];
}

Tensor Tensor::clone() const {
  Tensor t;
  t.shape_ = shape_;
  t.buf_ = std::make_shared<std::vector<double>>(*buf_);
  return t;
}

Tensor Tensor::reshaped(Shape shape) const {
  check_arg(shape_numel(shape) == numel(),
            "reshape " + shape_str(shape_) + " -> " + shape_str(shape) + " changes element count");
  Tensor t;
  t.shape_ = std::move(shape);
  t.buf_ = buf_;
  return t;
}

void Tensor::fill(double v) { std::fill(buf_->begin(), buf_->end(), v); }

bool Tensor::all_finite() const {
  for (double v : *buf_)
    if (!std::isfinite(v)) return false;
  return true;
}

double Tensor::min() const { return *std::min_element(buf_->begin(), buf_->end()); }
double Tensor::max() const { return *std::max_element(buf_->begin(), buf_->end()); }

double Tensor::sum() const { return std::accumulate(buf_->begin(), buf_->end(), 0.0); }

double Tensor::abs_max() const {
  double m = 0.0;
  for (double v : *buf_) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace cgrp
