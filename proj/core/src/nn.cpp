#include "cgrp/nn.hpp"

#include <cmath>

namespace cgrp::nn {

Var ParamMap::add(const std::string& name, Tensor init) {
  check_arg(find(name) == nullptr, "duplicate parameter name: " + name);
  Var v = Var::leaf(std::move(init));
  entries_.push_back({name, v});
  return v;
}

const Var* ParamMap::find(const std::string& name) const {
  for (const Entry& e : entries_)
    if (e.name == name) return &e.var;
  return nullptr;
}

int64_t ParamMap::count() const {
  int64_t n = 0;
  for (const Entry& e : entries_) n += e.var.numel();
  return n;
}

void ParamMap::zero_grad() {
  for (Entry& e : entries_) e.var.zero_grad();
}

Conv2d::Conv2d(ParamMap& params, const std::string& name, int64_t in_ch, int64_t out_ch,
               int64_t k, int64_t stride, int64_t pad, std::mt19937_64& rng, bool bias)
    : stride_(stride), pad_(pad) {
  double bound = 1.0 / std::sqrt(static_cast<double>(in_ch * k * k));
  w_ = params.add(name + ".w", Tensor::uniform({out_ch, in_ch, k, k}, rng, -bound, bound));
  if (bias) b_ = params.add(name + ".b", Tensor::uniform({out_ch}, rng, -bound, bound));
}

InstanceNorm::InstanceNorm(ParamMap& params, const std::string& name, int64_t channels,
                           double eps)
    : eps_(eps) {
  gamma_ = params.add(name + ".g", Tensor::full({1, channels, 1, 1}, 1.0));
  beta_ = params.add(name + ".b", Tensor::zeros({1, channels, 1, 1}));
}

Var InstanceNorm::operator()(const Var& x) const {
  check_arg(x.value().rank() == 4, "InstanceNorm expects NCHW");
  Var mu = ops::reduce_mean(x, {2, 3}, true);
  Var centered = ops::sub(x, mu);
  Var var = ops::reduce_mean(ops::square(centered), {2, 3}, true);
  Var normed = ops::div(centered, ops::sqrt(ops::affine(var, 1.0, eps_)));
  return ops::add(ops::mul(normed, gamma_), beta_);
}

void Adam::step(ParamMap& params) {
  const auto& entries = params.entries();
  if (m_.empty()) {
    for (const auto& e : entries) {
      m_.emplace_back(e.var.shape());
      v_.emplace_back(e.var.shape());
    }
  }
  check_arg(m_.size() == entries.size(), "Adam: parameter set changed between steps");
  ++t_;
  double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t i = 0; i < entries.size(); ++i) {
    Tensor p = entries[i].var.node()->value;
    const Tensor& g = entries[i].var.grad();
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    for (int64_t j = 0; j < p.numel(); ++j) {
      m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
      v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
      p[j] -= lr_ * (m[j] / c1) / (std::sqrt(v[j] / c2) + eps_);
    }
  }
}

}  // namespace cgrp::nn
