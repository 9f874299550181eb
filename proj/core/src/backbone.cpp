#include "cgrp/backbone.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>

#include "cgrp/ioutil.hpp"

namespace cgrp {
namespace {

struct ConvSpec {
  int64_t index, in_ch, out_ch;
};

// VGG-19 feature stack through conv5_2; pools sit at 4, 9, 18, 27.
const std::vector<ConvSpec>& conv_table() {
  static const std::vector<ConvSpec> t = {
      {0, 3, 64},    {2, 64, 64},    {5, 64, 128},   {7, 128, 128},  {10, 128, 256},
      {12, 256, 256}, {14, 256, 256}, {16, 256, 256}, {19, 256, 512}, {21, 512, 512},
      {23, 512, 512}, {25, 512, 512}, {28, 512, 512}, {30, 512, 512}};
  return t;
}

const std::vector<int64_t> kPoolIndices = {4, 9, 18, 27};

constexpr double kMean[3] = {0.485, 0.456, 0.406};
constexpr double kStd[3] = {0.229, 0.224, 0.225};

}  // namespace

const std::vector<int64_t>& Backbone::conv_indices() {
  static const std::vector<int64_t> idx = [] {
    std::vector<int64_t> v;
    for (const auto& c : conv_table()) v.push_back(c.index);
    return v;
  }();
  return idx;
}

Backbone::Backbone(int64_t max_index, uint64_t seed) : max_index_(max_index) {
  check_arg(std::find(conv_indices().begin(), conv_indices().end(), max_index) !=
                conv_indices().end(),
            "Backbone: max_index " + std::to_string(max_index) + " is not a convolution index");
  std::mt19937_64 rng(seed);
  for (const ConvSpec& c : conv_table()) {
    if (c.index > max_index_) break;
    double stddev = std::sqrt(2.0 / static_cast<double>(c.in_ch * 9));
    w_.push_back(Var::constant(Tensor::normal({c.out_ch, c.in_ch, 3, 3}, rng, 0.0, stddev)));
    b_.push_back(Var::constant(Tensor::zeros({c.out_ch})));
    built_indices_.push_back(c.index);
  }
}

std::vector<Var> Backbone::features(const Var& x, const std::vector<int64_t>& taps) const {
  check_arg(x.value().rank() == 4 && x.value().dim(1) == 1, "Backbone expects [N,1,H,W]");
  check_arg(!taps.empty(), "Backbone: no taps requested");
  for (int64_t t : taps) {
    check_arg(std::find(built_indices_.begin(), built_indices_.end(), t) != built_indices_.end(),
              "Backbone: tap " + std::to_string(t) + " not available (max_index " +
                  std::to_string(max_index_) + ")");
  }

  // Replicate gray to RGB and normalize channelwise.
  std::vector<Var> channels;
  for (int c = 0; c < 3; ++c) channels.push_back(ops::affine(x, 1.0 / kStd[c], -kMean[c] / kStd[c]));
  Var h = ops::concat_channels(channels);

  std::vector<Var> out(taps.size());
  int64_t remaining = static_cast<int64_t>(taps.size());
  for (size_t li = 0; li < w_.size() && remaining > 0; ++li) {
    int64_t idx = built_indices_[li];
    for (int64_t p : kPoolIndices)
      if (p > (li == 0 ? -1 : built_indices_[li - 1]) && p < idx) h = ops::max_pool2d(h);
    h = ops::conv2d(h, w_[li], b_[li], 1, 1);
    for (size_t t = 0; t < taps.size(); ++t) {
      if (taps[t] == idx) {
        out[t] = h;
        --remaining;
      }
    }
    if (remaining > 0) h = ops::relu(h);
  }
  return out;
}

void Backbone::load_weights(const std::string& path) {
  std::string bytes = read_file(path);
  check_arg(bytes.size() >= 8 && std::memcmp(bytes.data(), "VGGW", 4) == 0,
            "load_weights: bad header in " + path);
  uint32_t count = 0;
  std::memcpy(&count, bytes.data() + 4, 4);
  check_arg(count >= w_.size(), "load_weights: blob has " + std::to_string(count) +
                                    " convolutions, need " + std::to_string(w_.size()));
  size_t pos = 8;
  auto take = [&](void* dst, size_t n) {
    check_arg(pos + n <= bytes.size(), "load_weights: truncated blob " + path);
    std::memcpy(dst, bytes.data() + pos, n);
    pos += n;
  };
  for (size_t li = 0; li < w_.size(); ++li) {
    uint32_t o = 0, i = 0;
    take(&o, 4);
    take(&i, 4);
    Tensor& wt = w_[li].mutable_value();
    check_arg(o == wt.dim(0) && i == wt.dim(1),
              "load_weights: conv " + std::to_string(li) + " shape mismatch");
    std::vector<float> buf(static_cast<size_t>(wt.numel()));
    take(buf.data(), buf.size() * 4);
    for (int64_t j = 0; j < wt.numel(); ++j) wt[j] = static_cast<double>(buf[static_cast<size_t>(j)]);
    Tensor& bt = b_[li].mutable_value();
    buf.resize(static_cast<size_t>(bt.numel()));
    take(buf.data(), buf.size() * 4);
    for (int64_t j = 0; j < bt.numel(); ++j) bt[j] = static_cast<double>(buf[static_cast<size_t>(j)]);
  }
}

}  // namespace cgrp
