#include "testutil.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>

namespace cgrp::testutil {

Tensor pattern_a(int64_t h, int64_t w) {
  Tensor img({h, w});
  for (int64_t i = 0; i < h; ++i)
    for (int64_t j = 0; j < w; ++j)
      img.at(i, j) = 0.5 + 0.35 * std::sin(0.31 * static_cast<double>(i) + 0.47 * static_cast<double>(j)) +
                     0.15 * std::cos(0.9 * static_cast<double>(i) - 0.23 * static_cast<double>(j));
  return img;
}

Tensor pattern_b(int64_t h, int64_t w) {
  Tensor img({h, w});
  for (int64_t i = 0; i < h; ++i)
    for (int64_t j = 0; j < w; ++j)
      img.at(i, j) = 0.5 + 0.35 * std::sin(0.31 * static_cast<double>(i) + 0.47 * static_cast<double>(j) + 0.4) +
                     0.15 * std::cos(0.9 * static_cast<double>(i) - 0.23 * static_cast<double>(j) - 0.2);
  return img;
}

Tensor blob_scene(int64_t h, int64_t w, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Tensor img({h, w});
  for (int64_t i = 0; i < h; ++i)
    for (int64_t j = 0; j < w; ++j)
      img.at(i, j) = 0.2 + 0.15 * static_cast<double>(j) / static_cast<double>(w - 1) +
                     0.1 * static_cast<double>(i) / static_cast<double>(h - 1);
  for (int b = 0; b < 6; ++b) {
    double cy = u(rng) * static_cast<double>(h - 1);
    double cx = u(rng) * static_cast<double>(w - 1);
    double amp = 0.15 + 0.3 * u(rng);
    double s = 4.0 + 6.0 * u(rng);
    for (int64_t i = 0; i < h; ++i)
      for (int64_t j = 0; j < w; ++j) {
        double dy = static_cast<double>(i) - cy, dx = static_cast<double>(j) - cx;
        img.at(i, j) += amp * std::exp(-(dx * dx + dy * dy) / (2.0 * s * s));
      }
  }
  for (int64_t i = 0; i < img.numel(); ++i) img[i] = std::clamp(img[i], 0.0, 1.0);
  return img;
}

Tensor modality_remap(const Tensor& vis) {
  Tensor out(vis.shape());
  for (int64_t i = 0; i < vis.numel(); ++i)
    out[i] = std::clamp(0.95 - 0.8 * std::pow(vis[i], 1.4), 0.0, 1.0);
  return out;
}

Tensor brute_warp(const Tensor& img, const Tensor& dx, const Tensor& dy) {
  int64_t h = img.dim(0), w = img.dim(1);
  Tensor out({h, w});
  auto pix = [&](int64_t y, int64_t x) {
    y = std::clamp<int64_t>(y, 0, h - 1);
    x = std::clamp<int64_t>(x, 0, w - 1);
    return img.at(y, x);
  };
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x) {
      double sx = static_cast<double>(x) + dx.at(y, x);
      double sy = static_cast<double>(y) + dy.at(y, x);
      double fx0 = std::floor(sx), fy0 = std::floor(sy);
      double ax = sx - fx0, ay = sy - fy0;
      int64_t x0 = static_cast<int64_t>(fx0), y0 = static_cast<int64_t>(fy0);
      double top = (1.0 - ax) * pix(y0, x0) + ax * pix(y0, x0 + 1);
      double bot = (1.0 - ax) * pix(y0 + 1, x0) + ax * pix(y0 + 1, x0 + 1);
      out.at(y, x) = (1.0 - ay) * top + ay * bot;
    }
  return out;
}

FdResult fd_check(const std::vector<Var>& leaves, const std::function<Var()>& build,
                  int probes_per_leaf, uint64_t seed, double step) {
  for (const Var& leaf : leaves) const_cast<Var&>(leaf).zero_grad();
  Var loss = build();
  if (loss.numel() != 1) throw std::runtime_error("fd_check: loss is not scalar");
  backward(loss);

  std::mt19937_64 rng(seed);
  FdResult res;
  for (const Var& leaf : leaves) {
    Var v = leaf;  // shares the node
    Tensor& t = v.mutable_value();
    const Tensor& g = v.grad();
    for (int p = 0; p < probes_per_leaf; ++p) {
      int64_t idx = static_cast<int64_t>(rng() % static_cast<uint64_t>(t.numel()));
      double keep = t[idx];
      t[idx] = keep + step;
      double up = build().item();
      t[idx] = keep - step;
      double down = build().item();
      t[idx] = keep;
      double num = (up - down) / (2.0 * step);
      double ana = g[idx];
      double rel = std::abs(num - ana) / std::max({std::abs(num), std::abs(ana), 1e-6});
      res.max_rel = std::max(res.max_rel, rel);
      ++res.probes;
    }
  }
  return res;
}

TempDir::TempDir(const std::string& tag) {
  auto base = std::filesystem::temp_directory_path();
  std::mt19937_64 rng(std::random_device{}());
  for (int tries = 0; tries < 64; ++tries) {
    auto cand = base / ("cgrp_" + tag + "_" + std::to_string(rng() & 0xffffff));
    std::error_code ec;
    if (std::filesystem::create_directory(cand, ec)) {
      path_ = cand.string();
      return;
    }
  }
  throw std::runtime_error("TempDir: could not create a unique directory");
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

bool files_identical(const std::string& a, const std::string& b) {
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  if (!fa || !fb) return false;
  std::string ca((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
  std::string cb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
  return ca == cb;
}

}  // namespace cgrp::testutil
