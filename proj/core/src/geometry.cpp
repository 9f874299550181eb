#include "cgrp/geometry.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "cgrp/ioutil.hpp"
#include "cgrp/ops.hpp"

static_assert(std::endian::native == std::endian::little, "DFLD I/O assumes a little-endian host");

namespace cgrp {
namespace {

constexpr double kPi = 3.14159265358979323846;

void check_field(const DeformationField& f) {
  check_arg(f.dx.rank() == 2 && f.dy.rank() == 2 && f.dx.same_shape(f.dy),
            "DeformationField planes must be rank-2 and congruent");
  check_arg(f.dx.all_finite() && f.dy.all_finite(), "DeformationField: non-finite displacements");
}

}  // namespace

DeformationField DeformationField::zero(int64_t h, int64_t w) {
  return {Tensor::zeros({h, w}), Tensor::zeros({h, w})};
}

Tensor DeformationField::packed() const {
  int64_t h = height(), w = width();
  Tensor t({1, 2, h, w});
  std::memcpy(t.data(), dx.data(), sizeof(double) * static_cast<size_t>(h * w));
  std::memcpy(t.data() + h * w, dy.data(), sizeof(double) * static_cast<size_t>(h * w));
  return t;
}

DeformationField DeformationField::from_packed(const Tensor& t) {
  check_arg(t.rank() == 4 && t.dim(0) == 1 && t.dim(1) == 2, "packed field must be [1,2,H,W]");
  int64_t h = t.dim(2), w = t.dim(3);
  DeformationField f{Tensor({h, w}), Tensor({h, w})};
  std::memcpy(f.dx.data(), t.data(), sizeof(double) * static_cast<size_t>(h * w));
  std::memcpy(f.dy.data(), t.data() + h * w, sizeof(double) * static_cast<size_t>(h * w));
  return f;
}

bool AffineParams::is_identity() const {
  return rotation_deg == 0.0 && tx == 0.0 && ty == 0.0 && sx == 1.0 && sy == 1.0 &&
         shear_deg == 0.0;
}

Tensor warp(const Tensor& img, const DeformationField& field) {
  check_field(field);
  check_arg(img.rank() == 2, "warp expects a rank-2 raster");
  check_arg(img.dim(0) == field.height() && img.dim(1) == field.width(),
            "warp: image " + shape_str(img.shape()) + " does not match field " +
                std::to_string(field.height()) + "x" + std::to_string(field.width()));
  Var out = ops::warp_bilinear(Var::constant(img.reshaped({1, 1, img.dim(0), img.dim(1)})),
                               Var::constant(field.packed()));
  return out.value().reshaped({img.dim(0), img.dim(1)});
}

GrayImage warp(const GrayImage& img, const DeformationField& field) {
  return make_image(warp(img.pixels, field), img.tag);
}

DeformationField compose(const DeformationField& a, const DeformationField& b) {
  check_field(a);
  check_field(b);
  check_arg(a.dx.same_shape(b.dx), "compose: field shapes differ");
  // a sampled at p + b(p) is exactly a pull-warp of a's planes by b.
  DeformationField out{warp(a.dx, b), warp(a.dy, b)};
  for (int64_t i = 0; i < out.dx.numel(); ++i) {
    out.dx[i] += b.dx[i];
    out.dy[i] += b.dy[i];
  }
  return out;
}

DeformationField affine_to_field(const AffineParams& p, int64_t h, int64_t w) {
  check_arg(h >= 2 && w >= 2, "affine_to_field: grid must be at least 2x2");
  check_arg(p.sx > 0.0 && p.sy > 0.0, "affine_to_field: scale must be positive");
  double th = p.rotation_deg * kPi / 180.0;
  double sh = std::tan(p.shear_deg * kPi / 180.0);
  double c = std::cos(th), s = std::sin(th);
  // M = R * Shear * Scale, row-major [[m00, m01], [m10, m11]] acting on (x, y).
  double m00 = (c * 1.0 + (-s) * 0.0) * p.sx, m01 = (c * sh + (-s) * 1.0) * p.sy;
  double m10 = (s * 1.0 + c * 0.0) * p.sx, m11 = (s * sh + c * 1.0) * p.sy;
  double cx = static_cast<double>(w - 1) / 2.0, cy = static_cast<double>(h - 1) / 2.0;

  DeformationField f{Tensor({h, w}), Tensor({h, w})};
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t x = 0; x < w; ++x) {
      double rx = static_cast<double>(x) - cx, ry = static_cast<double>(y) - cy;
      f.dx.at(y, x) = m00 * rx + m01 * ry + cx + p.tx - static_cast<double>(x);
      f.dy.at(y, x) = m10 * rx + m11 * ry + cy + p.ty - static_cast<double>(y);
    }
  }
  if (p.is_identity()) {  // keep the identity case free of -0.0 artifacts
    f.dx.fill(0.0);
    f.dy.fill(0.0);
  }
  return f;
}

Tensor gaussian_blur(const Tensor& img, double sigma) {
  check_arg(img.rank() == 2, "gaussian_blur expects a rank-2 raster");
  check_arg(sigma > 0.0, "gaussian_blur: sigma must be positive");
  int64_t r = static_cast<int64_t>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<size_t>(2 * r + 1));
  double sum = 0.0;
  for (int64_t i = -r; i <= r; ++i) {
    double v = std::exp(-0.5 * (static_cast<double>(i) / sigma) * (static_cast<double>(i) / sigma));
    k[static_cast<size_t>(i + r)] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;

  int64_t h = img.dim(0), w = img.dim(1);
  auto clampi = [](int64_t v, int64_t hi) { return v < 0 ? 0 : (v >= hi ? hi - 1 : v); };
  Tensor tmp({h, w}), out({h, w});
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int64_t i = -r; i <= r; ++i) acc += k[static_cast<size_t>(i + r)] * img.at(y, clampi(x + i, w));
      tmp.at(y, x) = acc;
    }
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int64_t i = -r; i <= r; ++i) acc += k[static_cast<size_t>(i + r)] * tmp.at(clampi(y + i, h), x);
      out.at(y, x) = acc;
    }
  return out;
}

DeformationField elastic_field(double sigma, double alpha, uint64_t seed, int64_t h, int64_t w) {
  check_arg(sigma > 0.0, "elastic_field: sigma must be positive");
  check_arg(alpha >= 0.0, "elastic_field: alpha must be non-negative");
  if (alpha == 0.0) return DeformationField::zero(h, w);

  std::mt19937_64 rng(seed);
  Tensor dx = gaussian_blur(Tensor::uniform({h, w}, rng, -1.0, 1.0), sigma);
  Tensor dy = gaussian_blur(Tensor::uniform({h, w}, rng, -1.0, 1.0), sigma);
  double m = 0.0;
  for (int64_t i = 0; i < h * w; ++i) m = std::max(m, std::hypot(dx[i], dy[i]));
  check_arg(m > 0.0, "elastic_field: degenerate noise");
  double scale = alpha / m;
  for (int64_t i = 0; i < h * w; ++i) {
    dx[i] *= scale;
    dy[i] *= scale;
  }
  return {std::move(dx), std::move(dy)};
}

void save_field(const DeformationField& field, const std::string& path) {
  check_field(field);
  uint32_t h = static_cast<uint32_t>(field.height()), w = static_cast<uint32_t>(field.width());
  std::string bytes;
  bytes.reserve(12 + static_cast<size_t>(field.dx.numel()) * 8);
  bytes.append("DFLD", 4);
  bytes.append(reinterpret_cast<const char*>(&h), 4);
  bytes.append(reinterpret_cast<const char*>(&w), 4);
  for (const Tensor* plane : {&field.dx, &field.dy}) {
    for (int64_t i = 0; i < plane->numel(); ++i) {
      float v = static_cast<float>((*plane)[i]);
      bytes.append(reinterpret_cast<const char*>(&v), 4);
    }
  }
  write_file_atomic(path, bytes);
}

DeformationField load_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  check_arg(in.good(), "load_field: cannot open " + path);
  char magic[4];
  uint32_t h = 0, w = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&h), 4);
  in.read(reinterpret_cast<char*>(&w), 4);
  check_arg(in.good() && std::memcmp(magic, "DFLD", 4) == 0, "load_field: bad header in " + path);
  check_arg(h > 0 && w > 0, "load_field: empty field in " + path);
  DeformationField f{Tensor({static_cast<int64_t>(h), static_cast<int64_t>(w)}),
                     Tensor({static_cast<int64_t>(h), static_cast<int64_t>(w)})};
  std::vector<float> row(static_cast<size_t>(h) * w);
  for (Tensor* plane : {&f.dx, &f.dy}) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * 4));
    check_arg(in.good(), "load_field: truncated file " + path);
    for (int64_t i = 0; i < plane->numel(); ++i) (*plane)[i] = static_cast<double>(row[static_cast<size_t>(i)]);
  }
  check_field(f);
  return f;
}

}  // namespace cgrp
