#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "cgrp/geometry.hpp"
#include "support/testutil.hpp"

using namespace cgrp;
using cgrp::testutil::TempDir;

namespace {

DeformationField const_field(int64_t h, int64_t w, double dx, double dy) {
  DeformationField f = DeformationField::zero(h, w);
  f.dx.fill(dx);
  f.dy.fill(dy);
  return f;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0;
  for (int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("zero field returns the input bit-exactly") {
  Tensor img = testutil::pattern_a(16, 16);
  Tensor out = warp(img, DeformationField::zero(16, 16));
  for (int64_t i = 0; i < img.numel(); ++i) CHECK(out[i] == img[i]);
}

TEST_CASE("unit shift samples the right neighbour, border replicated") {
  Tensor img = testutil::pattern_a(4, 4);
  Tensor out = warp(img, const_field(4, 4, 1.0, 0.0));
  for (int64_t y = 0; y < 4; ++y)
    for (int64_t x = 0; x < 4; ++x)
      CHECK(out.at(y, x) == doctest::Approx(img.at(y, std::min<int64_t>(x + 1, 3))).epsilon(1e-12));
}

TEST_CASE("half shift averages horizontal neighbours") {
  Tensor img = Tensor::from({0, 1, 0, 1}, {2, 2});
  Tensor out = warp(img, const_field(2, 2, 0.5, 0.0));
  CHECK(out.at(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(out.at(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(out.at(1, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(out.at(1, 1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("warp matches an independent bilinear resampler on random fields") {
  std::mt19937_64 rng(31);
  for (int pair = 0; pair < 20; ++pair) {
    Tensor img = Tensor::uniform({16, 16}, rng);
    DeformationField f = DeformationField::zero(16, 16);
    f.dx = Tensor::uniform({16, 16}, rng, -3.0, 3.0);
    f.dy = Tensor::uniform({16, 16}, rng, -3.0, 3.0);
    Tensor got = warp(img, f);
    Tensor want = testutil::brute_warp(img, f.dx, f.dy);
    CHECK(max_abs_diff(got, want) < 1e-9);
    CHECK(got.min() >= img.min() - 1e-12);
    CHECK(got.max() <= img.max() + 1e-12);
  }
}

TEST_CASE("warp rejects mismatched field shapes") {
  Tensor img = testutil::pattern_a(8, 8);
  CHECK_THROWS_AS(warp(img, DeformationField::zero(4, 8)), std::invalid_argument);
}

TEST_CASE("packed layout round trips") {
  DeformationField f = DeformationField::zero(3, 5);
  std::mt19937_64 rng(32);
  f.dx = Tensor::uniform({3, 5}, rng, -2.0, 2.0);
  f.dy = Tensor::uniform({3, 5}, rng, -2.0, 2.0);
  Tensor p = f.packed();
  CHECK(p.shape() == Shape{1, 2, 3, 5});
  DeformationField g = DeformationField::from_packed(p);
  CHECK(max_abs_diff(f.dx, g.dx) == 0.0);
  CHECK(max_abs_diff(f.dy, g.dy) == 0.0);
  CHECK(p.at(0, 0, 1, 2) == f.dx.at(1, 2));
  CHECK(p.at(0, 1, 1, 2) == f.dy.at(1, 2));
}

TEST_CASE("compose with a zero field is the identity on either side") {
  DeformationField f = elastic_field(3.0, 2.0, 17, 12, 12);
  DeformationField z = DeformationField::zero(12, 12);
  DeformationField a = compose(z, f);
  DeformationField b = compose(f, z);
  CHECK(max_abs_diff(a.dx, f.dx) == 0.0);
  CHECK(max_abs_diff(a.dy, f.dy) == 0.0);
  CHECK(max_abs_diff(b.dx, f.dx) == 0.0);
  CHECK(max_abs_diff(b.dy, f.dy) == 0.0);
}

TEST_CASE("composing constant translations adds their displacements") {
  DeformationField a = const_field(6, 6, 0.7, -0.3);
  DeformationField b = const_field(6, 6, 0.4, 0.6);
  DeformationField c = compose(a, b);
  for (int64_t i = 0; i < 36; ++i) {
    CHECK(c.dx[i] == doctest::Approx(1.1).epsilon(1e-12));
    CHECK(c.dy[i] == doctest::Approx(0.3).epsilon(1e-12));
  }
}

TEST_CASE("warping twice approximates warping by the composed field") {
  Tensor img = testutil::blob_scene(32, 32, 5);
  DeformationField a = elastic_field(4.0, 2.0, 21, 32, 32);
  DeformationField b = elastic_field(4.0, 2.0, 22, 32, 32);
  Tensor twice = warp(warp(img, a), b);
  Tensor once = warp(img, compose(a, b));
  // bound is double-resampling interpolation error; a naive field addition
  // in compose lands an order of magnitude higher
  CHECK(max_abs_diff(twice, once) < 3e-2);
}

TEST_CASE("identity affine parameters produce an exactly zero field") {
  AffineParams p;
  CHECK(p.is_identity());
  DeformationField f = affine_to_field(p, 9, 7);
  CHECK(f.dx.abs_max() == 0.0);
  CHECK(f.dy.abs_max() == 0.0);

  AffineParams q;
  q.tx = 0.5;
  CHECK_FALSE(q.is_identity());
}

TEST_CASE("pure translation fills the field with (tx, ty)") {
  AffineParams p;
  p.tx = 1.25;
  p.ty = -2.5;
  DeformationField f = affine_to_field(p, 4, 6);
  for (int64_t i = 0; i < 24; ++i) {
    CHECK(f.dx[i] == doctest::Approx(1.25).epsilon(1e-12));
    CHECK(f.dy[i] == doctest::Approx(-2.5).epsilon(1e-12));
  }
}

TEST_CASE("a 90 degree rotation permutes pixels about the center") {
  AffineParams p;
  p.rotation_deg = 90.0;
  Tensor img = testutil::pattern_a(7, 7);
  Tensor out = warp(img, affine_to_field(p, 7, 7));
  // out(y, x) samples the input at R*(p - c) + c with R the 90-degree matrix:
  // source x = 3 - (y - 3), source y = 3 + (x - 3).
  for (int64_t y = 0; y < 7; ++y)
    for (int64_t x = 0; x < 7; ++x)
      CHECK(out.at(y, x) == doctest::Approx(img.at(x, 6 - y)).epsilon(1e-9));
}

TEST_CASE("rotating by +/- angle composes back to near identity") {
  AffineParams fw, bw;
  fw.rotation_deg = 4.0;
  bw.rotation_deg = -4.0;
  Tensor img = testutil::blob_scene(48, 48, 6);
  Tensor round = warp(warp(img, affine_to_field(fw, 48, 48)), affine_to_field(bw, 48, 48));
  // interior only: the border band is polluted by replication
  double m = 0;
  for (int64_t y = 8; y < 40; ++y)
    for (int64_t x = 8; x < 40; ++x) m = std::max(m, std::abs(round.at(y, x) - img.at(y, x)));
  CHECK(m < 5e-2);
}

TEST_CASE("elastic field honours alpha, seed and smoothness") {
  DeformationField z = elastic_field(4.0, 0.0, 9, 16, 16);
  CHECK(z.dx.abs_max() == 0.0);
  CHECK(z.dy.abs_max() == 0.0);

  DeformationField f1 = elastic_field(4.0, 8.0, 123, 64, 64);
  DeformationField f2 = elastic_field(4.0, 8.0, 123, 64, 64);
  DeformationField f3 = elastic_field(4.0, 8.0, 124, 64, 64);
  CHECK(max_abs_diff(f1.dx, f2.dx) == 0.0);
  CHECK(max_abs_diff(f1.dy, f2.dy) == 0.0);
  CHECK(max_abs_diff(f1.dx, f3.dx) > 0.0);

  double maxmag = 0;
  for (int64_t i = 0; i < f1.dx.numel(); ++i)
    maxmag = std::max(maxmag, std::hypot(f1.dx[i], f1.dy[i]));
  CHECK(std::abs(maxmag - 8.0) <= 1e-4);

  // blurred noise varies slowly: neighbour increments stay well under alpha/sigma
  double maxstep = 0;
  for (int64_t y = 0; y < 64; ++y)
    for (int64_t x = 0; x + 1 < 64; ++x) {
      maxstep = std::max(maxstep, std::abs(f1.dx.at(y, x + 1) - f1.dx.at(y, x)));
      maxstep = std::max(maxstep, std::abs(f1.dy.at(y, x + 1) - f1.dy.at(y, x)));
      maxstep = std::max(maxstep, std::abs(f1.dx.at(x + 1, y) - f1.dx.at(x, y)));
      maxstep = std::max(maxstep, std::abs(f1.dy.at(x + 1, y) - f1.dy.at(x, y)));
    }
  CHECK(maxstep < 8.0 / 4.0);
}

TEST_CASE("gaussian_blur matches a plain-loop reference") {
  std::mt19937_64 rng(33);
  Tensor img = Tensor::uniform({9, 7}, rng);
  double sigma = 1.3;
  Tensor got = gaussian_blur(img, sigma);

  int64_t radius = static_cast<int64_t>(std::ceil(3 * sigma));
  std::vector<double> k(static_cast<size_t>(2 * radius + 1));
  double norm = 0;
  for (int64_t i = -radius; i <= radius; ++i) {
    k[static_cast<size_t>(i + radius)] = std::exp(-0.5 * (i / sigma) * (i / sigma));
    norm += k[static_cast<size_t>(i + radius)];
  }
  for (double& v : k) v /= norm;

  auto cl = [](int64_t v, int64_t n) { return std::min(std::max(v, int64_t{0}), n - 1); };
  for (int64_t y = 0; y < 9; ++y)
    for (int64_t x = 0; x < 7; ++x) {
      double acc = 0;
      for (int64_t i = -radius; i <= radius; ++i)
        for (int64_t j = -radius; j <= radius; ++j)
          acc += k[static_cast<size_t>(i + radius)] * k[static_cast<size_t>(j + radius)] *
                 img.at(cl(y + i, 9), cl(x + j, 7));
      CHECK(got.at(y, x) == doctest::Approx(acc).epsilon(1e-10));
    }

  Tensor flat = gaussian_blur(Tensor::full({5, 5}, 0.42), 2.0);
  for (int64_t i = 0; i < 25; ++i) CHECK(flat[i] == doctest::Approx(0.42).epsilon(1e-12));
}

TEST_CASE("fields round trip through DFLD files at f32 precision") {
  TempDir tmp("dfld");
  std::mt19937_64 rng(34);
  DeformationField f = DeformationField::zero(11, 13);
  f.dx = Tensor::uniform({11, 13}, rng, -3.0, 3.0);
  f.dy = Tensor::uniform({11, 13}, rng, -3.0, 3.0);
  std::string path = tmp.sub("a.dfld");
  save_field(f, path);
  DeformationField g = load_field(path);
  CHECK(g.height() == 11);
  CHECK(g.width() == 13);
  CHECK(max_abs_diff(f.dx, g.dx) < 4e-7);
  CHECK(max_abs_diff(f.dy, g.dy) < 4e-7);

  // identical bytes when saved twice
  std::string path2 = tmp.sub("b.dfld");
  save_field(f, path2);
  CHECK(testutil::files_identical(path, path2));
}

TEST_CASE("load_field rejects garbage") {
  TempDir tmp("dfldbad");
  std::string path = tmp.sub("bad.dfld");
  {
    std::ofstream out(path, std::ios::binary);
    out << "not a field";
  }
  CHECK_THROWS(load_field(path));
  CHECK_THROWS(load_field(tmp.sub("missing.dfld")));
}

}  // TEST_SUITE("geometry")
