#include <doctest.h>

#include <cmath>
#include <random>
#include <string>

#include "cgrp/mrrn.hpp"
#include "support/testutil.hpp"

using namespace cgrp;
using namespace cgrp::ops;

namespace {

MrrnConfig tiny_cfg() {
  MrrnConfig cfg;
  cfg.levels = 2;
  cfg.widths = {4, 8};
  cfg.est_widths = {8, 16};
  return cfg;
}

void zero_params(Mrrn& net, const std::string& prefix) {
  for (const auto& e : net.params().entries())
    if (e.name.rfind(prefix, 0) == 0) {
      Var v = e.var;
      v.mutable_value().fill(0.0);
    }
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  REQUIRE(a.same_shape(b));
  double m = 0;
  for (int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_SUITE("mrrn") {

TEST_CASE("pyramid levels halve spatially and stack both streams") {
  Mrrn net(tiny_cfg(), 12);
  Var a = Var::constant(testutil::blob_scene(16, 12, 90).reshaped({1, 1, 16, 12}));
  Var b = Var::constant(testutil::blob_scene(16, 12, 91).reshaped({1, 1, 16, 12}));
  FeaturePyramid pyr = net.extract_pyramid(a, b);
  REQUIRE(pyr.levels.size() == 2);
  CHECK(pyr.levels[0].value().shape() == Shape{1, 8, 16, 12});
  CHECK(pyr.levels[1].value().shape() == Shape{1, 16, 8, 6});
}

TEST_CASE("the two streams share weights: swapping inputs swaps channel halves") {
  Mrrn net(tiny_cfg(), 12);
  Var a = Var::constant(testutil::blob_scene(8, 8, 92).reshaped({1, 1, 8, 8}));
  Var b = Var::constant(testutil::blob_scene(8, 8, 93).reshaped({1, 1, 8, 8}));
  FeaturePyramid ab = net.extract_pyramid(a, b);
  FeaturePyramid ba = net.extract_pyramid(b, a);
  for (size_t k = 0; k < 2; ++k) {
    int64_t w = tiny_cfg().widths[k];
    Tensor ab_first = slice_channels(ab.levels[k], 0, w).value();
    Tensor ba_second = slice_channels(ba.levels[k], w, 2 * w).value();
    CHECK(max_abs_diff(ab_first, ba_second) == 0.0);
  }
}

TEST_CASE("pyramid rejects bad shapes unless padding is enabled") {
  Mrrn net(tiny_cfg(), 12);
  std::mt19937_64 rng(94);
  Var odd = Var::constant(Tensor::uniform({1, 1, 15, 16}, rng));
  Var even = Var::constant(Tensor::uniform({1, 1, 16, 16}, rng));
  CHECK_THROWS_AS(net.extract_pyramid(odd, odd), std::invalid_argument);
  CHECK_THROWS_AS(net.extract_pyramid(even, odd), std::invalid_argument);
  CHECK_THROWS_AS(net.predict_field(odd, odd), std::invalid_argument);

  MrrnConfig padded = tiny_cfg();
  padded.pad_inputs = true;
  Mrrn pnet(padded, 12);
  Var f = pnet.predict_field(odd, odd);
  CHECK(f.value().shape() == Shape{1, 2, 15, 16});
}

TEST_CASE("padding is invisible for sizes that already fit") {
  MrrnConfig padded = tiny_cfg();
  padded.pad_inputs = true;
  Mrrn a(tiny_cfg(), 13), b(padded, 13);
  Var x = Var::constant(testutil::blob_scene(16, 16, 95).reshaped({1, 1, 16, 16}));
  Var y = Var::constant(testutil::blob_scene(16, 16, 96).reshaped({1, 1, 16, 16}));
  CHECK(max_abs_diff(a.predict_field(x, y).value(), b.predict_field(x, y).value()) == 0.0);
}

TEST_CASE("zeroed refinement stacks leave the coarse fields untouched") {
  Mrrn net(tiny_cfg(), 14);
  zero_params(net, "mr");
  Var a = Var::constant(testutil::blob_scene(16, 16, 97).reshaped({1, 1, 16, 16}));
  Var b = Var::constant(testutil::blob_scene(16, 16, 98).reshaped({1, 1, 16, 16}));
  LevelFields lf = net.estimate_field(net.extract_pyramid(a, b));
  REQUIRE(lf.coarse.size() == 2);
  REQUIRE(lf.refined.size() == 2);
  for (size_t k = 0; k < 2; ++k)
    CHECK(max_abs_diff(lf.refined[k].value(), lf.coarse[k].value()) == 0.0);
}

TEST_CASE("an all-zero network registers through the identity") {
  Mrrn net(tiny_cfg(), 15);
  zero_params(net, "");
  Var a = Var::constant(testutil::blob_scene(16, 16, 99).reshaped({1, 1, 16, 16}));
  Var b = Var::constant(testutil::blob_scene(16, 16, 100).reshaped({1, 1, 16, 16}));
  Var field = net.predict_field(a, b);
  CHECK(field.value().abs_max() == 0.0);
  Tensor reg = Mrrn::register_image(b, field).value();
  CHECK(max_abs_diff(reg, b.value()) == 0.0);
}

TEST_CASE("warm starts are the 2x-scaled upsampled refined field of the coarser level") {
  Mrrn net(tiny_cfg(), 16);
  Var a = Var::constant(testutil::blob_scene(16, 16, 101).reshaped({1, 1, 16, 16}));
  Var b = Var::constant(testutil::blob_scene(16, 16, 102).reshaped({1, 1, 16, 16}));
  LevelFields lf = net.estimate_field(net.extract_pyramid(a, b));
  REQUIRE(lf.warm.size() == 2);
  CHECK(lf.warm[1].value().abs_max() == 0.0);  // coarsest level starts cold
  Tensor want =
      affine(upsample_bilinear2x(Var::constant(lf.refined[1].value())), 2.0).value();
  CHECK(max_abs_diff(lf.warm[0].value(), want) == 0.0);
}

TEST_CASE("registration is differentiable end to end") {
  Mrrn net(tiny_cfg(), 17);
  Var a = Var::leaf(testutil::blob_scene(8, 8, 103).reshaped({1, 1, 8, 8}).clone());
  Var b = Var::leaf(testutil::blob_scene(8, 8, 104).reshaped({1, 1, 8, 8}).clone());
  Var field = net.predict_field(a, b);
  Var loss = mean_all(square(sub(Mrrn::register_image(b, field), a)));
  backward(loss);
  double gsum = 0;
  for (const auto& e : net.params().entries()) gsum += e.var.grad().abs_max();
  CHECK(gsum > 0.0);
  CHECK(a.grad().abs_max() > 0.0);
  CHECK(b.grad().abs_max() > 0.0);
}

TEST_CASE("a small net learns a constant translation under supervision") {
  Mrrn net(tiny_cfg(), 18);
  Tensor scene = testutil::blob_scene(32, 32, 105);
  DeformationField g = DeformationField::zero(32, 32);
  g.dx.fill(1.5);
  g.dy.fill(-0.8);
  Tensor distorted = warp(scene, g);

  Var pseudo = Var::constant(scene.reshaped({1, 1, 32, 32}));
  Var ir = Var::constant(distorted.reshaped({1, 1, 32, 32}));
  // the correcting field undoes the constant shift
  Tensor target_t({1, 2, 32, 32});
  for (int64_t i = 0; i < 32 * 32; ++i) {
    target_t[i] = -1.5;
    target_t[32 * 32 + i] = 0.8;
  }
  Var target = Var::constant(target_t);

  nn::Adam opt(2e-3);
  double first = -1, last = -1;
  for (int step = 0; step < 150; ++step) {
    net.params().zero_grad();
    Var field = net.predict_field(pseudo, ir);
    Var loss = mean_all(square(sub(field, target)));
    if (step == 0) first = loss.item();
    last = loss.item();
    backward(loss);
    opt.step(net.params());
  }
  CHECK(first > 0.5);
  CHECK(last < 0.05);
}

}  // TEST_SUITE("mrrn")
