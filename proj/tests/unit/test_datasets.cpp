#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "cgrp/datasets.hpp"
#include "cgrp/ioutil.hpp"
#include "cgrp/png_io.hpp"
#include "support/testutil.hpp"

using namespace cgrp;
using cgrp::testutil::TempDir;

namespace {

PairRecord make_record(uint64_t seed, int64_t h = 24, int64_t w = 20) {
  Tensor vis = testutil::blob_scene(h, w, seed);
  Tensor ir = testutil::modality_remap(vis);
  AffineParams aff;
  aff.rotation_deg = 3.0;
  aff.tx = 1.5;
  aff.ty = -0.75;
  ElasticSpec el{3.0, 2.0, seed + 1};
  return synthesize_pair(GrayImage{vis, Provenance::real_vis},
                         GrayImage{ir, Provenance::real_ir}, aff, el, "unit",
                         "rec" + std::to_string(seed));
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  REQUIRE(a.same_shape(b));
  double m = 0;
  for (int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_SUITE("datasets") {

TEST_CASE("synthesized pairs satisfy the warp construction invariant exactly") {
  PairRecord r = make_record(40);
  Tensor rebuilt = warp(r.ir_aligned.pixels, r.gt_field);
  CHECK(max_abs_diff(rebuilt, r.ir_distorted.pixels) == 0.0);
  CHECK(r.vis.tag == Provenance::real_vis);
  CHECK(r.ir_aligned.tag == Provenance::real_ir);
  // snapped to the 16-bit grid
  for (int64_t i = 0; i < r.vis.pixels.numel(); ++i) {
    double v = r.vis.pixels[i] * 65535.0;
    CHECK(std::abs(v - std::round(v)) < 1e-9);
  }
}

TEST_CASE("zero distortion leaves the infrared side untouched") {
  Tensor vis = testutil::blob_scene(16, 16, 41);
  Tensor ir = testutil::modality_remap(vis);
  PairRecord r = synthesize_pair(GrayImage{vis, Provenance::real_vis},
                                 GrayImage{ir, Provenance::real_ir}, AffineParams{},
                                 ElasticSpec{4.0, 0.0, 9}, "unit", "flat");
  CHECK(r.gt_field.dx.abs_max() == 0.0);
  CHECK(r.gt_field.dy.abs_max() == 0.0);
  CHECK(max_abs_diff(r.ir_distorted.pixels, r.ir_aligned.pixels) == 0.0);
}

TEST_CASE("synthesize_pair rejects mismatched shapes") {
  GrayImage a{testutil::blob_scene(8, 8, 1), Provenance::real_vis};
  GrayImage b{testutil::blob_scene(8, 9, 2), Provenance::real_ir};
  CHECK_THROWS_AS(synthesize_pair(a, b, AffineParams{}, ElasticSpec{}, "c", "x"),
                  std::invalid_argument);
}

TEST_CASE("records round trip through the directory layout") {
  TempDir tmp("pairs");
  PairRecord r = make_record(42);
  save_pair(r, tmp.path());
  PairRecord g = load_pair(tmp.path(), r.id);

  CHECK(g.corpus == "unit");
  CHECK(g.id == r.id);
  CHECK(g.seed == r.seed);
  CHECK(max_abs_diff(g.vis.pixels, r.vis.pixels) == 0.0);
  CHECK(max_abs_diff(g.ir_aligned.pixels, r.ir_aligned.pixels) == 0.0);
  CHECK(max_abs_diff(g.gt_field.dx, r.gt_field.dx) == 0.0);
  CHECK(max_abs_diff(g.gt_field.dy, r.gt_field.dy) == 0.0);
  // distorted raster travels as f32
  CHECK(max_abs_diff(g.ir_distorted.pixels, r.ir_distorted.pixels) < 1e-7);
  // the invariant survives the round trip at f32 precision
  Tensor rebuilt = warp(g.ir_aligned.pixels, g.gt_field);
  CHECK(max_abs_diff(rebuilt, g.ir_distorted.pixels) < 1e-7);
}

TEST_CASE("list_pair_ids reports every saved id") {
  TempDir tmp("ids");
  for (uint64_t s : {50, 51, 52}) save_pair(make_record(s, 12, 12), tmp.path());
  auto ids = list_pair_ids(tmp.path());
  REQUIRE(ids.size() == 3);
  CHECK(std::is_sorted(ids.begin(), ids.end()));
  CHECK(std::count(ids.begin(), ids.end(), "rec50") == 1);
  CHECK(load_pair(tmp.path(), "rec51").id == "rec51");
  CHECK_THROWS(load_pair(tmp.path(), "nope"));
}

TEST_CASE("sample_batch crops co-located patches deterministically") {
  std::vector<PairRecord> recs = {make_record(60), make_record(61)};
  PatchBatch a = sample_batch(recs, 8, 5, 77);
  PatchBatch b = sample_batch(recs, 8, 5, 77);
  PatchBatch c = sample_batch(recs, 8, 5, 78);

  CHECK(a.vis.shape() == Shape{5, 1, 8, 8});
  CHECK(a.gt_field.shape() == Shape{5, 2, 8, 8});
  CHECK(max_abs_diff(a.vis, b.vis) == 0.0);
  CHECK(max_abs_diff(a.gt_field, b.gt_field) == 0.0);
  bool differs = false;
  for (size_t i = 0; i < a.offsets.size(); ++i)
    differs = differs || a.offsets[i] != c.offsets[i] || a.record_index[i] != c.record_index[i];
  CHECK(differs);

  for (int64_t e = 0; e < 5; ++e) {
    const PairRecord& r = recs[static_cast<size_t>(a.record_index[static_cast<size_t>(e)])];
    auto [oy, ox] = a.offsets[static_cast<size_t>(e)];
    REQUIRE(oy >= 0);
    REQUIRE(ox >= 0);
    REQUIRE(oy + 8 <= r.height());
    REQUIRE(ox + 8 <= r.width());
    for (int64_t y = 0; y < 8; ++y)
      for (int64_t x = 0; x < 8; ++x) {
        CHECK(a.vis.at(e, 0, y, x) == r.vis.pixels.at(oy + y, ox + x));
        CHECK(a.ir_distorted.at(e, 0, y, x) == r.ir_distorted.pixels.at(oy + y, ox + x));
        CHECK(a.ir_aligned.at(e, 0, y, x) == r.ir_aligned.pixels.at(oy + y, ox + x));
        CHECK(a.gt_field.at(e, 0, y, x) == r.gt_field.dx.at(oy + y, ox + x));
        CHECK(a.gt_field.at(e, 1, y, x) == r.gt_field.dy.at(oy + y, ox + x));
      }
  }
}

TEST_CASE("sample_batch validates its arguments") {
  std::vector<PairRecord> recs = {make_record(62, 10, 10)};
  CHECK_THROWS_AS(sample_batch(recs, 16, 1, 0), std::invalid_argument);
  CHECK_THROWS_AS(sample_batch({}, 8, 1, 0), std::invalid_argument);
  CHECK_THROWS_AS(sample_batch(recs, 0, 1, 0), std::invalid_argument);
}

TEST_CASE("split_corpus cuts deterministically and honours overlap_train") {
  std::vector<std::string> ids;
  for (int i = 0; i < 10; ++i) ids.push_back("id" + std::to_string(i));

  SplitManifest m = split_corpus(ids, 0.3, 5);
  CHECK(m.test.size() == 3);
  CHECK(m.train.size() == 7);
  std::set<std::string> all(m.train.begin(), m.train.end());
  for (const auto& id : m.test) CHECK(all.count(id) == 0);
  all.insert(m.test.begin(), m.test.end());
  CHECK(all.size() == 10);

  SplitManifest m2 = split_corpus(ids, 0.3, 5);
  CHECK(m.train == m2.train);
  CHECK(m.test == m2.test);

  SplitManifest ov = split_corpus(ids, 0.3, 5, true);
  CHECK(ov.train.size() == 10);
  CHECK(ov.test == m.test);

  CHECK_THROWS_AS(split_corpus(ids, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(split_corpus(ids, 1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(split_corpus({}, 0.5, 1), std::invalid_argument);
}

TEST_CASE("manifests round trip through files") {
  TempDir tmp("manifest");
  SplitManifest m;
  m.corpus = "road";
  m.train = {"a", "b", "c"};
  m.test = {"d"};
  std::string path = tmp.sub("split.txt");
  save_manifest(m, path);
  SplitManifest g = load_manifest(path);
  CHECK(g.corpus == "road");
  CHECK(g.train == m.train);
  CHECK(g.test == m.test);
}

}  // TEST_SUITE("datasets")

TEST_SUITE("io") {

TEST_CASE("16-bit png round trips snapped rasters bit-exactly") {
  TempDir tmp("png16");
  Tensor img = testutil::blob_scene(9, 13, 70);
  for (int64_t i = 0; i < img.numel(); ++i)
    img[i] = std::lround(img[i] * 65535.0) / 65535.0;
  std::string path = tmp.sub("a.png");
  write_png_gray16(img, path);
  PngImage back = read_png(path);
  CHECK(back.bit_depth == 16);
  CHECK_FALSE(back.rgb.defined());
  REQUIRE(back.gray.shape() == img.shape());
  for (int64_t i = 0; i < img.numel(); ++i) CHECK(back.gray[i] == img[i]);
}

TEST_CASE("8-bit png round trips within one quantization step") {
  TempDir tmp("png8");
  Tensor img = testutil::blob_scene(7, 7, 71);
  std::string path = tmp.sub("a.png");
  write_png_gray8(img, path);
  Tensor back = read_png_gray(path);
  for (int64_t i = 0; i < img.numel(); ++i)
    CHECK(std::abs(back[i] - img[i]) <= 0.5 / 255.0 + 1e-12);
}

TEST_CASE("rgb png reports both planes and the luma reduction") {
  TempDir tmp("pngrgb");
  Tensor rgb({4, 5, 3});
  std::mt19937_64 rng(72);
  rgb = Tensor::uniform({4, 5, 3}, rng);
  std::string path = tmp.sub("c.png");
  write_png_rgb8(rgb, path);
  PngImage back = read_png(path);
  REQUIRE(back.rgb.defined());
  CHECK(back.rgb.shape() == Shape{4, 5, 3});
  for (int64_t i = 0; i < rgb.numel(); ++i)
    CHECK(std::abs(back.rgb[i] - rgb[i]) <= 0.5 / 255.0 + 1e-12);
  Tensor luma = rgb_to_luma(back.rgb);
  CHECK(max_abs_diff(back.gray, luma) < 1e-9);
}

TEST_CASE("luma uses the 601 weights") {
  Tensor rgb = Tensor::from({1, 0, 0, 0, 1, 0, 0, 0, 1}, {1, 3, 3});
  Tensor y = rgb_to_luma(rgb);
  CHECK(y.at(0, 0) == doctest::Approx(0.299).epsilon(1e-9));
  CHECK(y.at(0, 1) == doctest::Approx(0.587).epsilon(1e-9));
  CHECK(y.at(0, 2) == doctest::Approx(0.114).epsilon(1e-9));
}

TEST_CASE("png reader rejects missing or corrupt files") {
  TempDir tmp("pngbad");
  CHECK_THROWS(read_png(tmp.sub("missing.png")));
  std::string junk = tmp.sub("junk.png");
  {
    std::ofstream out(junk, std::ios::binary);
    out << "PNG? not really";
  }
  CHECK_THROWS(read_png(junk));
}

TEST_CASE("raw32 rasters round trip at f32 precision") {
  TempDir tmp("raw32");
  std::mt19937_64 rng(73);
  Tensor img = Tensor::uniform({6, 11}, rng);
  std::string path = tmp.sub("r.raw32");
  save_gray_raw32(img, path);
  Tensor back = load_gray_raw32(path);
  REQUIRE(back.shape() == img.shape());
  for (int64_t i = 0; i < img.numel(); ++i)
    CHECK(back[i] == static_cast<double>(static_cast<float>(img[i])));
  CHECK_THROWS(load_gray_raw32(tmp.sub("missing.raw32")));
}

TEST_CASE("write_file_atomic leaves no temp droppings and read_file returns bytes") {
  TempDir tmp("atomic");
  std::string path = tmp.sub("x.bin");
  std::string payload("ab\0cd\xff", 6);
  write_file_atomic(path, payload);
  CHECK(read_file(path) == payload);
  size_t count = 0;
  for ([[maybe_unused]] auto& e : std::filesystem::directory_iterator(tmp.path())) ++count;
  CHECK(count == 1);
  CHECK_THROWS(read_file(tmp.sub("missing.bin")));
}

TEST_CASE("make_image clamps into the unit range") {
  Tensor t = Tensor::from({-0.5, 0.25, 1.5}, {1, 3});
  GrayImage g = make_image(t, Provenance::fused);
  CHECK(g.pixels.at(0, 0) == 0.0);
  CHECK(g.pixels.at(0, 1) == 0.25);
  CHECK(g.pixels.at(0, 2) == 1.0);
  CHECK(g.tag == Provenance::fused);
  CHECK(provenance_str(Provenance::pseudo_ir) == "pseudo-ir");
}

}  // TEST_SUITE("io")
