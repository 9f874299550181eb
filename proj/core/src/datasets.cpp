#include "cgrp/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "cgrp/ioutil.hpp"
#include "cgrp/png_io.hpp"

namespace cgrp {
namespace {

Tensor snap16(const Tensor& img) {
  Tensor out(img.shape());
  for (int64_t i = 0; i < img.numel(); ++i)
    out[i] = std::lround(img[i] * 65535.0) / 65535.0;
  return out;
}

void snap_f32(Tensor& t) {
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<double>(static_cast<float>(t[i]));
}

}  // namespace

PairRecord synthesize_pair(const GrayImage& vis, const GrayImage& ir_aligned,
                           const AffineParams& affine, const ElasticSpec& elastic,
                           const std::string& corpus, const std::string& id) {
  check_arg(vis.pixels.same_shape(ir_aligned.pixels),
            "synthesize_pair: vis " + shape_str(vis.pixels.shape()) + " vs ir " +
                shape_str(ir_aligned.pixels.shape()));
  int64_t h = vis.height(), w = vis.width();

  PairRecord r;
  r.corpus = corpus;
  r.id = id;
  r.seed = elastic.seed;
  r.vis = GrayImage{snap16(vis.pixels), Provenance::real_vis};
  r.ir_aligned = GrayImage{snap16(ir_aligned.pixels), Provenance::real_ir};

  DeformationField af = affine_to_field(affine, h, w);
  DeformationField ef = elastic_field(elastic.sigma, elastic.alpha, elastic.seed, h, w);
  r.gt_field = compose(ef, af);
  snap_f32(r.gt_field.dx);
  snap_f32(r.gt_field.dy);

  r.ir_distorted = GrayImage{warp(r.ir_aligned.pixels, r.gt_field), Provenance::real_ir};
  return r;
}

PatchBatch sample_batch(const std::vector<PairRecord>& records, int64_t patch, int64_t count,
                        uint64_t seed) {
  check_arg(!records.empty(), "sample_batch: no records");
  check_arg(patch >= 1 && count >= 1, "sample_batch: bad patch/count");
  for (const PairRecord& r : records)
    check_arg(r.height() >= patch && r.width() >= patch,
              "sample_batch: record " + r.id + " is " + std::to_string(r.height()) + "x" +
                  std::to_string(r.width()) + ", smaller than patch " + std::to_string(patch));

  std::mt19937_64 rng(seed);
  PatchBatch b;
  b.vis = Tensor({count, 1, patch, patch});
  b.ir_distorted = Tensor({count, 1, patch, patch});
  b.ir_aligned = Tensor({count, 1, patch, patch});
  b.gt_field = Tensor({count, 2, patch, patch});

  for (int64_t e = 0; e < count; ++e) {
    int64_t ri = static_cast<int64_t>(rng() % records.size());
    const PairRecord& r = records[static_cast<size_t>(ri)];
    int64_t oy = static_cast<int64_t>(rng() % static_cast<uint64_t>(r.height() - patch + 1));
    int64_t ox = static_cast<int64_t>(rng() % static_cast<uint64_t>(r.width() - patch + 1));
    b.record_index.push_back(ri);
    b.offsets.emplace_back(oy, ox);

    auto crop_into = [&](const Tensor& src, Tensor& dst, int64_t plane) {
      for (int64_t y = 0; y < patch; ++y)
        std::memcpy(dst.data() + ((e * dst.dim(1) + plane) * patch + y) * patch,
                    src.data() + (oy + y) * r.width() + ox,
                    sizeof(double) * static_cast<size_t>(patch));
    };
    crop_into(r.vis.pixels, b.vis, 0);
    crop_into(r.ir_distorted.pixels, b.ir_distorted, 0);
    crop_into(r.ir_aligned.pixels, b.ir_aligned, 0);
    crop_into(r.gt_field.dx, b.gt_field, 0);
    crop_into(r.gt_field.dy, b.gt_field, 1);
  }
  return b;
}

SplitManifest split_corpus(std::vector<std::string> ids, double test_fraction, uint64_t seed,
                           bool overlap_train) {
  check_arg(!ids.empty(), "split_corpus: empty corpus");
  check_arg(test_fraction > 0.0 && test_fraction < 1.0,
            "split_corpus: test_fraction must be in (0,1)");
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  auto n_test = static_cast<size_t>(
      std::llround(test_fraction * static_cast<double>(ids.size())));
  n_test = std::clamp<size_t>(n_test, 1, ids.size() - 1);

  SplitManifest m;
  m.test.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_test));
  if (overlap_train)
    m.train = ids;
  else
    m.train.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_test), ids.end());
  std::sort(m.train.begin(), m.train.end());
  std::sort(m.test.begin(), m.test.end());
  return m;
}

void save_manifest(const SplitManifest& m, const std::string& path) {
  std::ostringstream out;
  if (!m.corpus.empty()) out << "corpus: " << m.corpus << "\n";
  out << "train:\n";
  for (const auto& id : m.train) out << id << "\n";
  out << "test:\n";
  for (const auto& id : m.test) out << id << "\n";
  write_file_atomic(path, out.str());
}

SplitManifest load_manifest(const std::string& path) {
  std::istringstream in(read_file(path));
  SplitManifest m;
  std::vector<std::string>* section = nullptr;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind("corpus: ", 0) == 0)
      m.corpus = line.substr(8);
    else if (line == "train:")
      section = &m.train;
    else if (line == "test:")
      section = &m.test;
    else {
      check_arg(section != nullptr, "manifest " + path + ": id before a section header");
      section->push_back(line);
    }
  }
  return m;
}

void save_gray_raw32(const Tensor& img, const std::string& path) {
  check_arg(img.rank() == 2, "save_gray_raw32 expects [H,W]");
  uint32_t h = static_cast<uint32_t>(img.dim(0)), w = static_cast<uint32_t>(img.dim(1));
  std::string bytes;
  bytes.reserve(12 + static_cast<size_t>(img.numel()) * 4);
  bytes.append("GR32", 4);
  bytes.append(reinterpret_cast<const char*>(&h), 4);
  bytes.append(reinterpret_cast<const char*>(&w), 4);
  for (int64_t i = 0; i < img.numel(); ++i) {
    float v = static_cast<float>(img[i]);
    bytes.append(reinterpret_cast<const char*>(&v), 4);
  }
  write_file_atomic(path, bytes);
}

Tensor load_gray_raw32(const std::string& path) {
  std::string bytes = read_file(path);
  check_arg(bytes.size() >= 12 && std::memcmp(bytes.data(), "GR32", 4) == 0,
            "load_gray_raw32: bad header in " + path);
  uint32_t h = 0, w = 0;
  std::memcpy(&h, bytes.data() + 4, 4);
  std::memcpy(&w, bytes.data() + 8, 4);
  check_arg(bytes.size() == 12 + static_cast<size_t>(h) * w * 4,
            "load_gray_raw32: truncated " + path);
  Tensor out({static_cast<int64_t>(h), static_cast<int64_t>(w)});
  for (int64_t i = 0; i < out.numel(); ++i) {
    float v;
    std::memcpy(&v, bytes.data() + 12 + static_cast<size_t>(i) * 4, 4);
    out[i] = static_cast<double>(v);
  }
  return out;
}

void save_pair(const PairRecord& r, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::string base = dir + "/" + r.id;
  write_png_gray16(r.vis.pixels, base + "_vis.png");
  write_png_gray16(r.ir_aligned.pixels, base + "_ir.png");
  write_png_gray16(r.ir_distorted.pixels, base + "_ir_distorted.png");
  save_gray_raw32(r.ir_distorted.pixels, base + "_ir_distorted.raw32");
  save_field(r.gt_field, base + "_field.dfld");
  std::ostringstream meta;
  meta << "corpus: " << r.corpus << "\nseed: " << r.seed << "\n";
  write_file_atomic(base + "_meta.txt", meta.str());
}

PairRecord load_pair(const std::string& dir, const std::string& id) {
  std::string base = dir + "/" + id;
  PairRecord r;
  r.id = id;
  r.vis = GrayImage{read_png_gray(base + "_vis.png"), Provenance::real_vis};
  r.ir_aligned = GrayImage{read_png_gray(base + "_ir.png"), Provenance::real_ir};
  r.ir_distorted = GrayImage{load_gray_raw32(base + "_ir_distorted.raw32"), Provenance::real_ir};
  r.gt_field = load_field(base + "_field.dfld");
  std::istringstream meta(read_file(base + "_meta.txt"));
  std::string line;
  while (std::getline(meta, line)) {
    if (line.rfind("corpus: ", 0) == 0) r.corpus = line.substr(8);
    if (line.rfind("seed: ", 0) == 0) r.seed = std::stoull(line.substr(6));
  }
  check_arg(r.vis.pixels.same_shape(r.ir_aligned.pixels) &&
                r.vis.pixels.same_shape(r.ir_distorted.pixels) &&
                r.vis.pixels.same_shape(r.gt_field.dx),
            "load_pair: inconsistent raster sizes for id " + id);
  return r;
}

std::vector<std::string> list_pair_ids(const std::string& dir) {
  namespace fs = std::filesystem;
  std::vector<std::string> ids;
  check_arg(fs::is_directory(dir), "list_pair_ids: " + dir + " is not a directory");
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::string name = entry.path().filename().string();
    const std::string suffix = "_field.dfld";
    if (name.size() > suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
      ids.push_back(name.substr(0, name.size() - suffix.size()));
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace cgrp
