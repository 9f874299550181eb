#include "cgrp/png_io.hpp"

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstring>
#include <vector>

#include "cgrp/ioutil.hpp"

namespace cgrp {
namespace {

struct ByteCursor {
  const std::string* bytes;
  size_t pos = 0;
};

void read_cb(png_structp png, png_bytep out, png_size_t n) {
  auto* c = static_cast<ByteCursor*>(png_get_io_ptr(png));
  if (c->pos + n > c->bytes->size()) png_error(png, "truncated PNG");
  std::memcpy(out, c->bytes->data() + c->pos, n);
  c->pos += n;
}

void write_cb(png_structp png, png_bytep data, png_size_t n) {
  auto* s = static_cast<std::string*>(png_get_io_ptr(png));
  s->append(reinterpret_cast<const char*>(data), n);
}

void flush_cb(png_structp) {}

struct Decoded {
  std::vector<uint16_t> px;  // interleaved, host order
  int64_t h = 0, w = 0, channels = 0;
  int bit_depth = 8;
};

Decoded decode(const std::string& path) {
  std::string bytes = read_file(path);
  check_arg(bytes.size() > 8 && png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) == 0,
            path + " is not a PNG");

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  check_arg(png && info, "libpng init failed");
  Decoded d;
  std::vector<png_bytep> rows;
  std::vector<uint8_t> raw;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    check_arg(false, "failed to decode " + path);
  }
  ByteCursor cur{&bytes, 0};
  png_set_read_fn(png, &cur, read_cb);
  png_read_info(png, info);

  png_uint_32 w = 0, h = 0;
  int depth = 0, color = 0;
  png_get_IHDR(png, info, &w, &h, &depth, &color, nullptr, nullptr, nullptr);

  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  if (depth == 16) png_set_swap(png);  // host is little-endian
  png_read_update_info(png, info);

  d.h = static_cast<int64_t>(h);
  d.w = static_cast<int64_t>(w);
  d.channels = png_get_channels(png, info);
  d.bit_depth = png_get_bit_depth(png, info);
  check_arg(d.channels == 1 || d.channels == 3, "unsupported channel count in " + path);

  size_t stride = png_get_rowbytes(png, info);
  raw.resize(stride * h);
  rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = raw.data() + y * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  d.px.resize(static_cast<size_t>(d.h * d.w * d.channels));
  if (d.bit_depth == 16) {
    std::memcpy(d.px.data(), raw.data(), d.px.size() * 2);
  } else {
    for (size_t i = 0; i < d.px.size(); ++i) d.px[i] = raw[i];
  }
  return d;
}

}  // namespace

PngImage read_png(const std::string& path) {
  Decoded d = decode(path);
  double scale = 1.0 / ((1 << d.bit_depth) - 1);
  PngImage out;
  out.bit_depth = d.bit_depth;
  if (d.channels == 1) {
    out.gray = Tensor({d.h, d.w});
    for (int64_t i = 0; i < d.h * d.w; ++i) out.gray[i] = d.px[static_cast<size_t>(i)] * scale;
  } else {
    out.rgb = Tensor({d.h, d.w, 3});
    out.gray = Tensor({d.h, d.w});
    for (int64_t i = 0; i < d.h * d.w; ++i) {
      double r = d.px[static_cast<size_t>(3 * i)] * scale;
      double g = d.px[static_cast<size_t>(3 * i + 1)] * scale;
      double b = d.px[static_cast<size_t>(3 * i + 2)] * scale;
      out.rgb[3 * i] = r;
      out.rgb[3 * i + 1] = g;
      out.rgb[3 * i + 2] = b;
      out.gray[i] = 0.299 * r + 0.587 * g + 0.114 * b;
    }
  }
  return out;
}

Tensor read_png_gray(const std::string& path) { return read_png(path).gray; }

namespace {

std::string encode(const uint8_t* data, int64_t h, int64_t w, int channels, int depth) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  check_arg(png && info, "libpng init failed");
  std::string out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    check_arg(false, "PNG encode failed");
  }
  png_set_write_fn(png, &out, write_cb, flush_cb);
  int color = channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), depth, color,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (depth == 16) png_set_swap(png);
  size_t stride = static_cast<size_t>(w * channels * (depth / 8));
  for (int64_t y = 0; y < h; ++y)
    png_write_row(png, const_cast<png_bytep>(data + static_cast<size_t>(y) * stride));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

uint16_t quant(double v, int64_t levels) {
  long q = std::lround(v * static_cast<double>(levels));
  if (q < 0) q = 0;
  if (q > levels) q = levels;
  return static_cast<uint16_t>(q);
}

}  // namespace

void write_png_gray8(const Tensor& img, const std::string& path) {
  check_arg(img.rank() == 2, "write_png_gray8 expects [H,W]");
  std::vector<uint8_t> buf(static_cast<size_t>(img.numel()));
  for (int64_t i = 0; i < img.numel(); ++i) buf[static_cast<size_t>(i)] = static_cast<uint8_t>(quant(img[i], 255));
  write_file_atomic(path, encode(buf.data(), img.dim(0), img.dim(1), 1, 8));
}

void write_png_gray16(const Tensor& img, const std::string& path) {
  check_arg(img.rank() == 2, "write_png_gray16 expects [H,W]");
  std::vector<uint16_t> buf(static_cast<size_t>(img.numel()));
  for (int64_t i = 0; i < img.numel(); ++i) buf[static_cast<size_t>(i)] = quant(img[i], 65535);
  write_file_atomic(path, encode(reinterpret_cast<const uint8_t*>(buf.data()), img.dim(0), img.dim(1), 1, 16));
}

void write_png_rgb8(const Tensor& rgb, const std::string& path) {
  check_arg(rgb.rank() == 3 && rgb.dim(2) == 3, "write_png_rgb8 expects [H,W,3]");
  std::vector<uint8_t> buf(static_cast<size_t>(rgb.numel()));
  for (int64_t i = 0; i < rgb.numel(); ++i) buf[static_cast<size_t>(i)] = static_cast<uint8_t>(quant(rgb[i], 255));
  write_file_atomic(path, encode(buf.data(), rgb.dim(0), rgb.dim(1), 3, 8));
}

}  // namespace cgrp
