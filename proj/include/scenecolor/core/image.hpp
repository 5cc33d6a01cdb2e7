#pragma once

#include <png.h>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "scenecolor/core/error.hpp"

namespace scenecolor {

/// 8-bit RGB raster, row-major.
struct RgbImage {
  std::size_t width = 0, height = 0;
  std::vector<std::uint8_t> data;  // 3 bytes per pixel

  RgbImage() = default;
  RgbImage(std::size_t w, std::size_t h) : width(w), height(h), data(w * h * 3, 0) {}

  std::uint8_t* at(std::size_t x, std::size_t y) { return &data[(y * width + x) * 3]; }
  const std::uint8_t* at(std::size_t x, std::size_t y) const { return &data[(y * width + x) * 3]; }
};

/// Integer label raster; 0 is background.
struct LabelImage {
  std::size_t width = 0, height = 0;
  std::vector<std::uint16_t> data;

  LabelImage() = default;
  LabelImage(std::size_t w, std::size_t h) : width(w), height(h), data(w * h, 0) {}

  std::uint16_t& at(std::size_t x, std::size_t y) { return data[y * width + x]; }
  std::uint16_t at(std::size_t x, std::size_t y) const { return data[y * width + x]; }
};

namespace detail {

struct PngFile {
  std::FILE* f = nullptr;
  ~PngFile() {
    if (f) std::fclose(f);
  }
};

struct DecodedPng {
  std::size_t width = 0, height = 0, channels = 0, depth = 0;
  std::vector<std::uint8_t> bytes;  // rows packed, 16-bit samples big-endian
};

inline DecodedPng decode_png(const std::filesystem::path& path) {
  PngFile file{std::fopen(path.string().c_str(), "rb")};
  if (!file.f) fail(ErrorCode::Io, "cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorCode::Io, "libpng initialization failed");
  }
  DecodedPng out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorCode::ParseError, "malformed PNG " + path.string());
  }
  png_init_io(png, file.f);
  png_read_info(png, info);
  const auto color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_read_update_info(png, info);
  out.width = png_get_image_width(png, info);
  out.height = png_get_image_height(png, info);
  out.channels = png_get_channels(png, info);
  out.depth = png_get_bit_depth(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  out.bytes.resize(stride * out.height);
  std::vector<png_bytep> rows(out.height);
  for (std::size_t y = 0; y < out.height; ++y) rows[y] = out.bytes.data() + y * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

inline void encode_png(const std::filesystem::path& path, std::size_t width, std::size_t height, int color_type,
                       int depth, const std::uint8_t* bytes, std::size_t stride) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  PngFile file{std::fopen(path.string().c_str(), "wb")};
  if (!file.f) fail(ErrorCode::Io, "cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorCode::Io, "libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorCode::Io, "PNG encoding failed for " + path.string());
  }
  png_init_io(png, file.f);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), depth, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t y = 0; y < height; ++y) png_write_row(png, const_cast<png_bytep>(bytes + y * stride));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace detail

/// Gray and alpha inputs are converted; 16-bit samples keep their high byte.
inline RgbImage read_rgb_png(const std::filesystem::path& path) {
  const auto d = detail::decode_png(path);
  const std::size_t bps = d.depth == 16 ? 2 : 1;
  RgbImage img(d.width, d.height);
  for (std::size_t y = 0; y < d.height; ++y)
    for (std::size_t x = 0; x < d.width; ++x) {
      const std::uint8_t* p = &d.bytes[(y * d.width + x) * d.channels * bps];
      for (std::size_t c = 0; c < 3; ++c) {
        const std::size_t src = d.channels >= 3 ? c : 0;
        img.at(x, y)[c] = p[src * bps];
      }
    }
  return img;
}

/// Single-channel 8- or 16-bit label maps.
inline LabelImage read_label_png(const std::filesystem::path& path) {
  const auto d = detail::decode_png(path);
  if (d.channels != 1) fail(ErrorCode::ParseError, "label mask must be single-channel: " + path.string());
  LabelImage img(d.width, d.height);
  for (std::size_t i = 0; i < d.width * d.height; ++i)
    img.data[i] = d.depth == 16 ? static_cast<std::uint16_t>((d.bytes[2 * i] << 8) | d.bytes[2 * i + 1]) : d.bytes[i];
  return img;
}

inline void write_rgb_png(const std::filesystem::path& path, const RgbImage& img) {
  detail::encode_png(path, img.width, img.height, PNG_COLOR_TYPE_RGB, 8, img.data.data(), img.width * 3);
}

/// Written 8-bit when every label fits, else 16-bit.
inline void write_label_png(const std::filesystem::path& path, const LabelImage& img) {
  bool small = true;
  for (auto v : img.data) small &= v < 256;
  if (small) {
    std::vector<std::uint8_t> bytes(img.data.begin(), img.data.end());
    detail::encode_png(path, img.width, img.height, PNG_COLOR_TYPE_GRAY, 8, bytes.data(), img.width);
  } else {
    std::vector<std::uint8_t> bytes(img.data.size() * 2);
    for (std::size_t i = 0; i < img.data.size(); ++i) {
      bytes[2 * i] = static_cast<std::uint8_t>(img.data[i] >> 8);
      bytes[2 * i + 1] = static_cast<std::uint8_t>(img.data[i] & 255);
    }
    detail::encode_png(path, img.width, img.height, PNG_COLOR_TYPE_GRAY, 16, bytes.data(), img.width * 2);
  }
}

}  // namespace scenecolor
