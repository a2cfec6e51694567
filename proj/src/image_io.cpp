#include "toothseg/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace toothseg {

namespace fs = std::filesystem;

std::vector<std::uint8_t> read_file_bytes(const fs::path& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) fail(ErrorCode::FileNotFound, path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const fs::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) fail(ErrorCode::IoError, "failed writing " + path.string());
}

namespace {

// ---------------------------------------------------------------------------
// PNG via the low-level libpng API so that 8-bit data round-trips bit-exactly
// (the simplified API applies gamma handling on some conversions).

struct RawPng {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<std::uint8_t> data;  // rows packed, 16-bit samples big-endian
};

struct PngIo {
  std::span<const std::uint8_t> in;
  std::size_t pos = 0;
  std::vector<std::uint8_t>* out = nullptr;
  char message[256] = {};
};

void png_read_bytes(png_structp png, png_bytep dst, png_size_t n) {
  auto* io = static_cast<PngIo*>(png_get_io_ptr(png));
  if (io->pos + n > io->in.size()) png_error(png, "truncated PNG data");
  std::memcpy(dst, io->in.data() + io->pos, n);
  io->pos += n;
}

void png_write_bytes(png_structp png, png_bytep src, png_size_t n) {
  auto* io = static_cast<PngIo*>(png_get_io_ptr(png));
  io->out->insert(io->out->end(), src, src + n);
}

void png_flush_noop(png_structp) {}

void png_on_error(png_structp png, png_const_charp msg) {
  auto* io = static_cast<PngIo*>(png_get_error_ptr(png));
  std::snprintf(io->message, sizeof(io->message), "%s", msg);
  std::longjmp(png_jmpbuf(png), 1);
}

void png_on_warning(png_structp, png_const_charp) {}

bool png_signature(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0;
}

// No automatic objects with destructors may be created between setjmp and a
// possible longjmp, so everything lives in `out`, `io` and `rows` up front.
bool decode_png_raw(std::span<const std::uint8_t> bytes, RawPng& out, PngIo& io,
                    std::vector<png_bytep>& rows) {
  io.in = bytes;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &io, png_on_error, png_on_warning);
  if (png == nullptr) return false;
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_set_read_fn(png, &io, png_read_bytes);
  png_read_info(png, info);

  const int color_type = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  png_set_interlace_handling(png);
  png_read_update_info(png, info);

  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.channels = png_get_channels(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  out.data.resize(stride * static_cast<std::size_t>(out.height));
  rows.resize(static_cast<std::size_t>(out.height));
  for (int y = 0; y < out.height; ++y) rows[static_cast<std::size_t>(y)] = out.data.data() + stride * static_cast<std::size_t>(y);
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

RawPng decode_png(std::span<const std::uint8_t> bytes) {
  RawPng out;
  PngIo io;
  std::vector<png_bytep> rows;
  if (!decode_png_raw(bytes, out, io, rows)) {
    fail(ErrorCode::CorruptFile, std::string("PNG decode failed: ") + io.message);
  }
  return out;
}

bool encode_png_raw(int width, int height, int color_type, int bit_depth,
                    std::span<const std::uint8_t> packed, PngIo& io, std::vector<png_bytep>& rows) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &io, png_on_error, png_on_warning);
  if (png == nullptr) return false;
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_set_write_fn(png, &io, png_write_bytes, png_flush_noop);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth,
               color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = packed.size() / static_cast<std::size_t>(height);
  rows.resize(static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) {
    rows[static_cast<std::size_t>(y)] = const_cast<png_bytep>(packed.data() + stride * static_cast<std::size_t>(y));
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

std::vector<std::uint8_t> encode_png_bytes(int width, int height, int color_type, int bit_depth,
                                           std::span<const std::uint8_t> packed) {
  if (width < 1 || height < 1) fail(ErrorCode::InvalidArgument, "cannot encode an empty raster");
  std::vector<std::uint8_t> buffer;
  PngIo io;
  io.out = &buffer;
  std::vector<png_bytep> rows;
  if (!encode_png_raw(width, height, color_type, bit_depth, packed, io, rows)) {
    fail(ErrorCode::IoError, std::string("PNG encode failed: ") + io.message);
  }
  return buffer;
}

void require_parent_dir(const fs::path& path) {
  const fs::path parent = path.parent_path();
  std::error_code ec;
  if (!parent.empty() && !fs::is_directory(parent, ec)) {
    fail(ErrorCode::IoError, "directory does not exist: " + parent.string());
  }
}

// ---------------------------------------------------------------------------
// Netpbm P5/P6.

struct Netpbm {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::span<const std::uint8_t> payload;
};

Netpbm parse_netpbm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 2;
  auto skip_space_and_comments = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&]() -> long {
    skip_space_and_comments();
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) fail(ErrorCode::CorruptFile, "malformed netpbm header");
    long v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos] - '0');
      if (v > (1L << 24)) fail(ErrorCode::CorruptFile, "netpbm dimension too large");
      ++pos;
    }
    return v;
  };
  Netpbm out;
  out.channels = bytes[1] == '6' ? 3 : 1;
  out.width = static_cast<int>(read_int());
  out.height = static_cast<int>(read_int());
  const long maxval = read_int();
  if (out.width < 1 || out.height < 1) fail(ErrorCode::CorruptFile, "netpbm image has zero size");
  if (maxval != 255) fail(ErrorCode::UnsupportedFormat, "only maxval 255 netpbm files are supported");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) fail(ErrorCode::CorruptFile, "malformed netpbm header");
  ++pos;
  const std::size_t need = static_cast<std::size_t>(out.width) * out.height * out.channels;
  if (bytes.size() - pos < need) fail(ErrorCode::CorruptFile, "truncated netpbm payload");
  out.payload = bytes.subspan(pos, need);
  return out;
}

bool is_netpbm(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6');
}

// ---------------------------------------------------------------------------
// Little-endian helpers for FMAP.

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[pos + i]) << (8 * i);
  return v;
}

constexpr std::array<std::uint8_t, 4> kFmapMagic = {'F', 'M', 'A', 'P'};
constexpr std::uint8_t kFmapVersion = 0x01;
constexpr std::size_t kFmapHeader = 4 + 1 + 12;

}  // namespace

ImageRGB decode_image(std::span<const std::uint8_t> bytes) {
  if (png_signature(bytes)) {
    const RawPng raw = decode_png(bytes);
    if (raw.bit_depth != 8) fail(ErrorCode::UnsupportedFormat, "only 8-bit PNG images are supported");
    if (raw.width < 1 || raw.height < 1) fail(ErrorCode::CorruptFile, "PNG image has zero size");
    ImageRGB img(raw.width, raw.height);
    const std::size_t n = img.size();
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint8_t* p = raw.data.data() + i * static_cast<std::size_t>(raw.channels);
      if (raw.channels <= 2) {
        img[i] = {p[0], p[0], p[0]};
      } else {
        img[i] = {p[0], p[1], p[2]};
      }
    }
    return img;
  }
  if (is_netpbm(bytes)) {
    const Netpbm pnm = parse_netpbm(bytes);
    ImageRGB img(pnm.width, pnm.height);
    for (std::size_t i = 0; i < img.size(); ++i) {
      if (pnm.channels == 3) {
        img[i] = {pnm.payload[3 * i], pnm.payload[3 * i + 1], pnm.payload[3 * i + 2]};
      } else {
        img[i] = {pnm.payload[i], pnm.payload[i], pnm.payload[i]};
      }
    }
    return img;
  }
  fail(ErrorCode::UnsupportedFormat, "not a PNG, PPM (P6) or PGM (P5) file");
}

ImageRGB load_image(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_image(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

std::vector<std::uint8_t> encode_png(const ImageRGB& img) {
  std::vector<std::uint8_t> packed;
  packed.reserve(img.size() * 3);
  for (const Rgb& px : img.pixels()) {
    packed.push_back(px.r);
    packed.push_back(px.g);
    packed.push_back(px.b);
  }
  return encode_png_bytes(img.width(), img.height(), PNG_COLOR_TYPE_RGB, 8, packed);
}

std::vector<std::uint8_t> encode_png(const BinaryMask& mask) {
  std::vector<std::uint8_t> packed(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) packed[i] = mask[i] ? 255 : 0;
  return encode_png_bytes(mask.width(), mask.height(), PNG_COLOR_TYPE_GRAY, 8, packed);
}

void save_image(const ImageRGB& img, const fs::path& path) {
  require_parent_dir(path);
  write_file_bytes(path, encode_png(img));
}

void save_ppm(const ImageRGB& img, const fs::path& path) {
  require_parent_dir(path);
  const std::string header = "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  for (const Rgb& px : img.pixels()) {
    bytes.push_back(px.r);
    bytes.push_back(px.g);
    bytes.push_back(px.b);
  }
  write_file_bytes(path, bytes);
}

void save_gray(const GrayImage& img, const fs::path& path) {
  require_parent_dir(path);
  write_file_bytes(path, encode_png_bytes(img.width(), img.height(), PNG_COLOR_TYPE_GRAY, 8, img.values()));
}

void save_mask(const BinaryMask& mask, const fs::path& path) {
  require_parent_dir(path);
  write_file_bytes(path, encode_png(mask));
}

BinaryMask load_mask(const fs::path& path) {
  const ImageRGB img = load_image(path);
  BinaryMask mask(img.width(), img.height());
  for (std::size_t i = 0; i < img.size(); ++i) mask[i] = rgb_to_gray(img[i]) >= 128 ? 1 : 0;
  return mask;
}

void save_scalar_png(const ScalarMap& map, const fs::path& path) {
  require_parent_dir(path);
  const ScalarMap norm = minmax_normalize(map);
  std::vector<std::uint8_t> packed(norm.size());
  for (std::size_t i = 0; i < norm.size(); ++i) {
    packed[i] = static_cast<std::uint8_t>(std::clamp<long>(std::lround(norm[i] * 255.0F), 0, 255));
  }
  write_file_bytes(path, encode_png_bytes(map.width(), map.height(), PNG_COLOR_TYPE_GRAY, 8, packed));
}

void save_label_png(const LabelMap& labels, const fs::path& path) {
  require_parent_dir(path);
  std::vector<std::uint8_t> packed(labels.size() * 2);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] > 0xFFFF) fail(ErrorCode::InvalidArgument, "label value exceeds 16-bit PNG range");
    packed[2 * i] = static_cast<std::uint8_t>(labels[i] >> 8);
    packed[2 * i + 1] = static_cast<std::uint8_t>(labels[i] & 0xFF);
  }
  write_file_bytes(path, encode_png_bytes(labels.width(), labels.height(), PNG_COLOR_TYPE_GRAY, 16, packed));
}

LabelMap load_label_png(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  if (!png_signature(bytes)) fail(ErrorCode::UnsupportedFormat, path.string() + ": label maps must be PNG");
  const RawPng raw = decode_png(bytes);
  if (raw.channels != 1) fail(ErrorCode::UnsupportedFormat, path.string() + ": label maps must be gray");
  LabelMap labels(raw.width, raw.height);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    labels[i] = raw.bit_depth == 16 ? (static_cast<std::uint32_t>(raw.data[2 * i]) << 8) | raw.data[2 * i + 1]
                                    : raw.data[i];
  }
  return labels;
}

std::vector<std::uint8_t> encode_fmap(const FeatureStack& stack) {
  std::vector<std::uint8_t> out(kFmapMagic.begin(), kFmapMagic.end());
  out.reserve(kFmapHeader + 4 * stack.values().size());
  out.push_back(kFmapVersion);
  put_u32(out, static_cast<std::uint32_t>(stack.channels()));
  put_u32(out, static_cast<std::uint32_t>(stack.height()));
  put_u32(out, static_cast<std::uint32_t>(stack.width()));
  for (float v : stack.values()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

FeatureStack decode_fmap(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || !std::equal(kFmapMagic.begin(), kFmapMagic.end(), bytes.begin())) {
    fail(ErrorCode::UnsupportedFormat, "missing FMAP magic");
  }
  if (bytes.size() < kFmapHeader) fail(ErrorCode::CorruptFile, "truncated FMAP header");
  if (bytes[4] != kFmapVersion) fail(ErrorCode::UnsupportedFormat, "unknown FMAP version");
  const std::uint64_t c = get_u32(bytes, 5);
  const std::uint64_t h = get_u32(bytes, 9);
  const std::uint64_t w = get_u32(bytes, 13);
  if (c < 1 || h < 1 || w < 1 || c * h * w > (1ULL << 30)) fail(ErrorCode::CorruptFile, "bad FMAP dimensions");
  const std::uint64_t count = c * h * w;
  if (bytes.size() != kFmapHeader + 4 * count) fail(ErrorCode::CorruptFile, "FMAP payload size mismatch");
  std::vector<float> data(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    data[i] = std::bit_cast<float>(get_u32(bytes, kFmapHeader + 4 * i));
    if (!std::isfinite(data[i])) fail(ErrorCode::CorruptFile, "FMAP contains a non-finite value");
  }
  return FeatureStack(static_cast<int>(c), static_cast<int>(w), static_cast<int>(h), std::move(data));
}

void write_fmap(const FeatureStack& stack, const fs::path& path) {
  require_parent_dir(path);
  write_file_bytes(path, encode_fmap(stack));
}

void write_fmap(const ScalarMap& map, const fs::path& path) {
  write_fmap(FeatureStack(1, map.width(), map.height(), map.values()), path);
}

FeatureStack read_fmap(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_fmap(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

ScalarMap read_scalar_fmap(const fs::path& path) {
  const FeatureStack stack = read_fmap(path);
  if (stack.channels() != 1) fail(ErrorCode::UnsupportedFormat, path.string() + ": expected a single-channel FMAP");
  return ScalarMap(stack.width(), stack.height(), stack.values());
}

}  // namespace toothseg
