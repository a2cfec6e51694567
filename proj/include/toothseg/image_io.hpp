#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "toothseg/imaging.hpp"

namespace toothseg {

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// Accepts 8-bit PNG (gray, gray+alpha, RGB, RGBA, palette) and binary
/// PPM (P6) / PGM (P5) with maxval 255. Alpha is dropped, gray replicated.
ImageRGB load_image(const std::filesystem::path& path);
ImageRGB decode_image(std::span<const std::uint8_t> bytes);

void save_image(const ImageRGB& img, const std::filesystem::path& path);
void save_ppm(const ImageRGB& img, const std::filesystem::path& path);
void save_gray(const GrayImage& img, const std::filesystem::path& path);

/// Masks are 8-bit gray PNGs, foreground 255, background 0. On load any
/// value >= 128 counts as foreground.
void save_mask(const BinaryMask& mask, const std::filesystem::path& path);
BinaryMask load_mask(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_png(const ImageRGB& img);
std::vector<std::uint8_t> encode_png(const BinaryMask& mask);

/// 8-bit preview of a scalar map (min-max stretched to 0..255).
void save_scalar_png(const ScalarMap& map, const std::filesystem::path& path);

/// Labels are written as 16-bit gray PNG holding the raw label values.
void save_label_png(const LabelMap& labels, const std::filesystem::path& path);
LabelMap load_label_png(const std::filesystem::path& path);

// FMAP tensor files: "FMAP", version byte 0x01, u32 LE C,H,W, then C*H*W
// little-endian f32 values, channel-major then row-major.
std::vector<std::uint8_t> encode_fmap(const FeatureStack& stack);
FeatureStack decode_fmap(std::span<const std::uint8_t> bytes);
void write_fmap(const FeatureStack& stack, const std::filesystem::path& path);
void write_fmap(const ScalarMap& map, const std::filesystem::path& path);
FeatureStack read_fmap(const std::filesystem::path& path);
/// Reads a single-channel FMAP as a ScalarMap.
ScalarMap read_scalar_fmap(const std::filesystem::path& path);

}  // namespace toothseg
