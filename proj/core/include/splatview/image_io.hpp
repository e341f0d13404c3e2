// Copyright Contributors to the splatview project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "splatview/image.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace splatview {

/// PFM: "PF" (3 channels) or "Pf" (1 channel), little-endian (negative scale), rows stored
/// bottom-up. Throws ParseError with file name and byte offset, UnsupportedFormat for big-endian.
FloatImage read_pfm(const std::filesystem::path &path);
FloatImage decode_pfm(const std::vector<std::uint8_t> &bytes, const std::string &name = "<memory>");
void write_pfm(const std::filesystem::path &path, const FloatImage &image);
std::vector<std::uint8_t> encode_pfm(const FloatImage &image);

/// Binary PPM (P6, maxval 255), read as k / 255.
FloatImage read_ppm(const std::filesystem::path &path);
FloatImage decode_ppm(const std::vector<std::uint8_t> &bytes, const std::string &name = "<memory>");
void write_ppm(const std::filesystem::path &path, const FloatImage &image);
std::vector<std::uint8_t> encode_ppm(const FloatImage &image);

/// Clamp to [0, 1] then round half up: floor(255 v + 0.5).
std::uint8_t to_byte(float v);

/// 8-bit RGB PNG of a 3-channel image.
std::vector<std::uint8_t> encode_png(const FloatImage &image);

/// Writes PNG or PPM depending on the extension (.png, .ppm), PFM for .pfm.
void write_image(const std::filesystem::path &path, const FloatImage &image);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path &path);

} // namespace splatview
