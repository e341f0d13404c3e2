// Copyright Contributors to the splatview project
// SPDX-License-Identifier: Apache-2.0

#include "splatview/image_io.hpp"

#include "splatview/errors.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>

namespace splatview {

static_assert(std::endian::native == std::endian::little, "PFM I/O assumes a little-endian host");

namespace {

/// Minimal cursor over a netpbm-style ASCII header.
class HeaderReader {
  public:
    HeaderReader(const std::vector<std::uint8_t> &bytes, std::string name) : b_(bytes), name_(std::move(name)) {}

    std::string token() {
        skipSpaceAndComments();
        const std::size_t start = pos_;
        while (pos_ < b_.size() && !std::isspace(b_[pos_])) {
            ++pos_;
        }
        if (start == pos_) {
            fail("unexpected end of header");
        }
        return std::string(b_.begin() + static_cast<std::ptrdiff_t>(start), b_.begin() + static_cast<std::ptrdiff_t>(pos_));
    }

    long integer() {
        const std::size_t at = pos_;
        const std::string t = token();
        char *end = nullptr;
        const long v = std::strtol(t.c_str(), &end, 10);
        if (*end != '\0' || v <= 0) {
            failAt(at, "expected a positive integer, got '" + t + "'");
        }
        return v;
    }

    double real() {
        const std::size_t at = pos_;
        const std::string t = token();
        char *end = nullptr;
        const double v = std::strtod(t.c_str(), &end);
        if (*end != '\0' || !std::isfinite(v) || v == 0.0) {
            failAt(at, "expected a non-zero scale, got '" + t + "'");
        }
        return v;
    }

    /// Exactly one whitespace byte separates the header from the payload.
    void endOfHeader() {
        if (pos_ >= b_.size() || !std::isspace(b_[pos_])) {
            fail("expected a single whitespace byte before the payload");
        }
        ++pos_;
    }

    std::size_t pos() const { return pos_; }

    [[noreturn]] void fail(const std::string &what) const { failAt(pos_, what); }
    [[noreturn]] void failAt(std::size_t at, const std::string &what) const {
        throw ParseError(name_ + ": byte " + std::to_string(at) + ": " + what);
    }

  private:
    void skipSpaceAndComments() {
        while (pos_ < b_.size()) {
            if (std::isspace(b_[pos_])) {
                ++pos_;
            } else if (b_[pos_] == '#') {
                while (pos_ < b_.size() && b_[pos_] != '\n') {
                    ++pos_;
                }
            } else {
                break;
            }
        }
    }

    const std::vector<std::uint8_t> &b_;
    std::string name_;
    std::size_t pos_ = 0;
};

void write_bytes(const std::filesystem::path &path, const std::vector<std::uint8_t> &bytes) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw ParseError(path.string() + ": cannot open for writing");
    }
    os.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!os) {
        throw ParseError(path.string() + ": write failed");
    }
}

} // namespace

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path &path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw ParseError(path.string() + ": cannot open file");
    }
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

FloatImage decode_pfm(const std::vector<std::uint8_t> &bytes, const std::string &name) {
    HeaderReader hr(bytes, name);
    const std::string magic = hr.token();
    int channels = 0;
    if (magic == "PF") {
        channels = 3;
    } else if (magic == "Pf") {
        channels = 1;
    } else {
        hr.failAt(0, "not a PFM file (magic '" + magic + "')");
    }
    const long w = hr.integer();
    const long h = hr.integer();
    const double scale = hr.real();
    if (scale > 0.0) {
        throw UnsupportedFormat(name + ": big-endian PFM (positive scale) is not supported");
    }
    hr.endOfHeader();
    const std::size_t expected = static_cast<std::size_t>(w) * h * channels * sizeof(float);
    const std::size_t available = bytes.size() - hr.pos();
    if (available < expected) {
        throw ParseError(name + ": byte " + std::to_string(hr.pos()) + ": truncated payload, expected " +
                         std::to_string(expected) + " bytes, got " + std::to_string(available));
    }
    FloatImage img(static_cast<int>(w), static_cast<int>(h), channels);
    const std::size_t rowFloats = static_cast<std::size_t>(w) * channels;
    for (long y = 0; y < h; ++y) {
        // first stored row is the bottom of the image
        const std::uint8_t *src = bytes.data() + hr.pos() + static_cast<std::size_t>(y) * rowFloats * sizeof(float);
        std::memcpy(img.data().data() + static_cast<std::size_t>(h - 1 - y) * rowFloats, src, rowFloats * sizeof(float));
    }
    return img;
}

std::vector<std::uint8_t> encode_pfm(const FloatImage &image) {
    if (image.channels() != 1 && image.channels() != 3) {
        throw InvalidInput("write_pfm: only 1 or 3 channels are supported");
    }
    const std::string header = std::string(image.channels() == 3 ? "PF" : "Pf") + "\n" +
                               std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n-1.0\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    const std::size_t rowFloats = static_cast<std::size_t>(image.width()) * image.channels();
    out.reserve(out.size() + image.data().size() * sizeof(float));
    for (int y = image.height() - 1; y >= 0; --y) {
        const auto *src = reinterpret_cast<const std::uint8_t *>(image.data().data() + static_cast<std::size_t>(y) * rowFloats);
        out.insert(out.end(), src, src + rowFloats * sizeof(float));
    }
    return out;
}

FloatImage read_pfm(const std::filesystem::path &path) { return decode_pfm(read_file_bytes(path), path.string()); }

void write_pfm(const std::filesystem::path &path, const FloatImage &image) { write_bytes(path, encode_pfm(image)); }

std::uint8_t to_byte(float v) {
    const float c = std::clamp(std::isnan(v) ? 0.0f : v, 0.0f, 1.0f);
    return static_cast<std::uint8_t>(std::floor(static_cast<double>(c) * 255.0 + 0.5));
}

FloatImage decode_ppm(const std::vector<std::uint8_t> &bytes, const std::string &name) {
    HeaderReader hr(bytes, name);
    const std::string magic = hr.token();
    if (magic != "P6") {
        hr.failAt(0, "only binary PPM (P6) is supported, got '" + magic + "'");
    }
    const long w = hr.integer();
    const long h = hr.integer();
    const std::size_t maxvalAt = hr.pos();
    const long maxval = hr.integer();
    if (maxval != 255) {
        throw UnsupportedFormat(name + ": byte " + std::to_string(maxvalAt) + ": maxval " + std::to_string(maxval) +
                                " is not supported (expected 255)");
    }
    hr.endOfHeader();
    const std::size_t expected = static_cast<std::size_t>(w) * h * 3;
    const std::size_t available = bytes.size() - hr.pos();
    if (available < expected) {
        throw ParseError(name + ": byte " + std::to_string(hr.pos()) + ": truncated payload, expected " +
                         std::to_string(expected) + " bytes, got " + std::to_string(available));
    }
    FloatImage img(static_cast<int>(w), static_cast<int>(h), 3);
    for (std::size_t i = 0; i < expected; ++i) {
        img.data()[i] = static_cast<float>(bytes[hr.pos() + i]) / 255.0f;
    }
    return img;
}

std::vector<std::uint8_t> encode_ppm(const FloatImage &image) {
    if (image.channels() != 3) {
        throw InvalidInput("write_ppm: image must have 3 channels");
    }
    const std::string header =
        "P6\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + image.data().size());
    for (const float v : image.data()) {
        out.push_back(to_byte(v));
    }
    return out;
}

FloatImage read_ppm(const std::filesystem::path &path) { return decode_ppm(read_file_bytes(path), path.string()); }

void write_ppm(const std::filesystem::path &path, const FloatImage &image) { write_bytes(path, encode_ppm(image)); }

std::vector<std::uint8_t> encode_png(const FloatImage &image) {
    if (image.channels() != 3) {
        throw InvalidInput("encode_png: image must have 3 channels");
    }
    std::vector<std::uint8_t> rgb;
    rgb.reserve(image.data().size());
    for (const float v : image.data()) {
        rgb.push_back(to_byte(v));
    }
    png_image png;
    std::memset(&png, 0, sizeof(png));
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(image.width());
    png.height = static_cast<png_uint_32>(image.height());
    png.format = PNG_FORMAT_RGB;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&png, nullptr, &size, 0, rgb.data(), 0, nullptr)) {
        throw std::runtime_error(std::string("encode_png: ") + png.message);
    }
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&png, out.data(), &size, 0, rgb.data(), 0, nullptr)) {
        throw std::runtime_error(std::string("encode_png: ") + png.message);
    }
    out.resize(size);
    return out;
}

void write_image(const std::filesystem::path &path, const FloatImage &image) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png") {
        write_bytes(path, encode_png(image));
    } else if (ext == ".pfm") {
        write_pfm(path, image);
    } else {
        write_ppm(path, image);
    }
}

} // namespace splatview
