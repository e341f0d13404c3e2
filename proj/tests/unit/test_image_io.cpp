// Copyright Contributors to the splatview project
// SPDX-License-Identifier: Apache-2.0

#include "oracles.hpp"

#include "splatview/errors.hpp"
#include "splatview/image_io.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <random>

using namespace splatview;

namespace {

std::vector<std::uint8_t> bytes_of(const std::string &header, const std::vector<float> &values) {
    std::vector<std::uint8_t> out(header.begin(), header.end());
    const std::size_t off = out.size();
    out.resize(off + values.size() * sizeof(float));
    std::memcpy(out.data() + off, values.data(), values.size() * sizeof(float));
    return out;
}

FloatImage random_image(int w, int h, int c, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(-2.0f, 2.0f);
    FloatImage img(w, h, c);
    for (float &v : img.data()) {
        v = u(rng);
    }
    return img;
}

std::string message_of(const std::function<void()> &f) {
    try {
        f();
    } catch (const std::exception &e) {
        return e.what();
    }
    return {};
}

} // namespace

TEST(ImageIo, SinglePixelColorPfm) {
    const auto bytes = bytes_of("PF\n1 1\n-1.0\n", {0.25f, 0.5f, 0.75f});
    const FloatImage img = decode_pfm(bytes);
    EXPECT_EQ(img.width(), 1);
    EXPECT_EQ(img.channels(), 3);
    EXPECT_EQ(img.data(), (std::vector<float>{0.25f, 0.5f, 0.75f}));
}

TEST(ImageIo, PfmRowsAreBottomUp) {
    const auto bytes = bytes_of("Pf\n2 2\n-1\n", {1, 2, 3, 4});
    const FloatImage img = decode_pfm(bytes);
    EXPECT_EQ(img.at(0, 0), 3.0f);
    EXPECT_EQ(img.at(1, 1), 2.0f);
}

TEST(ImageIo, PfmRoundTripAgreesWithReferenceDecoder) {
    for (int c : {1, 3}) {
        const FloatImage img = random_image(7, 5, c, 3 + c);
        const auto bytes = encode_pfm(img);
        EXPECT_EQ(decode_pfm(bytes), img);
        const auto ref = oracle::reference_decode_pfm(bytes);
        EXPECT_EQ(ref.width, 7);
        EXPECT_EQ(ref.height, 5);
        EXPECT_EQ(ref.channels, c);
        EXPECT_EQ(ref.data, img.data());
    }
}

TEST(ImageIo, PfmHeaderComments) {
    const auto bytes = bytes_of("Pf\n# made by hand\n1 1\n# scale\n-1\n", {7.0f});
    EXPECT_EQ(decode_pfm(bytes).data()[0], 7.0f);
}

TEST(ImageIo, BigEndianPfmIsUnsupported) {
    const auto bytes = bytes_of("Pf\n1 1\n1.0\n", {1.0f});
    EXPECT_THROW(decode_pfm(bytes, "be.pfm"), UnsupportedFormat);
}

TEST(ImageIo, TruncatedPfmReportsOffset) {
    auto bytes = bytes_of("PF\n2 2\n-1\n", std::vector<float>(12, 0.5f));
    bytes.resize(bytes.size() - 5);
    const std::string msg = message_of([&] { decode_pfm(bytes, "cut.pfm"); });
    EXPECT_NE(msg.find("cut.pfm"), std::string::npos) << msg;
    EXPECT_NE(msg.find("byte"), std::string::npos) << msg;
    EXPECT_THROW(decode_pfm(bytes), ParseError);
}

TEST(ImageIo, BadMagicAndDimensions) {
    EXPECT_THROW(decode_pfm(bytes_of("PX\n1 1\n-1\n", {1.0f})), ParseError);
    EXPECT_THROW(decode_pfm(bytes_of("Pf\n0 1\n-1\n", {})), ParseError);
    EXPECT_THROW(decode_pfm(bytes_of("Pf\nx 1\n-1\n", {1.0f})), ParseError);
}

TEST(ImageIo, PpmValueScaling) {
    const std::string header = "P6\n1 1\n255\n";
    std::vector<std::uint8_t> bytes(header.begin(), header.end());
    bytes.insert(bytes.end(), {127, 0, 255});
    const FloatImage img = decode_ppm(bytes);
    EXPECT_FLOAT_EQ(img.data()[0], 127.0f / 255.0f);
    EXPECT_FLOAT_EQ(img.data()[2], 1.0f);
    const auto ref = oracle::reference_decode_ppm(bytes);
    EXPECT_EQ(ref.data, img.data());
}

TEST(ImageIo, PpmRejectsOtherMaxval) {
    const std::string header = "P6\n1 1\n65535\n";
    std::vector<std::uint8_t> bytes(header.begin(), header.end());
    bytes.insert(bytes.end(), 6, 0);
    EXPECT_THROW(decode_ppm(bytes), UnsupportedFormat);
}

TEST(ImageIo, ToByteRounding) {
    EXPECT_EQ(to_byte(-0.3f), 0);
    EXPECT_EQ(to_byte(1.7f), 255);
    EXPECT_EQ(to_byte(0.5f), 128);
    EXPECT_EQ(to_byte(127.0f / 255.0f), 127);
    EXPECT_EQ(to_byte(std::nextafter(0.5f / 255.0f, 0.0f)), 0);
}

TEST(ImageIo, PpmRoundTripIsStable) {
    FloatImage img = random_image(6, 4, 3, 9);
    for (float &v : img.data()) {
        v = std::clamp(v * 0.25f + 0.5f, 0.0f, 1.0f);
    }
    const FloatImage once = decode_ppm(encode_ppm(img));
    for (std::size_t i = 0; i < img.data().size(); ++i) {
        EXPECT_NEAR(once.data()[i], img.data()[i], 0.5 / 255.0 + 1e-7);
    }
    EXPECT_EQ(decode_ppm(encode_ppm(once)), once);
}

TEST(ImageIo, PngDecodesToSameBytes) {
    FloatImage img = random_image(9, 7, 3, 10);
    const auto png = encode_png(img);
    const auto dec = oracle::decode_png(png);
    ASSERT_EQ(dec.width, 9);
    ASSERT_EQ(dec.height, 7);
    for (std::size_t i = 0; i < img.data().size(); ++i) {
        EXPECT_EQ(static_cast<int>(std::lround(dec.data[i] * 255.0f)), to_byte(img.data()[i]));
    }
}

TEST(ImageIo, FilesAndMissingPath) {
    const auto dir = std::filesystem::temp_directory_path() / "splatview_image_io_test";
    std::filesystem::create_directories(dir);
    const FloatImage img = random_image(3, 2, 3, 11);
    write_pfm(dir / "a.pfm", img);
    EXPECT_EQ(read_pfm(dir / "a.pfm"), img);
    write_image(dir / "b.png", img);
    EXPECT_EQ(read_file_bytes(dir / "b.png"), encode_png(img));
    const std::string msg = message_of([&] { read_pfm(dir / "missing.pfm"); });
    EXPECT_NE(msg.find("missing.pfm"), std::string::npos);
    EXPECT_THROW(read_ppm(dir / "missing.ppm"), ParseError);
    std::filesystem::remove_all(dir);
}
