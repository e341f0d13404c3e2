// Copyright Contributors to the splatview project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace splatview {

/// Row-major, channel-interleaved float map. Row 0 is the top of the image.
class FloatImage {
  public:
    FloatImage() = default;
    FloatImage(int width, int height, int channels, float fill = 0.0f)
        : width_(width), height_(height), channels_(channels),
          data_(static_cast<std::size_t>(width) * height * channels, fill) {}

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    std::size_t pixelCount() const { return static_cast<std::size_t>(width_) * height_; }
    bool empty() const { return data_.empty(); }

    std::size_t index(int x, int y, int c = 0) const {
        return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
    }
    float &at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
    float at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }

    std::span<float> pixel(std::size_t p) {
        return {data_.data() + p * channels_, static_cast<std::size_t>(channels_)};
    }
    std::span<const float> pixel(std::size_t p) const {
        return {data_.data() + p * channels_, static_cast<std::size_t>(channels_)};
    }

    std::vector<float> &data() { return data_; }
    const std::vector<float> &data() const { return data_; }

    bool sameShape(const FloatImage &o) const {
        return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_;
    }
    bool operator==(const FloatImage &) const = default;

  private:
    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<float> data_;
};

} // namespace splatview
