// Copyright 2026 The CALF Toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace calf {

struct ProbabilityTag {
    static constexpr const char* name = "probability map";
    static bool valid(double v) { return v >= 0.0 && v <= 1.0; }
};

struct LabelTag {
    static constexpr const char* name = "mask";
    static bool valid(std::uint8_t v) { return v <= 1; }
};

struct IntensityTag {
    static constexpr const char* name = "image";
    static bool valid(std::uint8_t) { return true; }
};

/// Row-major width x height raster whose values are checked against Tag at
/// construction. Values are immutable afterwards; build a new grid to change them.
template <class T, class Tag>
class Grid {
public:
    using value_type = T;

    Grid() = default;

    Grid(std::size_t width, std::size_t height, T fill)
        : Grid(width, height, std::vector<T>(width * height, fill)) {}

    Grid(std::size_t width, std::size_t height, std::vector<T> values)
        : width_(width), height_(height), values_(std::move(values)) {
        if (width_ == 0 || height_ == 0) {
            throw std::invalid_argument(std::string(Tag::name) + ": dimensions must be positive");
        }
        if (values_.size() != width_ * height_) {
            throw std::invalid_argument(std::string(Tag::name) + ": value count " +
                                        std::to_string(values_.size()) + " does not match " +
                                        std::to_string(width_) + "x" + std::to_string(height_));
        }
        for (const T& v : values_) {
            if (!Tag::valid(v)) {
                throw std::invalid_argument(std::string(Tag::name) + ": value out of range");
            }
        }
    }

    std::size_t width() const { return width_; }
    std::size_t height() const { return height_; }
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }

    std::span<const T> values() const { return values_; }
    const T& operator[](std::size_t i) const { return values_[i]; }
    const T& operator()(std::size_t x, std::size_t y) const { return values_[y * width_ + x]; }

    bool same_shape(std::size_t w, std::size_t h) const { return width_ == w && height_ == h; }

    template <class OtherT, class OtherTag>
    bool same_shape(const Grid<OtherT, OtherTag>& other) const {
        return same_shape(other.width(), other.height());
    }

    friend bool operator==(const Grid& a, const Grid& b) = default;

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<T> values_;
};

/// Per-pixel foreground probabilities in [0,1].
using PredictionMap = Grid<double, ProbabilityTag>;
/// Per-pixel binary labels in {0,1}.
using MaskMap = Grid<std::uint8_t, LabelTag>;
/// 8-bit grayscale intensities.
using GrayImage = Grid<std::uint8_t, IntensityTag>;

/// Stacks equally wide grids vertically, in order. Used to treat a batch of
/// images as a single map so pixel means run over the whole batch.
template <class T, class Tag>
Grid<T, Tag> stack_rows(std::span<const Grid<T, Tag>> parts) {
    if (parts.empty()) {
        throw std::invalid_argument("stack_rows: no parts");
    }
    const std::size_t width = parts.front().width();
    std::size_t height = 0;
    std::vector<T> values;
    for (const auto& part : parts) {
        if (part.width() != width) {
            throw std::invalid_argument("stack_rows: width mismatch");
        }
        height += part.height();
        values.insert(values.end(), part.values().begin(), part.values().end());
    }
    return Grid<T, Tag>(width, height, std::move(values));
}

} // namespace calf
