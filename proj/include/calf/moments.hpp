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
#include <vector>

#include "calf/grid.hpp"

namespace calf {

struct Corpus;

/// Foreground areas A_1..A_N in pixels.
class AreaSample {
public:
    AreaSample() = default;
    explicit AreaSample(std::vector<std::uint64_t> values) : values_(std::move(values)) {}

    std::span<const std::uint64_t> values() const { return values_; }
    std::size_t n() const { return values_.size(); }
    bool empty() const { return values_.empty(); }

private:
    std::vector<std::uint64_t> values_;
};

/// Population moments of an area distribution. Skewness and excess kurtosis
/// are both reported as 0 when the spread is zero.
struct MomentSummary {
    std::size_t n = 0;
    double mean = 0.0;
    double std = 0.0;
    double skewness = 0.0;
    double kurtosis_excess = 0.0;

    friend bool operator==(const MomentSummary&, const MomentSummary&) = default;
};

std::uint64_t foreground_area(const MaskMap& mask);

/// Throws DataError("empty area sample") for an empty sample.
MomentSummary compute_moments(const AreaSample& areas);

/// Real-valued variant used for generator tuning and mirrored samples.
MomentSummary compute_moments(std::span<const double> values);

struct AreaPolicy {
    // When false, ROI-absent samples (A_i = 0) are left out of the distribution.
    bool include_empty = false;
};

AreaSample area_sample(const Corpus& corpus, AreaPolicy policy = {});

} // namespace calf
