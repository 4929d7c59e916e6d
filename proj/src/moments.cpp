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

#include "calf/moments.hpp"

#include <algorithm>
#include <cmath>

#include "calf/data.hpp"
#include "calf/error.hpp"
#include "calf/numeric.hpp"

namespace calf {

std::uint64_t foreground_area(const MaskMap& mask) {
    std::uint64_t count = 0;
    for (std::uint8_t v : mask.values()) count += v;
    return count;
}

MomentSummary compute_moments(std::span<const double> values) {
    if (values.empty()) {
        throw DataError("empty area sample");
    }
    const auto n = static_cast<double>(values.size());
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    if (*lo == *hi) {
        return MomentSummary{values.size(), *lo, 0.0, 0.0, 0.0};
    }

    // Two passes for the mean: the second removes the residual of the first.
    CompensatedSum first;
    for (double a : values) first.add(a);
    double mean = first.value() / n;
    CompensatedSum residual;
    for (double a : values) residual.add(a - mean);
    mean += residual.value() / n;

    CompensatedSum s2, s3, s4;
    for (double a : values) {
        const double d = a - mean;
        const double d2 = d * d;
        s2.add(d2);
        s3.add(d2 * d);
        s4.add(d2 * d2);
    }
    const double m2 = s2.value() / n;
    const double m3 = s3.value() / n;
    const double m4 = s4.value() / n;

    MomentSummary out;
    out.n = values.size();
    out.mean = mean;
    out.std = std::sqrt(m2);
    out.skewness = m3 / (m2 * out.std);
    out.kurtosis_excess = m4 / (m2 * m2) - 3.0;
    return out;
}

MomentSummary compute_moments(const AreaSample& areas) {
    std::vector<double> values(areas.values().begin(), areas.values().end());
    return compute_moments(std::span<const double>(values));
}

AreaSample area_sample(const Corpus& corpus, AreaPolicy policy) {
    std::vector<std::uint64_t> areas;
    areas.reserve(corpus.size());
    for (const auto& s : corpus.samples) {
        if (s.roi_present || policy.include_empty) areas.push_back(s.foreground_area);
    }
    return AreaSample(std::move(areas));
}

} // namespace calf
