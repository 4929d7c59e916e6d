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
#include <optional>
#include <vector>

#include "calf/data.hpp"
#include "calf/error.hpp"
#include "calf/moments.hpp"
#include "calf/rng.hpp"
#include "calf/selector.hpp"

namespace calf {

struct SynthSpec {
    std::size_t count = 200;
    std::size_t width = 64;
    std::size_t height = 64;
    double roi_fraction = 0.5;
    // Transform the ROI area distribution should select. nullopt draws areas
    // log-uniformly with no moment check.
    std::optional<LossKind> regime;
    double noise_sigma = 8.0;  // gray levels
    double contrast = 80.0;    // ROI intensity offset, gray levels
    std::uint64_t seed = 42;

    void validate() const;
};

inline constexpr int kMaxRegimeAttempts = 20;
inline constexpr double kBackgroundLevel = 0.3 * 255.0;

class RegimeUnreachable : public DataError {
public:
    RegimeUnreachable(LossKind regime, MomentSummary achieved);

    LossKind regime() const { return regime_; }
    const MomentSummary& achieved() const { return achieved_; }

private:
    LossKind regime_;
    MomentSummary achieved_;
};

/// Axis-aligned ellipse raster: pixel (x, y) is inside when its center
/// satisfies ((x + 0.5 - cx) / a)^2 + ((y + 0.5 - cy) / b)^2 <= 1.
struct Ellipse {
    double cx = 0.0;
    double cy = 0.0;
    double semi_x = 0.0;
    double semi_y = 0.0;
};

MaskMap rasterize(const Ellipse& e, std::size_t width, std::size_t height);

/// Draws `n` target areas in [min_area, max_area] whose shape follows the
/// regime's sampler: mirrored lognormal for negative skew, lognormal for
/// positive skew, exponentiated Laplace for the mild-skew heavy-tail branch.
std::vector<double> sample_regime_areas(LossKind regime, std::size_t n, double min_area, double max_area,
                                        Rng& rng);

/// Generated corpus. Ids are "synth_%05d". For regime requests the moments of
/// the rasterized areas are checked against select_loss; failing attempts
/// retry with seed + 1 up to kMaxRegimeAttempts times, then RegimeUnreachable.
Corpus generate(const SynthSpec& spec);

} // namespace calf
