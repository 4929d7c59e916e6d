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

#include <vector>

#include "calf/grid.hpp"
#include "calf/selector.hpp"

namespace calf {

struct LossConfig {
    double clamp_eps = 1e-7;     // probabilities are clamped to [eps, 1 - eps]
    double dice_eps = 1e-6;      // smoothing term of the overlap ratios
    double focal_gamma = 2.0;
    double focal_alpha = 0.25;
    double tversky_alpha = 0.3;  // weight of false negatives
    double tversky_beta = 0.7;   // weight of false positives

    /// Throws std::invalid_argument when a field is out of range.
    void validate() const;
};

struct LossResult {
    double value = 0.0;
    std::vector<double> gradient;  // d value / d p, row-major like the inputs
};

PredictionMap clamp_probs(const PredictionMap& p, double eps);

/// (2 sum(y p) + eps) / (sum(y) + sum(p) + eps) on the unclamped inputs.
double dice_coefficient(const PredictionMap& p, const MaskMap& y, double eps);

/// Scalar loss of the given kind. Per-pixel transforms are averaged over all
/// pixels of the (clamped) map; overlap-based kinds use global sums.
double loss_forward(LossKind kind, const PredictionMap& p, const MaskMap& y, const LossConfig& cfg = {});

/// Value plus the analytic gradient with respect to the clamped probabilities.
/// Pixels outside the clamp range get the gradient evaluated at the clamp bound.
LossResult loss_gradient(LossKind kind, const PredictionMap& p, const MaskMap& y, const LossConfig& cfg = {});

/// Per-pixel term of a pixel-separable kind before the mean, for one pixel.
/// Throws std::invalid_argument for kinds coupled through global sums.
double pixel_term(LossKind kind, double p, double y, const LossConfig& cfg = {});

bool is_pixel_separable(LossKind kind);

} // namespace calf
