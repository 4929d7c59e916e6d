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

#include <cstdint>
#include <span>

#include "calf/grid.hpp"

namespace calf {

struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const { return tp + fp + tn + fn; }

    ConfusionCounts& operator+=(const ConfusionCounts& o) {
        tp += o.tp;
        fp += o.fp;
        tn += o.tn;
        fn += o.fn;
        return *this;
    }

    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Ratios whose denominator was zero and were filled by convention:
///   dsc          1 when both masks are empty
///   sensitivity  1 when the truth has no foreground
///   specificity  1 when the truth has no background
///   precision    1 when both masks are empty, 0 when only the prediction is
struct UndefinedRatios {
    bool dsc = false;
    bool sensitivity = false;
    bool specificity = false;
    bool precision = false;

    bool any() const { return dsc || sensitivity || specificity || precision; }

    friend bool operator==(const UndefinedRatios&, const UndefinedRatios&) = default;
};

struct MetricReport {
    double dsc = 0.0;
    double accuracy = 0.0;
    double mae = 0.0;
    double sensitivity = 0.0;
    double specificity = 0.0;
    double precision = 0.0;
    ConfusionCounts counts;
    UndefinedRatios undefined;

    friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

/// pixel = 1 iff p >= threshold.
MaskMap binarize(const PredictionMap& p, double threshold = 0.5);

ConfusionCounts confusion(const MaskMap& pred, const MaskMap& truth);

/// Ratios from counts; mae is mean |p - y| on the continuous probabilities.
MetricReport report(const ConfusionCounts& counts, const PredictionMap& p, const MaskMap& truth);

/// Ratios from counts alone with the given mae.
MetricReport report_from_counts(const ConfusionCounts& counts, double mae);

enum class Averaging { Macro, Micro };

/// Macro: mean of each per-image metric; summed counts are kept for reference
/// and undefined flags are or-ed. Micro: ratios of the summed counts with mae
/// averaged per pixel.
MetricReport aggregate(std::span<const MetricReport> per_image, Averaging mode = Averaging::Macro);

} // namespace calf
