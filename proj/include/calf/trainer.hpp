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

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "calf/data.hpp"
#include "calf/grid.hpp"
#include "calf/losses.hpp"
#include "calf/metrics.hpp"
#include "calf/moments.hpp"
#include "calf/selector.hpp"

namespace calf {

inline constexpr std::size_t kFeatureCount = 4;
inline constexpr int kFeatureVersion = 1;

using Weights = std::array<double, kFeatureCount>;

/// Per-pixel features: intensity / 255, 3x3 mean / 255, 3x3 population
/// standard deviation / 255, constant 1. Windows replicate edge pixels.
/// Stored pixel-major: features[4 * i + k].
struct FeatureMap {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> features;

    std::size_t pixels() const { return width * height; }
};

/// Throws std::invalid_argument for images smaller than 3x3.
FeatureMap extract_features(const GrayImage& image);

/// p = sigmoid(w . phi) per pixel.
struct TinySegmenter {
    Weights weights{};

    PredictionMap forward(const GrayImage& image) const;
    PredictionMap forward(const FeatureMap& features) const;

    friend bool operator==(const TinySegmenter&, const TinySegmenter&) = default;
};

struct TrainConfig {
    std::size_t epochs = 30;
    double learning_rate = 20.0;
    std::size_t batch_size = 4;
    std::optional<LossKind> loss;  // nullopt selects from the training-set moments
    std::uint64_t seed = 42;
    LossConfig loss_config;
    double threshold = 0.5;
    AreaPolicy area_policy;

    void validate() const;
};

struct TrainHistory {
    std::vector<double> epoch_loss;
    LossKind selected_loss = LossKind::BceDice;
    bool auto_selected = false;
    // Present whenever the training corpus has at least one counted area.
    std::optional<MomentSummary> moments_at_selection;
};

struct TrainResult {
    TinySegmenter model;
    TrainHistory history;
};

struct BatchGradient {
    double loss = 0.0;
    Weights gradient{};
};

/// Loss of the batch taken as one map (images stacked in order) and its
/// gradient with respect to the weights.
BatchGradient batch_gradient(const TinySegmenter& model, std::span<const FeatureMap* const> features,
                             std::span<const MaskMap* const> masks, LossKind kind, const LossConfig& cfg);

/// Scalar batch loss only.
double batch_loss(const TinySegmenter& model, std::span<const FeatureMap* const> features,
                  std::span<const MaskMap* const> masks, LossKind kind, const LossConfig& cfg);

/// Mini-batch gradient descent from zero weights. Batch order is reshuffled every
/// epoch from one seeded stream. Throws DataError for an empty corpus and
/// NumericError when a batch loss turns non-finite.
TrainResult calf_train(const Corpus& train_corpus, const TrainConfig& cfg);

std::vector<MetricReport> evaluate_per_image(const TinySegmenter& model, const Corpus& corpus, double threshold);

/// Macro-averaged report over the corpus.
MetricReport evaluate(const TinySegmenter& model, const Corpus& corpus, double threshold = 0.5);

std::string model_to_json(const TinySegmenter& model);
/// Throws DataError on malformed input or an unexpected feature_version.
TinySegmenter model_from_json(const std::string& text);

} // namespace calf
