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

#include "calf/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "calf/error.hpp"
#include "calf/numeric.hpp"
#include "calf/rng.hpp"

namespace calf {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double logit_of(const Weights& w, const double* phi) {
    double z = 0.0;
    for (std::size_t k = 0; k < kFeatureCount; ++k) z += w[k] * phi[k];
    return z;
}

struct StackedBatch {
    PredictionMap p;
    MaskMap y;
};

StackedBatch stack_batch(const TinySegmenter& model, std::span<const FeatureMap* const> features,
                         std::span<const MaskMap* const> masks) {
    if (features.empty() || features.size() != masks.size()) {
        throw std::invalid_argument("batch: features and masks must be non-empty and paired");
    }
    const std::size_t width = features.front()->width;
    std::size_t height = 0;
    std::vector<double> probs;
    std::vector<std::uint8_t> labels;
    for (std::size_t b = 0; b < features.size(); ++b) {
        const FeatureMap& f = *features[b];
        const MaskMap& m = *masks[b];
        if (f.width != width || !m.same_shape(f.width, f.height)) {
            throw std::invalid_argument("batch: inconsistent image sizes");
        }
        height += f.height;
        for (std::size_t i = 0; i < f.pixels(); ++i) probs.push_back(sigmoid(logit_of(model.weights, &f.features[4 * i])));
        labels.insert(labels.end(), m.values().begin(), m.values().end());
    }
    return {PredictionMap(width, height, std::move(probs)), MaskMap(width, height, std::move(labels))};
}

} // namespace

FeatureMap extract_features(const GrayImage& image) {
    const std::size_t w = image.width();
    const std::size_t h = image.height();
    if (w < 3 || h < 3) {
        throw std::invalid_argument("image must be at least 3x3");
    }
    FeatureMap out;
    out.width = w;
    out.height = h;
    out.features.resize(4 * w * h);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            double window[9];
            int k = 0;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const auto sx = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(
                        static_cast<std::ptrdiff_t>(x) + dx, 0, static_cast<std::ptrdiff_t>(w) - 1));
                    const auto sy = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(
                        static_cast<std::ptrdiff_t>(y) + dy, 0, static_cast<std::ptrdiff_t>(h) - 1));
                    window[k++] = image(sx, sy);
                }
            }
            double mean = 0.0;
            for (double v : window) mean += v;
            mean /= 9.0;
            double var = 0.0;
            for (double v : window) var += (v - mean) * (v - mean);
            var /= 9.0;

            double* phi = &out.features[4 * (y * w + x)];
            phi[0] = image(x, y) / 255.0;
            phi[1] = mean / 255.0;
            phi[2] = std::sqrt(var) / 255.0;
            phi[3] = 1.0;
        }
    }
    return out;
}

PredictionMap TinySegmenter::forward(const FeatureMap& f) const {
    std::vector<double> p(f.pixels());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = sigmoid(logit_of(weights, &f.features[4 * i]));
    return PredictionMap(f.width, f.height, std::move(p));
}

PredictionMap TinySegmenter::forward(const GrayImage& image) const { return forward(extract_features(image)); }

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw std::invalid_argument("learning_rate must be positive");
    }
    if (batch_size == 0) throw std::invalid_argument("batch_size must be at least 1");
    if (!(threshold > 0.0 && threshold < 1.0)) throw std::invalid_argument("threshold must lie in (0, 1)");
    loss_config.validate();
}

double batch_loss(const TinySegmenter& model, std::span<const FeatureMap* const> features,
                  std::span<const MaskMap* const> masks, LossKind kind, const LossConfig& cfg) {
    const StackedBatch batch = stack_batch(model, features, masks);
    return loss_forward(kind, batch.p, batch.y, cfg);
}

BatchGradient batch_gradient(const TinySegmenter& model, std::span<const FeatureMap* const> features,
                             std::span<const MaskMap* const> masks, LossKind kind, const LossConfig& cfg) {
    const StackedBatch batch = stack_batch(model, features, masks);
    const LossResult lr = loss_gradient(kind, batch.p, batch.y, cfg);

    // Chain rule through the sigmoid: dL/dw = sum_j dL/dp_j * p_j (1 - p_j) * phi_j.
    std::array<CompensatedSum, kFeatureCount> acc;
    std::size_t j = 0;
    for (const FeatureMap* f : features) {
        for (std::size_t i = 0; i < f->pixels(); ++i, ++j) {
            const double p = batch.p[j];
            const double dz = lr.gradient[j] * p * (1.0 - p);
            const double* phi = &f->features[4 * i];
            for (std::size_t k = 0; k < kFeatureCount; ++k) acc[k].add(dz * phi[k]);
        }
    }
    BatchGradient out;
    out.loss = lr.value;
    for (std::size_t k = 0; k < kFeatureCount; ++k) out.gradient[k] = acc[k].value();
    return out;
}

TrainResult calf_train(const Corpus& train_corpus, const TrainConfig& cfg) {
    cfg.validate();
    if (train_corpus.empty()) {
        throw DataError("empty training corpus");
    }

    TrainResult result;
    TrainHistory& history = result.history;
    const AreaSample areas = area_sample(train_corpus, cfg.area_policy);
    if (!areas.empty()) history.moments_at_selection = compute_moments(areas);
    if (cfg.loss) {
        history.selected_loss = *cfg.loss;
    } else {
        if (!history.moments_at_selection) throw DataError("empty area sample");
        const MomentSummary& m = *history.moments_at_selection;
        history.selected_loss = select_loss(m.skewness, m.kurtosis_excess);
        history.auto_selected = true;
    }

    std::vector<FeatureMap> features;
    features.reserve(train_corpus.size());
    for (const auto& s : train_corpus.samples) features.push_back(extract_features(s.image));

    Rng rng(cfg.seed);
    std::vector<std::size_t> order(train_corpus.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TinySegmenter& model = result.model;
    std::vector<const FeatureMap*> batch_features;
    std::vector<const MaskMap*> batch_masks;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        CompensatedSum epoch_loss;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            batch_features.clear();
            batch_masks.clear();
            for (std::size_t b = start; b < stop; ++b) {
                batch_features.push_back(&features[order[b]]);
                batch_masks.push_back(&train_corpus.samples[order[b]].mask);
            }
            const BatchGradient g =
                batch_gradient(model, batch_features, batch_masks, history.selected_loss, cfg.loss_config);
            for (std::size_t k = 0; k < kFeatureCount; ++k) model.weights[k] -= cfg.learning_rate * g.gradient[k];
            if (!std::isfinite(g.loss) ||
                !std::all_of(model.weights.begin(), model.weights.end(), [](double v) { return std::isfinite(v); })) {
                throw NumericError("training diverged in epoch " + std::to_string(epoch));
            }
            epoch_loss.add(g.loss);
            ++batches;
        }
        history.epoch_loss.push_back(epoch_loss.value() / static_cast<double>(batches));
    }
    return result;
}

std::vector<MetricReport> evaluate_per_image(const TinySegmenter& model, const Corpus& corpus, double threshold) {
    if (corpus.empty()) {
        throw DataError("empty evaluation corpus");
    }
    std::vector<MetricReport> out;
    out.reserve(corpus.size());
    for (const auto& s : corpus.samples) {
        const PredictionMap p = model.forward(s.image);
        out.push_back(report(confusion(binarize(p, threshold), s.mask), p, s.mask));
    }
    return out;
}

MetricReport evaluate(const TinySegmenter& model, const Corpus& corpus, double threshold) {
    const auto per_image = evaluate_per_image(model, corpus, threshold);
    return aggregate(per_image, Averaging::Macro);
}

std::string model_to_json(const TinySegmenter& model) {
    nlohmann::json j;
    j["weights"] = model.weights;
    j["feature_version"] = kFeatureVersion;
    return j.dump();
}

TinySegmenter model_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(std::string("model: ") + e.what());
    }
    if (!j.is_object() || !j.contains("weights") || !j.contains("feature_version")) {
        throw DataError("model: expected {\"weights\", \"feature_version\"}");
    }
    if (j["feature_version"] != kFeatureVersion) {
        throw DataError("model: unsupported feature_version " + j["feature_version"].dump());
    }
    const auto& w = j["weights"];
    if (!w.is_array() || w.size() != kFeatureCount) {
        throw DataError("model: weights must hold " + std::to_string(kFeatureCount) + " numbers");
    }
    TinySegmenter model;
    for (std::size_t k = 0; k < kFeatureCount; ++k) {
        if (!w[k].is_number()) throw DataError("model: weights must be numbers");
        model.weights[k] = w[k].get<double>();
    }
    return model;
}

} // namespace calf
