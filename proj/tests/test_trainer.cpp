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

#include <doctest.h>

#include <cmath>
#include <vector>

#include "calf/error.hpp"
#include "calf/synth.hpp"
#include "calf/trainer.hpp"
#include "oracles.hpp"

using namespace calf;
using namespace calf::testing;

namespace {

GrayImage random_image(std::size_t w, std::size_t h, Rng& rng) {
    std::vector<std::uint8_t> v(w * h);
    for (auto& x : v) x = static_cast<std::uint8_t>(rng.below(256));
    return GrayImage(w, h, std::move(v));
}

Corpus small_corpus(std::uint64_t seed, std::optional<LossKind> regime = std::nullopt) {
    SynthSpec spec;
    spec.count = 40;
    spec.width = 24;
    spec.height = 24;
    spec.regime = regime;
    spec.seed = seed;
    return generate(spec);
}

} // namespace

TEST_CASE("features") {
    std::vector<std::uint8_t> v(9, 0);
    v[4] = 255;
    const FeatureMap f = extract_features(GrayImage(3, 3, v));
    CHECK(f.pixels() == 9);
    CHECK(f.features.size() == 36);
    // Center pixel: intensity 1, window mean 1/9, window std sqrt(1/9 - 1/81).
    CHECK(f.features[16] == doctest::Approx(1.0));
    CHECK(f.features[17] == doctest::Approx(1.0 / 9.0));
    CHECK(f.features[18] == doctest::Approx(std::sqrt(1.0 / 9.0 - 1.0 / 81.0)));
    CHECK(f.features[19] == 1.0);
    // Corner (0, 0) replicates edges: its window holds the center once.
    CHECK(f.features[1] == doctest::Approx(1.0 / 9.0));
    CHECK_THROWS_AS(extract_features(GrayImage(2, 5, std::uint8_t{0})), std::invalid_argument);
}

TEST_CASE("forward pass") {
    Rng rng(1);
    const GrayImage img = random_image(8, 8, rng);
    const PredictionMap zero = TinySegmenter{}.forward(img);
    for (double p : zero.values()) CHECK(p == 0.5);

    const PredictionMap biased = TinySegmenter{{0, 0, 0, 10}}.forward(img);
    for (double p : biased.values()) CHECK(p == doctest::Approx(0.999955).epsilon(1e-6));

    const PredictionMap flat = TinySegmenter{{1.5, -0.7, 3.0, 0.2}}.forward(GrayImage(6, 6, std::uint8_t{77}));
    for (double p : flat.values()) CHECK(p == flat[0]);
    const double x = 77.0 / 255.0;
    CHECK(flat[0] == doctest::Approx(1.0 / (1.0 + std::exp(-(1.5 * x - 0.7 * x + 0.2)))).epsilon(1e-12));
}

TEST_CASE("weight gradients match finite differences") {
    Rng rng(2);
    std::vector<FeatureMap> feats;
    std::vector<MaskMap> masks;
    for (int i = 0; i < 3; ++i) {
        feats.push_back(extract_features(random_image(8, 8, rng)));
        masks.push_back(random_mask(8, 8, rng, 0.3));
    }
    std::vector<const FeatureMap*> fp;
    std::vector<const MaskMap*> mp;
    for (int i = 0; i < 3; ++i) {
        fp.push_back(&feats[i]);
        mp.push_back(&masks[i]);
    }
    const LossConfig cfg;
    const double h = 1e-5;
    for (LossKind kind : kAllKinds) {
        CAPTURE(to_string(kind));
        TinySegmenter model{{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)}};
        const BatchGradient g = batch_gradient(model, fp, mp, kind, cfg);
        CHECK(g.loss == batch_loss(model, fp, mp, kind, cfg));
        for (std::size_t k = 0; k < kFeatureCount; ++k) {
            TinySegmenter up = model, down = model;
            up.weights[k] += h;
            down.weights[k] -= h;
            const double fd = (batch_loss(up, fp, mp, kind, cfg) - batch_loss(down, fp, mp, kind, cfg)) / (2 * h);
            if (std::abs(g.gradient[k]) > 1e-6) {
                CHECK(std::abs(fd - g.gradient[k]) / std::abs(g.gradient[k]) <= 1e-3);
            } else {
                CHECK(std::abs(fd - g.gradient[k]) <= 1e-6);
            }
        }
    }
}

TEST_CASE("batch loss is the loss of the stacked map") {
    Rng rng(3);
    const GrayImage a = random_image(5, 4, rng), b = random_image(5, 4, rng);
    const MaskMap ma = random_mask(5, 4, rng), mb = random_mask(5, 4, rng);
    const FeatureMap fa = extract_features(a), fb = extract_features(b);
    const TinySegmenter model{{0.3, -0.2, 0.5, -0.1}};
    const FeatureMap* fp[] = {&fa, &fb};
    const MaskMap* mp[] = {&ma, &mb};
    const PredictionMap preds[] = {model.forward(a), model.forward(b)};
    const MaskMap ms[] = {ma, mb};
    for (LossKind kind : {LossKind::BceDice, LossKind::Fisher, LossKind::Dice}) {
        const double stacked = loss_forward(kind, stack_rows<double, ProbabilityTag>(preds),
                                            stack_rows<std::uint8_t, LabelTag>(ms));
        CHECK(batch_loss(model, fp, mp, kind, {}) == doctest::Approx(stacked).epsilon(1e-13));
    }
}

TEST_CASE("zero epochs returns the zero model") {
    TrainConfig cfg;
    cfg.epochs = 0;
    cfg.loss = LossKind::Bce;
    const TrainResult r = calf_train(small_corpus(1), cfg);
    CHECK(r.model == TinySegmenter{});
    CHECK(r.history.epoch_loss.empty());
    CHECK_FALSE(r.history.auto_selected);
}

TEST_CASE("small steps on one batch decrease the loss") {
    Corpus c = small_corpus(2);
    std::erase_if(c.samples, [](const SampleRecord& s) { return !s.roi_present; });
    c.samples.resize(1);
    for (LossKind kind : kCalfKinds) {
        TrainConfig cfg;
        cfg.loss = kind;
        cfg.epochs = 10;
        cfg.learning_rate = 1e-4;
        const TrainResult r = calf_train(c, cfg);
        REQUIRE(r.history.epoch_loss.size() == 10);
        for (std::size_t e = 1; e < 10; ++e) CHECK(r.history.epoch_loss[e] <= r.history.epoch_loss[e - 1]);
    }
}

TEST_CASE("tiny learning rates barely move the weights") {
    TrainConfig cfg;
    cfg.loss = LossKind::BceDice;
    cfg.epochs = 3;
    cfg.learning_rate = 1e-12;
    const TrainResult r = calf_train(small_corpus(3), cfg);
    for (double w : r.model.weights) CHECK(std::abs(w) <= 1e-6);
}

TEST_CASE("automatic selection follows the training-set moments") {
    const Corpus c = small_corpus(4, LossKind::Fisher);
    TrainConfig cfg;
    cfg.epochs = 1;
    const TrainResult r = calf_train(c, cfg);
    CHECK(r.history.auto_selected);
    CHECK(r.history.selected_loss == LossKind::Fisher);
    REQUIRE(r.history.moments_at_selection.has_value());
    CHECK(r.history.moments_at_selection->n == c.present_count());
    CHECK(select_loss(r.history.moments_at_selection->skewness, r.history.moments_at_selection->kurtosis_excess) ==
          r.history.selected_loss);
    CHECK(r.history.moments_at_selection->skewness ==
          doctest::Approx(compute_moments(area_sample(c, {})).skewness).epsilon(1e-15));

    Corpus empty_only = c;
    std::erase_if(empty_only.samples, [](const SampleRecord& s) { return s.roi_present; });
    try {
        (void)calf_train(empty_only, cfg);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("empty area sample") != std::string::npos);
    }
    CHECK_THROWS_AS(calf_train(Corpus{}, cfg), DataError);
}

TEST_CASE("training is deterministic") {
    const Corpus c = small_corpus(5);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.loss = LossKind::BceDice;
    const TrainResult a = calf_train(c, cfg);
    const TrainResult b = calf_train(c, cfg);
    CHECK(a.model == b.model);
    CHECK(a.history.epoch_loss == b.history.epoch_loss);
    cfg.seed = 6;
    CHECK_FALSE(calf_train(c, cfg).model == a.model);
}

TEST_CASE("evaluation of reference models") {
    const Corpus c = small_corpus(7);
    // Zero weights predict 0.5 everywhere, which the inclusive threshold labels foreground.
    const auto per_image = evaluate_per_image(TinySegmenter{}, c, 0.5);
    REQUIRE(per_image.size() == c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double area = static_cast<double>(c.samples[i].foreground_area);
        CHECK(per_image[i].sensitivity == 1.0);
        CHECK(per_image[i].dsc == doctest::Approx(2 * area / (area + 576.0)));
    }

    // A steep sigmoid at the intensity midpoint recovers the masks.
    const double t = (kBackgroundLevel + 40.0) / 255.0;
    const TinySegmenter oracle{{200.0, 0.0, 0.0, -200.0 * t}};
    CHECK(evaluate(oracle, c).dsc >= 0.9);
}

TEST_CASE("learning at the defaults") {
    const Corpus c = small_corpus(8);
    TrainConfig cfg;
    cfg.loss = LossKind::BceDice;
    const TrainResult r = calf_train(c, cfg);
    CHECK(r.history.epoch_loss.back() < r.history.epoch_loss.front());
    CHECK(evaluate(r.model, c).dsc >= 0.8);
}

TEST_CASE("model json") {
    const TinySegmenter m{{0.1, -2.5, 3.25e-7, 1e10}};
    CHECK(model_from_json(model_to_json(m)) == m);
    CHECK_THROWS_AS(model_from_json("{"), DataError);
    CHECK_THROWS_AS(model_from_json(R"({"weights":[1,2,3],"feature_version":1})"), DataError);
    CHECK_THROWS_AS(model_from_json(R"({"weights":[1,2,3,4],"feature_version":2})"), DataError);
    CHECK_THROWS_AS(model_from_json(R"({"weights":[1,2,3,"x"],"feature_version":1})"), DataError);
}

TEST_CASE("config validation") {
    TrainConfig cfg;
    cfg.batch_size = 0;
    CHECK_THROWS_AS(calf_train(small_corpus(1), cfg), std::invalid_argument);
    cfg = {};
    cfg.learning_rate = -1;
    CHECK_THROWS_AS(calf_train(small_corpus(1), cfg), std::invalid_argument);
}
