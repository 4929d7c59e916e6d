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

#include "calf/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

#include <boost/math/distributions/normal.hpp>

namespace calf {

namespace {

std::string format_moments(const MomentSummary& m) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "S=%.4f, K=%.4f", m.skewness, m.kurtosis_excess);
    return buf;
}

struct RegimeShape {
    enum class Base { Normal, Laplace } base;
    bool mirrored;        // negate to flip the skew sign
    double target_skew;   // magnitude, before mirroring
};

// Targets sit in the middle of each selection band so rasterization noise
// rarely pushes the sample across a boundary.
RegimeShape shape_for(LossKind regime) {
    switch (regime) {
        case LossKind::Fisher: return {RegimeShape::Base::Normal, true, 2.0};
        case LossKind::Logit: return {RegimeShape::Base::Normal, true, 0.75};
        case LossKind::Arcsine: return {RegimeShape::Base::Normal, true, 0.25};
        case LossKind::Log10: return {RegimeShape::Base::Normal, false, 2.0};
        case LossKind::NaturalLog: return {RegimeShape::Base::Normal, false, 0.75};
        case LossKind::BceDice: return {RegimeShape::Base::Laplace, false, 0.25};
        default: throw std::invalid_argument("regime must be one of the conditional transforms");
    }
}

double skew_of(std::span<const double> xs) { return compute_moments(xs).skewness; }

std::vector<double> exp_shaped(std::span<const double> base, double shape) {
    std::vector<double> out(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) out[i] = std::exp(shape * base[i]);
    return out;
}

std::size_t raster_count(const Ellipse& e, std::size_t width, std::size_t height) {
    const auto lo_x = static_cast<std::ptrdiff_t>(std::floor(e.cx - e.semi_x - 1.0));
    const auto hi_x = static_cast<std::ptrdiff_t>(std::ceil(e.cx + e.semi_x + 1.0));
    const auto lo_y = static_cast<std::ptrdiff_t>(std::floor(e.cy - e.semi_y - 1.0));
    const auto hi_y = static_cast<std::ptrdiff_t>(std::ceil(e.cy + e.semi_y + 1.0));
    std::size_t count = 0;
    for (std::ptrdiff_t y = std::max<std::ptrdiff_t>(lo_y, 0);
         y < std::min<std::ptrdiff_t>(hi_y, static_cast<std::ptrdiff_t>(height)); ++y) {
        for (std::ptrdiff_t x = std::max<std::ptrdiff_t>(lo_x, 0);
             x < std::min<std::ptrdiff_t>(hi_x, static_cast<std::ptrdiff_t>(width)); ++x) {
            const double dx = (static_cast<double>(x) + 0.5 - e.cx) / e.semi_x;
            const double dy = (static_cast<double>(y) + 0.5 - e.cy) / e.semi_y;
            if (dx * dx + dy * dy <= 1.0) ++count;
        }
    }
    return count;
}

// Ellipse with random aspect and position whose raster count is as close to
// target_area as the scale bisection gets.
Ellipse place_ellipse(double target_area, std::size_t width, std::size_t height, Rng& rng) {
    const double aspect = rng.uniform(0.6, 1.6);
    const double root = std::sqrt(aspect);
    const double t0 = std::sqrt(target_area / std::numbers::pi);
    const double margin_x = 1.2 * t0 * root + 1.0;
    const double margin_y = 1.2 * t0 / root + 1.0;
    const auto w = static_cast<double>(width);
    const auto h = static_cast<double>(height);

    Ellipse e;
    e.cx = margin_x < w - margin_x ? rng.uniform(margin_x, w - margin_x) : w / 2.0;
    e.cy = margin_y < h - margin_y ? rng.uniform(margin_y, h - margin_y) : h / 2.0;

    double lo = 0.5 * t0;
    double hi = 1.2 * t0;
    Ellipse best = e;
    double best_err = INFINITY;
    for (int iter = 0; iter < 40; ++iter) {
        const double t = 0.5 * (lo + hi);
        Ellipse trial = e;
        trial.semi_x = t * root;
        trial.semi_y = t / root;
        const auto count = static_cast<double>(raster_count(trial, width, height));
        const double err = std::abs(count - target_area);
        if (err < best_err) {
            best_err = err;
            best = trial;
        }
        if (count < target_area) lo = t;
        else hi = t;
    }
    return best;
}

std::vector<MaskMap> place_rois(std::span<const double> areas, std::size_t width, std::size_t height, Rng& rng) {
    std::vector<MaskMap> masks;
    masks.reserve(areas.size());
    for (double a : areas) masks.push_back(rasterize(place_ellipse(a, width, height, rng), width, height));
    return masks;
}

} // namespace

RegimeUnreachable::RegimeUnreachable(LossKind regime, MomentSummary achieved)
    : DataError("regime " + std::string(to_string(regime)) + " unreachable after " +
                std::to_string(kMaxRegimeAttempts) + " attempts (achieved " + format_moments(achieved) + ")"),
      regime_(regime),
      achieved_(achieved) {}

void SynthSpec::validate() const {
    if (count == 0) throw std::invalid_argument("count must be positive");
    if (width < 16 || height < 16) throw std::invalid_argument("width and height must be at least 16");
    if (!(roi_fraction >= 0.0 && roi_fraction <= 1.0)) throw std::invalid_argument("roi_fraction must lie in [0, 1]");
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw std::invalid_argument("noise_sigma must be >= 0");
    if (!(contrast > 0.0) || !std::isfinite(contrast)) throw std::invalid_argument("contrast must be positive");
    if (regime) {
        if (!is_calf_kind(*regime)) throw std::invalid_argument("regime must be one of the conditional transforms");
        if (count < 20) throw std::invalid_argument("a regime needs count >= 20");
    }
}

MaskMap rasterize(const Ellipse& e, std::size_t width, std::size_t height) {
    std::vector<std::uint8_t> bits(width * height, 0);
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            const double dx = (static_cast<double>(x) + 0.5 - e.cx) / e.semi_x;
            const double dy = (static_cast<double>(y) + 0.5 - e.cy) / e.semi_y;
            if (dx * dx + dy * dy <= 1.0) bits[y * width + x] = 1;
        }
    }
    return MaskMap(width, height, std::move(bits));
}

std::vector<double> sample_regime_areas(LossKind regime, std::size_t n, double min_area, double max_area, Rng& rng) {
    const RegimeShape shape = shape_for(regime);
    if (n == 0) return {};
    if (n == 1) return {0.5 * (min_area + max_area)};

    // Jittered quantiles: one draw per stratum keeps the sample moments close
    // to the family's while still varying with the seed.
    const boost::math::normal_distribution<double> unit;
    std::vector<double> base(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = (static_cast<double>(i) + 0.5 + 0.5 * (rng.uniform() - 0.5)) / static_cast<double>(n);
        if (shape.base == RegimeShape::Base::Normal) {
            base[i] = boost::math::quantile(unit, u);
        } else {
            base[i] = u < 0.5 ? std::log(2.0 * u) : -std::log(2.0 * (1.0 - u));
        }
    }

    // Skewness of exp(s * base) grows with s; bisect for the target.
    double lo = 1e-4;
    double hi = 4.0;
    if (skew_of(exp_shaped(base, hi)) < shape.target_skew) {
        lo = hi;
    } else {
        for (int iter = 0; iter < 60; ++iter) {
            const double mid = 0.5 * (lo + hi);
            if (skew_of(exp_shaped(base, mid)) < shape.target_skew) lo = mid;
            else hi = mid;
        }
    }
    std::vector<double> x = exp_shaped(base, 0.5 * (lo + hi));
    if (shape.mirrored) {
        for (double& v : x) v = -v;
    }

    const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
    const double x_lo = *mn;
    const double span = *mx - *mn;
    std::vector<double> areas(n);
    for (std::size_t i = 0; i < n; ++i) {
        areas[i] = span > 0.0 ? min_area + (x[i] - x_lo) / span * (max_area - min_area) : 0.5 * (min_area + max_area);
    }
    rng.shuffle(areas);
    return areas;
}

Corpus generate(const SynthSpec& spec) {
    spec.validate();
    const std::size_t pixels = spec.width * spec.height;
    const double min_area = std::max(12.0, 0.005 * static_cast<double>(pixels));
    const double half = static_cast<double>(std::min(spec.width, spec.height)) / 2.0 - 2.0;
    const double max_area = std::min(0.3 * static_cast<double>(pixels), 0.6 * std::numbers::pi * half * half);
    const auto n_present = static_cast<std::size_t>(std::llround(static_cast<double>(spec.count) * spec.roi_fraction));

    if (spec.regime && n_present < 3) {
        throw std::invalid_argument("a regime needs at least 3 ROI-present images");
    }

    MomentSummary achieved;
    const int attempts = spec.regime ? kMaxRegimeAttempts : 1;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        Rng rng(spec.seed + static_cast<std::uint64_t>(attempt));

        std::vector<std::size_t> order(spec.count);
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng.shuffle(order);
        std::vector<bool> present(spec.count, false);
        for (std::size_t j = 0; j < n_present; ++j) present[order[j]] = true;

        std::vector<double> targets;
        if (spec.regime) {
            targets = sample_regime_areas(*spec.regime, n_present, min_area, max_area, rng);
        } else {
            // Log-uniform sizes when no regime is requested.
            targets.resize(n_present);
            for (double& a : targets) a = min_area * std::pow(max_area / min_area, rng.uniform());
        }
        std::vector<MaskMap> rois = place_rois(targets, spec.width, spec.height, rng);

        if (spec.regime) {
            std::vector<std::uint64_t> areas;
            for (const auto& m : rois) areas.push_back(foreground_area(m));
            achieved = compute_moments(AreaSample(std::move(areas)));
            if (select_loss(achieved.skewness, achieved.kurtosis_excess) != *spec.regime) continue;
        }

        Corpus corpus;
        corpus.width = spec.width;
        corpus.height = spec.height;
        std::size_t next_roi = 0;
        for (std::size_t i = 0; i < spec.count; ++i) {
            MaskMap mask = present[i] ? std::move(rois[next_roi++]) : MaskMap(spec.width, spec.height, std::uint8_t{0});
            std::vector<std::uint8_t> pixels_out(pixels);
            for (std::size_t k = 0; k < pixels; ++k) {
                double v = kBackgroundLevel + spec.noise_sigma * rng.normal();
                if (mask[k]) v += spec.contrast;
                pixels_out[k] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
            }
            char id[32];
            std::snprintf(id, sizeof id, "synth_%05zu", i);
            corpus.samples.push_back(
                make_sample(id, GrayImage(spec.width, spec.height, std::move(pixels_out)), std::move(mask)));
        }
        return corpus;
    }
    throw RegimeUnreachable(*spec.regime, achieved);
}

} // namespace calf
