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

#include "calf/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "calf/error.hpp"
#include "calf/numeric.hpp"

namespace calf {

namespace {

void check_shapes(const PredictionMap& p, const MaskMap& y) {
    if (!p.same_shape(y)) {
        throw std::invalid_argument("shape mismatch: prediction " + std::to_string(p.width()) + "x" +
                                    std::to_string(p.height()) + " vs mask " + std::to_string(y.width()) +
                                    "x" + std::to_string(y.height()));
    }
}

double bce_term(double p, double y) { return -(y * std::log(p) + (1.0 - y) * std::log1p(-p)); }

double bce_derivative(double p, double y) { return -(y / p - (1.0 - y) / (1.0 - p)); }

double focal_term(double p, double y, const LossConfig& cfg) {
    const double g = cfg.focal_gamma;
    const double a = cfg.focal_alpha;
    return -(a * y * std::pow(1.0 - p, g) * std::log(p) +
             (1.0 - a) * (1.0 - y) * std::pow(p, g) * std::log1p(-p));
}

double focal_derivative(double p, double y, const LossConfig& cfg) {
    const double g = cfg.focal_gamma;
    const double a = cfg.focal_alpha;
    const double q = 1.0 - p;
    // g * x^(g-1) vanishes for g = 0; skip it instead of forming 0 * x^-1.
    const double dq_pow = g > 0.0 ? g * std::pow(q, g - 1.0) : 0.0;
    const double dp_pow = g > 0.0 ? g * std::pow(p, g - 1.0) : 0.0;
    const double fg = -dq_pow * std::log(p) + std::pow(q, g) / p;  // d/dp (1-p)^g ln p
    const double bg = dp_pow * std::log1p(-p) - std::pow(p, g) / q; // d/dp p^g ln(1-p)
    return -(a * y * fg + (1.0 - a) * (1.0 - y) * bg);
}

double separable_term(LossKind kind, double p, double y, const LossConfig& cfg) {
    switch (kind) {
        case LossKind::Fisher:
            // 0.5 ln((1+p)/(1-p)) = atanh(p); the background branch is atanh(1-p).
            return -(y * std::atanh(p) + (1.0 - y) * std::atanh(1.0 - p));
        case LossKind::Logit:
            return -(2.0 * y - 1.0) * (std::log(p) - std::log1p(-p));
        case LossKind::Arcsine:
            return -(y * std::asin(std::sqrt(p)) + (1.0 - y) * std::asin(std::sqrt(1.0 - p)));
        case LossKind::Log10:
            return -(y * std::log10(p) + (1.0 - y) * std::log10(1.0 - p));
        case LossKind::NaturalLog:
        case LossKind::Bce:
            return bce_term(p, y);
        case LossKind::Focal:
            return focal_term(p, y, cfg);
        default:
            throw std::invalid_argument("loss kind " + std::string(to_string(kind)) + " is not pixel-separable");
    }
}

double separable_derivative(LossKind kind, double p, double y, const LossConfig& cfg) {
    switch (kind) {
        case LossKind::Fisher:
            return -(y / ((1.0 - p) * (1.0 + p)) - (1.0 - y) / (p * (2.0 - p)));
        case LossKind::Logit:
            return -(2.0 * y - 1.0) / (p * (1.0 - p));
        case LossKind::Arcsine:
            return -(2.0 * y - 1.0) / (2.0 * std::sqrt(p * (1.0 - p)));
        case LossKind::Log10:
            return bce_derivative(p, y) / std::numbers::ln10;
        case LossKind::NaturalLog:
        case LossKind::Bce:
            return bce_derivative(p, y);
        case LossKind::Focal:
            return focal_derivative(p, y, cfg);
        default:
            throw std::invalid_argument("loss kind " + std::string(to_string(kind)) + " is not pixel-separable");
    }
}

struct OverlapSums {
    double yp = 0.0;  // sum(y p)
    double y = 0.0;   // sum(y)
    double p = 0.0;   // sum(p)
};

OverlapSums overlap_sums(std::span<const double> p, std::span<const std::uint8_t> y) {
    CompensatedSum yp, ys, ps;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double yi = y[i];
        yp.add(yi * p[i]);
        ys.add(yi);
        ps.add(p[i]);
    }
    return {yp.value(), ys.value(), ps.value()};
}

double dice_from_sums(const OverlapSums& s, double eps) { return (2.0 * s.yp + eps) / (s.y + s.p + eps); }

std::vector<double> clamped_values(const PredictionMap& p, double eps) {
    std::vector<double> out(p.values().begin(), p.values().end());
    for (double& v : out) v = std::clamp(v, eps, 1.0 - eps);
    return out;
}

void check_finite(double value, std::span<const double> gradient, LossKind kind) {
    bool ok = std::isfinite(value);
    for (double g : gradient) ok = ok && std::isfinite(g);
    if (!ok) {
        throw NumericError("non-finite " + std::string(to_string(kind)) + " loss");
    }
}

LossResult evaluate(LossKind kind, const PredictionMap& pmap, const MaskMap& ymap, const LossConfig& cfg,
                    bool want_gradient) {
    cfg.validate();
    check_shapes(pmap, ymap);
    const std::vector<double> p = clamped_values(pmap, cfg.clamp_eps);
    const std::span<const std::uint8_t> y = ymap.values();
    const std::size_t n = p.size();
    const double inv_n = 1.0 / static_cast<double>(n);

    LossResult out;
    if (want_gradient) out.gradient.assign(n, 0.0);

    if (is_pixel_separable(kind)) {
        CompensatedSum total;
        for (std::size_t i = 0; i < n; ++i) {
            total.add(separable_term(kind, p[i], y[i], cfg));
            if (want_gradient) out.gradient[i] = separable_derivative(kind, p[i], y[i], cfg) * inv_n;
        }
        out.value = total.value() * inv_n;
        check_finite(out.value, out.gradient, kind);
        return out;
    }

    const OverlapSums s = overlap_sums(p, y);
    const double eps = cfg.dice_eps;
    switch (kind) {
        case LossKind::BceDice:
        case LossKind::Dice: {
            const double denom = s.y + s.p + eps;
            const double num = 2.0 * s.yp + eps;
            out.value = 1.0 - num / denom;
            if (want_gradient) {
                for (std::size_t i = 0; i < n; ++i) {
                    const double yi = y[i];
                    out.gradient[i] = -(2.0 * yi * denom - num) / (denom * denom);
                }
            }
            if (kind == LossKind::BceDice) {
                CompensatedSum bce;
                for (std::size_t i = 0; i < n; ++i) {
                    bce.add(bce_term(p[i], y[i]));
                    if (want_gradient) out.gradient[i] += bce_derivative(p[i], y[i]) * inv_n;
                }
                out.value += bce.value() * inv_n;
            }
            break;
        }
        case LossKind::Iou: {
            const double denom = s.y + s.p - s.yp + eps;
            const double num = s.yp + eps;
            out.value = 1.0 - num / denom;
            if (want_gradient) {
                for (std::size_t i = 0; i < n; ++i) {
                    const double yi = y[i];
                    out.gradient[i] = -(yi * denom - num * (1.0 - yi)) / (denom * denom);
                }
            }
            break;
        }
        case LossKind::Tversky: {
            const double a = cfg.tversky_alpha;
            const double b = cfg.tversky_beta;
            const double num = s.yp + eps;
            const double denom = s.yp + a * (s.y - s.yp) + b * (s.p - s.yp) + eps;
            out.value = 1.0 - num / denom;
            if (want_gradient) {
                for (std::size_t i = 0; i < n; ++i) {
                    const double yi = y[i];
                    const double ddenom = yi * (1.0 - a) + (1.0 - yi) * b;
                    out.gradient[i] = -(yi * denom - num * ddenom) / (denom * denom);
                }
            }
            break;
        }
        default:
            throw std::invalid_argument("unsupported loss kind");
    }
    check_finite(out.value, out.gradient, kind);
    return out;
}

} // namespace

void LossConfig::validate() const {
    if (!(clamp_eps > 0.0 && clamp_eps < 0.5)) throw std::invalid_argument("clamp_eps must lie in (0, 0.5)");
    if (!(dice_eps > 0.0) || !std::isfinite(dice_eps)) throw std::invalid_argument("dice_eps must be positive");
    if (!(focal_gamma >= 0.0) || !std::isfinite(focal_gamma)) {
        throw std::invalid_argument("focal_gamma must be non-negative");
    }
    if (!(focal_alpha > 0.0 && focal_alpha < 1.0)) throw std::invalid_argument("focal_alpha must lie in (0, 1)");
    if (!(tversky_alpha >= 0.0) || !(tversky_beta >= 0.0) || !std::isfinite(tversky_alpha + tversky_beta)) {
        throw std::invalid_argument("tversky weights must be non-negative");
    }
}

bool is_pixel_separable(LossKind kind) {
    switch (kind) {
        case LossKind::BceDice:
        case LossKind::Dice:
        case LossKind::Tversky:
        case LossKind::Iou:
            return false;
        default:
            return true;
    }
}

PredictionMap clamp_probs(const PredictionMap& p, double eps) {
    if (!(eps > 0.0 && eps < 0.5)) throw std::invalid_argument("clamp eps must lie in (0, 0.5)");
    return PredictionMap(p.width(), p.height(), clamped_values(p, eps));
}

double dice_coefficient(const PredictionMap& p, const MaskMap& y, double eps) {
    check_shapes(p, y);
    if (!(eps > 0.0)) throw std::invalid_argument("dice eps must be positive");
    return dice_from_sums(overlap_sums(p.values(), y.values()), eps);
}

double loss_forward(LossKind kind, const PredictionMap& p, const MaskMap& y, const LossConfig& cfg) {
    return evaluate(kind, p, y, cfg, false).value;
}

LossResult loss_gradient(LossKind kind, const PredictionMap& p, const MaskMap& y, const LossConfig& cfg) {
    return evaluate(kind, p, y, cfg, true);
}

double pixel_term(LossKind kind, double p, double y, const LossConfig& cfg) {
    return separable_term(kind, std::clamp(p, cfg.clamp_eps, 1.0 - cfg.clamp_eps), y, cfg);
}

} // namespace calf
