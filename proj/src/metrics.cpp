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

#include "calf/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "calf/numeric.hpp"

namespace calf {

MaskMap binarize(const PredictionMap& p, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw std::invalid_argument("threshold must lie in (0, 1)");
    }
    std::vector<std::uint8_t> out(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) out[i] = p[i] >= threshold ? 1 : 0;
    return MaskMap(p.width(), p.height(), std::move(out));
}

ConfusionCounts confusion(const MaskMap& pred, const MaskMap& truth) {
    if (!pred.same_shape(truth)) {
        throw std::invalid_argument("confusion: shape mismatch");
    }
    ConfusionCounts c;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool p = pred[i] != 0;
        const bool t = truth[i] != 0;
        if (p && t) ++c.tp;
        else if (p) ++c.fp;
        else if (t) ++c.fn;
        else ++c.tn;
    }
    return c;
}

MetricReport report_from_counts(const ConfusionCounts& c, double mae) {
    const auto tp = static_cast<double>(c.tp);
    const auto fp = static_cast<double>(c.fp);
    const auto tn = static_cast<double>(c.tn);
    const auto fn = static_cast<double>(c.fn);

    MetricReport r;
    r.counts = c;
    r.mae = mae;
    r.accuracy = c.total() == 0 ? 0.0 : (tp + tn) / static_cast<double>(c.total());

    if (c.tp + c.fp + c.fn == 0) {
        r.dsc = 1.0;
        r.undefined.dsc = true;
    } else {
        r.dsc = 2.0 * tp / (2.0 * tp + fp + fn);
    }

    if (c.tp + c.fn == 0) {
        r.sensitivity = 1.0;
        r.undefined.sensitivity = true;
    } else {
        r.sensitivity = tp / (tp + fn);
    }

    if (c.tn + c.fp == 0) {
        r.specificity = 1.0;
        r.undefined.specificity = true;
    } else {
        r.specificity = tn / (tn + fp);
    }

    if (c.tp + c.fp == 0) {
        // Nothing predicted: perfect when there was nothing to find, else a miss.
        r.precision = c.fn == 0 ? 1.0 : 0.0;
        r.undefined.precision = true;
    } else {
        r.precision = tp / (tp + fp);
    }
    return r;
}

MetricReport report(const ConfusionCounts& counts, const PredictionMap& p, const MaskMap& truth) {
    if (!p.same_shape(truth)) {
        throw std::invalid_argument("report: shape mismatch");
    }
    if (counts.total() != p.size()) {
        throw std::invalid_argument("report: counts do not cover the pixel grid");
    }
    CompensatedSum abs_err;
    for (std::size_t i = 0; i < p.size(); ++i) abs_err.add(std::abs(p[i] - static_cast<double>(truth[i])));
    return report_from_counts(counts, abs_err.value() / static_cast<double>(p.size()));
}

MetricReport aggregate(std::span<const MetricReport> per_image, Averaging mode) {
    if (per_image.empty()) {
        throw std::invalid_argument("aggregate: no reports");
    }
    ConfusionCounts total;
    UndefinedRatios undefined;
    CompensatedSum pixel_abs_err;
    for (const auto& r : per_image) {
        total += r.counts;
        undefined.dsc = undefined.dsc || r.undefined.dsc;
        undefined.sensitivity = undefined.sensitivity || r.undefined.sensitivity;
        undefined.specificity = undefined.specificity || r.undefined.specificity;
        undefined.precision = undefined.precision || r.undefined.precision;
        pixel_abs_err.add(r.mae * static_cast<double>(r.counts.total()));
    }

    if (mode == Averaging::Micro) {
        return report_from_counts(total, pixel_abs_err.value() / static_cast<double>(total.total()));
    }

    CompensatedSum dsc, acc, mae, sens, spec, prec;
    for (const auto& r : per_image) {
        dsc.add(r.dsc);
        acc.add(r.accuracy);
        mae.add(r.mae);
        sens.add(r.sensitivity);
        spec.add(r.specificity);
        prec.add(r.precision);
    }
    const auto n = static_cast<double>(per_image.size());
    MetricReport out;
    out.dsc = dsc.value() / n;
    out.accuracy = acc.value() / n;
    out.mae = mae.value() / n;
    out.sensitivity = sens.value() / n;
    out.specificity = spec.value() / n;
    out.precision = prec.value() / n;
    out.counts = total;
    out.undefined = undefined;
    return out;
}

} // namespace calf
