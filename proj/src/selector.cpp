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

#include "calf/selector.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "calf/error.hpp"

namespace calf {

bool is_calf_kind(LossKind kind) {
    return std::find(kCalfKinds.begin(), kCalfKinds.end(), kind) != kCalfKinds.end();
}

std::string_view to_string(LossKind kind) {
    switch (kind) {
        case LossKind::Fisher: return "fisher";
        case LossKind::Logit: return "logit";
        case LossKind::Arcsine: return "arcsine";
        case LossKind::Log10: return "log10";
        case LossKind::NaturalLog: return "natural_log";
        case LossKind::BceDice: return "bce_dice";
        case LossKind::Bce: return "bce";
        case LossKind::Dice: return "dice";
        case LossKind::Tversky: return "tversky";
        case LossKind::Iou: return "iou";
        case LossKind::Focal: return "focal";
    }
    return "unknown";
}

std::string_view display_name(LossKind kind) {
    switch (kind) {
        case LossKind::Fisher: return "Fisher";
        case LossKind::Logit: return "Logit";
        case LossKind::Arcsine: return "Arcsine";
        case LossKind::Log10: return "Log10";
        case LossKind::NaturalLog: return "NaturalLog";
        case LossKind::BceDice: return "BCE-Dice";
        case LossKind::Bce: return "BCE";
        case LossKind::Dice: return "Dice";
        case LossKind::Tversky: return "Tversky";
        case LossKind::Iou: return "IoU";
        case LossKind::Focal: return "Focal";
    }
    return "unknown";
}

std::optional<LossKind> parse_loss_kind(std::string_view name) {
    std::string key;
    for (char c : name) {
        if (c == '-' || c == '_' || c == ' ') continue;
        key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    if (key == "fisher") return LossKind::Fisher;
    if (key == "logit") return LossKind::Logit;
    if (key == "arcsine" || key == "arcsin") return LossKind::Arcsine;
    if (key == "log10") return LossKind::Log10;
    if (key == "naturallog" || key == "ln") return LossKind::NaturalLog;
    if (key == "bcedice") return LossKind::BceDice;
    if (key == "bce") return LossKind::Bce;
    if (key == "dice") return LossKind::Dice;
    if (key == "tversky") return LossKind::Tversky;
    if (key == "iou" || key == "jaccard") return LossKind::Iou;
    if (key == "focal") return LossKind::Focal;
    return std::nullopt;
}

LossKind select_loss(double skewness, double kurtosis_excess) {
    if (!std::isfinite(skewness) || !std::isfinite(kurtosis_excess)) {
        throw NumericError("non-finite moment");
    }
    const double s = skewness;
    if (s <= -1.0) return LossKind::Fisher;
    if (s <= -0.5) return LossKind::Logit;
    if (s < 0.0) return LossKind::Arcsine;
    if (s >= 1.0) return LossKind::Log10;
    if (s >= 0.5) return LossKind::NaturalLog;
    // 0 <= s < 0.5 here.
    return kurtosis_excess < 0.0 ? LossKind::Log10 : LossKind::BceDice;
}

} // namespace calf
