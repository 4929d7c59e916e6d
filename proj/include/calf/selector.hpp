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
#include <optional>
#include <string>
#include <string_view>

namespace calf {

enum class LossKind {
    // Conditional transforms.
    Fisher,
    Logit,
    Arcsine,
    Log10,
    NaturalLog,
    BceDice,
    // Benchmark baselines.
    Bce,
    Dice,
    Tversky,
    Iou,
    Focal,
};

inline constexpr std::array<LossKind, 6> kCalfKinds = {
    LossKind::Fisher, LossKind::Logit,      LossKind::Arcsine,
    LossKind::Log10,  LossKind::NaturalLog, LossKind::BceDice,
};

inline constexpr std::array<LossKind, 11> kAllKinds = {
    LossKind::Fisher,  LossKind::Logit, LossKind::Arcsine, LossKind::Log10,
    LossKind::NaturalLog, LossKind::BceDice, LossKind::Bce, LossKind::Dice,
    LossKind::Tversky, LossKind::Iou,   LossKind::Focal,
};

bool is_calf_kind(LossKind kind);

/// Stable machine name, e.g. "bce_dice". Round-trips through parse_loss_kind.
std::string_view to_string(LossKind kind);

/// Human-facing name used in result tables, e.g. "BCE-Dice".
std::string_view display_name(LossKind kind);

/// Case-insensitive; accepts the machine name plus a few common spellings
/// ("bce-dice", "naturallog", "ln", "jaccard"). Returns nullopt when unknown.
std::optional<LossKind> parse_loss_kind(std::string_view name);

/// Maps (skewness, excess kurtosis) of the training-set area distribution to a
/// transform. Conditions are tried in this order and the first match wins:
///
///   S <= -1                     Fisher
///   -1 < S <= -0.5              Logit
///   -0.5 < S < 0                Arcsine
///   S >= 1                      Log10
///   0.5 <= S < 1                NaturalLog
///   0 <= S <= 0.5, K < 0        Log10
///   0 <= S <= 0.5, K >= 0       BceDice
///
/// S = 0.5 therefore selects NaturalLog, and S = 0 falls into the last pair.
/// Throws NumericError("non-finite moment") on NaN or infinite input.
LossKind select_loss(double skewness, double kurtosis_excess);

} // namespace calf
