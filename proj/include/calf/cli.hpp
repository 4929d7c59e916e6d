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
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "calf/data.hpp"
#include "calf/metrics.hpp"
#include "calf/moments.hpp"
#include "calf/selector.hpp"
#include "calf/trainer.hpp"

namespace calf::cli {

enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kDataError = 2,
    kNumericError = 3,
};

inline constexpr double kDefaultRatio = 0.409;
inline constexpr std::uint64_t kDefaultSeed = 42;

/// Runs one command. args excludes the program name, e.g. {"analyze", "--manifest", "m.jsonl"}.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct AnalyzeResult {
    MomentSummary moments;
    LossKind selected_loss = LossKind::BceDice;
};

AnalyzeResult analyze(const Corpus& corpus, AreaPolicy policy = {});

struct BenchConfig {
    std::vector<double> ratios{kDefaultRatio};
    // nullopt stands for CALF, i.e. selection from the training-set moments.
    std::vector<std::optional<LossKind>> losses;
    TrainConfig train;
    double test_fraction = 0.1;
    std::uint64_t seed = kDefaultSeed;
};

/// Table order of the benchmark losses: BCE, Tversky, IoU, Focal, Dice, BCE-Dice, CALF.
std::vector<std::optional<LossKind>> default_bench_losses();

struct BenchRow {
    std::string label;                    // "BCE", ..., "CALF"
    std::optional<LossKind> requested;    // nullopt for CALF
    std::optional<LossKind> trained_with; // resolved kind, unset when skipped before training
    bool skipped = false;
    std::string reason;
    MetricReport metrics;
};

struct BenchCell {
    double ratio = 0.0;
    std::size_t train_size = 0;
    std::size_t test_size = 0;
    std::optional<MomentSummary> calf_moments;
    std::vector<BenchRow> rows;
};

/// Filter, split, train and evaluate every (ratio, loss) pair. The filter and
/// split use cfg.seed so all losses at one ratio see the same held-out set;
/// training shuffles with derive_seed(cfg.seed, loss label, ratio).
std::vector<BenchCell> run_bench(const Corpus& corpus, const BenchConfig& cfg);

} // namespace calf::cli
