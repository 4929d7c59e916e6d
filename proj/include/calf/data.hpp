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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "calf/grid.hpp"

namespace calf {

struct SampleRecord {
    std::string id;
    std::filesystem::path image_path;  // empty for samples that only live in memory
    std::filesystem::path mask_path;
    bool roi_present = false;
    std::uint64_t foreground_area = 0;
    GrayImage image;
    MaskMap mask;
};

/// Builds a record from pixel data, filling the area and ROI flag from the mask.
SampleRecord make_sample(std::string id, GrayImage image, MaskMap mask);

/// Ordered samples of uniform size with unique ids. Width and height are 0 for
/// an empty corpus.
struct Corpus {
    std::vector<SampleRecord> samples;
    std::size_t width = 0;
    std::size_t height = 0;

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
    std::size_t present_count() const;
    std::size_t absent_count() const { return size() - present_count(); }

    /// Throws DataError on mismatched dimensions or duplicate ids.
    void check_invariants() const;
};

/// Reads a JSONL manifest of {"id", "image", "mask"} records. Paths are relative
/// to the manifest's directory. Masks are binarized with the nonzero rule. Errors
/// name the offending sample id.
Corpus ingest(const std::filesystem::path& manifest_path);

/// Writes images/<id>.png, masks/<id>.png (foreground as 255) and manifest.jsonl
/// under dir. Returns the manifest path.
std::filesystem::path write_corpus(const Corpus& corpus, const std::filesystem::path& dir);

/// Target fraction of ROI-present samples in a filtered corpus.
struct RatioSpec {
    double ratio = 0.409;
    std::uint64_t seed = 42;
};

/// Keeps every sample of one class and a seeded uniform subsample of the other
/// so the present fraction approximates spec.ratio. The subsample size is
/// round-half-even of the exact target. When keeping every present sample and
/// keeping every absent sample are both possible, the larger result wins, which
/// makes the filter idempotent. Result preserves input order.
/// Throws DataError("cannot achieve ratio") when the requested mix is impossible.
Corpus apply_ratio(const Corpus& corpus, const RatioSpec& spec);

struct CorpusSplit {
    Corpus train;
    Corpus test;
};

/// Class-stratified, seeded split. The test set holds round(N * f) samples of
/// which round(P * f) are ROI-present. Both halves preserve input order.
CorpusSplit split(const Corpus& corpus, double test_fraction, std::uint64_t seed);

/// Nearest integer with ties to even.
std::int64_t round_half_even(double x);

} // namespace calf
