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

#include "calf/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "calf/error.hpp"
#include "calf/moments.hpp"
#include "calf/png_io.hpp"
#include "calf/rng.hpp"

namespace calf {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string dims(std::size_t w, std::size_t h) { return std::to_string(w) + "x" + std::to_string(h); }

std::string json_string_field(const json& rec, const char* key, std::size_t line_no) {
    auto it = rec.find(key);
    if (it == rec.end() || !it->is_string()) {
        throw DataError("manifest line " + std::to_string(line_no) + ": missing string field \"" + key + "\"");
    }
    return it->get<std::string>();
}

MaskMap binarize_mask(const GrayImage& raw) {
    std::vector<std::uint8_t> bits(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) bits[i] = raw[i] != 0 ? 1 : 0;
    return MaskMap(raw.width(), raw.height(), std::move(bits));
}

// Indices of one class ordered by id, then shuffled.
std::vector<std::size_t> shuffled_by_id(const Corpus& corpus, std::vector<std::size_t> idx, Rng& rng) {
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return corpus.samples[a].id < corpus.samples[b].id; });
    rng.shuffle(idx);
    return idx;
}

Corpus select(const Corpus& corpus, const std::vector<bool>& keep) {
    Corpus out;
    out.width = corpus.width;
    out.height = corpus.height;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (keep[i]) out.samples.push_back(corpus.samples[i]);
    }
    if (out.empty()) {
        out.width = 0;
        out.height = 0;
    }
    return out;
}

void partition(const Corpus& corpus, std::vector<std::size_t>& present, std::vector<std::size_t>& absent) {
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        (corpus.samples[i].roi_present ? present : absent).push_back(i);
    }
}

} // namespace

std::int64_t round_half_even(double x) {
    const double r = std::round(x);
    if (std::abs(x - std::trunc(x)) == 0.5) {
        // Halfway: pick the even neighbour.
        const double lower = std::floor(x);
        return static_cast<std::int64_t>(std::fmod(lower, 2.0) == 0.0 ? lower : lower + 1.0);
    }
    return static_cast<std::int64_t>(r);
}

SampleRecord make_sample(std::string id, GrayImage image, MaskMap mask) {
    if (!image.same_shape(mask)) {
        throw DataError("sample '" + id + "': image " + dims(image.width(), image.height()) + " and mask " +
                        dims(mask.width(), mask.height()) + " differ in size");
    }
    SampleRecord s;
    s.id = std::move(id);
    s.foreground_area = foreground_area(mask);
    s.roi_present = s.foreground_area > 0;
    s.image = std::move(image);
    s.mask = std::move(mask);
    return s;
}

std::size_t Corpus::present_count() const {
    return static_cast<std::size_t>(
        std::count_if(samples.begin(), samples.end(), [](const SampleRecord& s) { return s.roi_present; }));
}

void Corpus::check_invariants() const {
    std::set<std::string> ids;
    for (const auto& s : samples) {
        if (!ids.insert(s.id).second) {
            throw DataError("duplicate sample id '" + s.id + "'");
        }
        if (!s.image.same_shape(width, height) || !s.mask.same_shape(width, height)) {
            throw DataError("sample '" + s.id + "': dimensions " + dims(s.image.width(), s.image.height()) +
                            " differ from corpus " + dims(width, height));
        }
        if (s.roi_present != (s.foreground_area > 0) || s.foreground_area != foreground_area(s.mask)) {
            throw DataError("sample '" + s.id + "': stale foreground area");
        }
    }
}

Corpus ingest(const fs::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) {
        throw DataError("cannot open manifest " + manifest_path.string());
    }
    const fs::path base = manifest_path.parent_path();

    Corpus corpus;
    std::set<std::string> ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw DataError("manifest line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!rec.is_object()) {
            throw DataError("manifest line " + std::to_string(line_no) + ": expected an object");
        }
        std::string id = json_string_field(rec, "id", line_no);
        const fs::path image_path = base / json_string_field(rec, "image", line_no);
        const fs::path mask_path = base / json_string_field(rec, "mask", line_no);

        if (!ids.insert(id).second) {
            throw DataError("duplicate sample id '" + id + "'");
        }
        if (!fs::exists(image_path)) {
            throw DataError("sample '" + id + "': missing image file " + image_path.string());
        }
        if (!fs::exists(mask_path)) {
            throw DataError("sample '" + id + "': missing mask file " + mask_path.string());
        }

        GrayImage image;
        GrayImage raw_mask;
        try {
            image = read_gray_png(image_path);
            raw_mask = read_gray_png(mask_path);
        } catch (const DataError& e) {
            throw DataError("sample '" + id + "': " + e.what());
        }

        SampleRecord s = make_sample(id, std::move(image), binarize_mask(raw_mask));
        s.image_path = image_path;
        s.mask_path = mask_path;

        if (corpus.empty()) {
            corpus.width = s.image.width();
            corpus.height = s.image.height();
        } else if (!s.image.same_shape(corpus.width, corpus.height)) {
            throw DataError("sample '" + id + "': dimensions " + dims(s.image.width(), s.image.height()) +
                            " differ from corpus " + dims(corpus.width, corpus.height));
        }
        corpus.samples.push_back(std::move(s));
    }
    return corpus;
}

fs::path write_corpus(const Corpus& corpus, const fs::path& dir) {
    corpus.check_invariants();
    fs::create_directories(dir / "images");
    fs::create_directories(dir / "masks");
    const fs::path manifest = dir / "manifest.jsonl";
    std::ofstream out(manifest, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot write " + manifest.string());
    }
    for (const auto& s : corpus.samples) {
        if (s.id.empty() || s.id.find_first_of("/\\") != std::string::npos || s.id == "." || s.id == "..") {
            throw DataError("sample id '" + s.id + "' is not usable as a file name");
        }
        const std::string image_rel = "images/" + s.id + ".png";
        const std::string mask_rel = "masks/" + s.id + ".png";
        write_gray_png(dir / image_rel, s.image);

        std::vector<std::uint8_t> mask_pixels(s.mask.size());
        for (std::size_t i = 0; i < s.mask.size(); ++i) mask_pixels[i] = s.mask[i] ? 255 : 0;
        write_gray_png(dir / mask_rel, GrayImage(s.mask.width(), s.mask.height(), std::move(mask_pixels)));

        json rec = {{"id", s.id}, {"image", image_rel}, {"mask", mask_rel}};
        out << rec.dump() << '\n';
    }
    if (!out) {
        throw DataError("failed writing " + manifest.string());
    }
    return manifest;
}

Corpus apply_ratio(const Corpus& corpus, const RatioSpec& spec) {
    const double r = spec.ratio;
    if (!(r >= 0.0 && r <= 1.0)) {
        throw std::invalid_argument("ratio must lie in [0, 1]");
    }
    if (corpus.empty()) {
        throw DataError("cannot achieve ratio: empty corpus");
    }

    std::vector<std::size_t> present, absent;
    partition(corpus, present, absent);
    const auto P = static_cast<std::int64_t>(present.size());
    const auto A = static_cast<std::int64_t>(absent.size());

    std::int64_t keep_present = P;
    std::int64_t keep_absent = A;
    if (r == 1.0) {
        keep_absent = 0;
    } else if (r == 0.0) {
        keep_present = 0;
    } else {
        if (P == 0 || A == 0) {
            throw DataError("cannot achieve ratio " + std::to_string(r) + ": corpus has " + std::to_string(P) +
                            " ROI-present and " + std::to_string(A) + " ROI-absent samples");
        }
        const std::int64_t absent_target = round_half_even(static_cast<double>(P) * (1.0 - r) / r);
        const std::int64_t present_target = round_half_even(static_cast<double>(A) * r / (1.0 - r));
        const bool all_present_ok = absent_target <= A;
        const bool all_absent_ok = present_target <= P;
        if (all_present_ok && (!all_absent_ok || P + absent_target >= A + present_target)) {
            keep_absent = absent_target;
        } else {
            keep_present = present_target;
        }
    }
    if (keep_present + keep_absent == 0) {
        throw DataError("cannot achieve ratio " + std::to_string(r) + ": no samples of the required class");
    }

    Rng rng(spec.seed);
    std::vector<bool> keep(corpus.size(), false);
    auto take = [&](const std::vector<std::size_t>& cls, std::int64_t k) {
        if (k == static_cast<std::int64_t>(cls.size())) {
            for (std::size_t i : cls) keep[i] = true;
            return;
        }
        const auto order = shuffled_by_id(corpus, cls, rng);
        for (std::int64_t j = 0; j < k; ++j) keep[order[static_cast<std::size_t>(j)]] = true;
    };
    take(present, keep_present);
    take(absent, keep_absent);
    return select(corpus, keep);
}

CorpusSplit split(const Corpus& corpus, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw std::invalid_argument("test_fraction must lie in (0, 1)");
    }
    std::vector<std::size_t> present, absent;
    partition(corpus, present, absent);

    Rng rng(seed);
    present = shuffled_by_id(corpus, present, rng);
    absent = shuffled_by_id(corpus, absent, rng);

    const auto n_test = static_cast<std::size_t>(round_half_even(static_cast<double>(corpus.size()) * test_fraction));
    std::size_t p_test = std::min(
        present.size(), static_cast<std::size_t>(round_half_even(static_cast<double>(present.size()) * test_fraction)));
    p_test = std::min(p_test, n_test);
    const std::size_t a_test = std::min(absent.size(), n_test - p_test);
    p_test = std::min(present.size(), n_test - a_test);

    std::vector<bool> in_test(corpus.size(), false);
    for (std::size_t j = 0; j < p_test; ++j) in_test[present[j]] = true;
    for (std::size_t j = 0; j < a_test; ++j) in_test[absent[j]] = true;

    std::vector<bool> in_train(in_test.size());
    for (std::size_t i = 0; i < in_test.size(); ++i) in_train[i] = !in_test[i];
    return {select(corpus, in_train), select(corpus, in_test)};
}

} // namespace calf
