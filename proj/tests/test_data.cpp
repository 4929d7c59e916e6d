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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "calf/data.hpp"
#include "calf/error.hpp"
#include "calf/png_io.hpp"
#include "oracles.hpp"

using namespace calf;
using namespace calf::testing;

namespace {

std::string id_of(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "s%04zu", i);
    return buf;
}

Corpus exact_corpus(std::size_t present, std::size_t absent) {
    const std::size_t n = present + absent;
    Corpus c;
    c.width = 4;
    c.height = 4;
    for (std::size_t i = 0; i < n; ++i) {
        // Spread the present samples evenly so order preservation is visible.
        const bool roi = (i * present) / n != ((i + 1) * present) / n;
        std::vector<std::uint8_t> m(16, 0);
        if (roi) m[i % 16] = 1;
        c.samples.push_back(make_sample(id_of(i), GrayImage(4, 4, std::uint8_t{100}), MaskMap(4, 4, m)));
    }
    REQUIRE(c.present_count() == present);
    return c;
}

std::vector<std::string> ids(const Corpus& c) {
    std::vector<std::string> out;
    for (const auto& s : c.samples) out.push_back(s.id);
    return out;
}

void write_manifest(const std::filesystem::path& path, const std::vector<std::string>& lines) {
    std::ofstream f(path);
    for (const auto& l : lines) f << l << "\n";
}

} // namespace

TEST_CASE("png round trip agrees with an independent decoder") {
    TempDir dir("png");
    std::vector<std::uint8_t> v(7 * 5);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<std::uint8_t>(i * 7);
    const GrayImage img(7, 5, v);
    write_gray_png(dir.path() / "a.png", img);
    CHECK(read_gray_png(dir.path() / "a.png") == img);

    const cv::Mat m = cv::imread((dir.path() / "a.png").string(), cv::IMREAD_UNCHANGED);
    REQUIRE(m.type() == CV_8UC1);
    REQUIRE(m.cols == 7);
    REQUIRE(m.rows == 5);
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 7; ++x) CHECK(m.at<std::uint8_t>(y, x) == img(x, y));

    cv::Mat ext(3, 4, CV_8UC1);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 4; ++x) ext.at<std::uint8_t>(y, x) = static_cast<std::uint8_t>(10 * x + 50 * y);
    cv::imwrite((dir.path() / "b.png").string(), ext);
    const GrayImage back = read_gray_png(dir.path() / "b.png");
    CHECK(back.width() == 4);
    CHECK(back.height() == 3);
    CHECK(back(3, 2) == 130);
}

TEST_CASE("ingest binarizes masks with the nonzero rule") {
    TempDir dir("ingest");
    std::filesystem::create_directories(dir.path() / "img");
    write_gray_png(dir.path() / "img/a.png", GrayImage(4, 4, std::uint8_t{9}));
    std::vector<std::uint8_t> m(16, 0);
    m[0] = 255;
    m[1] = 1;
    m[2] = 128;
    write_gray_png(dir.path() / "img/a_mask.png", GrayImage(4, 4, m));
    write_gray_png(dir.path() / "img/b.png", GrayImage(4, 4, std::uint8_t{9}));
    write_gray_png(dir.path() / "img/b_mask.png", GrayImage(4, 4, std::uint8_t{0}));
    write_manifest(dir.path() / "m.jsonl", {R"({"id":"a","image":"img/a.png","mask":"img/a_mask.png"})",
                                            "",
                                            R"({"id":"b","image":"img/b.png","mask":"img/b_mask.png"})"});
    const Corpus c = ingest(dir.path() / "m.jsonl");
    REQUIRE(c.size() == 2);
    CHECK(c.width == 4);
    CHECK(c.samples[0].id == "a");
    CHECK(c.samples[0].foreground_area == 3);
    CHECK(c.samples[0].roi_present);
    CHECK(c.samples[0].mask[2] == 1);
    CHECK(c.samples[1].foreground_area == 0);
    CHECK_FALSE(c.samples[1].roi_present);
    CHECK(c.present_count() == 1);
}

TEST_CASE("ingest errors name the sample") {
    TempDir dir("ingest_err");
    write_gray_png(dir.path() / "a.png", GrayImage(4, 4, std::uint8_t{9}));
    write_gray_png(dir.path() / "small.png", GrayImage(2, 2, std::uint8_t{0}));
    cv::Mat rgb(4, 4, CV_8UC3, cv::Scalar(1, 2, 3));
    cv::imwrite((dir.path() / "rgb.png").string(), rgb);
    cv::Mat deep(4, 4, CV_16UC1, cv::Scalar(1000));
    cv::imwrite((dir.path() / "deep.png").string(), deep);

    auto expect_error = [&](const std::string& line, const std::string& needle) {
        write_manifest(dir.path() / "m.jsonl", {line});
        try {
            (void)ingest(dir.path() / "m.jsonl");
            FAIL("expected DataError");
        } catch (const DataError& e) {
            const std::string what = e.what();
            CHECK_MESSAGE(what.find(needle) != std::string::npos, what);
        }
    };
    expect_error(R"({"id":"missing_mask","image":"a.png","mask":"nope.png"})", "missing_mask");
    expect_error(R"({"id":"colour","image":"rgb.png","mask":"a.png"})", "colour");
    expect_error(R"({"id":"sixteen","image":"a.png","mask":"deep.png"})", "sixteen");
    expect_error(R"({"id":"shape","image":"a.png","mask":"small.png"})", "shape");
    expect_error(R"({"id":"noimage","mask":"a.png"})", "image");
    expect_error(R"(not json)", "1");

    write_manifest(dir.path() / "m.jsonl", {R"({"id":"x","image":"a.png","mask":"a.png"})",
                                            R"({"id":"x","image":"a.png","mask":"a.png"})"});
    CHECK_THROWS_AS(ingest(dir.path() / "m.jsonl"), DataError);

    write_gray_png(dir.path() / "big.png", GrayImage(8, 8, std::uint8_t{0}));
    write_manifest(dir.path() / "m.jsonl", {R"({"id":"x","image":"a.png","mask":"a.png"})",
                                            R"({"id":"y","image":"big.png","mask":"big.png"})"});
    try {
        (void)ingest(dir.path() / "m.jsonl");
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("'y'") != std::string::npos);
    }
    CHECK_THROWS_AS(ingest(dir.path() / "absent.jsonl"), DataError);
}

TEST_CASE("empty manifest gives an empty corpus") {
    TempDir dir("empty");
    write_manifest(dir.path() / "m.jsonl", {});
    const Corpus c = ingest(dir.path() / "m.jsonl");
    CHECK(c.empty());
    CHECK(c.width == 0);
}

TEST_CASE("write_corpus round trip") {
    TempDir dir("roundtrip");
    const Corpus c = exact_corpus(5, 7);
    const auto manifest = write_corpus(c, dir.path() / "out");
    const Corpus back = ingest(manifest);
    REQUIRE(back.size() == c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        CHECK(back.samples[i].id == c.samples[i].id);
        CHECK(back.samples[i].image == c.samples[i].image);
        CHECK(back.samples[i].mask == c.samples[i].mask);
    }
    const auto present = std::find_if(c.samples.begin(), c.samples.end(), [](const auto& s) { return s.roi_present; });
    REQUIRE(present != c.samples.end());
    const cv::Mat m = cv::imread((dir.path() / "out/masks" / (present->id + ".png")).string(),
                                 cv::IMREAD_UNCHANGED);
    double lo = 0, hi = 0;
    cv::minMaxLoc(m, &lo, &hi);
    CHECK(hi == 255.0);
}

TEST_CASE("ratio filter examples") {
    const Corpus c = exact_corpus(100, 300);
    auto counts = [&](double r) {
        const Corpus f = apply_ratio(c, {r, 42});
        return std::pair{f.present_count(), f.absent_count()};
    };
    CHECK(counts(0.5) == std::pair<std::size_t, std::size_t>{100, 100});
    CHECK(counts(0.1) == std::pair<std::size_t, std::size_t>{33, 300});
    CHECK(counts(1.0) == std::pair<std::size_t, std::size_t>{100, 0});
    CHECK(counts(0.0) == std::pair<std::size_t, std::size_t>{0, 300});
    CHECK(counts(0.409) == std::pair<std::size_t, std::size_t>{100, 144});
    CHECK(counts(0.85) == std::pair<std::size_t, std::size_t>{100, 18});
}

TEST_CASE("ratio filter properties") {
    const Corpus c = exact_corpus(100, 300);
    const auto all_ids = ids(c);
    for (double r : {0.0, 0.05, 0.1, 0.25, 0.409, 0.5, 0.6, 0.85, 0.99, 1.0}) {
        CAPTURE(r);
        const Corpus f = apply_ratio(c, {r, 7});
        REQUIRE_FALSE(f.empty());
        const double frac = static_cast<double>(f.present_count()) / static_cast<double>(f.size());
        CHECK(std::abs(frac - r) <= 1.0 / static_cast<double>(f.size()));
        // Subset in original order.
        const auto got = ids(f);
        CHECK(std::includes(all_ids.begin(), all_ids.end(), got.begin(), got.end()));
        CHECK(std::is_sorted(got.begin(), got.end()));
        // Same seed, same result; filtering again changes nothing.
        CHECK(ids(apply_ratio(c, {r, 7})) == got);
        CHECK(ids(apply_ratio(f, {r, 7})) == got);
        CHECK(ids(apply_ratio(f, {r, 1234})) == got);
    }
    CHECK(ids(apply_ratio(c, {0.5, 1})) != ids(apply_ratio(c, {0.5, 2})));
}

TEST_CASE("ratio filter rejects impossible mixes") {
    CHECK_THROWS_AS(apply_ratio(exact_corpus(0, 10), {0.5, 1}), DataError);
    CHECK_THROWS_AS(apply_ratio(exact_corpus(10, 0), {0.5, 1}), DataError);
    CHECK_THROWS_AS(apply_ratio(exact_corpus(0, 10), {1.0, 1}), DataError);
    CHECK_THROWS_AS(apply_ratio(exact_corpus(5, 5), {1.5, 1}), std::invalid_argument);
    try {
        (void)apply_ratio(exact_corpus(0, 10), {0.3, 1});
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("cannot achieve ratio") != std::string::npos);
    }
    CHECK(apply_ratio(exact_corpus(0, 10), {0.0, 1}).size() == 10);
}

TEST_CASE("stratified split") {
    const Corpus c = exact_corpus(30, 70);
    const CorpusSplit a = split(c, 0.1, 42);
    CHECK(a.train.size() == 90);
    CHECK(a.test.size() == 10);
    CHECK(a.test.present_count() == 3);
    const CorpusSplit b = split(c, 0.1, 42);
    CHECK(ids(a.test) == ids(b.test));
    CHECK(ids(a.train) == ids(b.train));
    CHECK(ids(split(c, 0.1, 43).test) != ids(a.test));

    std::set<std::string> seen;
    for (const auto& s : a.train.samples) seen.insert(s.id);
    for (const auto& s : a.test.samples) CHECK(seen.insert(s.id).second);
    CHECK(seen.size() == 100);
    const auto t = ids(a.test);
    CHECK(std::is_sorted(t.begin(), t.end()));

    const CorpusSplit half = split(exact_corpus(40, 60), 0.5, 9);
    CHECK(half.test.size() == 50);
    CHECK(half.test.present_count() >= 19);
    CHECK(half.test.present_count() <= 21);

    CHECK_THROWS_AS(split(c, 0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(split(c, 1.0, 1), std::invalid_argument);
}

TEST_CASE("round half even") {
    CHECK(round_half_even(0.5) == 0);
    CHECK(round_half_even(1.5) == 2);
    CHECK(round_half_even(2.5) == 2);
    CHECK(round_half_even(2.5000001) == 3);
    CHECK(round_half_even(-0.5) == 0);
    CHECK(round_half_even(-1.5) == -2);
    CHECK(round_half_even(33.333) == 33);
}

TEST_CASE("corpus invariants") {
    Corpus c = exact_corpus(2, 2);
    CHECK_NOTHROW(c.check_invariants());
    c.samples[1].id = c.samples[0].id;
    CHECK_THROWS_AS(c.check_invariants(), DataError);
}
