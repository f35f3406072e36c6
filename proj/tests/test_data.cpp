#include <catch2/catch.hpp>

#include "shaqlab/data.hpp"

#include <cstdio>
#include <numeric>

using namespace shaqlab;

namespace {

std::vector<uint8_t> iota_bytes(size_t n) {
    std::vector<uint8_t> v(n);
    for (size_t i = 0; i < n; ++i) v[i] = uint8_t(i % 251);
    return v;
}

std::string write_temp(const std::vector<uint8_t>& bytes, const std::string& name) {
    std::ofstream f(name, std::ios::binary | std::ios::trunc);
    f.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    return name;
}

}  // namespace

TEST_CASE("split ratios and the remainder rule") {
    auto s1 = split_bytes(iota_bytes(1000), "mem");
    REQUIRE(s1.train.size() == 900);
    REQUIRE(s1.valid.size() == 50);
    REQUIRE(s1.test.size() == 50);

    auto s2 = split_bytes(iota_bytes(1003), "mem");
    REQUIRE(s2.train.size() == 903);
    REQUIRE(s2.valid.size() == 50);
    REQUIRE(s2.test.size() == 50);
}

TEST_CASE("concatenated splits reproduce the input bytes") {
    auto bytes = iota_bytes(4321);
    auto s = split_bytes(bytes, "mem");
    std::vector<uint8_t> joined;
    joined.insert(joined.end(), s.train.begin(), s.train.end());
    joined.insert(joined.end(), s.valid.begin(), s.valid.end());
    joined.insert(joined.end(), s.test.begin(), s.test.end());
    REQUIRE(joined == bytes);
}

TEST_CASE("load_corpus errors") {
    REQUIRE_THROWS_WITH(load_corpus("definitely_missing_file.bin"), Catch::Contains("cannot open"));
    auto empty = write_temp({}, "test_data_empty.bin");
    REQUIRE_THROWS_WITH(load_corpus(empty), Catch::Contains("empty"));
    auto small = write_temp(iota_bytes(100), "test_data_small.bin");
    REQUIRE_THROWS_WITH(load_corpus(small, 16), Catch::Contains("shorter"));
    REQUIRE_NOTHROW(load_corpus(small, 10));
    std::remove(empty.c_str());
    std::remove(small.c_str());
}

TEST_CASE("batchify layout") {
    auto t = batchify(iota_bytes(10), 2);
    REQUIRE(t.len == 5);
    REQUIRE(t.at(0, 1) == 5);  // column 1 continues track 1
    REQUIRE(t.at(0, 0) == 0);
    REQUIRE(t.at(4, 1) == 9);

    auto single = batchify(iota_bytes(7), 1);
    REQUIRE(single.len == 7);
    for (int64_t i = 0; i < 7; ++i) REQUIRE(single.at(i, 0) == uint8_t(i));
}

TEST_CASE("batchify conserves all but the trailing remainder") {
    auto bytes = iota_bytes(103);
    auto t = batchify(bytes, 4);  // track length 25, 3 bytes dropped
    REQUIRE(t.len == 25);
    std::vector<int> counts(256, 0);
    for (int64_t r = 0; r < t.len; ++r)
        for (int64_t b = 0; b < 4; ++b) counts[t.at(r, b)] += 1;
    std::vector<int> expect(256, 0);
    for (size_t i = 0; i < 100; ++i) expect[bytes[i]] += 1;
    REQUIRE(counts == expect);
}

TEST_CASE("batchify rejects a batch larger than the split") {
    REQUIRE_THROWS_AS(batchify(iota_bytes(3), 4), std::invalid_argument);
}

TEST_CASE("window lengths respect the floor") {
    BatchPlan plan;
    plan.center = 5;
    std::mt19937_64 rng(1);
    for (int i = 0; i < 500; ++i) REQUIRE(draw_window_length(plan, rng) >= kMinWindow);
}

TEST_CASE("window stream is deterministic under a fixed seed") {
    auto tracks = batchify(iota_bytes(5000), 4);
    BatchPlan plan;
    plan.center = 32;
    auto collect = [&](uint64_t seed) {
        std::mt19937_64 rng(seed);
        int64_t cursor = 0;
        std::vector<int64_t> lens;
        while (auto w = next_window(tracks, plan, cursor, rng)) lens.push_back(w->inputs.dim(0));
        return lens;
    };
    REQUIRE(collect(99) == collect(99));
    REQUIRE(collect(99) != collect(100));
}

TEST_CASE("mean window length matches the declared law") {
    // mean of max(5, round(N(center,5))) with a 5% chance of center/2
    auto tracks = batchify(iota_bytes(400000), 2);
    BatchPlan plan;
    plan.center = 64;
    std::mt19937_64 rng(7);
    int64_t cursor = 0;
    double total = 0;
    int64_t n = 0;
    while (auto w = next_window(tracks, plan, cursor, rng)) {
        total += double(w->inputs.dim(0));
        ++n;
    }
    const double mean = total / double(n);
    const double expect = 0.95 * 64.0 + 0.05 * 32.0;
    REQUIRE(std::abs(mean - expect) / expect < 0.05);
}

TEST_CASE("targets are inputs shifted by one along every track") {
    auto tracks = batchify(iota_bytes(3000), 3);
    BatchPlan plan;
    plan.center = 17;
    std::mt19937_64 rng(3);
    int64_t cursor = 0;
    while (auto w = next_window(tracks, plan, cursor, rng)) {
        const int64_t l = w->inputs.dim(0);
        for (int64_t t = 0; t + 1 < l; ++t)
            for (int64_t b = 0; b < 3; ++b) REQUIRE(w->targets.at(t, b) == w->inputs.at(t + 1, b));
    }
}

TEST_CASE("consecutive windows are contiguous") {
    auto tracks = batchify(iota_bytes(2000), 2);
    BatchPlan plan;
    plan.center = 23;
    std::mt19937_64 rng(5);
    int64_t cursor = 0;
    int32_t prev_last = -1;
    while (auto w = next_window(tracks, plan, cursor, rng)) {
        if (prev_last >= 0) {
            // the first target byte of this window is the previous window's
            // last target: nothing skipped, nothing repeated
            REQUIRE(w->inputs.at(0, 0) == prev_last);
        }
        prev_last = w->targets.at(w->targets.dim(0) - 1, 0);
    }
}

TEST_CASE("evaluation windows are fixed length plus a final remainder") {
    auto tracks = batchify(iota_bytes(1000), 2);  // track length 500
    int64_t cursor = 0;
    std::vector<int64_t> lens;
    while (auto w = next_eval_window(tracks, 64, cursor)) lens.push_back(w->inputs.dim(0));
    REQUIRE(lens.size() == 8);
    for (size_t i = 0; i + 1 < lens.size(); ++i) REQUIRE(lens[i] == 64);
    REQUIRE(lens.back() == 499 - 7 * 64);
    // a second pass is identical
    cursor = 0;
    std::vector<int64_t> lens2;
    while (auto w = next_eval_window(tracks, 64, cursor)) lens2.push_back(w->inputs.dim(0));
    REQUIRE(lens == lens2);
}
