#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "shaqlab/tensor.hpp"

namespace shaqlab {

// Raw byte corpus partitioned 90/5/5; no decoding, the vocabulary is the 256
// byte values. Concatenating the splits reproduces the original file.
struct CorpusSplits {
    std::vector<uint8_t> train, valid, test;
    std::string source;
    uint64_t total = 0;
};

inline CorpusSplits split_bytes(std::vector<uint8_t> bytes, std::string source) {
    CorpusSplits s;
    s.total = bytes.size();
    s.source = std::move(source);
    const uint64_t n = bytes.size();
    const uint64_t valid_len = n / 20;  // 5%
    const uint64_t test_len = n / 20;
    const uint64_t train_len = n - valid_len - test_len;  // train takes the remainder
    s.train.assign(bytes.begin(), bytes.begin() + train_len);
    s.valid.assign(bytes.begin() + train_len, bytes.begin() + train_len + valid_len);
    s.test.assign(bytes.begin() + train_len + valid_len, bytes.end());
    return s;
}

// batch_hint > 0 enforces the minimal-batch rule: the file must hold at least
// batch_hint * 10 bytes so each split can form one minimal batch.
inline CorpusSplits load_corpus(const std::string& path, int64_t batch_hint = 0) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_corpus: cannot open " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.empty()) throw std::runtime_error("load_corpus: " + path + " is empty");
    if (batch_hint > 0 && static_cast<int64_t>(bytes.size()) < batch_hint * 10) {
        throw std::runtime_error("load_corpus: " + path + " shorter than batch*10 = " +
                                 std::to_string(batch_hint * 10) + " bytes");
    }
    return split_bytes(std::move(bytes), path);
}

// Contiguous-stream batching: the split is cut into B equal tracks and column
// i continues track i, so recurrent state carryover is meaningful. Trailing
// remainder bytes are dropped.
struct Tracks {
    int64_t len = 0;  // track length (time steps)
    int64_t batch = 0;
    std::vector<uint8_t> data;  // [len, batch] row-major

    uint8_t at(int64_t t, int64_t b) const { return data[size_t(t * batch + b)]; }
};

inline Tracks batchify(const std::vector<uint8_t>& split, int64_t batch) {
    const int64_t n = static_cast<int64_t>(split.size());
    if (batch < 1 || batch > n) {
        throw std::invalid_argument("batchify: batch " + std::to_string(batch) + " for " +
                                    std::to_string(n) + " bytes");
    }
    Tracks t;
    t.len = n / batch;
    t.batch = batch;
    t.data.resize(size_t(t.len * batch));
    for (int64_t b = 0; b < batch; ++b) {
        for (int64_t r = 0; r < t.len; ++r) t.data[size_t(r * batch + b)] = split[size_t(b * t.len + r)];
    }
    return t;
}

constexpr int64_t kMinWindow = 5;

// Variable-length window plan: lengths drawn as round(Normal(center, 5))
// clamped at 5, with a 5% chance of using center/2 instead.
struct BatchPlan {
    int64_t batch = 16;
    int64_t center = 256;  // L_c
    uint64_t seed = 0;
};

struct Window {
    Tensor<int32_t> inputs;   // [L, B]
    Tensor<int32_t> targets;  // [L, B], inputs shifted one position
};

inline int64_t draw_window_length(const BatchPlan& plan, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double center = u(rng) < 0.05 ? double(plan.center) / 2.0 : double(plan.center);
    std::normal_distribution<double> normal(center, 5.0);
    return std::max<int64_t>(kMinWindow, std::llround(normal(rng)));
}

// Emits the next training window and advances the cursor by L, so windows are
// contiguous along every track; the tail shorter than the minimum window ends
// the epoch.
inline std::optional<Window> next_window(const Tracks& tracks, const BatchPlan& plan,
                                         int64_t& cursor, std::mt19937_64& rng) {
    const int64_t remaining = tracks.len - 1 - cursor;  // need one extra byte for targets
    if (remaining < kMinWindow) return std::nullopt;
    const int64_t len = std::min(draw_window_length(plan, rng), remaining);
    Window w{Tensor<int32_t>({len, tracks.batch}), Tensor<int32_t>({len, tracks.batch})};
    for (int64_t t = 0; t < len; ++t) {
        for (int64_t b = 0; b < tracks.batch; ++b) {
            w.inputs.at(t, b) = tracks.at(cursor + t, b);
            w.targets.at(t, b) = tracks.at(cursor + t + 1, b);
        }
    }
    cursor += len;
    return w;
}

// Evaluation windows use the fixed length L_c (no randomness); the final
// partial window covers the rest of the track so every position is scored.
inline std::optional<Window> next_eval_window(const Tracks& tracks, int64_t center, int64_t& cursor) {
    const int64_t remaining = tracks.len - 1 - cursor;
    if (remaining < 1) return std::nullopt;
    const int64_t len = std::min(center, remaining);
    Window w{Tensor<int32_t>({len, tracks.batch}), Tensor<int32_t>({len, tracks.batch})};
    for (int64_t t = 0; t < len; ++t) {
        for (int64_t b = 0; b < tracks.batch; ++b) {
            w.inputs.at(t, b) = tracks.at(cursor + t, b);
            w.targets.at(t, b) = tracks.at(cursor + t + 1, b);
        }
    }
    cursor += len;
    return w;
}

}  // namespace shaqlab
