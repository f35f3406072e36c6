#pragma once

#include "shaqlab/nn.hpp"

namespace shaqlab {

enum class FeedForwardKind { Boom, Fc, None };

template <typename T>
struct FeedForwardParams {
    FeedForwardKind kind = FeedForwardKind::None;
    int64_t d_model = 0;
    int64_t d_inner = 0;
    Var<T> w1, b1;  // [d_model, d_inner], [d_inner]
    Var<T> w2, b2;  // fc only: [d_inner, d_model], [d_model]
};

template <typename T, typename Rng>
FeedForwardParams<T> make_feedforward_params(FeedForwardKind kind, int64_t d_model, int64_t d_inner,
                                             Rng& rng) {
    FeedForwardParams<T> p;
    p.kind = kind;
    p.d_model = d_model;
    p.d_inner = d_inner;
    if (kind == FeedForwardKind::None) return p;
    if (kind == FeedForwardKind::Boom && d_inner % d_model != 0) {
        throw std::invalid_argument("boom: d_inner " + std::to_string(d_inner) +
                                    " not divisible by d_model " + std::to_string(d_model));
    }
    Tensor<T> w1({d_model, d_inner});
    fill_uniform(w1, rng, static_cast<T>(-1.0 / std::sqrt(double(d_model))),
                 static_cast<T>(1.0 / std::sqrt(double(d_model))));
    p.w1 = make_leaf(std::move(w1));
    p.b1 = make_leaf(Tensor<T>::zeros({d_inner}));
    if (kind == FeedForwardKind::Fc) {
        Tensor<T> w2({d_inner, d_model});
        fill_uniform(w2, rng, static_cast<T>(-1.0 / std::sqrt(double(d_inner))),
                     static_cast<T>(1.0 / std::sqrt(double(d_inner))));
        p.w2 = make_leaf(std::move(w2));
        p.b2 = make_leaf(Tensor<T>::zeros({d_model}));
    }
    return p;
}

// Sum of n contiguous chunks of width d_model along the last axis.
template <typename T>
Var<T> chunk_sum(const Var<T>& u, int64_t d_model) {
    const int64_t d_inner = u->value.dim(u->value.ndim() - 1);
    if (d_inner % d_model != 0) throw std::invalid_argument("chunk_sum: width not divisible");
    const int64_t n = d_inner / d_model;
    Var<T> acc = slice_last(u, 0, d_model);
    for (int64_t c = 1; c < n; ++c) acc = add(acc, slice_last(u, c * d_model, d_model));
    return acc;
}

// expand -> GeLU -> chunk-sum; no second weight matrix.
template <typename T>
Var<T> boom_forward(const Var<T>& x, const FeedForwardParams<T>& p) {
    if (p.kind != FeedForwardKind::Boom) throw std::logic_error("boom_forward: wrong kind");
    return chunk_sum(gelu(linear(x, p.w1, p.b1)), p.d_model);
}

template <typename T>
Var<T> fc_forward(const Var<T>& x, const FeedForwardParams<T>& p) {
    if (p.kind != FeedForwardKind::Fc) throw std::logic_error("fc_forward: wrong kind");
    return linear(gelu(linear(x, p.w1, p.b1)), p.w2, p.b2);
}

template <typename T>
Var<T> feedforward(const Var<T>& x, const FeedForwardParams<T>& p) {
    switch (p.kind) {
        case FeedForwardKind::Boom: return boom_forward(x, p);
        case FeedForwardKind::Fc: return fc_forward(x, p);
        case FeedForwardKind::None: return x;  // bit-exact identity, zero parameters
    }
    throw std::logic_error("feedforward: bad kind");
}

inline int64_t feedforward_param_count(FeedForwardKind kind, int64_t d_model, int64_t d_inner) {
    switch (kind) {
        case FeedForwardKind::Boom: return d_model * d_inner + d_inner;
        case FeedForwardKind::Fc: return d_model * d_inner + d_inner + d_inner * d_model + d_model;
        case FeedForwardKind::None: return 0;
    }
    return 0;
}

template <typename T>
std::vector<Var<T>> feedforward_param_list(const FeedForwardParams<T>& p) {
    std::vector<Var<T>> out;
    if (p.w1) { out.push_back(p.w1); out.push_back(p.b1); }
    if (p.w2) { out.push_back(p.w2); out.push_back(p.b2); }
    return out;
}

}  // namespace shaqlab
