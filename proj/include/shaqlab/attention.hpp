#pragma once

#include "shaqlab/nn.hpp"

namespace shaqlab {

// ---------------------------------------------------------------------------
// Rolling memory cache
// ---------------------------------------------------------------------------

// Past recurrent outputs, oldest first, detached from the differentiation
// graph by construction (plain tensors). Capped at 5000 - p entries unless
// the model config overrides the cap.
template <typename T>
struct MemoryCache {
    Tensor<T> mem;  // [S, B, d]; undefined when empty
    int64_t cap = 0;

    int64_t size() const { return mem.defined() ? mem.dim(0) : 0; }
    bool empty() const { return size() == 0; }
};

constexpr int64_t kDefaultCacheBudget = 5000;  // cap = 5000 - p

template <typename T>
MemoryCache<T> cache_update(const MemoryCache<T>& cache, const Tensor<T>& new_mem) {
    if (new_mem.ndim() != 3) throw std::invalid_argument("cache_update: new_mem must be [p,B,d]");
    if (!cache.empty() &&
        (cache.mem.dim(1) != new_mem.dim(1) || cache.mem.dim(2) != new_mem.dim(2))) {
        throw std::invalid_argument("cache_update: batch/width changed from " +
                                    shape_str(cache.mem.shape()) + " to " +
                                    shape_str(new_mem.shape()) + "; reset the cache");
    }
    const int64_t bn = new_mem.dim(1), d = new_mem.dim(2);
    const int64_t total = cache.size() + new_mem.dim(0);
    const int64_t keep = std::min(total, cache.cap);
    MemoryCache<T> out;
    out.cap = cache.cap;
    if (keep <= 0) return out;
    out.mem = Tensor<T>({keep, bn, d});
    const int64_t rowsz = bn * d;
    const int64_t drop = total - keep;  // oldest rows discarded
    int64_t w = 0;
    for (int64_t r = drop; r < total; ++r, ++w) {
        const T* src = r < cache.size() ? cache.mem.data() + r * rowsz
                                        : new_mem.data() + (r - cache.size()) * rowsz;
        std::memcpy(out.mem.data() + w * rowsz, src, sizeof(T) * size_t(rowsz));
    }
    return out;
}

// Arithmetic mean of all cached vectors along the sequence axis.
template <typename T>
Tensor<T> mean_condense(const MemoryCache<T>& cache) {
    if (cache.empty()) throw std::logic_error("mean_condense: cache is empty");
    const int64_t s = cache.mem.dim(0), bn = cache.mem.dim(1), d = cache.mem.dim(2);
    Tensor<T> out({bn, d});
    std::vector<double> acc(size_t(bn * d), 0.0);
    for (int64_t r = 0; r < s; ++r) {
        const T* row = cache.mem.data() + r * bn * d;
        for (int64_t i = 0; i < bn * d; ++i) acc[size_t(i)] += static_cast<double>(row[i]);
    }
    for (int64_t i = 0; i < bn * d; ++i) out[i] = static_cast<T>(acc[size_t(i)] / double(s));
    return out;
}

// W prepended as a single pseudo-timestep in front of the current window.
template <typename T>
Var<T> build_kv_mean(const Tensor<T>& w, const Var<T>& h) {
    auto row = constant(w.reshaped({1, w.dim(0), w.dim(1)}));
    if (!h) return row;  // degenerate p = 0
    return concat0<T>({row, h});
}

// ---------------------------------------------------------------------------
// Single-headed attention
// ---------------------------------------------------------------------------

enum class AttnGateMode { Gated, Ungated };
enum class AttnVariant { FullMemory, MeanMemory };

template <typename T>
struct AttentionParams {
    Var<T> wq, bq;            // query projection [d,d] + [d]
    Var<T> qs, ks, vs;        // pre-sigmoid gate vectors [d]; null when ungated
    Var<T> ln_q_g, ln_q_b;    // in-head LN on the query input (optional)
    Var<T> ln_kv_g, ln_kv_b;  // in-head LN on the concatenated memory (optional)
    AttnGateMode gate_mode = AttnGateMode::Gated;
    AttnVariant variant = AttnVariant::FullMemory;
    bool head_ln = true;
    bool gate_bypass = false;  // test hook: gates forced to the sigma = 1 limit
    double dropout_p = 0.1;

    bool gated() const { return gate_mode == AttnGateMode::Gated; }
};

template <typename T, typename Rng>
AttentionParams<T> make_attention_params(int64_t d, AttnGateMode gate_mode, AttnVariant variant,
                                         bool head_ln, Rng& rng, double dropout_p = 0.1) {
    AttentionParams<T> p;
    p.gate_mode = gate_mode;
    p.variant = variant;
    p.head_ln = head_ln;
    p.dropout_p = dropout_p;
    Tensor<T> wq({d, d});
    const T lim = static_cast<T>(1.0 / std::sqrt(double(d)));
    fill_uniform(wq, rng, -lim, lim);
    p.wq = make_leaf(std::move(wq));
    p.bq = make_leaf(Tensor<T>::zeros({d}));
    if (gate_mode == AttnGateMode::Gated) {
        p.qs = make_leaf(Tensor<T>::zeros({d}));  // sigma(0) = 0.5: neutral start
        p.ks = make_leaf(Tensor<T>::zeros({d}));
        p.vs = make_leaf(Tensor<T>::zeros({d}));
    }
    if (head_ln) {
        p.ln_q_g = make_leaf(Tensor<T>::ones({d}));
        p.ln_q_b = make_leaf(Tensor<T>::zeros({d}));
        p.ln_kv_g = make_leaf(Tensor<T>::ones({d}));
        p.ln_kv_b = make_leaf(Tensor<T>::zeros({d}));
    }
    return p;
}

template <typename T>
std::vector<Var<T>> attention_param_list(const AttentionParams<T>& p) {
    std::vector<Var<T>> out{p.wq, p.bq};
    if (p.qs) { out.push_back(p.qs); out.push_back(p.ks); out.push_back(p.vs); }
    if (p.ln_q_g) { out.push_back(p.ln_q_g); out.push_back(p.ln_q_b); }
    if (p.ln_kv_g) { out.push_back(p.ln_kv_g); out.push_back(p.ln_kv_b); }
    return out;
}

// Instrumentation for the score-matrix cost checks.
struct AttnStats {
    int64_t score_rows = 0;  // p
    int64_t score_cols = 0;  // candidate set size
};

inline AttnStats& last_attn_stats() {
    thread_local AttnStats stats;
    return stats;
}

// scores[b,i,j] = scale * <q[i,b,:], k[j,b,:]> where column j is visible when
// j < n_always (cache rows) or j - n_always <= i (in-window causality);
// masked entries are -inf so softmax yields exact zeros. Internally the
// [p,B,d] streams are transposed to per-batch panels so the dot products run
// through the matmul kernels.
template <typename T>
Tensor<T> to_batch_major(const Tensor<T>& x) {  // [S,B,d] -> [B,S,d]
    const int64_t sn = x.dim(0), bn = x.dim(1), d = x.dim(2);
    Tensor<T> out({bn, sn, d});
#pragma omp parallel for schedule(static) if (sn * bn * d > detail::kParallelFlops)
    for (int64_t b = 0; b < bn; ++b) {
        for (int64_t t = 0; t < sn; ++t) {
            std::memcpy(out.data() + (b * sn + t) * d, x.data() + (t * bn + b) * d,
                        sizeof(T) * size_t(d));
        }
    }
    return out;
}

template <typename T>
void add_from_batch_major(Tensor<T>& dst, const Tensor<T>& src) {  // [B,S,d] += into [S,B,d]
    const int64_t bn = src.dim(0), sn = src.dim(1), d = src.dim(2);
#pragma omp parallel for schedule(static) if (sn * bn * d > detail::kParallelFlops)
    for (int64_t t = 0; t < sn; ++t) {
        for (int64_t b = 0; b < bn; ++b) {
            T* dp = dst.data() + (t * bn + b) * d;
            const T* sp = src.data() + (b * sn + t) * d;
            for (int64_t c = 0; c < d; ++c) dp[c] += sp[c];
        }
    }
}

template <typename T>
Var<T> attn_scores(const Var<T>& q, const Var<T>& k, int64_t n_always, T scale) {
    const int64_t p = q->value.dim(0), bn = q->value.dim(1), d = q->value.dim(2);
    const int64_t kk = k->value.dim(0);
    if (k->value.dim(1) != bn || k->value.dim(2) != d) {
        throw std::invalid_argument("attn_scores: k shape " + shape_str(k->value.shape()) +
                                    " incompatible with q " + shape_str(q->value.shape()));
    }
    last_attn_stats() = {p, kk};
    const T neg_inf = -std::numeric_limits<T>::infinity();
    Tensor<T> qb = to_batch_major(q->value);  // [B,p,d]
    Tensor<T> kb = to_batch_major(k->value);  // [B,K,d]
    Tensor<T> out({bn, p, kk});
#pragma omp parallel for schedule(static) if (bn > 1)
    for (int64_t b = 0; b < bn; ++b) {
        T* ob = out.data() + b * p * kk;
        detail::gemm_nt_rows(0, p, kk, d, qb.data() + b * p * d, kb.data() + b * kk * d, ob, kk,
                             false);
        for (int64_t i = 0; i < p; ++i) {
            const int64_t vis = std::min(kk, n_always + i + 1);
            T* row = ob + i * kk;
            for (int64_t j = 0; j < vis; ++j) row[j] *= scale;
            for (int64_t j = vis; j < kk; ++j) row[j] = neg_inf;
        }
    }
    return make_op<T>(std::move(out), {q, k}, [qb, kb, p, bn, d, kk, scale](Node<T>& node) {
        auto& pq = node.parents[0];
        auto& pk = node.parents[1];
        // masked entries carry exactly zero gradient from the softmax, so the
        // full-panel products below are unaffected by the mask
        Tensor<T> ds({bn, p, kk});
        {
            const T* ng = node.grad.data();
            T* dp = ds.data();
            const int64_t n = ds.numel();
#pragma omp parallel for schedule(static) if (n > detail::kParallelFlops)
            for (int64_t i = 0; i < n; ++i) dp[i] = ng[i] * scale;
        }
        if (pq->requires_grad) {
            ensure_grad(*pq);
            Tensor<T> dqb({bn, p, d});
#pragma omp parallel for schedule(static) if (bn > 1)
            for (int64_t b = 0; b < bn; ++b) {
                detail::gemm_nn_rows(0, p, p, d, kk, ds.data() + b * p * kk,
                                     kb.data() + b * kk * d, dqb.data() + b * p * d, false);
            }
            add_from_batch_major(pq->grad, dqb);
        }
        if (pk->requires_grad) {
            ensure_grad(*pk);
            Tensor<T> dkb({bn, kk, d});
#pragma omp parallel for schedule(static) if (bn > 1)
            for (int64_t b = 0; b < bn; ++b) {
                auto& at = detail::scratch::buffer<T>();
                if (static_cast<int64_t>(at.size()) < p * kk) at.resize(size_t(p * kk));
                detail::gemm_tn_serial(p, d, kk, ds.data() + b * p * kk, qb.data() + b * p * d,
                                       dkb.data() + b * kk * d, at.data(), false);
            }
            add_from_batch_major(pk->grad, dkb);
        }
    });
}

// out[i,b,:] = sum_j w[b,i,j] * v[j,b,:]
template <typename T>
Var<T> attn_mix(const Var<T>& w, const Var<T>& v) {
    const int64_t bn = w->value.dim(0), p = w->value.dim(1), kk = w->value.dim(2);
    if (v->value.dim(0) != kk || v->value.dim(1) != bn) {
        throw std::invalid_argument("attn_mix: weights " + shape_str(w->value.shape()) +
                                    " incompatible with values " + shape_str(v->value.shape()));
    }
    const int64_t d = v->value.dim(2);
    Tensor<T> vb = to_batch_major(v->value);  // [B,K,d]
    Tensor<T> outb({bn, p, d});
#pragma omp parallel for schedule(static) if (bn > 1)
    for (int64_t b = 0; b < bn; ++b) {
        detail::gemm_nn_rows(0, p, p, d, kk, w->value.data() + b * p * kk,
                             vb.data() + b * kk * d, outb.data() + b * p * d, false);
    }
    Tensor<T> out({p, bn, d});
#pragma omp parallel for schedule(static) if (p * bn * d > detail::kParallelFlops)
    for (int64_t t = 0; t < p; ++t) {
        for (int64_t b = 0; b < bn; ++b) {
            std::memcpy(out.data() + (t * bn + b) * d, outb.data() + (b * p + t) * d,
                        sizeof(T) * size_t(d));
        }
    }
    return make_op<T>(std::move(out), {w, v}, [vb, bn, p, kk, d](Node<T>& node) {
        auto& pw = node.parents[0];
        auto& pv = node.parents[1];
        Tensor<T> gb = to_batch_major(node.grad);  // [B,p,d]
        if (pw->requires_grad) {
            ensure_grad(*pw);
            T* gw = pw->grad.data();
#pragma omp parallel for schedule(static) if (bn > 1)
            for (int64_t b = 0; b < bn; ++b) {
                detail::gemm_nt_rows(0, p, kk, d, gb.data() + b * p * d, vb.data() + b * kk * d,
                                     gw + b * p * kk, kk, true);
            }
        }
        if (pv->requires_grad) {
            ensure_grad(*pv);
            const Tensor<T>& wv = pw->value;
            Tensor<T> dvb({bn, kk, d});
#pragma omp parallel for schedule(static) if (bn > 1)
            for (int64_t b = 0; b < bn; ++b) {
                auto& at = detail::scratch::buffer<T>();
                if (static_cast<int64_t>(at.size()) < p * kk) at.resize(size_t(p * kk));
                detail::gemm_tn_serial(p, d, kk, wv.data() + b * p * kk, gb.data() + b * p * d,
                                       dvb.data() + b * kk * d, at.data(), false);
            }
            add_from_batch_major(pv->grad, dvb);
        }
    });
}

// h: current window [p,B,d]. Queries come from h alone; keys/values come from
// the cached memory concatenated with h (full-memory) or from the cache mean
// prepended to h (mean-memory). No linear layer on the k and v paths.
template <typename T, typename Rng>
Var<T> attend(const Var<T>& h, const MemoryCache<T>& cache, const AttentionParams<T>& params,
              bool train, Rng& rng) {
    const int64_t d = h->value.dim(2);
    if (params.wq->value.dim(0) != d) {
        throw std::invalid_argument("attend: model width " + std::to_string(d) +
                                    " vs query projection " + shape_str(params.wq->value.shape()));
    }

    Var<T> kv_src;
    int64_t n_always = 0;
    if (cache.empty()) {
        kv_src = h;  // valid: attends over the current window only
    } else if (params.variant == AttnVariant::FullMemory) {
        kv_src = concat0<T>({constant(cache.mem), h});
        n_always = cache.size();
    } else {
        kv_src = build_kv_mean(mean_condense(cache), h);
        n_always = 1;
    }

    Var<T> q_in = params.head_ln ? layer_norm(h, params.ln_q_g, params.ln_q_b) : h;
    Var<T> q = linear(q_in, params.wq, params.bq);
    Var<T> kv = params.head_ln ? layer_norm(kv_src, params.ln_kv_g, params.ln_kv_b) : kv_src;
    Var<T> k = kv, v = kv;
    if (params.gated() && !params.gate_bypass) {
        q = colwise_mul(q, sigmoid(params.qs));
        k = colwise_mul(kv, sigmoid(params.ks));
        v = colwise_mul(kv, sigmoid(params.vs));
    }

    const T scale = static_cast<T>(1.0 / std::sqrt(double(d)));
    auto scores = attn_scores(q, k, n_always, scale);
    auto weights = softmax(scores, -1);
    weights = dropout(weights, params.dropout_p, train, rng);
    return attn_mix(weights, v);
}

}  // namespace shaqlab
