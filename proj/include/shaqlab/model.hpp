#pragma once

#include <optional>
#include <string>

#include "shaqlab/attention.hpp"
#include "shaqlab/feedforward.hpp"
#include "shaqlab/recurrent.hpp"

namespace shaqlab {

enum class CellKind { Lstm, Qrnn };
enum class AttnChoice { Gated, Ungated, Mean };
enum class BlockWiring { Auto, ShaRnn, Shaq };

// Every ablation axis: depth, cell, attention placement/variant, feed-forward
// kind, dropout sites, window length and cache cap, weight tying.
struct ModelConfig {
    int64_t vocab = 256;  // byte ids
    int64_t d_model = 256;
    int64_t n_blocks = 2;
    CellKind cell = CellKind::Qrnn;
    int64_t qrnn_window = 2;
    std::vector<int64_t> attn_layers = {2};  // 1-based; a repeated index stacks heads on that block
    AttnChoice attn = AttnChoice::Ungated;
    FeedForwardKind ff = FeedForwardKind::None;
    int64_t boom_inner = 0;  // 0 -> 4 * d_model
    double drop_cell = 0.1;
    double drop_attn_w = 0.1;
    double drop_attn_out = 0.1;
    double drop_ff = 0.1;
    int64_t window = 256;    // training window length p
    int64_t cache_cap = 0;   // 0 -> 5000 - window
    bool tie_embedding = true;
    bool attn_head_ln = true;  // in-head LN (sha-rnn wiring)
    BlockWiring wiring = BlockWiring::Auto;

    int64_t inner_dim() const { return boom_inner > 0 ? boom_inner : 4 * d_model; }
    int64_t cap() const { return cache_cap > 0 ? cache_cap : kDefaultCacheBudget - window; }

    // The shaq wiring is the natural reading of its block diagram; anything
    // with gates, feed-forward or an LSTM follows the sha-rnn wiring.
    BlockWiring resolved_wiring() const {
        if (wiring != BlockWiring::Auto) return wiring;
        const bool shaq = cell == CellKind::Qrnn && ff == FeedForwardKind::None &&
                          attn == AttnChoice::Ungated;
        return shaq ? BlockWiring::Shaq : BlockWiring::ShaRnn;
    }

    int64_t heads_on(int64_t block_1based) const {
        int64_t n = 0;
        for (int64_t a : attn_layers) n += a == block_1based ? 1 : 0;
        return n;
    }

    bool attn_gated() const { return attn == AttnChoice::Gated || attn == AttnChoice::Mean; }

    void validate() const {
        if (vocab != 256) throw std::invalid_argument("config: vocab must be 256 byte ids");
        if (d_model < 1) throw std::invalid_argument("config: d_model must be >= 1");
        if (n_blocks < 1) throw std::invalid_argument("config: n_blocks must be >= 1");
        if (qrnn_window < 1) throw std::invalid_argument("config: qrnn window must be >= 1");
        if (window < 5) throw std::invalid_argument("config: window length p must be >= 5");
        for (int64_t a : attn_layers) {
            if (a < 1 || a > n_blocks) {
                throw std::invalid_argument("config: attn layer " + std::to_string(a) +
                                            " outside 1.." + std::to_string(n_blocks));
            }
        }
        if (ff == FeedForwardKind::Boom && inner_dim() % d_model != 0) {
            throw std::invalid_argument("config: boom inner dim " + std::to_string(inner_dim()) +
                                        " not divisible by d_model");
        }
        for (double p : {drop_cell, drop_attn_w, drop_attn_out, drop_ff}) {
            if (p < 0.0 || p >= 1.0) throw std::invalid_argument("config: dropout must be in [0,1)");
        }
        if (cap() < 1) throw std::invalid_argument("config: cache cap must be >= 1");
    }
};

// ---------------------------------------------------------------------------
// Closed-form parameter counting
// ---------------------------------------------------------------------------

struct ParamCount {
    int64_t total = 0;
    std::vector<std::pair<std::string, int64_t>> rows;

    void add(std::string name, int64_t n) {
        rows.emplace_back(std::move(name), n);
        total += n;
    }
};

inline ParamCount param_count(const ModelConfig& cfg) {
    cfg.validate();
    const int64_t d = cfg.d_model;
    ParamCount pc;
    pc.add("embedding", cfg.vocab * d);
    pc.add("output_head", cfg.tie_embedding ? cfg.vocab : cfg.vocab * d + cfg.vocab);
    const BlockWiring wiring = cfg.resolved_wiring();
    for (int64_t b = 1; b <= cfg.n_blocks; ++b) {
        const std::string prefix = "block" + std::to_string(b - 1);
        pc.add(prefix + ".ln1", 2 * d);
        pc.add(prefix + ".cell", cfg.cell == CellKind::Lstm ? lstm_param_count(d)
                                                            : qrnn_param_count(d, cfg.qrnn_window));
        const int64_t heads = cfg.heads_on(b);
        for (int64_t hh = 0; hh < heads; ++hh) {
            int64_t n = d * d + d;  // query projection
            if (cfg.attn_gated()) n += 3 * d;
            if (wiring == BlockWiring::Shaq) n += 4 * d;       // block-level double LN
            else if (cfg.attn_head_ln) n += 4 * d;             // in-head LNs
            pc.add(prefix + ".attn" + std::to_string(hh), n);
        }
        if (cfg.ff != FeedForwardKind::None) {
            pc.add(prefix + ".ff", 2 * d + feedforward_param_count(cfg.ff, d, cfg.inner_dim()));
        }
    }
    pc.add("final_ln", 2 * d);
    return pc;
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

template <typename T>
struct Parameter {
    std::string name;  // hierarchical, unique within the model
    Var<T> var;
};

template <typename T>
struct ForwardState {
    int64_t batch = 0;
    std::vector<LstmState<T>> lstm;     // per block, lstm models
    std::vector<QrnnState<T>> qrnn;     // per block, qrnn models
    std::vector<MemoryCache<T>> cache;  // per block; empty caches on non-attending blocks
};

template <typename T>
class Model {
public:
    explicit Model(ModelConfig cfg, uint64_t seed = 42) : cfg_(std::move(cfg)) {
        cfg_.validate();
        std::mt19937_64 init_rng(seed);
        drop_rng_.seed(seed ^ 0x9E3779B97F4A7C15ull);
        build(init_rng);
        const int64_t expect = param_count(cfg_).total;
        if (total_params() != expect) {
            throw std::logic_error("model: registry total " + std::to_string(total_params()) +
                                   " != closed-form count " + std::to_string(expect));
        }
    }

    const ModelConfig& config() const { return cfg_; }
    std::vector<Parameter<T>>& parameters() { return params_; }
    const std::vector<Parameter<T>>& parameters() const { return params_; }

    int64_t total_params() const {
        int64_t n = 0;
        for (const auto& p : params_) n += p.var->value.numel();
        return n;
    }

    Parameter<T>* find(const std::string& name) {
        for (auto& p : params_) {
            if (p.name == name) return &p;
        }
        return nullptr;
    }

    std::mt19937_64& dropout_rng() { return drop_rng_; }

    ForwardState<T> initial_state(int64_t batch) const {
        ForwardState<T> st;
        st.batch = batch;
        for (int64_t b = 0; b < cfg_.n_blocks; ++b) {
            if (cfg_.cell == CellKind::Lstm) {
                st.lstm.push_back(lstm_zero_state<T>(batch, cfg_.d_model));
            } else {
                st.qrnn.push_back(qrnn_zero_state<T>(batch, cfg_.d_model, cfg_.d_model, cfg_.qrnn_window));
            }
            MemoryCache<T> c;
            c.cap = cfg_.cap();
            st.cache.push_back(std::move(c));
        }
        return st;
    }

    // ids: [L, B] byte ids. Returns logits [L, B, vocab] and the carried state
    // (recurrent states and caches are detached tensors).
    std::pair<Var<T>, ForwardState<T>> forward(const Tensor<int32_t>& ids,
                                               const ForwardState<T>& st, bool train) {
        if (ids.ndim() != 2) throw std::invalid_argument("forward: ids must be [L,B]");
        const int64_t bn = ids.dim(1);
        if (st.batch != bn) {
            throw std::invalid_argument("forward: state batch " + std::to_string(st.batch) +
                                        " vs input batch " + std::to_string(bn));
        }
        const BlockWiring wiring = cfg_.resolved_wiring();
        ForwardState<T> out_state;
        out_state.batch = bn;
        out_state.lstm.resize(st.lstm.size());
        out_state.qrnn.resize(st.qrnn.size());
        out_state.cache = st.cache;

        Var<T> x = embedding(embed_, ids);
        for (int64_t b = 0; b < cfg_.n_blocks; ++b) {
            auto& blk = blocks_[size_t(b)];
            Var<T> h = layer_norm(x, blk.ln1_g, blk.ln1_b);
            Var<T> cell_y;
            if (cfg_.cell == CellKind::Lstm) {
                auto [y, ns] = lstm_forward(h, st.lstm[size_t(b)], *blk.lstm);
                cell_y = y;
                out_state.lstm[size_t(b)] = std::move(ns);
            } else {
                auto [y, ns] = qrnn_forward(h, st.qrnn[size_t(b)], *blk.qrnn);
                cell_y = y;
                out_state.qrnn[size_t(b)] = std::move(ns);
            }
            Var<T> r = add(h, dropout(cell_y, cfg_.drop_cell, train, drop_rng_));
            if (!blk.heads.empty()) {
                for (auto& head : blk.heads) {
                    Var<T> a_in = r;
                    if (wiring == BlockWiring::Shaq) {
                        a_in = layer_norm(layer_norm(r, head.ln2_g, head.ln2_b), head.ln3_g, head.ln3_b);
                    }
                    Var<T> atn = attend(a_in, st.cache[size_t(b)], head.attn, train, drop_rng_);
                    r = add(r, dropout(atn, cfg_.drop_attn_out, train, drop_rng_));
                }
                out_state.cache[size_t(b)] = cache_update(st.cache[size_t(b)], cell_y->value);
            }
            if (blk.ff.kind != FeedForwardKind::None) {
                Var<T> f = feedforward(layer_norm(r, blk.ln_ff_g, blk.ln_ff_b), blk.ff);
                r = add(r, dropout(f, cfg_.drop_ff, train, drop_rng_));
            }
            x = r;
        }
        x = layer_norm(x, final_ln_g_, final_ln_b_);
        const int64_t rows = x->value.numel() / cfg_.d_model;
        Var<T> flat = reshape(x, {rows, cfg_.d_model});
        Var<T> logits = add_bias(matmul_nt(flat, cfg_.tie_embedding ? embed_ : out_w_), out_b_);
        logits = reshape(logits, {ids.dim(0), bn, cfg_.vocab});
        return {logits, std::move(out_state)};
    }

private:
    struct Head {
        AttentionParams<T> attn;
        Var<T> ln2_g, ln2_b, ln3_g, ln3_b;  // shaq wiring
    };
    struct Block {
        Var<T> ln1_g, ln1_b;
        std::optional<LstmParams<T>> lstm;
        std::optional<QrnnParams<T>> qrnn;
        std::vector<Head> heads;
        FeedForwardParams<T> ff;
        Var<T> ln_ff_g, ln_ff_b;
    };

    void reg(const std::string& name, const Var<T>& v) { params_.push_back({name, v}); }

    void reg_ln(const std::string& name, Var<T>& g, Var<T>& b) {
        g = make_leaf(Tensor<T>::ones({cfg_.d_model}));
        b = make_leaf(Tensor<T>::zeros({cfg_.d_model}));
        reg(name + ".gamma", g);
        reg(name + ".beta", b);
    }

    void build(std::mt19937_64& rng) {
        const int64_t d = cfg_.d_model;
        // half-width init keeps untrained logits near uniform; the first
        // layer norm removes the input-path scale anyway
        const T lim = static_cast<T>(0.5 / std::sqrt(double(d)));
        const BlockWiring wiring = cfg_.resolved_wiring();

        Tensor<T> emb({cfg_.vocab, d});
        fill_uniform(emb, rng, -lim, lim);
        embed_ = make_leaf(std::move(emb));
        reg("embed.weight", embed_);
        if (!cfg_.tie_embedding) {
            Tensor<T> w({cfg_.vocab, d});
            fill_uniform(w, rng, -lim, lim);
            out_w_ = make_leaf(std::move(w));
            reg("out.weight", out_w_);
        }
        out_b_ = make_leaf(Tensor<T>::zeros({cfg_.vocab}));
        reg("out.bias", out_b_);

        for (int64_t b = 0; b < cfg_.n_blocks; ++b) {
            Block blk;
            const std::string prefix = "block" + std::to_string(b);
            reg_ln(prefix + ".ln1", blk.ln1_g, blk.ln1_b);
            if (cfg_.cell == CellKind::Lstm) {
                blk.lstm = make_lstm_params<T>(d, d, rng);
                reg(prefix + ".lstm.wx", blk.lstm->wx);
                reg(prefix + ".lstm.wh", blk.lstm->wh);
                reg(prefix + ".lstm.b", blk.lstm->b);
            } else {
                blk.qrnn = make_qrnn_params<T>(d, d, cfg_.qrnn_window, rng);
                for (int64_t s = 0; s < cfg_.qrnn_window; ++s) {
                    reg(prefix + ".qrnn.wz." + std::to_string(s), blk.qrnn->wz[size_t(s)]);
                    reg(prefix + ".qrnn.wf." + std::to_string(s), blk.qrnn->wf[size_t(s)]);
                    reg(prefix + ".qrnn.wo." + std::to_string(s), blk.qrnn->wo[size_t(s)]);
                }
                reg(prefix + ".qrnn.bz", blk.qrnn->bz);
                reg(prefix + ".qrnn.bf", blk.qrnn->bf);
                reg(prefix + ".qrnn.bo", blk.qrnn->bo);
            }
            const int64_t heads = cfg_.heads_on(b + 1);
            for (int64_t hh = 0; hh < heads; ++hh) {
                Head head;
                const std::string hp = prefix + ".attn" + std::to_string(hh);
                const bool head_ln = wiring == BlockWiring::ShaRnn && cfg_.attn_head_ln;
                head.attn = make_attention_params<T>(
                    d, cfg_.attn_gated() ? AttnGateMode::Gated : AttnGateMode::Ungated,
                    cfg_.attn == AttnChoice::Mean ? AttnVariant::MeanMemory : AttnVariant::FullMemory,
                    head_ln, rng, cfg_.drop_attn_w);
                reg(hp + ".wq", head.attn.wq);
                reg(hp + ".bq", head.attn.bq);
                if (head.attn.qs) {
                    reg(hp + ".qs", head.attn.qs);
                    reg(hp + ".ks", head.attn.ks);
                    reg(hp + ".vs", head.attn.vs);
                }
                if (head.attn.ln_q_g) {
                    reg(hp + ".ln_q.gamma", head.attn.ln_q_g);
                    reg(hp + ".ln_q.beta", head.attn.ln_q_b);
                    reg(hp + ".ln_kv.gamma", head.attn.ln_kv_g);
                    reg(hp + ".ln_kv.beta", head.attn.ln_kv_b);
                }
                if (wiring == BlockWiring::Shaq) {
                    reg_ln(hp + ".ln2", head.ln2_g, head.ln2_b);
                    reg_ln(hp + ".ln3", head.ln3_g, head.ln3_b);
                }
                blk.heads.push_back(std::move(head));
            }
            if (cfg_.ff != FeedForwardKind::None) {
                reg_ln(prefix + ".ff_ln", blk.ln_ff_g, blk.ln_ff_b);
                blk.ff = make_feedforward_params<T>(cfg_.ff, d, cfg_.inner_dim(), rng);
                reg(prefix + ".ff.w1", blk.ff.w1);
                reg(prefix + ".ff.b1", blk.ff.b1);
                if (blk.ff.w2) {
                    reg(prefix + ".ff.w2", blk.ff.w2);
                    reg(prefix + ".ff.b2", blk.ff.b2);
                }
            } else {
                blk.ff.kind = FeedForwardKind::None;
            }
            blocks_.push_back(std::move(blk));
        }
        reg_ln("final_ln", final_ln_g_, final_ln_b_);
    }

    ModelConfig cfg_;
    std::vector<Parameter<T>> params_;
    std::vector<Block> blocks_;
    Var<T> embed_, out_w_, out_b_;
    Var<T> final_ln_g_, final_ln_b_;
    std::mt19937_64 drop_rng_;
};

template <typename T>
void zero_grads(std::vector<Parameter<T>>& params) {
    for (auto& p : params) p.var->grad = Tensor<T>{};
}

}  // namespace shaqlab
