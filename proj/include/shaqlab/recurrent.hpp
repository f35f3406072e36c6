#pragma once

#include <optional>

#include "shaqlab/nn.hpp"

namespace shaqlab {

// ---------------------------------------------------------------------------
// LSTM
// ---------------------------------------------------------------------------

template <typename T>
struct LstmState {
    Tensor<T> h;  // [B, H]
    Tensor<T> c;  // [B, H]
};

template <typename T>
struct LstmParams {
    Var<T> wx;  // [d_in, 4H], gate order i|f|g|o
    Var<T> wh;  // [H, 4H]
    Var<T> b;   // [4H]
    int64_t hidden() const { return wh->value.dim(0); }
    int64_t input_dim() const { return wx->value.dim(0); }
};

// Weights uniform in +-1/sqrt(fan_in); forget-gate bias 1, other biases 0.
template <typename T, typename Rng>
LstmParams<T> make_lstm_params(int64_t d_in, int64_t hidden, Rng& rng) {
    Tensor<T> wx({d_in, 4 * hidden});
    Tensor<T> wh({hidden, 4 * hidden});
    Tensor<T> b({4 * hidden});
    fill_uniform(wx, rng, static_cast<T>(-1.0 / std::sqrt(double(d_in))),
                 static_cast<T>(1.0 / std::sqrt(double(d_in))));
    fill_uniform(wh, rng, static_cast<T>(-1.0 / std::sqrt(double(hidden))),
                 static_cast<T>(1.0 / std::sqrt(double(hidden))));
    for (int64_t j = hidden; j < 2 * hidden; ++j) b[j] = T(1);
    return {make_leaf(std::move(wx)), make_leaf(std::move(wh)), make_leaf(std::move(b))};
}

template <typename T>
LstmState<T> lstm_zero_state(int64_t batch, int64_t hidden) {
    return {Tensor<T>::zeros({batch, hidden}), Tensor<T>::zeros({batch, hidden})};
}

// Single fused node over the whole window; the recurrence over T is
// sequential, the input projection is one matmul. Initial state enters as a
// detached constant (truncated BPTT at window boundaries).
template <typename T>
std::pair<Var<T>, LstmState<T>> lstm_forward(const Var<T>& x, const LstmState<T>& state,
                                             const LstmParams<T>& params) {
    const Shape& s = x->value.shape();
    if (s.size() != 3) throw std::invalid_argument("lstm_forward: expected [T,B,d], got " + shape_str(s));
    const int64_t tn = s[0], bn = s[1], din = s[2];
    const int64_t h = params.hidden();
    if (din != params.input_dim()) {
        throw std::invalid_argument("lstm_forward: input dim " + std::to_string(din) +
                                    " vs weights " + std::to_string(params.input_dim()));
    }
    if (state.h.shape() != Shape{bn, h} || state.c.shape() != Shape{bn, h}) {
        throw std::invalid_argument("lstm_forward: state shape mismatch");
    }

    // gates[t] holds activated i|f|g|o
    Tensor<T> gates({tn, bn, 4 * h});
    Tensor<T> cells({tn, bn, h});
    Tensor<T> y({tn, bn, h});

    detail::gemm_nn(tn * bn, 4 * h, din, x->value.data(), params.wx->value.data(), gates.data(), false);
    {
        T* g = gates.data();
        const T* bias = params.b->value.data();
        for (int64_t r = 0; r < tn * bn; ++r)
            for (int64_t j = 0; j < 4 * h; ++j) g[r * 4 * h + j] += bias[j];
    }

    const T* hprev = state.h.data();
    const T* cprev = state.c.data();
    for (int64_t t = 0; t < tn; ++t) {
        T* gt = gates.data() + t * bn * 4 * h;
        detail::gemm_nn(bn, 4 * h, h, hprev, params.wh->value.data(), gt, true);
        T* ct = cells.data() + t * bn * h;
        T* yt = y.data() + t * bn * h;
        for (int64_t r = 0; r < bn; ++r) {
            T* g = gt + r * 4 * h;
            for (int64_t j = 0; j < h; ++j) {
                const T gi = fsigmoid(g[j]);
                const T gf = fsigmoid(g[h + j]);
                const T gg = ftanh(g[2 * h + j]);
                const T go = fsigmoid(g[3 * h + j]);
                g[j] = gi;
                g[h + j] = gf;
                g[2 * h + j] = gg;
                g[3 * h + j] = go;
                const T c = gf * cprev[r * h + j] + gi * gg;
                ct[r * h + j] = c;
                yt[r * h + j] = go * ftanh(c);
            }
        }
        hprev = yt;
        cprev = ct;
    }

    LstmState<T> out_state{Tensor<T>({bn, h}), Tensor<T>({bn, h})};
    std::memcpy(out_state.h.data(), y.data() + (tn - 1) * bn * h, sizeof(T) * size_t(bn * h));
    std::memcpy(out_state.c.data(), cells.data() + (tn - 1) * bn * h, sizeof(T) * size_t(bn * h));

    Tensor<T> h0 = state.h, c0 = state.c;
    auto node = make_op<T>(y, {x, params.wx, params.wh, params.b},
                           [gates, cells, h0, c0, tn, bn, din, h](Node<T>& node) {
        const Tensor<T>& yv = node.value;
        auto& px = node.parents[0];
        auto& pwx = node.parents[1];
        auto& pwh = node.parents[2];
        auto& pb = node.parents[3];
        const T* wh = pwh->value.data();

        Tensor<T> dgates({tn, bn, 4 * h});
        std::vector<T> dh(size_t(bn * h), T(0)), dc(size_t(bn * h), T(0));
        for (int64_t t = tn - 1; t >= 0; --t) {
            const T* ng = node.grad.data() + t * bn * h;
            const T* gt = gates.data() + t * bn * 4 * h;
            const T* ct = cells.data() + t * bn * h;
            const T* cpv = t > 0 ? cells.data() + (t - 1) * bn * h : c0.data();
            T* dgt = dgates.data() + t * bn * 4 * h;
            for (int64_t r = 0; r < bn; ++r) {
                for (int64_t j = 0; j < h; ++j) {
                    const int64_t ix = r * h + j;
                    const T gi = gt[r * 4 * h + j];
                    const T gf = gt[r * 4 * h + h + j];
                    const T gg = gt[r * 4 * h + 2 * h + j];
                    const T go = gt[r * 4 * h + 3 * h + j];
                    const T dht = dh[ix] + ng[ix];
                    const T tc = ftanh(ct[ix]);
                    const T dct = dc[ix] + go * (T(1) - tc * tc) * dht;
                    const T dgo = tc * dht;
                    const T dgi = gg * dct;
                    const T dgg = gi * dct;
                    const T dgf = cpv[ix] * dct;
                    dgt[r * 4 * h + j] = gi * (T(1) - gi) * dgi;
                    dgt[r * 4 * h + h + j] = gf * (T(1) - gf) * dgf;
                    dgt[r * 4 * h + 2 * h + j] = (T(1) - gg * gg) * dgg;
                    dgt[r * 4 * h + 3 * h + j] = go * (T(1) - go) * dgo;
                    dc[ix] = gf * dct;
                }
            }
            // dh_{t-1} = da_t * Wh^T
            detail::gemm_nt(bn, h, 4 * h, dgt, wh, dh.data(), false);
            if (pwh->requires_grad) {
                ensure_grad(*pwh);
                const T* hp = t > 0 ? yv.data() + (t - 1) * bn * h : h0.data();
                detail::gemm_tn(bn, 4 * h, h, hp, dgt, pwh->grad.data(), true);
            }
        }
        if (px->requires_grad) {
            ensure_grad(*px);
            detail::gemm_nt(tn * bn, din, 4 * h, dgates.data(), pwx->value.data(), px->grad.data(), true);
        }
        if (pwx->requires_grad) {
            ensure_grad(*pwx);
            detail::gemm_tn(tn * bn, 4 * h, din, px->value.data(), dgates.data(), pwx->grad.data(), true);
        }
        if (pb->requires_grad) {
            ensure_grad(*pb);
            T* db = pb->grad.data();
            const T* dg = dgates.data();
            for (int64_t r = 0; r < tn * bn; ++r)
                for (int64_t j = 0; j < 4 * h; ++j) db[j] += dg[r * 4 * h + j];
        }
    });
    return {node, std::move(out_state)};
}

// ---------------------------------------------------------------------------
// QRNN: causal 1-d convolution feeding fo-pooling
// ---------------------------------------------------------------------------

template <typename T>
struct QrnnState {
    Tensor<T> c;     // [B, H] final pooled cell state
    Tensor<T> tail;  // [w-1, B, d_in] last inputs before this window; undefined when w == 1
};

template <typename T>
struct QrnnParams {
    // One weight per tap and gate; taps ordered oldest..current, so
    // wz[w-1] multiplies x_t and wz[0] multiplies x_{t-w+1}.
    std::vector<Var<T>> wz, wf, wo;  // each [d_in, H]
    Var<T> bz, bf, bo;               // [H]
    int64_t window() const { return static_cast<int64_t>(wz.size()); }
    int64_t hidden() const { return bz->value.numel(); }
    int64_t input_dim() const { return wz[0]->value.dim(0); }
};

template <typename T, typename Rng>
QrnnParams<T> make_qrnn_params(int64_t d_in, int64_t hidden, int64_t window, Rng& rng) {
    if (window < 1) throw std::invalid_argument("qrnn: window must be >= 1");
    QrnnParams<T> p;
    const T lim = static_cast<T>(1.0 / std::sqrt(double(d_in)));
    auto mk = [&](std::vector<Var<T>>& ws) {
        for (int64_t s = 0; s < window; ++s) {
            Tensor<T> w({d_in, hidden});
            fill_uniform(w, rng, -lim, lim);
            ws.push_back(make_leaf(std::move(w)));
        }
    };
    mk(p.wz);
    mk(p.wf);
    mk(p.wo);
    p.bz = make_leaf(Tensor<T>::zeros({hidden}));
    p.bf = make_leaf(Tensor<T>::zeros({hidden}));
    p.bo = make_leaf(Tensor<T>::zeros({hidden}));
    return p;
}

template <typename T>
QrnnState<T> qrnn_zero_state(int64_t batch, int64_t hidden, int64_t d_in, int64_t window) {
    QrnnState<T> st;
    st.c = Tensor<T>::zeros({batch, hidden});
    if (window > 1) st.tail = Tensor<T>::zeros({window - 1, batch, d_in});
    return st;
}

struct QrnnConvOut {
    // indexes into the tuple returned by qrnn_conv
    enum { Z = 0, F = 1, O = 2 };
};

// Causal convolution as w shifted matmuls summed. Position t sees inputs
// x_{t-w+1..t}; the tail supplies pre-window history (zeros at stream start).
template <typename T>
std::array<Var<T>, 3> qrnn_conv(const Var<T>& x, const Tensor<T>& tail, const QrnnParams<T>& params) {
    const Shape& s = x->value.shape();
    if (s.size() != 3) throw std::invalid_argument("qrnn_conv: expected [T,B,d], got " + shape_str(s));
    const int64_t tn = s[0], bn = s[1], din = s[2];
    const int64_t w = params.window();
    const int64_t h = params.hidden();
    if (din != params.input_dim()) throw std::invalid_argument("qrnn_conv: input dim mismatch");
    if (w > 1) {
        if (!tail.defined() || tail.shape() != Shape{w - 1, bn, din}) {
            throw std::invalid_argument("qrnn_conv: tail must be [w-1,B,d]");
        }
    }

    Var<T> xext = w > 1 ? concat0<T>({constant(tail), x}) : x;
    // One wide matmul per tap: the three gate weights are fused column-wise,
    // so each shift is a single [T*B,d] x [d,3H] product.
    Var<T> pre;
    for (int64_t shift = 0; shift < w; ++shift) {
        auto xs = w > 1 ? slice0(xext, shift, tn) : xext;
        auto wcat = concat_last<T>({params.wz[size_t(shift)], params.wf[size_t(shift)],
                                    params.wo[size_t(shift)]});
        auto term = matmul(reshape(xs, {tn * bn, din}), wcat);
        pre = pre ? add(pre, term) : term;
    }
    pre = add_bias(pre, concat_last<T>({params.bz, params.bf, params.bo}));
    pre = reshape(pre, {tn, bn, 3 * h});
    return {tanh_op(slice_last(pre, 0, h)), sigmoid(slice_last(pre, h, h)),
            sigmoid(slice_last(pre, 2 * h, h))};
}

// fo-pooling: c_t = f_t (.) c_{t-1} + (1-f_t) (.) z_t,  h_t = o_t (.) c_t.
// Parameter-free sequential scan; fused node with hand-written backward.
template <typename T>
std::pair<Var<T>, Tensor<T>> qrnn_fo_pool(const Var<T>& z, const Var<T>& f, const Var<T>& o,
                                          const Tensor<T>& c0) {
    check_same_shape("qrnn_fo_pool", z->value, f->value);
    check_same_shape("qrnn_fo_pool", z->value, o->value);
    const Shape& s = z->value.shape();
    if (s.size() != 3) throw std::invalid_argument("qrnn_fo_pool: expected [T,B,H]");
    const int64_t tn = s[0], bn = s[1], h = s[2];
    if (c0.shape() != Shape{bn, h}) throw std::invalid_argument("qrnn_fo_pool: c0 must be [B,H]");

    Tensor<T> cells({tn, bn, h});
    Tensor<T> y({tn, bn, h});
    const int64_t step = bn * h;
    const T* zp = z->value.data();
    const T* fp = f->value.data();
    const T* op = o->value.data();
    const T* cprev = c0.data();
    for (int64_t t = 0; t < tn; ++t) {
        T* ct = cells.data() + t * step;
        T* yt = y.data() + t * step;
        const T* zt = zp + t * step;
        const T* ft = fp + t * step;
        const T* ot = op + t * step;
        for (int64_t i = 0; i < step; ++i) {
            const T c = ft[i] * cprev[i] + (T(1) - ft[i]) * zt[i];
            ct[i] = c;
            yt[i] = ot[i] * c;
        }
        cprev = ct;
    }
    Tensor<T> c_final({bn, h});
    std::memcpy(c_final.data(), cells.data() + (tn - 1) * step, sizeof(T) * size_t(step));

    Tensor<T> c0_saved = c0;
    auto node = make_op<T>(std::move(y), {z, f, o}, [cells, c0_saved, tn, step](Node<T>& node) {
        auto& pz = node.parents[0];
        auto& pf = node.parents[1];
        auto& po = node.parents[2];
        ensure_grad(*pz);
        ensure_grad(*pf);
        ensure_grad(*po);
        const T* zp = pz->value.data();
        const T* fp = pf->value.data();
        const T* op = po->value.data();
        std::vector<T> dc(size_t(step), T(0));
        for (int64_t t = tn - 1; t >= 0; --t) {
            const T* ng = node.grad.data() + t * step;
            const T* ct = cells.data() + t * step;
            const T* cpv = t > 0 ? cells.data() + (t - 1) * step : c0_saved.data();
            const T* zt = zp + t * step;
            const T* ft = fp + t * step;
            const T* ot = op + t * step;
            T* dz = pz->grad.data() + t * step;
            T* df = pf->grad.data() + t * step;
            T* dob = po->grad.data() + t * step;
            for (int64_t i = 0; i < step; ++i) {
                const T dct = ot[i] * ng[i] + dc[i];
                dob[i] += ct[i] * ng[i];
                dz[i] += (T(1) - ft[i]) * dct;
                df[i] += (cpv[i] - zt[i]) * dct;
                dc[i] = ft[i] * dct;
            }
        }
    });
    return {node, std::move(c_final)};
}

// Convolution feeding fo-pooling as one fused node: the w shifted matmuls
// run straight off the extended input buffer (a shift is just a row offset),
// gates activate in place, and the scan follows. Equivalent to composing
// qrnn_conv and qrnn_fo_pool; the backward is hand-written. state' carries
// the final cell state and the next tail (last w-1 input timesteps).
template <typename T>
std::pair<Var<T>, QrnnState<T>> qrnn_forward(const Var<T>& x, const QrnnState<T>& state,
                                             const QrnnParams<T>& params) {
    const Shape& s = x->value.shape();
    if (s.size() != 3) throw std::invalid_argument("qrnn_forward: expected [T,B,d], got " + shape_str(s));
    const int64_t tn = s[0], bn = s[1], din = s[2];
    const int64_t w = params.window();
    const int64_t h = params.hidden();
    if (din != params.input_dim()) throw std::invalid_argument("qrnn_forward: input dim mismatch");
    if (state.c.shape() != Shape{bn, h}) throw std::invalid_argument("qrnn_forward: state shape mismatch");
    if (w > 1 && (!state.tail.defined() || state.tail.shape() != Shape{w - 1, bn, din})) {
        throw std::invalid_argument("qrnn_forward: tail must be [w-1,B,d]");
    }

    const int64_t rowsz = bn * din;
    Tensor<T> xext({tn + w - 1, bn, din});
    if (w > 1) std::memcpy(xext.data(), state.tail.data(), sizeof(T) * size_t((w - 1) * rowsz));
    std::memcpy(xext.data() + (w - 1) * rowsz, x->value.data(), sizeof(T) * size_t(tn * rowsz));

    // gate weights fused column-wise per tap: [d_in, z|f|o]
    std::vector<Tensor<T>> wcat;
    for (int64_t shift = 0; shift < w; ++shift) {
        Tensor<T> wc({din, 3 * h});
        for (int64_t r = 0; r < din; ++r) {
            std::memcpy(wc.data() + r * 3 * h, params.wz[size_t(shift)]->value.data() + r * h,
                        sizeof(T) * size_t(h));
            std::memcpy(wc.data() + r * 3 * h + h, params.wf[size_t(shift)]->value.data() + r * h,
                        sizeof(T) * size_t(h));
            std::memcpy(wc.data() + r * 3 * h + 2 * h, params.wo[size_t(shift)]->value.data() + r * h,
                        sizeof(T) * size_t(h));
        }
        wcat.push_back(std::move(wc));
    }

    Tensor<T> gates({tn, bn, 3 * h});
    for (int64_t shift = 0; shift < w; ++shift) {
        detail::gemm_nn(tn * bn, 3 * h, din, xext.data() + shift * rowsz, wcat[size_t(shift)].data(),
                        gates.data(), shift > 0);
    }
    {
        const T* bz = params.bz->value.data();
        const T* bf = params.bf->value.data();
        const T* bo = params.bo->value.data();
        T* g = gates.data();
        const int64_t rows = tn * bn;
#pragma omp parallel for schedule(static) if (rows * h > detail::kParallelFlops)
        for (int64_t r = 0; r < rows; ++r) {
            T* gr = g + r * 3 * h;
            for (int64_t j = 0; j < h; ++j) gr[j] = ftanh(gr[j] + bz[j]);
            for (int64_t j = 0; j < h; ++j) gr[h + j] = fsigmoid(gr[h + j] + bf[j]);
            for (int64_t j = 0; j < h; ++j) gr[2 * h + j] = fsigmoid(gr[2 * h + j] + bo[j]);
        }
    }

    Tensor<T> cells({tn, bn, h});
    Tensor<T> y({tn, bn, h});
    {
        const T* cprev = state.c.data();
        for (int64_t t = 0; t < tn; ++t) {
            T* ct = cells.data() + t * bn * h;
            T* yt = y.data() + t * bn * h;
            for (int64_t r = 0; r < bn; ++r) {
                const T* g = gates.data() + (t * bn + r) * 3 * h;
                for (int64_t j = 0; j < h; ++j) {
                    const T z = g[j], f = g[h + j], o = g[2 * h + j];
                    const T c = f * cprev[r * h + j] + (T(1) - f) * z;
                    ct[r * h + j] = c;
                    yt[r * h + j] = o * c;
                }
            }
            cprev = ct;
        }
    }

    QrnnState<T> out;
    out.c = Tensor<T>({bn, h});
    std::memcpy(out.c.data(), cells.data() + (tn - 1) * bn * h, sizeof(T) * size_t(bn * h));
    if (w > 1) {
        out.tail = Tensor<T>({w - 1, bn, din});
        std::memcpy(out.tail.data(), xext.data() + tn * rowsz, sizeof(T) * size_t((w - 1) * rowsz));
    }

    std::vector<Var<T>> parents{x};
    for (auto& v : params.wz) parents.push_back(v);
    for (auto& v : params.wf) parents.push_back(v);
    for (auto& v : params.wo) parents.push_back(v);
    parents.push_back(params.bz);
    parents.push_back(params.bf);
    parents.push_back(params.bo);
    Tensor<T> c0 = state.c;

    auto node = make_op<T>(std::move(y), std::move(parents),
                           [xext, wcat, gates, cells, c0, tn, bn, din, h, w](Node<T>& node) {
        auto& px = node.parents[0];
        const int64_t rowsz = bn * din;
        const int64_t rows = tn * bn;

        // reverse scan into pre-activation gradients
        Tensor<T> dgates({tn, bn, 3 * h});
        {
            std::vector<T> dc(size_t(bn * h), T(0));
            for (int64_t t = tn - 1; t >= 0; --t) {
                const T* ng = node.grad.data() + t * bn * h;
                const T* ct = cells.data() + t * bn * h;
                const T* cpv = t > 0 ? cells.data() + (t - 1) * bn * h : c0.data();
                for (int64_t r = 0; r < bn; ++r) {
                    const T* g = gates.data() + (t * bn + r) * 3 * h;
                    T* dg = dgates.data() + (t * bn + r) * 3 * h;
                    for (int64_t j = 0; j < h; ++j) {
                        const int64_t ix = r * h + j;
                        const T z = g[j], f = g[h + j], o = g[2 * h + j];
                        const T dct = o * ng[ix] + dc[ix];
                        const T dz = (T(1) - f) * dct;
                        const T df = (cpv[ix] - z) * dct;
                        const T dob = ct[ix] * ng[ix];
                        dg[j] = (T(1) - z * z) * dz;
                        dg[h + j] = f * (T(1) - f) * df;
                        dg[2 * h + j] = o * (T(1) - o) * dob;
                        dc[ix] = f * dct;
                    }
                }
            }
        }

        // biases: column sums of the three gate lanes
        auto& pbz = node.parents[1 + 3 * size_t(w)];
        auto& pbf = node.parents[2 + 3 * size_t(w)];
        auto& pbo = node.parents[3 + 3 * size_t(w)];
        if (pbz->requires_grad) {
            ensure_grad(*pbz);
            ensure_grad(*pbf);
            ensure_grad(*pbo);
            T* dbz = pbz->grad.data();
            T* dbf = pbf->grad.data();
            T* dbo = pbo->grad.data();
            for (int64_t r = 0; r < rows; ++r) {
                const T* dg = dgates.data() + r * 3 * h;
                for (int64_t j = 0; j < h; ++j) {
                    dbz[j] += dg[j];
                    dbf[j] += dg[h + j];
                    dbo[j] += dg[2 * h + j];
                }
            }
        }

        // weights: dWcat = xext_shift^T * dgates, split back into the gates
        Tensor<T> dwc({din, 3 * h});
        for (int64_t shift = 0; shift < w; ++shift) {
            auto& pwz = node.parents[1 + size_t(shift)];
            auto& pwf = node.parents[1 + size_t(w) + size_t(shift)];
            auto& pwo = node.parents[1 + 2 * size_t(w) + size_t(shift)];
            if (!pwz->requires_grad) continue;
            detail::gemm_tn(rows, 3 * h, din, xext.data() + shift * rowsz, dgates.data(),
                            dwc.data(), false);
            ensure_grad(*pwz);
            ensure_grad(*pwf);
            ensure_grad(*pwo);
            for (int64_t r = 0; r < din; ++r) {
                const T* src = dwc.data() + r * 3 * h;
                T* gz = pwz->grad.data() + r * h;
                T* gf = pwf->grad.data() + r * h;
                T* go = pwo->grad.data() + r * h;
                for (int64_t j = 0; j < h; ++j) {
                    gz[j] += src[j];
                    gf[j] += src[h + j];
                    go[j] += src[2 * h + j];
                }
            }
        }

        // input: accumulate each tap's contribution at its shifted offset
        if (px->requires_grad) {
            ensure_grad(*px);
            Tensor<T> dxext = Tensor<T>::zeros({tn + w - 1, bn, din});
            for (int64_t shift = 0; shift < w; ++shift) {
                detail::gemm_nt(rows, din, 3 * h, dgates.data(), wcat[size_t(shift)].data(),
                                dxext.data() + shift * rowsz, true);
            }
            T* gx = px->grad.data();
            const T* dx = dxext.data() + (w - 1) * rowsz;
            const int64_t n = tn * rowsz;
#pragma omp parallel for schedule(static) if (n > detail::kParallelFlops)
            for (int64_t i = 0; i < n; ++i) gx[i] += dx[i];
        }
    });
    return {node, std::move(out)};
}

inline int64_t lstm_param_count(int64_t d) { return 4 * (d * d + d * d + d); }
inline int64_t qrnn_param_count(int64_t d, int64_t w) { return 3 * (w * d * d + d); }

template <typename T>
std::vector<Var<T>> lstm_param_list(const LstmParams<T>& p) {
    return {p.wx, p.wh, p.b};
}

template <typename T>
std::vector<Var<T>> qrnn_param_list(const QrnnParams<T>& p) {
    std::vector<Var<T>> out;
    for (auto& v : p.wz) out.push_back(v);
    for (auto& v : p.wf) out.push_back(v);
    for (auto& v : p.wo) out.push_back(v);
    out.push_back(p.bz);
    out.push_back(p.bf);
    out.push_back(p.bo);
    return out;
}

}  // namespace shaqlab
