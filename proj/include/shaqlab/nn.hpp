#pragma once

#include <cmath>
#include <random>

#include "shaqlab/autodiff.hpp"
#include "shaqlab/fastmath.hpp"

namespace shaqlab {

enum class PointwiseKind { Sigmoid, Tanh, Gelu };

template <typename T>
T sigmoid_scalar(T x) {
    return fsigmoid(x);
}

// tanh form: 0.5 x (1 + tanh(sqrt(2/pi)(x + 0.044715 x^3)))
template <typename T>
T gelu_scalar(T x) {
    const T c = static_cast<T>(0.7978845608028654);  // sqrt(2/pi)
    const T u = c * (x + static_cast<T>(0.044715) * x * x * x);
    return static_cast<T>(0.5) * x * (T(1) + ftanh(u));
}

template <typename T>
Var<T> pointwise(PointwiseKind kind, const Var<T>& x) {
    Tensor<T> out(x->value.shape());
    const int64_t n = out.numel();
    const T* xv = x->value.data();
    T* o = out.data();
    const bool par = n > detail::kParallelFlops;
    switch (kind) {
        case PointwiseKind::Sigmoid:
#pragma omp parallel for schedule(static) if (par)
            for (int64_t i = 0; i < n; ++i) o[i] = sigmoid_scalar(xv[i]);
            break;
        case PointwiseKind::Tanh:
#pragma omp parallel for schedule(static) if (par)
            for (int64_t i = 0; i < n; ++i) o[i] = ftanh(xv[i]);
            break;
        case PointwiseKind::Gelu:
#pragma omp parallel for schedule(static) if (par)
            for (int64_t i = 0; i < n; ++i) o[i] = gelu_scalar(xv[i]);
            break;
    }
    Tensor<T> saved = out;  // shares buffer; sigmoid/tanh reuse y in backward
    return make_op<T>(std::move(out), {x}, [kind, saved](Node<T>& node) {
        auto& p = node.parents[0];
        ensure_grad(*p);
        T* g = p->grad.data();
        const T* ng = node.grad.data();
        const T* y = saved.data();
        const T* xv = p->value.data();
        const int64_t n = node.grad.numel();
        const bool par = n > detail::kParallelFlops;
        switch (kind) {
            case PointwiseKind::Sigmoid:
#pragma omp parallel for schedule(static) if (par)
                for (int64_t i = 0; i < n; ++i) g[i] += ng[i] * y[i] * (T(1) - y[i]);
                break;
            case PointwiseKind::Tanh:
#pragma omp parallel for schedule(static) if (par)
                for (int64_t i = 0; i < n; ++i) g[i] += ng[i] * (T(1) - y[i] * y[i]);
                break;
            case PointwiseKind::Gelu: {
                const T c = static_cast<T>(0.7978845608028654);
                const T a = static_cast<T>(0.044715);
#pragma omp parallel for schedule(static) if (par)
                for (int64_t i = 0; i < n; ++i) {
                    const T xi = xv[i];
                    const T u = c * (xi + a * xi * xi * xi);
                    const T t = ftanh(u);
                    const T du = c * (T(1) + T(3) * a * xi * xi);
                    g[i] += ng[i] * (static_cast<T>(0.5) * (T(1) + t) +
                                     static_cast<T>(0.5) * xi * (T(1) - t * t) * du);
                }
                break;
            }
        }
    });
}

template <typename T>
Var<T> sigmoid(const Var<T>& x) { return pointwise(PointwiseKind::Sigmoid, x); }
template <typename T>
Var<T> tanh_op(const Var<T>& x) { return pointwise(PointwiseKind::Tanh, x); }
template <typename T>
Var<T> gelu(const Var<T>& x) { return pointwise(PointwiseKind::Gelu, x); }

// Stabilized by max-subtraction; -inf scores produce exact zeros, which the
// attention mask relies on.
template <typename T>
Var<T> softmax(const Var<T>& x, int64_t axis) {
    const Shape& s = x->value.shape();
    const int64_t nd = x->value.ndim();
    if (axis < 0) axis += nd;
    if (axis < 0 || axis >= nd) throw std::invalid_argument("softmax: axis out of range");
    int64_t outer = 1, inner = 1;
    for (int64_t i = 0; i < axis; ++i) outer *= s[i];
    for (int64_t i = axis + 1; i < nd; ++i) inner *= s[i];
    const int64_t len = s[axis];

    Tensor<T> out(s);
    const T* xv = x->value.data();
    T* o = out.data();
    const bool par = outer * len * inner > detail::kParallelFlops;
#pragma omp parallel for schedule(static) if (par)
    for (int64_t a = 0; a < outer; ++a) {
        for (int64_t b = 0; b < inner; ++b) {
            const int64_t base = a * len * inner + b;
            T mx = xv[base];
            for (int64_t i = 1; i < len; ++i) mx = std::max(mx, xv[base + i * inner]);
            // -inf scores (masked positions) must map to exactly zero
            const T ninf = -std::numeric_limits<T>::infinity();
            T denom = 0;
            if (inner == 1) {
#pragma omp simd reduction(+ : denom)
                for (int64_t i = 0; i < len; ++i) {
                    const T xi = xv[base + i];
                    const T e = xi == ninf ? T(0) : fexp(xi - mx);
                    o[base + i] = e;
                    denom += e;
                }
            } else {
                for (int64_t i = 0; i < len; ++i) {
                    const T xi = xv[base + i * inner];
                    const T e = xi == ninf ? T(0) : fexp(xi - mx);
                    o[base + i * inner] = e;
                    denom += e;
                }
            }
            const T inv = T(1) / denom;
            for (int64_t i = 0; i < len; ++i) o[base + i * inner] *= inv;
        }
    }
    Tensor<T> y = out;
    return make_op<T>(std::move(out), {x}, [y, outer, inner, len](Node<T>& node) {
        auto& p = node.parents[0];
        ensure_grad(*p);
        T* g = p->grad.data();
        const T* ng = node.grad.data();
        const T* yv = y.data();
        const bool par = outer * len * inner > detail::kParallelFlops;
#pragma omp parallel for schedule(static) if (par)
        for (int64_t a = 0; a < outer; ++a) {
            for (int64_t b = 0; b < inner; ++b) {
                const int64_t base = a * len * inner + b;
                T dot = 0;
                if (inner == 1) {
#pragma omp simd reduction(+ : dot)
                    for (int64_t i = 0; i < len; ++i) dot += yv[base + i] * ng[base + i];
                } else {
                    for (int64_t i = 0; i < len; ++i) dot += yv[base + i * inner] * ng[base + i * inner];
                }
                for (int64_t i = 0; i < len; ++i) {
                    const int64_t ix = base + i * inner;
                    g[ix] += yv[ix] * (ng[ix] - dot);
                }
            }
        }
    });
}

// Per-row normalization over the last axis, affine applied after.
template <typename T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, T eps = static_cast<T>(1e-5)) {
    const int64_t d = x->value.dim(x->value.ndim() - 1);
    if (gamma->value.numel() != d || beta->value.numel() != d) {
        throw std::invalid_argument("layer_norm: gamma/beta length " +
                                    std::to_string(gamma->value.numel()) + " vs feature dim " +
                                    std::to_string(d));
    }
    const int64_t rows = x->value.numel() / d;
    Tensor<T> out(x->value.shape());
    Tensor<T> xhat(x->value.shape());
    Tensor<T> inv_std({rows});
    const T* xv = x->value.data();
    const T* gm = gamma->value.data();
    const T* bt = beta->value.data();
    const bool par = rows * d > detail::kParallelFlops;
#pragma omp parallel for schedule(static) if (par)
    for (int64_t r = 0; r < rows; ++r) {
        const T* xr = xv + r * d;
        T mean = 0;
#pragma omp simd reduction(+ : mean)
        for (int64_t j = 0; j < d; ++j) mean += xr[j];
        mean /= static_cast<T>(d);
        T var = 0;
#pragma omp simd reduction(+ : var)
        for (int64_t j = 0; j < d; ++j) {
            const T c = xr[j] - mean;
            var += c * c;
        }
        var /= static_cast<T>(d);
        const T inv = T(1) / std::sqrt(var + eps);
        inv_std[r] = inv;
        T* xh = xhat.data() + r * d;
        T* o = out.data() + r * d;
        for (int64_t j = 0; j < d; ++j) {
            xh[j] = (xr[j] - mean) * inv;
            o[j] = gm[j] * xh[j] + bt[j];
        }
    }
    return make_op<T>(std::move(out), {x, gamma, beta}, [xhat, inv_std, d](Node<T>& node) {
        const int64_t rows = node.grad.numel() / d;
        const T* ng = node.grad.data();
        const T* xh = xhat.data();
        const T* gm = node.parents[1]->value.data();
        if (node.parents[1]->requires_grad) {
            ensure_grad(*node.parents[1]);
            T* gg = node.parents[1]->grad.data();
            for (int64_t r = 0; r < rows; ++r)
                for (int64_t j = 0; j < d; ++j) gg[j] += ng[r * d + j] * xh[r * d + j];
        }
        if (node.parents[2]->requires_grad) {
            ensure_grad(*node.parents[2]);
            T* gb = node.parents[2]->grad.data();
            for (int64_t r = 0; r < rows; ++r)
                for (int64_t j = 0; j < d; ++j) gb[j] += ng[r * d + j];
        }
        if (node.parents[0]->requires_grad) {
            ensure_grad(*node.parents[0]);
            T* gx = node.parents[0]->grad.data();
            const bool par = rows * d > detail::kParallelFlops;
#pragma omp parallel for schedule(static) if (par)
            for (int64_t r = 0; r < rows; ++r) {
                const T* ngr = ng + r * d;
                const T* xhr = xh + r * d;
                T sum_dy = 0, sum_dyxh = 0;
#pragma omp simd reduction(+ : sum_dy, sum_dyxh)
                for (int64_t j = 0; j < d; ++j) {
                    const T dy = ngr[j] * gm[j];
                    sum_dy += dy;
                    sum_dyxh += dy * xhr[j];
                }
                const T inv = inv_std[r];
                const T invd = T(1) / static_cast<T>(d);
                for (int64_t j = 0; j < d; ++j) {
                    const T dy = ngr[j] * gm[j];
                    gx[r * d + j] += inv * (dy - sum_dy * invd - xhr[j] * sum_dyxh * invd);
                }
            }
        }
    });
}

// Train mode zeroes elements with probability p and scales survivors by
// 1/(1-p); eval mode returns the input node unchanged (bit-exact identity).
template <typename T, typename Rng>
Var<T> dropout(const Var<T>& x, double p, bool train, Rng& rng) {
    if (p < 0.0 || p >= 1.0) {
        throw std::invalid_argument("dropout: p must be in [0,1), got " + std::to_string(p));
    }
    if (!train || p == 0.0) return x;
    Tensor<T> mask(x->value.shape());
    const T keep = static_cast<T>(1.0 / (1.0 - p));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int64_t i = 0; i < mask.numel(); ++i) mask[i] = u(rng) < p ? T(0) : keep;
    Tensor<T> out(x->value.shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = x->value[i] * mask[i];
    return make_op<T>(std::move(out), {x}, [mask](Node<T>& node) {
        auto& par = node.parents[0];
        ensure_grad(*par);
        T* g = par->grad.data();
        for (int64_t i = 0; i < node.grad.numel(); ++i) g[i] += node.grad[i] * mask[i];
    });
}

// table: [V, d], ids: [..] -> [.., d]
template <typename T>
Var<T> embedding(const Var<T>& table, const Tensor<int32_t>& ids) {
    const int64_t v = table->value.dim(0), d = table->value.dim(1);
    Shape os = ids.shape();
    os.push_back(d);
    Tensor<T> out(os);
    for (int64_t r = 0; r < ids.numel(); ++r) {
        const int32_t id = ids[r];
        if (id < 0 || id >= v) {
            throw std::out_of_range("embedding: id " + std::to_string(id) + " outside [0," +
                                    std::to_string(v) + ")");
        }
        std::memcpy(out.data() + r * d, table->value.data() + int64_t(id) * d,
                    sizeof(T) * static_cast<size_t>(d));
    }
    return make_op<T>(std::move(out), {table}, [ids, d](Node<T>& node) {
        auto& p = node.parents[0];
        ensure_grad(*p);
        for (int64_t r = 0; r < ids.numel(); ++r) {
            T* g = p->grad.data() + int64_t(ids[r]) * d;
            const T* ng = node.grad.data() + r * d;
            for (int64_t j = 0; j < d; ++j) g[j] += ng[j];
        }
    });
}

// logits: [.., V], targets: flat ids of length numel/V -> scalar mean loss in nats
template <typename T>
Var<T> cross_entropy_logits(const Var<T>& logits, const Tensor<int32_t>& targets) {
    const int64_t v = logits->value.dim(logits->value.ndim() - 1);
    const int64_t rows = logits->value.numel() / v;
    if (targets.numel() != rows) {
        throw std::invalid_argument("cross_entropy: " + std::to_string(targets.numel()) +
                                    " targets for " + std::to_string(rows) + " positions");
    }
    const T* xv = logits->value.data();
    double acc = 0;
    for (int64_t r = 0; r < rows; ++r) {
        const int32_t t = targets[r];
        if (t < 0 || t >= v) {
            throw std::out_of_range("cross_entropy: target " + std::to_string(t) + " outside [0," +
                                    std::to_string(v) + ")");
        }
        const T* xr = xv + r * v;
        T mx = xr[0];
        for (int64_t j = 1; j < v; ++j) mx = std::max(mx, xr[j]);
        double denom = 0;
#pragma omp simd reduction(+ : denom)
        for (int64_t j = 0; j < v; ++j) denom += static_cast<double>(fexp(xr[j] - mx));
        acc += std::log(denom) + static_cast<double>(mx) - static_cast<double>(xr[t]);
    }
    const T loss = static_cast<T>(acc / static_cast<double>(rows));
    return make_op<T>(Tensor<T>::scalar(loss), {logits}, [targets, v, rows](Node<T>& node) {
        auto& p = node.parents[0];
        ensure_grad(*p);
        const T g = node.grad[0] / static_cast<T>(rows);
        const T* xv = p->value.data();
        T* gx = p->grad.data();
#pragma omp parallel for schedule(static) if (rows * v > detail::kParallelFlops)
        for (int64_t r = 0; r < rows; ++r) {
            const T* xr = xv + r * v;
            T* gr = gx + r * v;
            T mx = xr[0];
            for (int64_t j = 1; j < v; ++j) mx = std::max(mx, xr[j]);
            thread_local std::vector<T> e;
            e.resize(size_t(v));
            T denom = 0;
            T* ep = e.data();
#pragma omp simd reduction(+ : denom)
            for (int64_t j = 0; j < v; ++j) {
                ep[j] = fexp(xr[j] - mx);
                denom += ep[j];
            }
            const T ginv = g / denom;
            for (int64_t j = 0; j < v; ++j) gr[j] += ginv * ep[j];
            gr[targets[r]] -= g;
        }
    });
}

// y = x * W + b over the last axis; W: [in, out], b: [out] (optional)
template <typename T>
Var<T> linear(const Var<T>& x, const Var<T>& w, const Var<T>& b) {
    const Shape& s = x->value.shape();
    const int64_t in = w->value.dim(0);
    Shape flat{x->value.numel() / in, in};
    auto y = matmul(reshape(x, flat), w);
    if (b) y = add_bias(y, b);
    Shape os = s;
    os.back() = w->value.dim(1);
    return reshape(y, os);
}

}  // namespace shaqlab
