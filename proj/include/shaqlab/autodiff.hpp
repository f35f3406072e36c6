#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <memory>
#include <stdexcept>
#include <unordered_set>
#include <utility>
#include <vector>

#include "shaqlab/gemm.hpp"
#include "shaqlab/tensor.hpp"

namespace shaqlab {

// ---------------------------------------------------------------------------
// Differentiation graph
// ---------------------------------------------------------------------------

template <typename T>
struct Node;

template <typename T>
using Var = std::shared_ptr<Node<T>>;

template <typename T>
struct Node {
    Tensor<T> value;
    Tensor<T> grad;  // allocated lazily on first accumulation
    bool requires_grad = false;
    int64_t id = 0;  // creation order within this thread's graph
    std::vector<Var<T>> parents;
    std::function<void(Node<T>&)> backprop;
};

inline int64_t next_node_id() {
    thread_local int64_t counter = 0;
    return ++counter;
}

template <typename T>
Var<T> constant(Tensor<T> value) {
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(value);
    n->id = next_node_id();
    return n;
}

template <typename T>
Var<T> make_leaf(Tensor<T> value) {
    auto n = constant(std::move(value));
    n->requires_grad = true;
    return n;
}

// Inputs that do not require grad are pruned: the node keeps no parents and
// no backprop closure, so detached subgraphs (e.g. attention caches) cost
// nothing in the backward sweep.
template <typename T, typename F>
Var<T> make_op(Tensor<T> value, std::vector<Var<T>> parents, F&& back) {
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(value);
    n->id = next_node_id();
    for (const auto& p : parents) n->requires_grad = n->requires_grad || p->requires_grad;
    if (n->requires_grad) {
        n->parents = std::move(parents);
        n->backprop = std::forward<F>(back);
    }
    return n;
}

template <typename T>
void ensure_grad(Node<T>& n) {
    if (!n.grad.defined()) n.grad = Tensor<T>::zeros(n.value.shape());
}

template <typename T>
void add_into(Tensor<T>& dst, const Tensor<T>& src) {
    T* d = dst.data();
    const T* s = src.data();
    const int64_t n = dst.numel();
#pragma omp parallel for schedule(static) if (n > detail::kParallelFlops)
    for (int64_t i = 0; i < n; ++i) d[i] += s[i];
}

// Reverse topological sweep from a scalar loss. Grads accumulate additively
// across fan-out; the graph is freed once the caller drops the loss root.
template <typename T>
void backward(const Var<T>& loss) {
    if (loss->value.numel() != 1) {
        throw std::invalid_argument("backward: loss must be scalar, got shape " +
                                    shape_str(loss->value.shape()));
    }
    if (!loss->requires_grad) {
        throw std::logic_error("backward: loss does not depend on any parameter");
    }

    std::vector<Node<T>*> order;
    std::unordered_set<Node<T>*> seen;
    std::vector<std::pair<Node<T>*, size_t>> stack;
    stack.emplace_back(loss.get(), 0);
    seen.insert(loss.get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            Node<T>* p = node->parents[idx++].get();
            if (p->requires_grad && !seen.count(p)) {
                seen.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    loss->grad = Tensor<T>::ones(loss->value.shape());
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node<T>* n = *it;
        if (n->backprop && n->grad.defined()) n->backprop(*n);
    }
}

// ---------------------------------------------------------------------------
// Elementwise and shape ops
// ---------------------------------------------------------------------------

template <typename T>
void check_same_shape(const char* op, const Tensor<T>& a, const Tensor<T>& b) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                    " vs " + shape_str(b.shape()));
    }
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
    check_same_shape("add", a->value, b->value);
    Tensor<T> out(a->value.shape());
    const int64_t n = out.numel();
    const T* av = a->value.data();
    const T* bv = b->value.data();
    T* ov = out.data();
#pragma omp parallel for schedule(static) if (n > detail::kParallelFlops)
    for (int64_t i = 0; i < n; ++i) ov[i] = av[i] + bv[i];
    return make_op<T>(std::move(out), {a, b}, [](Node<T>& node) {
        for (int k = 0; k < 2; ++k) {
            auto& p = node.parents[k];
            if (!p->requires_grad) continue;
            ensure_grad(*p);
            add_into(p->grad, node.grad);
        }
    });
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
    check_same_shape("sub", a->value, b->value);
    Tensor<T> out(a->value.shape());
    const int64_t n = out.numel();
    for (int64_t i = 0; i < n; ++i) out[i] = a->value[i] - b->value[i];
    return make_op<T>(std::move(out), {a, b}, [](Node<T>& node) {
        if (node.parents[0]->requires_grad) {
            ensure_grad(*node.parents[0]);
            add_into(node.parents[0]->grad, node.grad);
        }
        auto& b2 = node.parents[1];
        if (b2->requires_grad) {
            ensure_grad(*b2);
            for (int64_t i = 0; i < node.grad.numel(); ++i) b2->grad[i] -= node.grad[i];
        }
    });
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
    check_same_shape("mul", a->value, b->value);
    Tensor<T> out(a->value.shape());
    const int64_t n = out.numel();
    const T* av = a->value.data();
    const T* bv = b->value.data();
    T* ov = out.data();
#pragma omp parallel for schedule(static) if (n > detail::kParallelFlops)
    for (int64_t i = 0; i < n; ++i) ov[i] = av[i] * bv[i];
    return make_op<T>(std::move(out), {a, b}, [](Node<T>& node) {
        const Tensor<T>& av = node.parents[0]->value;
        const Tensor<T>& bv = node.parents[1]->value;
        if (node.parents[0]->requires_grad) {
            ensure_grad(*node.parents[0]);
            Tensor<T>& g = node.parents[0]->grad;
            for (int64_t i = 0; i < g.numel(); ++i) g[i] += node.grad[i] * bv[i];
        }
        if (node.parents[1]->requires_grad) {
            ensure_grad(*node.parents[1]);
            Tensor<T>& g = node.parents[1]->grad;
            for (int64_t i = 0; i < g.numel(); ++i) g[i] += node.grad[i] * av[i];
        }
    });
}

// y = alpha * x + beta, elementwise with scalar coefficients
template <typename T>
Var<T> affine(const Var<T>& x, T alpha, T beta) {
    Tensor<T> out(x->value.shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = alpha * x->value[i] + beta;
    return make_op<T>(std::move(out), {x}, [alpha](Node<T>& node) {
        auto& p = node.parents[0];
        ensure_grad(*p);
        for (int64_t i = 0; i < p->grad.numel(); ++i) p->grad[i] += alpha * node.grad[i];
    });
}

// x: [.., d], b: [d] broadcast over leading dims
template <typename T>
Var<T> add_bias(const Var<T>& x, const Var<T>& b) {
    const int64_t d = b->value.numel();
    if (x->value.dim(x->value.ndim() - 1) != d) {
        throw std::invalid_argument("add_bias: last extent " + shape_str(x->value.shape()) +
                                    " vs bias length " + std::to_string(d));
    }
    Tensor<T> out(x->value.shape());
    const int64_t rows = out.numel() / d;
    for (int64_t r = 0; r < rows; ++r) {
        const T* xr = x->value.data() + r * d;
        T* o = out.data() + r * d;
        for (int64_t j = 0; j < d; ++j) o[j] = xr[j] + b->value[j];
    }
    return make_op<T>(std::move(out), {x, b}, [d](Node<T>& node) {
        const int64_t rows = node.grad.numel() / d;
        if (node.parents[0]->requires_grad) {
            ensure_grad(*node.parents[0]);
            add_into(node.parents[0]->grad, node.grad);
        }
        if (node.parents[1]->requires_grad) {
            ensure_grad(*node.parents[1]);
            T* gb = node.parents[1]->grad.data();
            for (int64_t r = 0; r < rows; ++r) {
                const T* g = node.grad.data() + r * d;
                for (int64_t j = 0; j < d; ++j) gb[j] += g[j];
            }
        }
    });
}

// x: [.., d], v: [d] broadcast multiply over leading dims
template <typename T>
Var<T> colwise_mul(const Var<T>& x, const Var<T>& v) {
    const int64_t d = v->value.numel();
    if (x->value.dim(x->value.ndim() - 1) != d) {
        throw std::invalid_argument("colwise_mul: last extent mismatch");
    }
    Tensor<T> out(x->value.shape());
    const int64_t rows = out.numel() / d;
    for (int64_t r = 0; r < rows; ++r) {
        const T* xr = x->value.data() + r * d;
        T* o = out.data() + r * d;
        for (int64_t j = 0; j < d; ++j) o[j] = xr[j] * v->value[j];
    }
    return make_op<T>(std::move(out), {x, v}, [d](Node<T>& node) {
        const int64_t rows = node.grad.numel() / d;
        const Tensor<T>& xv = node.parents[0]->value;
        const Tensor<T>& vv = node.parents[1]->value;
        if (node.parents[0]->requires_grad) {
            ensure_grad(*node.parents[0]);
            T* gx = node.parents[0]->grad.data();
            for (int64_t r = 0; r < rows; ++r)
                for (int64_t j = 0; j < d; ++j) gx[r * d + j] += node.grad[r * d + j] * vv[j];
        }
        if (node.parents[1]->requires_grad) {
            ensure_grad(*node.parents[1]);
            T* gv = node.parents[1]->grad.data();
            for (int64_t r = 0; r < rows; ++r)
                for (int64_t j = 0; j < d; ++j) gv[j] += node.grad[r * d + j] * xv[r * d + j];
        }
    });
}

template <typename T>
Var<T> sum(const Var<T>& x) {
    double acc = 0;
    for (int64_t i = 0; i < x->value.numel(); ++i) acc += static_cast<double>(x->value[i]);
    return make_op<T>(Tensor<T>::scalar(static_cast<T>(acc)), {x}, [](Node<T>& node) {
        auto& p = node.parents[0];
        ensure_grad(*p);
        const T g = node.grad[0];
        for (int64_t i = 0; i < p->grad.numel(); ++i) p->grad[i] += g;
    });
}

template <typename T>
Var<T> mean_all(const Var<T>& x) {
    const int64_t n = x->value.numel();
    double acc = 0;
    for (int64_t i = 0; i < n; ++i) acc += static_cast<double>(x->value[i]);
    return make_op<T>(Tensor<T>::scalar(static_cast<T>(acc / static_cast<double>(n))), {x},
                      [n](Node<T>& node) {
                          auto& p = node.parents[0];
                          ensure_grad(*p);
                          const T g = node.grad[0] / static_cast<T>(n);
                          for (int64_t i = 0; i < p->grad.numel(); ++i) p->grad[i] += g;
                      });
}

template <typename T>
Var<T> reshape(const Var<T>& x, Shape shape) {
    Tensor<T> out = x->value.reshaped(std::move(shape));  // shares the buffer
    return make_op<T>(std::move(out), {x}, [](Node<T>& node) {
        auto& p = node.parents[0];
        ensure_grad(*p);
        add_into(p->grad, node.grad);  // same layout, flat add
    });
}

// Contiguous block along axis 0.
template <typename T>
Var<T> slice0(const Var<T>& x, int64_t start, int64_t len) {
    const Shape& s = x->value.shape();
    if (s.empty() || start < 0 || len <= 0 || start + len > s[0]) {
        throw std::invalid_argument("slice0: range [" + std::to_string(start) + "," +
                                    std::to_string(start + len) + ") out of " + shape_str(s));
    }
    Shape os = s;
    os[0] = len;
    const int64_t rowsz = numel_of(s) / s[0];
    Tensor<T> out(os);
    std::memcpy(out.data(), x->value.data() + start * rowsz, sizeof(T) * static_cast<size_t>(len * rowsz));
    return make_op<T>(std::move(out), {x}, [start, rowsz](Node<T>& node) {
        auto& p = node.parents[0];
        ensure_grad(*p);
        T* g = p->grad.data() + start * rowsz;
        const T* ng = node.grad.data();
        const int64_t n = node.grad.numel();
#pragma omp parallel for schedule(static) if (n > detail::kParallelFlops)
        for (int64_t i = 0; i < n; ++i) g[i] += ng[i];
    });
}

// Contiguous block along the last axis.
template <typename T>
Var<T> slice_last(const Var<T>& x, int64_t start, int64_t len) {
    const Shape& s = x->value.shape();
    const int64_t d = s.back();
    if (start < 0 || len <= 0 || start + len > d) throw std::invalid_argument("slice_last: bad range");
    Shape os = s;
    os.back() = len;
    Tensor<T> out(os);
    const int64_t rows = x->value.numel() / d;
    for (int64_t r = 0; r < rows; ++r) {
        std::memcpy(out.data() + r * len, x->value.data() + r * d + start,
                    sizeof(T) * static_cast<size_t>(len));
    }
    return make_op<T>(std::move(out), {x}, [start, len, d](Node<T>& node) {
        auto& p = node.parents[0];
        ensure_grad(*p);
        const int64_t rows = p->grad.numel() / d;
        for (int64_t r = 0; r < rows; ++r) {
            T* g = p->grad.data() + r * d + start;
            const T* ng = node.grad.data() + r * len;
            for (int64_t j = 0; j < len; ++j) g[j] += ng[j];
        }
    });
}

template <typename T>
Var<T> concat0(const std::vector<Var<T>>& xs) {
    if (xs.empty()) throw std::invalid_argument("concat0: empty input");
    Shape os = xs[0]->value.shape();
    const int64_t rowsz = numel_of(os) / os[0];
    int64_t total = 0;
    for (const auto& x : xs) {
        const Shape& s = x->value.shape();
        if (Shape(s.begin() + 1, s.end()) != Shape(os.begin() + 1, os.end())) {
            throw std::invalid_argument("concat0: trailing extents differ");
        }
        total += s[0];
    }
    os[0] = total;
    Tensor<T> out(os);
    int64_t off = 0;
    for (const auto& x : xs) {
        std::memcpy(out.data() + off, x->value.data(), sizeof(T) * static_cast<size_t>(x->value.numel()));
        off += x->value.numel();
    }
    return make_op<T>(std::move(out), std::vector<Var<T>>(xs), [](Node<T>& node) {
        int64_t off = 0;
        for (auto& p : node.parents) {
            const int64_t n = p->value.numel();
            if (p->requires_grad) {
                ensure_grad(*p);
                const T* g = node.grad.data() + off;
                T* pg = p->grad.data();
#pragma omp parallel for schedule(static) if (n > detail::kParallelFlops)
                for (int64_t i = 0; i < n; ++i) pg[i] += g[i];
            }
            off += n;
        }
    });
}

// Concatenation along the last axis; leading extents must agree.
template <typename T>
Var<T> concat_last(const std::vector<Var<T>>& xs) {
    if (xs.empty()) throw std::invalid_argument("concat_last: empty input");
    const Shape& s0 = xs[0]->value.shape();
    const int64_t rows = xs[0]->value.numel() / s0.back();
    int64_t total = 0;
    std::vector<int64_t> widths;
    for (const auto& x : xs) {
        const Shape& s = x->value.shape();
        if (Shape(s.begin(), s.end() - 1) != Shape(s0.begin(), s0.end() - 1)) {
            throw std::invalid_argument("concat_last: leading extents differ");
        }
        widths.push_back(s.back());
        total += s.back();
    }
    Shape os = s0;
    os.back() = total;
    Tensor<T> out(os);
    int64_t off = 0;
    for (size_t xi = 0; xi < xs.size(); ++xi) {
        const int64_t w = widths[xi];
        const T* src = xs[xi]->value.data();
        for (int64_t r = 0; r < rows; ++r) {
            std::memcpy(out.data() + r * total + off, src + r * w, sizeof(T) * size_t(w));
        }
        off += w;
    }
    return make_op<T>(std::move(out), std::vector<Var<T>>(xs), [widths, rows, total](Node<T>& node) {
        int64_t off = 0;
        for (size_t xi = 0; xi < node.parents.size(); ++xi) {
            auto& p = node.parents[xi];
            const int64_t w = widths[xi];
            if (p->requires_grad) {
                ensure_grad(*p);
                T* pg = p->grad.data();
                const T* ng = node.grad.data();
                for (int64_t r = 0; r < rows; ++r) {
                    const T* g = ng + r * total + off;
                    T* d = pg + r * w;
                    for (int64_t j = 0; j < w; ++j) d[j] += g[j];
                }
            }
            off += w;
        }
    });
}

// ---------------------------------------------------------------------------
// Matrix products
// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
struct MatmulDims {
    int64_t batch, m, k, n;
    bool a_batched, b_batched;
};

template <typename T>
MatmulDims<T> matmul_dims(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.ndim() < 2 || b.ndim() < 2) {
        throw std::invalid_argument("matmul: operands must have >= 2 dims, got " +
                                    shape_str(a.shape()) + " x " + shape_str(b.shape()));
    }
    const int64_t m = a.dim(a.ndim() - 2), ka = a.dim(a.ndim() - 1);
    const int64_t kb = b.dim(b.ndim() - 2), n = b.dim(b.ndim() - 1);
    if (ka != kb) {
        throw std::invalid_argument("matmul: inner extents disagree: " + shape_str(a.shape()) +
                                    " x " + shape_str(b.shape()));
    }
    const int64_t ab = a.numel() / (m * ka);
    const int64_t bb = b.numel() / (kb * n);
    if (ab != bb && ab != 1 && bb != 1) {
        throw std::invalid_argument("matmul: batch extents not broadcastable: " +
                                    shape_str(a.shape()) + " x " + shape_str(b.shape()));
    }
    return {std::max(ab, bb), m, ka, n, ab != 1, bb != 1};
}

}  // namespace detail

// a: [.., m, k], b: [.., k, n] -> [.., m, n]; leading dims equal or absent on one side
template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
    const auto d = detail::matmul_dims(a->value, b->value);
    Shape os = d.a_batched || !d.b_batched ? a->value.shape() : b->value.shape();
    os[os.size() - 2] = d.m;
    os[os.size() - 1] = d.n;
    Tensor<T> out(os);
    for (int64_t g = 0; g < d.batch; ++g) {
        const T* ap = a->value.data() + (d.a_batched ? g * d.m * d.k : 0);
        const T* bp = b->value.data() + (d.b_batched ? g * d.k * d.n : 0);
        detail::gemm_nn(d.m, d.n, d.k, ap, bp, out.data() + g * d.m * d.n, false);
    }
    return make_op<T>(std::move(out), {a, b}, [d](Node<T>& node) {
        const Tensor<T>& av = node.parents[0]->value;
        const Tensor<T>& bv = node.parents[1]->value;
        if (node.parents[0]->requires_grad) {
            ensure_grad(*node.parents[0]);
            T* ga = node.parents[0]->grad.data();
            for (int64_t g = 0; g < d.batch; ++g) {
                // dA = dC * B^T
                detail::gemm_nt(d.m, d.k, d.n, node.grad.data() + g * d.m * d.n,
                                bv.data() + (d.b_batched ? g * d.k * d.n : 0),
                                ga + (d.a_batched ? g * d.m * d.k : 0), true);
            }
        }
        if (node.parents[1]->requires_grad) {
            ensure_grad(*node.parents[1]);
            T* gb = node.parents[1]->grad.data();
            for (int64_t g = 0; g < d.batch; ++g) {
                // dB = A^T * dC
                detail::gemm_tn(d.m, d.n, d.k, av.data() + (d.a_batched ? g * d.m * d.k : 0),
                                node.grad.data() + g * d.m * d.n,
                                gb + (d.b_batched ? g * d.k * d.n : 0), true);
            }
        }
    });
}

// a: [.., m, k], b: [n, k] used transposed -> [.., m, n]; shares b with an
// embedding table for weight tying.
template <typename T>
Var<T> matmul_nt(const Var<T>& a, const Var<T>& b) {
    if (b->value.ndim() != 2) throw std::invalid_argument("matmul_nt: b must be 2-d");
    const int64_t k = a->value.dim(a->value.ndim() - 1);
    if (b->value.dim(1) != k) {
        throw std::invalid_argument("matmul_nt: inner extents disagree: " + shape_str(a->value.shape()) +
                                    " x " + shape_str(b->value.shape()) + "^T");
    }
    const int64_t n = b->value.dim(0);
    const int64_t rows = a->value.numel() / k;
    Shape os = a->value.shape();
    os.back() = n;
    Tensor<T> out(os);
    detail::gemm_nt(rows, n, k, a->value.data(), b->value.data(), out.data(), false);
    return make_op<T>(std::move(out), {a, b}, [rows, n, k](Node<T>& node) {
        const Tensor<T>& av = node.parents[0]->value;
        const Tensor<T>& bv = node.parents[1]->value;
        if (node.parents[0]->requires_grad) {
            ensure_grad(*node.parents[0]);
            detail::gemm_nn(rows, k, n, node.grad.data(), bv.data(), node.parents[0]->grad.data(), true);
        }
        if (node.parents[1]->requires_grad) {
            ensure_grad(*node.parents[1]);
            detail::gemm_tn(rows, k, n, node.grad.data(), av.data(), node.parents[1]->grad.data(), true);
        }
    });
}

}  // namespace shaqlab
