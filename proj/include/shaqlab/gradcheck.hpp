#pragma once

#include <functional>
#include <random>

#include "shaqlab/autodiff.hpp"

namespace shaqlab {

// Central-difference check of a scalar loss against the analytic gradients.
// loss_fn must be deterministic (dropout off or a fixed seed per call) and
// rebuild the graph from the current parameter values on every invocation.
// Returns the max over sampled coordinates of
//   |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
template <typename T>
double finite_diff_check(const std::function<Var<T>()>& loss_fn, const std::vector<Var<T>>& params,
                         double eps = 1e-5, int64_t max_coords_per_param = 32, uint64_t seed = 1234) {
    for (const auto& p : params) p->grad = Tensor<T>{};
    auto loss = loss_fn();
    backward(loss);
    std::vector<Tensor<T>> analytic;
    analytic.reserve(params.size());
    for (const auto& p : params) {
        analytic.push_back(p->grad.defined() ? p->grad.clone() : Tensor<T>::zeros(p->value.shape()));
    }

    std::mt19937_64 rng(seed);
    double worst = 0;
    for (size_t pi = 0; pi < params.size(); ++pi) {
        Tensor<T>& v = params[pi]->value;
        const int64_t n = v.numel();
        std::vector<int64_t> coords;
        if (n <= max_coords_per_param) {
            for (int64_t i = 0; i < n; ++i) coords.push_back(i);
        } else {
            std::uniform_int_distribution<int64_t> pick(0, n - 1);
            for (int64_t i = 0; i < max_coords_per_param; ++i) coords.push_back(pick(rng));
        }
        for (int64_t c : coords) {
            const T saved = v[c];
            v[c] = saved + static_cast<T>(eps);
            const double lp = static_cast<double>(loss_fn()->value[0]);
            v[c] = saved - static_cast<T>(eps);
            const double lm = static_cast<double>(loss_fn()->value[0]);
            v[c] = saved;
            const double numeric = (lp - lm) / (2.0 * eps);
            const double a = static_cast<double>(analytic[pi][c]);
            const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
            worst = std::max(worst, err);
        }
    }
    for (const auto& p : params) p->grad = Tensor<T>{};
    return worst;
}

}  // namespace shaqlab
