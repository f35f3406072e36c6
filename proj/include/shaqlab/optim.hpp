#pragma once

#include <algorithm>
#include <cmath>

#include "shaqlab/model.hpp"

namespace shaqlab {

enum class OptimizerKind { Lamb, Adam };

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::Lamb;
    double lr = 2e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-6;
    double weight_decay = 0.0;
    double clamp_lo = 0.0;  // trust-ratio clamp (lamb)
    double clamp_hi = 10.0;
};

// Global L2 clip over all grads; returns the pre-clip norm. Missing grads
// count as zero.
template <typename T>
double clip_grad_norm(std::vector<Parameter<T>>& params, double max_norm) {
    if (max_norm <= 0) throw std::invalid_argument("clip_grad_norm: max_norm must be > 0");
    double sq = 0;
    for (auto& p : params) {
        if (!p.var->grad.defined()) continue;
        const Tensor<T>& g = p.var->grad;
        for (int64_t i = 0; i < g.numel(); ++i) sq += double(g[i]) * double(g[i]);
    }
    const double norm = std::sqrt(sq);
    if (norm > max_norm) {
        const T s = static_cast<T>(max_norm / norm);
        for (auto& p : params) {
            if (!p.var->grad.defined()) continue;
            Tensor<T>& g = p.var->grad;
            for (int64_t i = 0; i < g.numel(); ++i) g[i] *= s;
        }
    }
    return norm;
}

// Bias-corrected Adam update with decoupled weight decay; LAMB additionally
// scales each parameter tensor's update by the clamped trust ratio
// ||w|| / ||u||. Moments and updates are computed in double.
template <typename T>
class Optimizer {
public:
    Optimizer(std::vector<Parameter<T>>& params, OptimizerConfig cfg)
        : params_(&params), cfg_(cfg) {
        for (auto& p : params) {
            m_.push_back(Tensor<double>::zeros(p.var->value.shape()));
            v_.push_back(Tensor<double>::zeros(p.var->value.shape()));
        }
    }

    const OptimizerConfig& config() const { return cfg_; }
    int64_t step_count() const { return t_; }

    // One update over all parameters. Returns false (and changes nothing) if
    // any gradient is non-finite; the harness aborts on that signal.
    bool step(double lr_override = -1.0) {
        auto& params = *params_;
        for (auto& p : params) {
            if (!p.var->grad.defined()) continue;
            const Tensor<T>& g = p.var->grad;
            for (int64_t i = 0; i < g.numel(); ++i) {
                if (!std::isfinite(double(g[i]))) return false;
            }
        }
        const double lr = lr_override >= 0 ? lr_override : cfg_.lr;
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, double(t_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, double(t_));
        for (size_t pi = 0; pi < params.size(); ++pi) {
            auto& p = params[pi];
            Tensor<double>& m = m_[pi];
            Tensor<double>& v = v_[pi];
            Tensor<T>& w = p.var->value;
            const int64_t n = w.numel();
            const bool has_grad = p.var->grad.defined();

            double wnorm_sq = 0, unorm_sq = 0;
            std::vector<double> u(static_cast<size_t>(n));
            for (int64_t i = 0; i < n; ++i) {
                const double gi = has_grad ? double(p.var->grad[i]) : 0.0;
                m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
                v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
                const double mhat = m[i] / bc1;
                const double vhat = v[i] / bc2;
                const double ui = mhat / (std::sqrt(vhat) + cfg_.eps) + cfg_.weight_decay * double(w[i]);
                u[size_t(i)] = ui;
                wnorm_sq += double(w[i]) * double(w[i]);
                unorm_sq += ui * ui;
            }
            double scale = 1.0;
            if (cfg_.kind == OptimizerKind::Lamb) {
                double r = 1.0;
                if (wnorm_sq > 0 && unorm_sq > 0) r = std::sqrt(wnorm_sq) / std::sqrt(unorm_sq);
                scale = std::clamp(r, cfg_.clamp_lo, cfg_.clamp_hi);
            }
            for (int64_t i = 0; i < n; ++i) {
                w[i] = static_cast<T>(double(w[i]) - lr * scale * u[size_t(i)]);
            }
        }
        return true;
    }

    void zero_grad() {
        for (auto& p : *params_) p.var->grad = Tensor<T>{};
    }

    // Serialization surface: moments plus the step counter.
    std::vector<std::pair<std::string, Tensor<double>>> named_state() const {
        std::vector<std::pair<std::string, Tensor<double>>> out;
        const auto& params = *params_;
        for (size_t i = 0; i < params.size(); ++i) {
            out.emplace_back("optim.m." + params[i].name, m_[i]);
            out.emplace_back("optim.v." + params[i].name, v_[i]);
        }
        return out;
    }

    void load_state(const std::vector<std::pair<std::string, Tensor<double>>>& named, int64_t t) {
        auto& params = *params_;
        for (size_t i = 0; i < params.size(); ++i) {
            for (const auto& [name, tensor] : named) {
                if (name == "optim.m." + params[i].name) m_[i] = tensor.clone();
                if (name == "optim.v." + params[i].name) v_[i] = tensor.clone();
            }
        }
        t_ = t;
    }

private:
    std::vector<Parameter<T>>* params_;
    OptimizerConfig cfg_;
    std::vector<Tensor<double>> m_, v_;
    int64_t t_ = 0;
};

struct LrSchedule {
    enum class Kind { Constant, Warmup } kind = Kind::Constant;
    double target = 2e-3;
    int64_t warmup_steps = 0;
};

inline double lr_at(const LrSchedule& s, int64_t step) {
    if (s.kind == LrSchedule::Kind::Constant || s.warmup_steps <= 0) return s.target;
    if (step >= s.warmup_steps) return s.target;
    return s.target * double(step) / double(s.warmup_steps);
}

}  // namespace shaqlab
