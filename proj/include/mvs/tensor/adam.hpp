// Copyright Contributors to the mvskit Project
// SPDX-License-Identifier: Apache-2.0

#ifndef MVS_TENSOR_ADAM_HPP
#define MVS_TENSOR_ADAM_HPP

#include <cmath>

#include "mvs/tensor/tensor.hpp"

namespace mvs {

struct AdamConfig
{
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adaptive-moment optimizer over a fixed parameter list. Updates are
/// deterministic given identical parameters, gradients and state.
template <typename S>
class Adam
{
public:
    Adam(std::vector<Tensor<S>> params, AdamConfig cfg = {})
        : params_(std::move(params)), cfg_(cfg)
    {
        m_.reserve(params_.size());
        v_.reserve(params_.size());
        for (const auto& p : params_)
        {
            m_.emplace_back(p.numel(), S(0));
            v_.emplace_back(p.numel(), S(0));
        }
    }

    void zero_grad()
    {
        for (auto& p : params_)
            p.zero_grad();
    }

    void step()
    {
        ++step_count_;
        const S b1 = S(cfg_.beta1), b2 = S(cfg_.beta2);
        const S bias1 = S(1) - S(std::pow(cfg_.beta1, static_cast<double>(step_count_)));
        const S bias2 = S(1) - S(std::pow(cfg_.beta2, static_cast<double>(step_count_)));
        const S lr = S(cfg_.learning_rate);
        const S eps = S(cfg_.eps);
        for (std::size_t pi = 0; pi < params_.size(); ++pi)
        {
            auto& p = params_[pi];
            const auto& g = p.grad();
            auto& m = m_[pi];
            auto& v = v_[pi];
            auto& d = p.data();
            for (std::size_t i = 0; i < d.size(); ++i)
            {
                m[i] = b1 * m[i] + (S(1) - b1) * g[i];
                v[i] = b2 * v[i] + (S(1) - b2) * g[i] * g[i];
                const S mhat = m[i] / bias1;
                const S vhat = v[i] / bias2;
                d[i] -= lr * mhat / (std::sqrt(vhat) + eps);
            }
        }
    }

    std::int64_t step_count() const { return step_count_; }
    const AdamConfig& config() const { return cfg_; }

private:
    std::vector<Tensor<S>> params_;
    AdamConfig cfg_;
    std::vector<std::vector<S>> m_;
    std::vector<std::vector<S>> v_;
    std::int64_t step_count_ = 0;
};

} // namespace mvs

#endif
