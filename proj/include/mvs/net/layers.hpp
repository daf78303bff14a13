// Copyright Contributors to the mvskit Project
// SPDX-License-Identifier: Apache-2.0

#ifndef MVS_NET_LAYERS_HPP
#define MVS_NET_LAYERS_HPP

#include <string>
#include <utility>
#include <vector>

#include "mvs/tensor/conv.hpp"
#include "mvs/tensor/ops.hpp"
#include "mvs/tensor/rng.hpp"

namespace mvs {

template <typename S>
using NamedTensors = std::vector<std::pair<std::string, Tensor<S>>>;

namespace detail {

template <typename S>
Tensor<S> uniform_init(Shape shape, double bound, Rng& rng)
{
    Tensor<S> t = Tensor<S>::zeros(std::move(shape), true);
    for (auto& v : t.data())
        v = static_cast<S>(rng.uniform(-bound, bound));
    return t;
}

} // namespace detail

/// Convolution with optional batch norm + ReLU, the building block of every
/// subnetwork. Weight init is fan-in-scaled uniform.
template <typename S>
struct ConvBlock2d
{
    Tensor<S> w, b;
    Tensor<S> gamma, beta, run_mean, run_var;
    int stride = 1;
    bool bn_relu = true;
    S momentum = S(0.1);

    void init(int cin, int cout, int k, int stride_, bool bn_relu_, Rng& rng,
              bool zero_init = false)
    {
        stride = stride_;
        bn_relu = bn_relu_;
        const double bound = 1.0 / std::sqrt(static_cast<double>(cin) * k * k);
        w = detail::uniform_init<S>({cout, cin, k, k}, zero_init ? 0.0 : bound, rng);
        b = detail::uniform_init<S>({cout}, zero_init ? 0.0 : bound, rng);
        if (bn_relu)
        {
            gamma = Tensor<S>::full({cout}, S(1), true);
            beta = Tensor<S>::zeros({cout}, true);
            run_mean = Tensor<S>::zeros({cout});
            run_var = Tensor<S>::full({cout}, S(1));
        }
    }

    Tensor<S> forward(Tape<S>* tape, const Tensor<S>& x, NormMode mode)
    {
        Tensor<S> y = conv2d(tape, x, w, b, stride);
        if (!bn_relu)
            return y;
        y = batch_norm(tape, y, gamma, beta, run_mean, run_var, mode, momentum);
        return relu(tape, y);
    }

    void collect(const std::string& prefix, NamedTensors<S>& params, NamedTensors<S>& buffers)
    {
        params.emplace_back(prefix + ".weight", w);
        params.emplace_back(prefix + ".bias", b);
        if (bn_relu)
        {
            params.emplace_back(prefix + ".bn.gamma", gamma);
            params.emplace_back(prefix + ".bn.beta", beta);
            buffers.emplace_back(prefix + ".bn.run_mean", run_mean);
            buffers.emplace_back(prefix + ".bn.run_var", run_var);
        }
    }
};

template <typename S>
struct ConvBlock3d
{
    Tensor<S> w, b;
    Tensor<S> gamma, beta, run_mean, run_var;
    int stride = 1;
    bool bn_relu = true;
    bool transposed = false;
    S momentum = S(0.1);

    void init(int cin, int cout, int k, int stride_, bool bn_relu_, bool transposed_,
              Rng& rng)
    {
        stride = stride_;
        bn_relu = bn_relu_;
        transposed = transposed_;
        const double bound = 1.0 / std::sqrt(static_cast<double>(cin) * k * k * k);
        if (transposed)
            w = detail::uniform_init<S>({cin, cout, k, k, k}, bound, rng);
        else
            w = detail::uniform_init<S>({cout, cin, k, k, k}, bound, rng);
        b = detail::uniform_init<S>({cout}, bound, rng);
        if (bn_relu)
        {
            gamma = Tensor<S>::full({cout}, S(1), true);
            beta = Tensor<S>::zeros({cout}, true);
            run_mean = Tensor<S>::zeros({cout});
            run_var = Tensor<S>::full({cout}, S(1));
        }
    }

    Tensor<S> forward(Tape<S>* tape, const Tensor<S>& x, NormMode mode)
    {
        Tensor<S> y = transposed ? transposed_conv3d(tape, x, w, b, stride)
                                 : conv3d(tape, x, w, b, stride);
        if (!bn_relu)
            return y;
        y = batch_norm(tape, y, gamma, beta, run_mean, run_var, mode, momentum);
        return relu(tape, y);
    }

    void collect(const std::string& prefix, NamedTensors<S>& params, NamedTensors<S>& buffers)
    {
        params.emplace_back(prefix + ".weight", w);
        params.emplace_back(prefix + ".bias", b);
        if (bn_relu)
        {
            params.emplace_back(prefix + ".bn.gamma", gamma);
            params.emplace_back(prefix + ".bn.beta", beta);
            buffers.emplace_back(prefix + ".bn.run_mean", run_mean);
            buffers.emplace_back(prefix + ".bn.run_var", run_var);
        }
    }
};

} // namespace mvs

#endif
