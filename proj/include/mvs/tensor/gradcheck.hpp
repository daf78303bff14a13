// Copyright Contributors to the mvskit Project
// SPDX-License-Identifier: Apache-2.0

#ifndef MVS_TENSOR_GRADCHECK_HPP
#define MVS_TENSOR_GRADCHECK_HPP

#include <cmath>

#include "mvs/tensor/tensor.hpp"

namespace mvs {

/// Compares reverse-mode gradients against central finite differences
/// (f(x+h) - f(x-h)) / 2h for every element of every requires_grad input.
/// `fn` must map (tape, inputs) to a scalar tensor and be deterministic.
/// Returns the maximum relative error, guarded by an absolute floor.
template <typename S, typename Fn>
S check_gradient(Fn fn, std::vector<Tensor<S>> inputs, S h = S(1e-5), S abs_floor = S(1e-6))
{
    Tape<S> tape;
    Tensor<S> root = fn(&tape, inputs);
    if (root.numel() != 1)
        throw std::invalid_argument("check_gradient: function under test must return a scalar");
    for (auto& in : inputs)
        in.zero_grad();
    tape.backward(root);

    S max_err = S(0);
    for (auto& in : inputs)
    {
        if (!in.requires_grad())
            continue;
        const std::vector<S> analytic = in.grad();
        for (std::size_t i = 0; i < in.data().size(); ++i)
        {
            const S saved = in.data()[i];
            in.data()[i] = saved + h;
            const S fp = fn(nullptr, inputs).value();
            in.data()[i] = saved - h;
            const S fm = fn(nullptr, inputs).value();
            in.data()[i] = saved;
            const S numeric = (fp - fm) / (S(2) * h);
            const S denom = std::max(abs_floor, std::max(std::abs(analytic[i]),
                                                         std::abs(numeric)));
            max_err = std::max(max_err, std::abs(analytic[i] - numeric) / denom);
        }
    }
    return max_err;
}

} // namespace mvs

#endif
