// Copyright Contributors to the mvskit Project
// SPDX-License-Identifier: Apache-2.0
//
// Elementwise, reduction and normalization ops with reverse-mode gradients.
// Every op follows the same pattern: compute the forward result, then (if a
// tape is given and an input requires grad) record a closure that scatters
// d(out) into the inputs. Reduction orders are fixed so repeated runs are
// bit-identical.

#ifndef MVS_TENSOR_OPS_HPP
#define MVS_TENSOR_OPS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "mvs/tensor/tensor.hpp"

namespace mvs {

template <typename S>
Tensor<S> relu(Tape<S>* tape, const Tensor<S>& x)
{
    Tensor<S> out = Tensor<S>::zeros(x.shape(), x.requires_grad());
    const auto& xd = x.data();
    auto& od = out.data();
    for (std::size_t i = 0; i < xd.size(); ++i)
        od[i] = xd[i] > S(0) ? xd[i] : S(0);
    if (detail::want_record(tape, x.requires_grad()))
    {
        tape->record([x, out]() mutable {
            const auto& g = out.grad();
            const auto& xd2 = x.data();
            auto& gx = x.grad();
            // subgradient at 0 is 0
            for (std::size_t i = 0; i < xd2.size(); ++i)
                if (xd2[i] > S(0))
                    gx[i] += g[i];
        }, out);
    }
    return out;
}

namespace detail {

enum class BinKind { Add, Sub, Mul, Div };

// Same-shape or single-element broadcast on either side.
template <typename S>
Tensor<S> binary_op(Tape<S>* tape, const Tensor<S>& a, const Tensor<S>& b, BinKind kind,
                    const char* name)
{
    const bool a_scalar = a.numel() == 1;
    const bool b_scalar = b.numel() == 1;
    if (!a_scalar && !b_scalar)
        detail::check_same_shape(a.shape(), b.shape(), name);
    const Shape& out_shape = a_scalar ? b.shape() : a.shape();
    const bool rg = a.requires_grad() || b.requires_grad();
    Tensor<S> out = Tensor<S>::zeros(out_shape, rg);

    const auto& ad = a.data();
    const auto& bd = b.data();
    auto& od = out.data();
    const std::size_t n = od.size();
    for (std::size_t i = 0; i < n; ++i)
    {
        const S av = ad[a_scalar ? 0 : i];
        const S bv = bd[b_scalar ? 0 : i];
        switch (kind)
        {
            case BinKind::Add: od[i] = av + bv; break;
            case BinKind::Sub: od[i] = av - bv; break;
            case BinKind::Mul: od[i] = av * bv; break;
            case BinKind::Div: od[i] = av / bv; break;
        }
    }
    if (detail::want_record(tape, rg))
    {
        tape->record([a, b, out, kind, a_scalar, b_scalar]() mutable {
            const auto& g = out.grad();
            const auto& ad2 = a.data();
            const auto& bd2 = b.data();
            const std::size_t m = g.size();
            if (a.requires_grad())
            {
                auto& ga = a.grad();
                for (std::size_t i = 0; i < m; ++i)
                {
                    S v = S(0);
                    switch (kind)
                    {
                        case BinKind::Add: v = g[i]; break;
                        case BinKind::Sub: v = g[i]; break;
                        case BinKind::Mul: v = g[i] * bd2[b_scalar ? 0 : i]; break;
                        case BinKind::Div: v = g[i] / bd2[b_scalar ? 0 : i]; break;
                    }
                    ga[a_scalar ? 0 : i] += v;
                }
            }
            if (b.requires_grad())
            {
                auto& gb = b.grad();
                for (std::size_t i = 0; i < m; ++i)
                {
                    const S av = ad2[a_scalar ? 0 : i];
                    const S bv = bd2[b_scalar ? 0 : i];
                    S v = S(0);
                    switch (kind)
                    {
                        case BinKind::Add: v = g[i]; break;
                        case BinKind::Sub: v = -g[i]; break;
                        case BinKind::Mul: v = g[i] * av; break;
                        case BinKind::Div: v = -g[i] * av / (bv * bv); break;
                    }
                    gb[b_scalar ? 0 : i] += v;
                }
            }
        }, out);
    }
    return out;
}

} // namespace detail

template <typename S>
Tensor<S> add(Tape<S>* t, const Tensor<S>& a, const Tensor<S>& b)
{
    return detail::binary_op(t, a, b, detail::BinKind::Add, "add");
}
template <typename S>
Tensor<S> sub(Tape<S>* t, const Tensor<S>& a, const Tensor<S>& b)
{
    return detail::binary_op(t, a, b, detail::BinKind::Sub, "sub");
}
template <typename S>
Tensor<S> mul(Tape<S>* t, const Tensor<S>& a, const Tensor<S>& b)
{
    return detail::binary_op(t, a, b, detail::BinKind::Mul, "mul");
}
template <typename S>
Tensor<S> div(Tape<S>* t, const Tensor<S>& a, const Tensor<S>& b)
{
    return detail::binary_op(t, a, b, detail::BinKind::Div, "div");
}

template <typename S>
Tensor<S> scale(Tape<S>* tape, const Tensor<S>& x, S c)
{
    Tensor<S> out = Tensor<S>::zeros(x.shape(), x.requires_grad());
    const auto& xd = x.data();
    auto& od = out.data();
    for (std::size_t i = 0; i < xd.size(); ++i)
        od[i] = c * xd[i];
    if (detail::want_record(tape, x.requires_grad()))
    {
        tape->record([x, out, c]() mutable {
            const auto& g = out.grad();
            auto& gx = x.grad();
            for (std::size_t i = 0; i < g.size(); ++i)
                gx[i] += c * g[i];
        }, out);
    }
    return out;
}

template <typename S>
Tensor<S> sum(Tape<S>* tape, const Tensor<S>& x)
{
    S acc = S(0);
    for (S v : x.data())
        acc += v;
    Tensor<S> out = Tensor<S>::scalar(acc, x.requires_grad());
    if (detail::want_record(tape, x.requires_grad()))
    {
        tape->record([x, out]() mutable {
            const S g = out.grad()[0];
            auto& gx = x.grad();
            for (auto& v : gx)
                v += g;
        }, out);
    }
    return out;
}

namespace detail {

template <typename S, typename Cmp>
Tensor<S> reduce_extremum(Tape<S>* tape, const Tensor<S>& x, Cmp better, const char* name)
{
    if (x.numel() == 0)
        throw std::invalid_argument(std::string(name) + ": empty tensor");
    const auto& xd = x.data();
    std::size_t best = 0;
    for (std::size_t i = 1; i < xd.size(); ++i)
        if (better(xd[i], xd[best]))
            best = i;
    Tensor<S> out = Tensor<S>::scalar(xd[best], x.requires_grad());
    if (detail::want_record(tape, x.requires_grad()))
    {
        tape->record([x, out, best]() mutable { x.grad()[best] += out.grad()[0]; }, out);
    }
    return out;
}

} // namespace detail

/// Minimum over all elements; gradient flows to the first minimizing element.
template <typename S>
Tensor<S> reduce_min(Tape<S>* tape, const Tensor<S>& x)
{
    return detail::reduce_extremum(tape, x, [](S a, S b) { return a < b; }, "reduce_min");
}

template <typename S>
Tensor<S> reduce_max(Tape<S>* tape, const Tensor<S>& x)
{
    return detail::reduce_extremum(tape, x, [](S a, S b) { return a > b; }, "reduce_max");
}

/// Copy-reshape; element order is preserved.
template <typename S>
Tensor<S> reshape(Tape<S>* tape, const Tensor<S>& x, Shape new_shape)
{
    if (shape_numel(new_shape) != x.numel())
        throw std::invalid_argument("reshape: element count mismatch, "
            + shape_str(x.shape()) + " -> " + shape_str(new_shape));
    Tensor<S> out = Tensor<S>::from_data(std::move(new_shape), x.data(), x.requires_grad());
    if (detail::want_record(tape, x.requires_grad()))
    {
        tape->record([x, out]() mutable {
            const auto& g = out.grad();
            auto& gx = x.grad();
            for (std::size_t i = 0; i < g.size(); ++i)
                gx[i] += g[i];
        }, out);
    }
    return out;
}

/// Concatenate along axis 0. Trailing extents must agree.
template <typename S>
Tensor<S> concat_axis0(Tape<S>* tape, const std::vector<Tensor<S>>& parts)
{
    if (parts.empty())
        throw std::invalid_argument("concat_axis0: no inputs");
    Shape out_shape = parts[0].shape();
    bool rg = false;
    for (const auto& p : parts)
    {
        if (p.rank() != static_cast<int>(out_shape.size()))
            throw std::invalid_argument("concat_axis0: rank mismatch");
        for (int ax = 1; ax < p.rank(); ++ax)
            if (p.shape()[ax] != out_shape[ax])
                throw std::invalid_argument("concat_axis0: trailing extent mismatch "
                    + shape_str(p.shape()) + " vs " + shape_str(out_shape));
        rg = rg || p.requires_grad();
    }
    out_shape[0] = 0;
    for (const auto& p : parts)
        out_shape[0] += p.shape()[0];

    Tensor<S> out = Tensor<S>::zeros(out_shape, rg);
    auto& od = out.data();
    std::size_t off = 0;
    for (const auto& p : parts)
    {
        std::copy(p.data().begin(), p.data().end(), od.begin() + off);
        off += p.data().size();
    }
    if (detail::want_record(tape, rg))
    {
        tape->record([parts, out]() mutable {
            const auto& g = out.grad();
            std::size_t pos = 0;
            for (auto& p : parts)
            {
                const std::size_t n = p.data().size();
                if (p.requires_grad())
                {
                    auto& gp = p.grad();
                    for (std::size_t i = 0; i < n; ++i)
                        gp[i] += g[pos + i];
                }
                pos += n;
            }
        }, out);
    }
    return out;
}

/// Softmax along `axis`, computed with max subtraction.
template <typename S>
Tensor<S> softmax_axis(Tape<S>* tape, const Tensor<S>& x, int axis)
{
    if (axis < 0 || axis >= x.rank())
        throw std::invalid_argument("softmax_axis: axis out of range");
    const Shape& sh = x.shape();
    std::int64_t outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i)
        outer *= sh[i];
    for (int i = axis + 1; i < x.rank(); ++i)
        inner *= sh[i];
    const std::int64_t len = sh[axis];

    Tensor<S> out = Tensor<S>::zeros(sh, x.requires_grad());
    const auto& xd = x.data();
    auto& od = out.data();
    for (std::int64_t o = 0; o < outer; ++o)
    {
        for (std::int64_t in = 0; in < inner; ++in)
        {
            const std::int64_t base = o * len * inner + in;
            S mx = xd[base];
            for (std::int64_t a = 1; a < len; ++a)
                mx = std::max(mx, xd[base + a * inner]);
            S total = S(0);
            for (std::int64_t a = 0; a < len; ++a)
            {
                const S e = std::exp(xd[base + a * inner] - mx);
                od[base + a * inner] = e;
                total += e;
            }
            const S inv = S(1) / total;
            for (std::int64_t a = 0; a < len; ++a)
                od[base + a * inner] *= inv;
        }
    }
    if (detail::want_record(tape, x.requires_grad()))
    {
        tape->record([x, out, outer, inner, len]() mutable {
            const auto& g = out.grad();
            const auto& p = out.data();
            auto& gx = x.grad();
            for (std::int64_t o = 0; o < outer; ++o)
                for (std::int64_t in = 0; in < inner; ++in)
                {
                    const std::int64_t base = o * len * inner + in;
                    S dot = S(0);
                    for (std::int64_t a = 0; a < len; ++a)
                        dot += g[base + a * inner] * p[base + a * inner];
                    for (std::int64_t a = 0; a < len; ++a)
                    {
                        const std::int64_t k = base + a * inner;
                        gx[k] += p[k] * (g[k] - dot);
                    }
                }
        }, out);
    }
    return out;
}

namespace detail {

template <typename S>
void check_across_inputs(const std::vector<Tensor<S>>& vols, const char* name)
{
    if (vols.empty())
        throw std::invalid_argument(std::string(name) + ": needs at least one volume");
    for (std::size_t i = 1; i < vols.size(); ++i)
        if (vols[i].shape() != vols[0].shape())
            throw std::invalid_argument(std::string(name) + ": shape mismatch at input "
                + std::to_string(i) + ": " + shape_str(vols[i].shape()) + " vs "
                + shape_str(vols[0].shape()));
}

// Sum of n values in ascending order. Sorting first makes the reduction
// invariant to the order the inputs were supplied in, bit for bit.
template <typename S>
inline S sorted_sum(S* vals, int n)
{
    std::sort(vals, vals + n);
    S acc = S(0);
    for (int i = 0; i < n; ++i)
        acc += vals[i];
    return acc;
}

} // namespace detail

/// Elementwise mean across N same-shape volumes. Exactly permutation-invariant.
template <typename S>
Tensor<S> mean_across(Tape<S>* tape, const std::vector<Tensor<S>>& vols)
{
    detail::check_across_inputs(vols, "mean_across");
    const int n = static_cast<int>(vols.size());
    bool rg = false;
    for (const auto& v : vols)
        rg = rg || v.requires_grad();

    Tensor<S> out = Tensor<S>::zeros(vols[0].shape(), rg);
    auto& od = out.data();
    const std::size_t count = od.size();
    std::vector<S> buf(n);
    const S inv_n = S(1) / S(n);
    for (std::size_t e = 0; e < count; ++e)
    {
        for (int i = 0; i < n; ++i)
            buf[i] = vols[i].data()[e];
        std::sort(buf.begin(), buf.end());
        if (buf[0] == buf[n - 1])
        {
            od[e] = buf[0]; // all equal: mean is that value, bit for bit
            continue;
        }
        S acc = S(0);
        for (int i = 0; i < n; ++i)
            acc += buf[i];
        od[e] = acc * inv_n;
    }
    if (detail::want_record(tape, rg))
    {
        tape->record([vols, out, inv_n]() mutable {
            const auto& g = out.grad();
            for (auto& v : vols)
            {
                if (!v.requires_grad())
                    continue;
                auto& gv = v.grad();
                for (std::size_t e = 0; e < g.size(); ++e)
                    gv[e] += g[e] * inv_n;
            }
        }, out);
    }
    return out;
}

/// Elementwise variance across N same-shape volumes:
/// (1/N) sum_i (V_i - mean)^2. Exactly permutation-invariant.
template <typename S>
Tensor<S> variance_across(Tape<S>* tape, const std::vector<Tensor<S>>& vols)
{
    detail::check_across_inputs(vols, "variance_across");
    const int n = static_cast<int>(vols.size());
    bool rg = false;
    for (const auto& v : vols)
        rg = rg || v.requires_grad();

    Tensor<S> out = Tensor<S>::zeros(vols[0].shape(), rg);
    auto mean = std::make_shared<std::vector<S>>(out.numel());
    auto& od = out.data();
    const std::size_t count = od.size();
    std::vector<S> buf(n);
    std::vector<S> sq(n);
    const S inv_n = S(1) / S(n);
    for (std::size_t e = 0; e < count; ++e)
    {
        for (int i = 0; i < n; ++i)
            buf[i] = vols[i].data()[e];
        std::sort(buf.begin(), buf.end());
        if (buf[0] == buf[n - 1])
        {
            // all equal: exactly zero cost
            (*mean)[e] = buf[0];
            od[e] = S(0);
            continue;
        }
        const S m = detail::sorted_sum(buf.data(), n) * inv_n;
        for (int i = 0; i < n; ++i)
        {
            const S d = vols[i].data()[e] - m;
            sq[i] = d * d;
        }
        (*mean)[e] = m;
        od[e] = detail::sorted_sum(sq.data(), n) * inv_n;
    }
    if (detail::want_record(tape, rg))
    {
        tape->record([vols, out, mean, inv_n]() mutable {
            const auto& g = out.grad();
            for (auto& v : vols)
            {
                if (!v.requires_grad())
                    continue;
                auto& gv = v.grad();
                const auto& vd = v.data();
                for (std::size_t e = 0; e < g.size(); ++e)
                    gv[e] += g[e] * S(2) * inv_n * (vd[e] - (*mean)[e]);
            }
        }, out);
    }
    return out;
}

/// Probability-weighted expectation along the leading depth axis:
/// out[y,x] = sum_d depths[d] * p[d,y,x].
template <typename S>
Tensor<S> expectation_along_depth(Tape<S>* tape, const Tensor<S>& p,
                                  const std::vector<S>& depths)
{
    if (p.rank() != 3)
        throw std::invalid_argument("expectation_along_depth: expected [D,H,W], got "
            + shape_str(p.shape()));
    const int d = p.shape()[0];
    if (static_cast<int>(depths.size()) != d)
        throw std::invalid_argument("expectation_along_depth: depth count "
            + std::to_string(depths.size()) + " does not match volume depth "
            + std::to_string(d));
    const std::int64_t plane = static_cast<std::int64_t>(p.shape()[1]) * p.shape()[2];

    Tensor<S> out = Tensor<S>::zeros({p.shape()[1], p.shape()[2]}, p.requires_grad());
    const auto& pd = p.data();
    auto& od = out.data();
    for (int k = 0; k < d; ++k)
    {
        const S dk = depths[k];
        const S* slice = pd.data() + static_cast<std::int64_t>(k) * plane;
        for (std::int64_t i = 0; i < plane; ++i)
            od[i] += dk * slice[i];
    }
    if (detail::want_record(tape, p.requires_grad()))
    {
        tape->record([p, out, depths, plane, d]() mutable {
            const auto& g = out.grad();
            auto& gp = p.grad();
            for (int k = 0; k < d; ++k)
            {
                const S dk = depths[k];
                S* gslice = gp.data() + static_cast<std::int64_t>(k) * plane;
                for (std::int64_t i = 0; i < plane; ++i)
                    gslice[i] += dk * g[i];
            }
        }, out);
    }
    return out;
}

/// Mean absolute difference over pixels where mask > 0.5.
template <typename S>
Tensor<S> masked_l1(Tape<S>* tape, const Tensor<S>& pred, const Tensor<S>& gt,
                    const Tensor<S>& mask)
{
    detail::check_same_shape(pred.shape(), gt.shape(), "masked_l1");
    detail::check_same_shape(pred.shape(), mask.shape(), "masked_l1(mask)");
    const auto& pd = pred.data();
    const auto& gd = gt.data();
    const auto& md = mask.data();
    std::int64_t valid = 0;
    S acc = S(0);
    for (std::size_t i = 0; i < pd.size(); ++i)
    {
        if (md[i] > S(0.5))
        {
            acc += std::abs(pd[i] - gd[i]);
            ++valid;
        }
    }
    if (valid == 0)
        throw std::invalid_argument("masked_l1: mask has no valid pixels");
    const S inv = S(1) / S(valid);
    Tensor<S> out = Tensor<S>::scalar(acc * inv, pred.requires_grad() || gt.requires_grad());
    if (detail::want_record(tape, pred.requires_grad() || gt.requires_grad()))
    {
        tape->record([pred, gt, mask, out, inv]() mutable {
            const S g = out.grad()[0] * inv;
            const auto& pd2 = pred.data();
            const auto& gd2 = gt.data();
            const auto& md2 = mask.data();
            for (std::size_t i = 0; i < pd2.size(); ++i)
            {
                if (md2[i] <= S(0.5))
                    continue;
                const S diff = pd2[i] - gd2[i];
                const S s = diff > S(0) ? S(1) : (diff < S(0) ? S(-1) : S(0));
                if (pred.requires_grad())
                    pred.grad()[i] += g * s;
                if (gt.requires_grad())
                    gt.grad()[i] -= g * s;
            }
        }, out);
    }
    return out;
}

enum class NormMode { Train, Eval, Frozen };

/// Per-channel batch normalization over all non-channel axes (channel = axis 0).
/// Train mode uses batch statistics and updates the running buffers in place;
/// Eval uses the running buffers; Frozen applies only the affine transform.
template <typename S>
Tensor<S> batch_norm(Tape<S>* tape, const Tensor<S>& x, const Tensor<S>& gamma,
                     const Tensor<S>& beta, Tensor<S>& run_mean, Tensor<S>& run_var,
                     NormMode mode, S momentum = S(0.1), S eps = S(1e-5))
{
    if (x.rank() < 2)
        throw std::invalid_argument("batch_norm: input rank must be >= 2");
    const int c = x.shape()[0];
    if (gamma.numel() != c || beta.numel() != c || run_mean.numel() != c
        || run_var.numel() != c)
        throw std::invalid_argument("batch_norm: parameter extent does not match "
            + std::to_string(c) + " channels");
    if (!(eps > S(0)))
        throw std::invalid_argument("batch_norm: eps must be positive");
    const std::int64_t n = x.numel() / c;

    const bool rg = x.requires_grad() || gamma.requires_grad() || beta.requires_grad();
    Tensor<S> out = Tensor<S>::zeros(x.shape(), rg);
    const auto& xd = x.data();
    auto& od = out.data();
    const auto& gm = gamma.data();
    const auto& bt = beta.data();

    if (mode == NormMode::Frozen)
    {
        for (int ch = 0; ch < c; ++ch)
        {
            const S* xs = xd.data() + static_cast<std::int64_t>(ch) * n;
            S* os = od.data() + static_cast<std::int64_t>(ch) * n;
            for (std::int64_t i = 0; i < n; ++i)
                os[i] = gm[ch] * xs[i] + bt[ch];
        }
        if (detail::want_record(tape, rg))
        {
            tape->record([x, gamma, beta, out, c, n]() mutable {
                const auto& g = out.grad();
                const auto& xd2 = x.data();
                const auto& gm2 = gamma.data();
                for (int ch = 0; ch < c; ++ch)
                {
                    const std::int64_t base = static_cast<std::int64_t>(ch) * n;
                    if (x.requires_grad())
                        for (std::int64_t i = 0; i < n; ++i)
                            x.grad()[base + i] += g[base + i] * gm2[ch];
                    if (gamma.requires_grad())
                    {
                        S acc = S(0);
                        for (std::int64_t i = 0; i < n; ++i)
                            acc += g[base + i] * xd2[base + i];
                        gamma.grad()[ch] += acc;
                    }
                    if (beta.requires_grad())
                    {
                        S acc = S(0);
                        for (std::int64_t i = 0; i < n; ++i)
                            acc += g[base + i];
                        beta.grad()[ch] += acc;
                    }
                }
            }, out);
        }
        return out;
    }

    auto mean = std::make_shared<std::vector<S>>(c);
    auto var = std::make_shared<std::vector<S>>(c);
    if (mode == NormMode::Train)
    {
        for (int ch = 0; ch < c; ++ch)
        {
            const S* xs = xd.data() + static_cast<std::int64_t>(ch) * n;
            S acc = S(0);
            for (std::int64_t i = 0; i < n; ++i)
                acc += xs[i];
            const S m = acc / S(n);
            S vacc = S(0);
            for (std::int64_t i = 0; i < n; ++i)
            {
                const S d = xs[i] - m;
                vacc += d * d;
            }
            (*mean)[ch] = m;
            (*var)[ch] = vacc / S(n);
            run_mean.data()[ch] = (S(1) - momentum) * run_mean.data()[ch] + momentum * m;
            run_var.data()[ch] = (S(1) - momentum) * run_var.data()[ch] + momentum * (*var)[ch];
        }
    }
    else
    {
        *mean = run_mean.data();
        *var = run_var.data();
    }

    auto inv_std = std::make_shared<std::vector<S>>(c);
    for (int ch = 0; ch < c; ++ch)
        (*inv_std)[ch] = S(1) / std::sqrt((*var)[ch] + eps);

    for (int ch = 0; ch < c; ++ch)
    {
        const S* xs = xd.data() + static_cast<std::int64_t>(ch) * n;
        S* os = od.data() + static_cast<std::int64_t>(ch) * n;
        const S m = (*mean)[ch];
        const S is = (*inv_std)[ch];
        const S gmc = gm[ch];
        const S btc = bt[ch];
        for (std::int64_t i = 0; i < n; ++i)
            os[i] = gmc * (xs[i] - m) * is + btc;
    }

    if (detail::want_record(tape, rg))
    {
        const bool train_stats = (mode == NormMode::Train);
        tape->record([x, gamma, beta, out, mean, var, inv_std, c, n, train_stats]() mutable {
            const auto& g = out.grad();
            const auto& xd2 = x.data();
            const auto& gm2 = gamma.data();
            for (int ch = 0; ch < c; ++ch)
            {
                const std::int64_t base = static_cast<std::int64_t>(ch) * n;
                const S m = (*mean)[ch];
                const S is = (*inv_std)[ch];
                S sum_g = S(0);
                S sum_gx = S(0); // sum of g * xhat
                for (std::int64_t i = 0; i < n; ++i)
                {
                    const S xhat = (xd2[base + i] - m) * is;
                    sum_g += g[base + i];
                    sum_gx += g[base + i] * xhat;
                }
                if (gamma.requires_grad())
                    gamma.grad()[ch] += sum_gx;
                if (beta.requires_grad())
                    beta.grad()[ch] += sum_g;
                if (x.requires_grad())
                {
                    auto& gx = x.grad();
                    const S gmc = gm2[ch];
                    if (train_stats)
                    {
                        const S inv_n = S(1) / S(n);
                        for (std::int64_t i = 0; i < n; ++i)
                        {
                            const S xhat = (xd2[base + i] - m) * is;
                            gx[base + i] += gmc * is
                                * (g[base + i] - inv_n * sum_g - inv_n * xhat * sum_gx);
                        }
                    }
                    else
                    {
                        for (std::int64_t i = 0; i < n; ++i)
                            gx[base + i] += gmc * is * g[base + i];
                    }
                }
            }
        }, out);
    }
    return out;
}

} // namespace mvs

#endif
