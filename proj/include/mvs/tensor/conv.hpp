// Copyright Contributors to the mvskit Project
// SPDX-License-Identifier: Apache-2.0
//
// Strided 2D/3D convolutions with zero same-padding, and their exact
// transposed (adjoint) counterparts. Direct loops, innermost over the
// contiguous width axis; accumulation order is fixed for determinism.

#ifndef MVS_TENSOR_CONV_HPP
#define MVS_TENSOR_CONV_HPP

#include "mvs/tensor/tensor.hpp"

namespace mvs {

namespace detail {

// Valid output range [lo, hi) for one kernel tap: indices o with
// 0 <= o*stride + tap - pad < extent.
inline void tap_range(int extent, int out_extent, int stride, int tap, int pad,
                      int& lo, int& hi)
{
    const int off = tap - pad;
    lo = off >= 0 ? 0 : (-off + stride - 1) / stride;
    const int last = extent - 1 - off;
    hi = last < 0 ? 0 : std::min(out_extent, last / stride + 1);
    if (hi < lo)
        hi = lo;
}

inline void check_conv_args(const Shape& in, const Shape& w, const Shape& b,
                            int stride, int spatial_dims, const char* name)
{
    const int in_rank = spatial_dims + 1;
    const int w_rank = spatial_dims + 2;
    if (static_cast<int>(in.size()) != in_rank)
        throw std::invalid_argument(std::string(name) + ": input must have rank "
            + std::to_string(in_rank) + ", got " + shape_str(in));
    if (static_cast<int>(w.size()) != w_rank)
        throw std::invalid_argument(std::string(name) + ": kernel must have rank "
            + std::to_string(w_rank) + ", got " + shape_str(w));
    if (stride <= 0)
        throw std::invalid_argument(std::string(name) + ": stride must be positive, got "
            + std::to_string(stride));
    for (int i = 0; i < spatial_dims; ++i)
    {
        const int k = w[2 + i];
        if (k % 2 == 0)
            throw std::invalid_argument(std::string(name) + ": kernel extents must be odd, got "
                + shape_str(w));
    }
    if (b.size() != 1 || b[0] != w[0])
        throw std::invalid_argument(std::string(name) + ": bias shape " + shape_str(b)
            + " does not match " + std::to_string(w[0]) + " output channels");
}

} // namespace detail

/// conv2d: input [C,H,W], kernel [Co,C,kh,kw] (odd extents), zero same-padding.
/// H and W must be divisible by stride; output is [Co,H/stride,W/stride].
template <typename S>
Tensor<S> conv2d(Tape<S>* tape, const Tensor<S>& input, const Tensor<S>& kernel,
                 const Tensor<S>& bias, int stride)
{
    detail::check_conv_args(input.shape(), kernel.shape(), bias.shape(), stride, 2, "conv2d");
    const int c = input.shape()[0], h = input.shape()[1], w = input.shape()[2];
    const int co = kernel.shape()[0], kc = kernel.shape()[1];
    const int kh = kernel.shape()[2], kw = kernel.shape()[3];
    if (kc != c)
        throw std::invalid_argument("conv2d: kernel expects " + std::to_string(kc)
            + " input channels but input has " + std::to_string(c));
    if (h % stride != 0 || w % stride != 0)
        throw std::invalid_argument("conv2d: input extents " + shape_str(input.shape())
            + " not divisible by stride " + std::to_string(stride));
    const int oh = h / stride, ow = w / stride;
    const int ph = kh / 2, pw = kw / 2;

    const bool rg = input.requires_grad() || kernel.requires_grad() || bias.requires_grad();
    Tensor<S> out = Tensor<S>::zeros({co, oh, ow}, rg);
    {
        const S* in = input.data().data();
        const S* wt = kernel.data().data();
        const S* bs = bias.data().data();
        S* od = out.data().data();
        for (int a = 0; a < co; ++a)
        {
            for (int oy = 0; oy < oh; ++oy)
            {
                S* orow = od + (static_cast<std::int64_t>(a) * oh + oy) * ow;
                for (int ox = 0; ox < ow; ++ox)
                    orow[ox] = bs[a];
                for (int ky = 0; ky < kh; ++ky)
                {
                    const int iy = oy * stride + ky - ph;
                    if (iy < 0 || iy >= h)
                        continue;
                    for (int b = 0; b < c; ++b)
                    {
                        const S* irow = in + (static_cast<std::int64_t>(b) * h + iy) * w;
                        const S* wrow =
                            wt + ((static_cast<std::int64_t>(a) * c + b) * kh + ky) * kw;
                        for (int kx = 0; kx < kw; ++kx)
                        {
                            const S wv = wrow[kx];
                            int lo, hi;
                            detail::tap_range(w, ow, stride, kx, pw, lo, hi);
                            const S* ip = irow + lo * stride + kx - pw;
                            for (int ox = lo; ox < hi; ++ox, ip += stride)
                                orow[ox] += wv * *ip;
                        }
                    }
                }
            }
        }
    }

    if (detail::want_record(tape, rg))
    {
        tape->record([input, kernel, bias, out, stride, c, h, w, co, kh, kw, oh, ow, ph,
                      pw]() mutable {
            const auto& g = out.grad();
            const S* gd = g.data();
            const S* in = input.data().data();
            const S* wt = kernel.data().data();
            if (bias.requires_grad())
            {
                auto& gb = bias.grad();
                for (int a = 0; a < co; ++a)
                {
                    S acc = S(0);
                    const S* grow = gd + static_cast<std::int64_t>(a) * oh * ow;
                    for (std::int64_t i = 0; i < static_cast<std::int64_t>(oh) * ow; ++i)
                        acc += grow[i];
                    gb[a] += acc;
                }
            }
            if (kernel.requires_grad())
            {
                auto& gw = kernel.grad();
                for (int a = 0; a < co; ++a)
                    for (int b = 0; b < c; ++b)
                        for (int ky = 0; ky < kh; ++ky)
                            for (int kx = 0; kx < kw; ++kx)
                            {
                                S acc = S(0);
                                for (int oy = 0; oy < oh; ++oy)
                                {
                                    const int iy = oy * stride + ky - ph;
                                    if (iy < 0 || iy >= h)
                                        continue;
                                    const S* grow =
                                        gd + (static_cast<std::int64_t>(a) * oh + oy) * ow;
                                    const S* irow =
                                        in + (static_cast<std::int64_t>(b) * h + iy) * w;
                                    int lo, hi;
                                    detail::tap_range(w, ow, stride, kx, pw, lo, hi);
                                    const S* ip = irow + lo * stride + kx - pw;
                                    for (int ox = lo; ox < hi; ++ox, ip += stride)
                                        acc += grow[ox] * *ip;
                                }
                                gw[((static_cast<std::int64_t>(a) * c + b) * kh + ky) * kw
                                   + kx] += acc;
                            }
            }
            if (input.requires_grad())
            {
                auto& gi = input.grad();
                S* gid = gi.data();
                for (int a = 0; a < co; ++a)
                    for (int oy = 0; oy < oh; ++oy)
                    {
                        const S* grow = gd + (static_cast<std::int64_t>(a) * oh + oy) * ow;
                        for (int ky = 0; ky < kh; ++ky)
                        {
                            const int iy = oy * stride + ky - ph;
                            if (iy < 0 || iy >= h)
                                continue;
                            for (int b = 0; b < c; ++b)
                            {
                                S* girow = gid + (static_cast<std::int64_t>(b) * h + iy) * w;
                                const S* wrow =
                                    wt + ((static_cast<std::int64_t>(a) * c + b) * kh + ky) * kw;
                                for (int kx = 0; kx < kw; ++kx)
                                {
                                    const S wv = wrow[kx];
                                    int lo, hi;
                                    detail::tap_range(w, ow, stride, kx, pw, lo, hi);
                                    S* gp = girow + lo * stride + kx - pw;
                                    for (int ox = lo; ox < hi; ++ox, gp += stride)
                                        *gp += wv * grow[ox];
                                }
                            }
                        }
                    }
            }
        }, out);
    }
    return out;
}

/// conv3d: input [C,D,H,W], kernel [Co,C,kd,kh,kw]; otherwise as conv2d.
template <typename S>
Tensor<S> conv3d(Tape<S>* tape, const Tensor<S>& input, const Tensor<S>& kernel,
                 const Tensor<S>& bias, int stride)
{
    detail::check_conv_args(input.shape(), kernel.shape(), bias.shape(), stride, 3, "conv3d");
    const int c = input.shape()[0], d = input.shape()[1];
    const int h = input.shape()[2], w = input.shape()[3];
    const int co = kernel.shape()[0], kc = kernel.shape()[1];
    const int kd = kernel.shape()[2], kh = kernel.shape()[3], kw = kernel.shape()[4];
    if (kc != c)
        throw std::invalid_argument("conv3d: kernel expects " + std::to_string(kc)
            + " input channels but input has " + std::to_string(c));
    if (d % stride != 0 || h % stride != 0 || w % stride != 0)
        throw std::invalid_argument("conv3d: input extents " + shape_str(input.shape())
            + " not divisible by stride " + std::to_string(stride));
    const int od = d / stride, oh = h / stride, ow = w / stride;
    const int pd = kd / 2, ph = kh / 2, pw = kw / 2;

    const bool rg = input.requires_grad() || kernel.requires_grad() || bias.requires_grad();
    Tensor<S> out = Tensor<S>::zeros({co, od, oh, ow}, rg);
    {
        const S* in = input.data().data();
        const S* wt = kernel.data().data();
        const S* bs = bias.data().data();
        S* outp = out.data().data();
        for (int a = 0; a < co; ++a)
            for (int oz = 0; oz < od; ++oz)
                for (int oy = 0; oy < oh; ++oy)
                {
                    S* orow = outp
                        + ((static_cast<std::int64_t>(a) * od + oz) * oh + oy) * ow;
                    for (int ox = 0; ox < ow; ++ox)
                        orow[ox] = bs[a];
                    for (int kz = 0; kz < kd; ++kz)
                    {
                        const int iz = oz * stride + kz - pd;
                        if (iz < 0 || iz >= d)
                            continue;
                        for (int ky = 0; ky < kh; ++ky)
                        {
                            const int iy = oy * stride + ky - ph;
                            if (iy < 0 || iy >= h)
                                continue;
                            for (int b = 0; b < c; ++b)
                            {
                                const S* irow = in
                                    + ((static_cast<std::int64_t>(b) * d + iz) * h + iy) * w;
                                const S* wrow = wt
                                    + (((static_cast<std::int64_t>(a) * c + b) * kd + kz) * kh
                                       + ky) * kw;
                                for (int kx = 0; kx < kw; ++kx)
                                {
                                    const S wv = wrow[kx];
                                    int lo, hi;
                                    detail::tap_range(w, ow, stride, kx, pw, lo, hi);
                                    const S* ip = irow + lo * stride + kx - pw;
                                    for (int ox = lo; ox < hi; ++ox, ip += stride)
                                        orow[ox] += wv * *ip;
                                }
                            }
                        }
                    }
                }
    }

    if (detail::want_record(tape, rg))
    {
        tape->record([input, kernel, bias, out, stride, c, d, h, w, co, kd, kh, kw, od, oh,
                      ow, pd, ph, pw]() mutable {
            const S* gd2 = out.grad().data();
            const S* in = input.data().data();
            const S* wt = kernel.data().data();
            if (bias.requires_grad())
            {
                auto& gb = bias.grad();
                const std::int64_t plane = static_cast<std::int64_t>(od) * oh * ow;
                for (int a = 0; a < co; ++a)
                {
                    S acc = S(0);
                    const S* gp = gd2 + a * plane;
                    for (std::int64_t i = 0; i < plane; ++i)
                        acc += gp[i];
                    gb[a] += acc;
                }
            }
            if (kernel.requires_grad())
            {
                auto& gw = kernel.grad();
                for (int a = 0; a < co; ++a)
                    for (int b = 0; b < c; ++b)
                        for (int kz = 0; kz < kd; ++kz)
                            for (int ky = 0; ky < kh; ++ky)
                                for (int kx = 0; kx < kw; ++kx)
                                {
                                    S acc = S(0);
                                    int lo, hi;
                                    detail::tap_range(w, ow, stride, kx, pw, lo, hi);
                                    for (int oz = 0; oz < od; ++oz)
                                    {
                                        const int iz = oz * stride + kz - pd;
                                        if (iz < 0 || iz >= d)
                                            continue;
                                        for (int oy = 0; oy < oh; ++oy)
                                        {
                                            const int iy = oy * stride + ky - ph;
                                            if (iy < 0 || iy >= h)
                                                continue;
                                            const S* grow = gd2
                                                + ((static_cast<std::int64_t>(a) * od + oz) * oh
                                                   + oy) * ow;
                                            const S* irow = in
                                                + ((static_cast<std::int64_t>(b) * d + iz) * h
                                                   + iy) * w;
                                            const S* ip = irow + lo * stride + kx - pw;
                                            for (int ox = lo; ox < hi; ++ox, ip += stride)
                                                acc += grow[ox] * *ip;
                                        }
                                    }
                                    gw[(((static_cast<std::int64_t>(a) * c + b) * kd + kz) * kh
                                        + ky) * kw + kx] += acc;
                                }
            }
            if (input.requires_grad())
            {
                S* gi = input.grad().data();
                for (int a = 0; a < co; ++a)
                    for (int oz = 0; oz < od; ++oz)
                        for (int oy = 0; oy < oh; ++oy)
                        {
                            const S* grow = gd2
                                + ((static_cast<std::int64_t>(a) * od + oz) * oh + oy) * ow;
                            for (int kz = 0; kz < kd; ++kz)
                            {
                                const int iz = oz * stride + kz - pd;
                                if (iz < 0 || iz >= d)
                                    continue;
                                for (int ky = 0; ky < kh; ++ky)
                                {
                                    const int iy = oy * stride + ky - ph;
                                    if (iy < 0 || iy >= h)
                                        continue;
                                    for (int b = 0; b < c; ++b)
                                    {
                                        S* girow = gi
                                            + ((static_cast<std::int64_t>(b) * d + iz) * h + iy)
                                            * w;
                                        const S* wrow = wt
                                            + (((static_cast<std::int64_t>(a) * c + b) * kd + kz)
                                               * kh + ky) * kw;
                                        for (int kx = 0; kx < kw; ++kx)
                                        {
                                            const S wv = wrow[kx];
                                            int lo, hi;
                                            detail::tap_range(w, ow, stride, kx, pw, lo, hi);
                                            S* gp = girow + lo * stride + kx - pw;
                                            for (int ox = lo; ox < hi; ++ox, gp += stride)
                                                *gp += wv * grow[ox];
                                        }
                                    }
                                }
                            }
                        }
            }
        }, out);
    }
    return out;
}

/// Transposed conv2d: input [C,H,W], kernel [C,Co,kh,kw], output [Co,H*s,W*s].
/// Exact adjoint of conv2d with the same kernel memory layout: for all x, y,
/// <conv2d(x,k,s), y> == <x, transposed_conv2d(y,k,s)>  (zero bias).
template <typename S>
Tensor<S> transposed_conv2d(Tape<S>* tape, const Tensor<S>& input, const Tensor<S>& kernel,
                            const Tensor<S>& bias, int stride)
{
    if (input.rank() != 3 || kernel.rank() != 4)
        throw std::invalid_argument("transposed_conv2d: expected input [C,H,W], kernel "
            "[C,Co,kh,kw], got " + shape_str(input.shape()) + " and "
            + shape_str(kernel.shape()));
    if (stride <= 0)
        throw std::invalid_argument("transposed_conv2d: stride must be positive, got "
            + std::to_string(stride));
    const int c = input.shape()[0], oh = input.shape()[1], ow = input.shape()[2];
    const int kc = kernel.shape()[0], co = kernel.shape()[1];
    const int kh = kernel.shape()[2], kw = kernel.shape()[3];
    if (kh % 2 == 0 || kw % 2 == 0)
        throw std::invalid_argument("transposed_conv2d: kernel extents must be odd");
    if (kc != c)
        throw std::invalid_argument("transposed_conv2d: kernel expects " + std::to_string(kc)
            + " input channels but input has " + std::to_string(c));
    if (bias.numel() != co)
        throw std::invalid_argument("transposed_conv2d: bias shape " + shape_str(bias.shape())
            + " does not match " + std::to_string(co) + " output channels");
    const int h = oh * stride, w = ow * stride;
    const int ph = kh / 2, pw = kw / 2;

    const bool rg = input.requires_grad() || kernel.requires_grad() || bias.requires_grad();
    Tensor<S> out = Tensor<S>::zeros({co, h, w}, rg);
    {
        const S* in = input.data().data();
        const S* wt = kernel.data().data();
        S* od = out.data().data();
        for (int a = 0; a < co; ++a)
        {
            const S bv = bias.data()[a];
            S* oplane = od + static_cast<std::int64_t>(a) * h * w;
            for (std::int64_t i = 0; i < static_cast<std::int64_t>(h) * w; ++i)
                oplane[i] = bv;
        }
        for (int b = 0; b < c; ++b)
            for (int a = 0; a < co; ++a)
            {
                const S* wk = wt + (static_cast<std::int64_t>(b) * co + a) * kh * kw;
                for (int oy = 0; oy < oh; ++oy)
                {
                    const S* irow = in + (static_cast<std::int64_t>(b) * oh + oy) * ow;
                    for (int ky = 0; ky < kh; ++ky)
                    {
                        const int iy = oy * stride + ky - ph;
                        if (iy < 0 || iy >= h)
                            continue;
                        S* orow = od + (static_cast<std::int64_t>(a) * h + iy) * w;
                        for (int kx = 0; kx < kw; ++kx)
                        {
                            const S wv = wk[ky * kw + kx];
                            int lo, hi;
                            detail::tap_range(w, ow, stride, kx, pw, lo, hi);
                            S* op = orow + lo * stride + kx - pw;
                            for (int ox = lo; ox < hi; ++ox, op += stride)
                                *op += wv * irow[ox];
                        }
                    }
                }
            }
    }

    if (detail::want_record(tape, rg))
    {
        tape->record([input, kernel, bias, out, stride, c, co, kh, kw, oh, ow, h, w, ph,
                      pw]() mutable {
            const S* g = out.grad().data();
            const S* in = input.data().data();
            const S* wt = kernel.data().data();
            if (bias.requires_grad())
            {
                auto& gb = bias.grad();
                for (int a = 0; a < co; ++a)
                {
                    S acc = S(0);
                    const S* gp = g + static_cast<std::int64_t>(a) * h * w;
                    for (std::int64_t i = 0; i < static_cast<std::int64_t>(h) * w; ++i)
                        acc += gp[i];
                    gb[a] += acc;
                }
            }
            if (kernel.requires_grad())
            {
                auto& gw = kernel.grad();
                for (int b = 0; b < c; ++b)
                    for (int a = 0; a < co; ++a)
                        for (int ky = 0; ky < kh; ++ky)
                            for (int kx = 0; kx < kw; ++kx)
                            {
                                S acc = S(0);
                                int lo, hi;
                                detail::tap_range(w, ow, stride, kx, pw, lo, hi);
                                for (int oy = 0; oy < oh; ++oy)
                                {
                                    const int iy = oy * stride + ky - ph;
                                    if (iy < 0 || iy >= h)
                                        continue;
                                    const S* irow =
                                        in + (static_cast<std::int64_t>(b) * oh + oy) * ow;
                                    const S* grow =
                                        g + (static_cast<std::int64_t>(a) * h + iy) * w;
                                    const S* gp = grow + lo * stride + kx - pw;
                                    for (int ox = lo; ox < hi; ++ox, gp += stride)
                                        acc += irow[ox] * *gp;
                                }
                                gw[(static_cast<std::int64_t>(b) * co + a) * kh * kw
                                   + ky * kw + kx] += acc;
                            }
            }
            if (input.requires_grad())
            {
                auto& gi = input.grad();
                S* gid = gi.data();
                for (int b = 0; b < c; ++b)
                    for (int a = 0; a < co; ++a)
                    {
                        const S* wk = wt + (static_cast<std::int64_t>(b) * co + a) * kh * kw;
                        for (int oy = 0; oy < oh; ++oy)
                        {
                            S* girow = gid + (static_cast<std::int64_t>(b) * oh + oy) * ow;
                            for (int ky = 0; ky < kh; ++ky)
                            {
                                const int iy = oy * stride + ky - ph;
                                if (iy < 0 || iy >= h)
                                    continue;
                                const S* grow =
                                    g + (static_cast<std::int64_t>(a) * h + iy) * w;
                                for (int kx = 0; kx < kw; ++kx)
                                {
                                    const S wv = wk[ky * kw + kx];
                                    int lo, hi;
                                    detail::tap_range(w, ow, stride, kx, pw, lo, hi);
                                    const S* gp = grow + lo * stride + kx - pw;
                                    for (int ox = lo; ox < hi; ++ox, gp += stride)
                                        girow[ox] += wv * *gp;
                                }
                            }
                        }
                    }
            }
        }, out);
    }
    return out;
}

/// Transposed conv3d: input [C,D,H,W], kernel [C,Co,kd,kh,kw],
/// output [Co,D*s,H*s,W*s]. Exact adjoint of conv3d.
template <typename S>
Tensor<S> transposed_conv3d(Tape<S>* tape, const Tensor<S>& input, const Tensor<S>& kernel,
                            const Tensor<S>& bias, int stride)
{
    if (input.rank() != 4 || kernel.rank() != 5)
        throw std::invalid_argument("transposed_conv3d: expected input [C,D,H,W], kernel "
            "[C,Co,kd,kh,kw], got " + shape_str(input.shape()) + " and "
            + shape_str(kernel.shape()));
    if (stride <= 0)
        throw std::invalid_argument("transposed_conv3d: stride must be positive, got "
            + std::to_string(stride));
    const int c = input.shape()[0], od = input.shape()[1];
    const int oh = input.shape()[2], ow = input.shape()[3];
    const int kc = kernel.shape()[0], co = kernel.shape()[1];
    const int kd = kernel.shape()[2], kh = kernel.shape()[3], kw = kernel.shape()[4];
    if (kd % 2 == 0 || kh % 2 == 0 || kw % 2 == 0)
        throw std::invalid_argument("transposed_conv3d: kernel extents must be odd");
    if (kc != c)
        throw std::invalid_argument("transposed_conv3d: kernel expects " + std::to_string(kc)
            + " input channels but input has " + std::to_string(c));
    if (bias.numel() != co)
        throw std::invalid_argument("transposed_conv3d: bias shape " + shape_str(bias.shape())
            + " does not match " + std::to_string(co) + " output channels");
    const int d = od * stride, h = oh * stride, w = ow * stride;
    const int pd = kd / 2, ph = kh / 2, pw = kw / 2;

    const bool rg = input.requires_grad() || kernel.requires_grad() || bias.requires_grad();
    Tensor<S> out = Tensor<S>::zeros({co, d, h, w}, rg);
    {
        const S* in = input.data().data();
        const S* wt = kernel.data().data();
        S* outp = out.data().data();
        const std::int64_t oplane = static_cast<std::int64_t>(d) * h * w;
        for (int a = 0; a < co; ++a)
        {
            const S bv = bias.data()[a];
            S* op = outp + a * oplane;
            for (std::int64_t i = 0; i < oplane; ++i)
                op[i] = bv;
        }
        for (int b = 0; b < c; ++b)
            for (int a = 0; a < co; ++a)
            {
                const S* wk =
                    wt + (static_cast<std::int64_t>(b) * co + a) * kd * kh * kw;
                for (int oz = 0; oz < od; ++oz)
                    for (int oy = 0; oy < oh; ++oy)
                    {
                        const S* irow = in
                            + ((static_cast<std::int64_t>(b) * od + oz) * oh + oy) * ow;
                        for (int kz = 0; kz < kd; ++kz)
                        {
                            const int iz = oz * stride + kz - pd;
                            if (iz < 0 || iz >= d)
                                continue;
                            for (int ky = 0; ky < kh; ++ky)
                            {
                                const int iy = oy * stride + ky - ph;
                                if (iy < 0 || iy >= h)
                                    continue;
                                S* orow = outp
                                    + ((static_cast<std::int64_t>(a) * d + iz) * h + iy) * w;
                                for (int kx = 0; kx < kw; ++kx)
                                {
                                    const S wv = wk[(kz * kh + ky) * kw + kx];
                                    int lo, hi;
                                    detail::tap_range(w, ow, stride, kx, pw, lo, hi);
                                    S* op = orow + lo * stride + kx - pw;
                                    for (int ox = lo; ox < hi; ++ox, op += stride)
                                        *op += wv * irow[ox];
                                }
                            }
                        }
                    }
            }
    }

    if (detail::want_record(tape, rg))
    {
        tape->record([input, kernel, bias, out, stride, c, co, kd, kh, kw, od, oh, ow, d, h,
                      w, pd, ph, pw]() mutable {
            const S* g = out.grad().data();
            const S* in = input.data().data();
            const S* wt = kernel.data().data();
            const std::int64_t oplane = static_cast<std::int64_t>(d) * h * w;
            if (bias.requires_grad())
            {
                auto& gb = bias.grad();
                for (int a = 0; a < co; ++a)
                {
                    S acc = S(0);
                    const S* gp = g + a * oplane;
                    for (std::int64_t i = 0; i < oplane; ++i)
                        acc += gp[i];
                    gb[a] += acc;
                }
            }
            if (kernel.requires_grad())
            {
                auto& gw = kernel.grad();
                for (int b = 0; b < c; ++b)
                    for (int a = 0; a < co; ++a)
                        for (int kz = 0; kz < kd; ++kz)
                            for (int ky = 0; ky < kh; ++ky)
                                for (int kx = 0; kx < kw; ++kx)
                                {
                                    S acc = S(0);
                                    int lo, hi;
                                    detail::tap_range(w, ow, stride, kx, pw, lo, hi);
                                    for (int oz = 0; oz < od; ++oz)
                                    {
                                        const int iz = oz * stride + kz - pd;
                                        if (iz < 0 || iz >= d)
                                            continue;
                                        for (int oy = 0; oy < oh; ++oy)
                                        {
                                            const int iy = oy * stride + ky - ph;
                                            if (iy < 0 || iy >= h)
                                                continue;
                                            const S* irow = in
                                                + ((static_cast<std::int64_t>(b) * od + oz) * oh
                                                   + oy) * ow;
                                            const S* grow = g
                                                + ((static_cast<std::int64_t>(a) * d + iz) * h
                                                   + iy) * w;
                                            const S* gp = grow + lo * stride + kx - pw;
                                            for (int ox = lo; ox < hi; ++ox, gp += stride)
                                                acc += irow[ox] * *gp;
                                        }
                                    }
                                    gw[(static_cast<std::int64_t>(b) * co + a) * kd * kh * kw
                                       + (kz * kh + ky) * kw + kx] += acc;
                                }
            }
            if (input.requires_grad())
            {
                S* gi = input.grad().data();
                for (int b = 0; b < c; ++b)
                    for (int a = 0; a < co; ++a)
                    {
                        const S* wk =
                            wt + (static_cast<std::int64_t>(b) * co + a) * kd * kh * kw;
                        for (int oz = 0; oz < od; ++oz)
                            for (int oy = 0; oy < oh; ++oy)
                            {
                                S* girow = gi
                                    + ((static_cast<std::int64_t>(b) * od + oz) * oh + oy) * ow;
                                for (int kz = 0; kz < kd; ++kz)
                                {
                                    const int iz = oz * stride + kz - pd;
                                    if (iz < 0 || iz >= d)
                                        continue;
                                    for (int ky = 0; ky < kh; ++ky)
                                    {
                                        const int iy = oy * stride + ky - ph;
                                        if (iy < 0 || iy >= h)
                                            continue;
                                        const S* grow = g
                                            + ((static_cast<std::int64_t>(a) * d + iz) * h + iy)
                                            * w;
                                        for (int kx = 0; kx < kw; ++kx)
                                        {
                                            const S wv = wk[(kz * kh + ky) * kw + kx];
                                            int lo, hi;
                                            detail::tap_range(w, ow, stride, kx, pw, lo, hi);
                                            const S* gp = grow + lo * stride + kx - pw;
                                            for (int ox = lo; ox < hi; ++ox, gp += stride)
                                                girow[ox] += wv * *gp;
                                        }
                                    }
                                }
                            }
                    }
            }
        }, out);
    }
    return out;
}

} // namespace mvs

#endif
