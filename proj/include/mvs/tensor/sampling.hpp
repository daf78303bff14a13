// Copyright Contributors to the mvskit Project
// SPDX-License-Identifier: Apache-2.0

#ifndef MVS_TENSOR_SAMPLING_HPP
#define MVS_TENSOR_SAMPLING_HPP

#include <cmath>

#include "mvs/tensor/tensor.hpp"

namespace mvs {

/// Bilinear sampling of map [C,H,W] at pixel coordinates coords [2,H',W'],
/// where coords[0] holds x (column) and coords[1] holds y (row). Samples
/// outside the map contribute zero. Differentiable with respect to both the
/// map values and the coordinates. Non-finite coordinates are rejected.
template <typename S>
Tensor<S> bilinear_sample(Tape<S>* tape, const Tensor<S>& map, const Tensor<S>& coords)
{
    if (map.rank() != 3)
        throw std::invalid_argument("bilinear_sample: map must be [C,H,W], got "
            + shape_str(map.shape()));
    if (coords.rank() != 3 || coords.shape()[0] != 2)
        throw std::invalid_argument("bilinear_sample: coords must be [2,H',W'], got "
            + shape_str(coords.shape()));
    const int c = map.shape()[0], h = map.shape()[1], w = map.shape()[2];
    const int oh = coords.shape()[1], ow = coords.shape()[2];
    const std::int64_t npix = static_cast<std::int64_t>(oh) * ow;

    const auto& cd = coords.data();
    for (S v : cd)
        if (!std::isfinite(v))
            throw std::invalid_argument("bilinear_sample: non-finite coordinate");

    // Per-pixel tap table shared by forward and backward.
    struct Tap
    {
        int x0, y0;
        S fx, fy;
    };
    auto taps = std::make_shared<std::vector<Tap>>(npix);
    for (std::int64_t i = 0; i < npix; ++i)
    {
        const S x = cd[i];
        const S y = cd[npix + i];
        const S fx0 = std::floor(x);
        const S fy0 = std::floor(y);
        (*taps)[i] = Tap{static_cast<int>(fx0), static_cast<int>(fy0), x - fx0, y - fy0};
    }

    const bool rg = map.requires_grad() || coords.requires_grad();
    Tensor<S> out = Tensor<S>::zeros({c, oh, ow}, rg);
    {
        const S* md = map.data().data();
        S* od = out.data().data();
        for (int ch = 0; ch < c; ++ch)
        {
            const S* plane = md + static_cast<std::int64_t>(ch) * h * w;
            S* oplane = od + ch * npix;
            for (std::int64_t i = 0; i < npix; ++i)
            {
                const Tap& t = (*taps)[i];
                const S w00 = (S(1) - t.fx) * (S(1) - t.fy);
                const S w10 = t.fx * (S(1) - t.fy);
                const S w01 = (S(1) - t.fx) * t.fy;
                const S w11 = t.fx * t.fy;
                auto pick = [&](int xx, int yy) -> S {
                    return (xx >= 0 && xx < w && yy >= 0 && yy < h)
                        ? plane[static_cast<std::int64_t>(yy) * w + xx]
                        : S(0);
                };
                oplane[i] = w00 * pick(t.x0, t.y0) + w10 * pick(t.x0 + 1, t.y0)
                    + w01 * pick(t.x0, t.y0 + 1) + w11 * pick(t.x0 + 1, t.y0 + 1);
            }
        }
    }

    if (detail::want_record(tape, rg))
    {
        tape->record([map, coords, out, taps, c, h, w, npix]() mutable {
            const S* g = out.grad().data();
            const S* md = map.data().data();
            if (map.requires_grad())
            {
                S* gm = map.grad().data();
                for (int ch = 0; ch < c; ++ch)
                {
                    S* gplane = gm + static_cast<std::int64_t>(ch) * h * w;
                    const S* gout = g + ch * npix;
                    for (std::int64_t i = 0; i < npix; ++i)
                    {
                        const auto& t = (*taps)[i];
                        const S gv = gout[i];
                        auto put = [&](int xx, int yy, S wgt) {
                            if (xx >= 0 && xx < w && yy >= 0 && yy < h)
                                gplane[static_cast<std::int64_t>(yy) * w + xx] += wgt * gv;
                        };
                        put(t.x0, t.y0, (S(1) - t.fx) * (S(1) - t.fy));
                        put(t.x0 + 1, t.y0, t.fx * (S(1) - t.fy));
                        put(t.x0, t.y0 + 1, (S(1) - t.fx) * t.fy);
                        put(t.x0 + 1, t.y0 + 1, t.fx * t.fy);
                    }
                }
            }
            if (coords.requires_grad())
            {
                S* gc = coords.grad().data();
                for (std::int64_t i = 0; i < npix; ++i)
                {
                    const auto& t = (*taps)[i];
                    S gx = S(0), gy = S(0);
                    for (int ch = 0; ch < c; ++ch)
                    {
                        const S* plane = md + static_cast<std::int64_t>(ch) * h * w;
                        auto pick = [&](int xx, int yy) -> S {
                            return (xx >= 0 && xx < w && yy >= 0 && yy < h)
                                ? plane[static_cast<std::int64_t>(yy) * w + xx]
                                : S(0);
                        };
                        const S v00 = pick(t.x0, t.y0);
                        const S v10 = pick(t.x0 + 1, t.y0);
                        const S v01 = pick(t.x0, t.y0 + 1);
                        const S v11 = pick(t.x0 + 1, t.y0 + 1);
                        const S gv = g[ch * npix + i];
                        // d(out)/dx = (1-fy)(v10-v00) + fy(v11-v01), same pattern for y
                        gx += gv * ((S(1) - t.fy) * (v10 - v00) + t.fy * (v11 - v01));
                        gy += gv * ((S(1) - t.fx) * (v01 - v00) + t.fx * (v11 - v10));
                    }
                    gc[i] += gx;
                    gc[npix + i] += gy;
                }
            }
        }, out);
    }
    return out;
}

} // namespace mvs

#endif
