// Copyright Contributors to the mvskit Project
// SPDX-License-Identifier: Apache-2.0

#ifndef MVS_NET_DATASET_HPP
#define MVS_NET_DATASET_HPP

#include "mvs/geometry/view_geometry.hpp"
#include "mvs/net/train.hpp"
#include "mvs/scene/scene.hpp"

namespace mvs {

template <typename S>
Tensor<S> cast_tensor(const Tensor<float>& t)
{
    if constexpr (std::is_same_v<S, float>)
    {
        return t;
    }
    else
    {
        std::vector<S> data(t.data().begin(), t.data().end());
        return Tensor<S>::from_data(t.shape(), std::move(data));
    }
}

/// Ground truth at feature resolution. Quarter-resolution pixel (x,y) shares
/// its ray with full-resolution pixel (4x,4y) under the intrinsics scaling
/// convention, so plain subsampling is exact.
template <typename S>
void subsample_gt(const std::vector<double>& depth, const std::vector<std::uint8_t>& mask,
                  int width, int height, Tensor<S>& gt_out, Tensor<S>& mask_out)
{
    const int h = height / 4, w = width / 4;
    gt_out = Tensor<S>::zeros({h, w});
    mask_out = Tensor<S>::zeros({h, w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
        {
            const std::size_t src = static_cast<std::size_t>(4 * y) * width + 4 * x;
            const std::size_t dst = static_cast<std::size_t>(y) * w + x;
            if (mask[src])
            {
                gt_out.data()[dst] = static_cast<S>(depth[src]);
                mask_out.data()[dst] = S(1);
            }
        }
}

/// One training sample per requested reference view (all views with ground
/// truth when ref_views is empty): the reference plus the n_views-1 best
/// sources by pair score. Samples with empty masks are dropped and counted.
template <typename S>
std::vector<TrainSample<S>> build_samples(const SceneBundle& bundle, int n_views,
                                          const ViewSelectionParams& params,
                                          std::vector<int> ref_views = {},
                                          int* dropped = nullptr)
{
    if (!bundle.has_gt())
        throw std::invalid_argument("build_samples: scene bundle has no ground-truth depths");
    if (n_views < 2)
        throw std::invalid_argument("build_samples: n_views must be >= 2");
    if (n_views > static_cast<int>(bundle.views.size()))
        throw std::invalid_argument("build_samples: n_views " + std::to_string(n_views)
            + " exceeds the " + std::to_string(bundle.views.size()) + " available views");

    std::vector<Camera> cams;
    for (const auto& v : bundle.views)
        cams.push_back(v.cam);

    if (ref_views.empty())
        for (int v = 0; v < static_cast<int>(bundle.views.size()); ++v)
            ref_views.push_back(v);

    std::vector<TrainSample<S>> samples;
    for (int r : ref_views)
    {
        if (r < 0 || r >= static_cast<int>(bundle.views.size()))
            throw std::invalid_argument("build_samples: reference view " + std::to_string(r)
                + " out of range");
        TrainSample<S> sample;
        sample.ref_view = r;
        sample.hyp = bundle.views[r].hyp;
        sample.images.push_back(cast_tensor<S>(bundle.views[r].image));
        sample.cams.push_back(bundle.views[r].cam);
        for (int j : select_source_views(r, cams, bundle.tracks, n_views - 1, params))
        {
            sample.images.push_back(cast_tensor<S>(bundle.views[j].image));
            sample.cams.push_back(bundle.views[j].cam);
        }
        subsample_gt(bundle.gt_depth[r], bundle.gt_mask[r], bundle.width, bundle.height,
                     sample.gt, sample.mask);
        S mask_sum = S(0);
        for (S v : sample.mask.data())
            mask_sum += v;
        if (mask_sum == S(0))
        {
            if (dropped)
                ++*dropped;
            continue;
        }
        samples.push_back(std::move(sample));
    }
    return samples;
}

} // namespace mvs

#endif
