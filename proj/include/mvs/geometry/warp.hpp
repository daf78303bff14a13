// Copyright Contributors to the mvskit Project
// SPDX-License-Identifier: Apache-2.0

#ifndef MVS_GEOMETRY_WARP_HPP
#define MVS_GEOMETRY_WARP_HPP

#include "mvs/geometry/view_geometry.hpp"
#include "mvs/tensor/ops.hpp"
#include "mvs/tensor/sampling.hpp"

namespace mvs {

/// Warps a source feature map [F,h,w] into the reference fronto-parallel
/// planes at the given depths, producing a feature volume [F,D,h,w]:
/// slice d samples src_feat at H(d) * x for every reference feature pixel x.
/// Cameras must already be at feature-map resolution (see Camera::scaled).
/// Differentiable with respect to src_feat. Points mapping behind the source
/// camera sample as out-of-bounds (zero).
template <typename S>
Tensor<S> warp_to_volume(Tape<S>* tape, const Tensor<S>& src_feat, const Camera& ref,
                         const Camera& src, const std::vector<double>& depths)
{
    if (src_feat.rank() != 3)
        throw std::invalid_argument("warp_to_volume: feature map must be [F,h,w], got "
            + shape_str(src_feat.shape()));
    if (depths.empty())
        throw std::invalid_argument("warp_to_volume: depth list is empty");
    const int f = src_feat.shape()[0];
    const int h = src_feat.shape()[1];
    const int w = src_feat.shape()[2];
    const int d = static_cast<int>(depths.size());

    // Coordinates for all depth slices stacked along the row axis, so one
    // bilinear_sample call produces the whole volume.
    Tensor<S> coords = Tensor<S>::zeros({2, d * h, w});
    auto& cd = coords.data();
    const std::int64_t npix = static_cast<std::int64_t>(d) * h * w;
    for (int k = 0; k < d; ++k)
    {
        const Eigen::Matrix3d hm = homography(ref, src, depths[k]);
        for (int y = 0; y < h; ++y)
        {
            const std::int64_t row = (static_cast<std::int64_t>(k) * h + y) * w;
            for (int x = 0; x < w; ++x)
            {
                const Eigen::Vector3d q =
                    hm * Eigen::Vector3d(static_cast<double>(x), static_cast<double>(y), 1.0);
                double sx, sy;
                if (q.z() > 1e-12)
                {
                    sx = q.x() / q.z();
                    sy = q.y() / q.z();
                    // clamp extreme projections near the epipole; anything
                    // this far out samples as zero either way
                    const double limit = 1e7;
                    sx = std::clamp(sx, -limit, limit);
                    sy = std::clamp(sy, -limit, limit);
                }
                else
                {
                    sx = -1e7; // behind the source camera
                    sy = -1e7;
                }
                cd[row + x] = static_cast<S>(sx);
                cd[npix + row + x] = static_cast<S>(sy);
            }
        }
    }
    Tensor<S> flat = bilinear_sample(tape, src_feat, coords);
    return reshape(tape, flat, {f, d, h, w});
}

} // namespace mvs

#endif
