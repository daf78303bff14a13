// Copyright Contributors to the mvskit Project
// SPDX-License-Identifier: Apache-2.0

#ifndef MVS_POST_POSTPROCESS_HPP
#define MVS_POST_POSTPROCESS_HPP

#include <iosfwd>

#include "mvs/geometry/camera.hpp"
#include "mvs/post/point_cloud.hpp"
#include "mvs/tensor/tensor.hpp"

namespace mvs {

struct FilterConfig
{
    double prob_threshold = 0.8;      // photometric: strict less-than removes
    double pixel_threshold = 1.0;     // geometric: reprojection distance, px
    double rel_depth_threshold = 0.01; // geometric: |d_reproj - d| / d
    int min_consistent_views = 3;
    bool count_reference = true; // reference counts toward min_consistent_views

    void validate() const;
};

/// Per-pixel probability sum over the four hypotheses nearest the estimate:
/// indices {k-1, k, k+1, k+2} with k = floor((d - d_min)/interval), clamped
/// to [0, D-1] and deduplicated at the range edges.
Tensor<float> confidence_map(const Tensor<float>& prob, const DepthHypotheses& hyp,
                             const Tensor<float>& estimate);

/// Invalidates (zeroes) pixels whose confidence is strictly below
/// cfg.prob_threshold.
Tensor<float> photometric_filter(const Tensor<float>& depth, const Tensor<float>& conf,
                                 const FilterConfig& cfg);

struct DepthView
{
    Tensor<float> depth; // [h,w], 0 marks invalid
    Camera cam;          // at depth-map resolution
};

struct ConsistencyMaps
{
    std::vector<int> count;         // consistent source views per pixel
    std::vector<double> fused_depth; // mean over reference + consistent reprojections
    int width = 0;
    int height = 0;
};

/// Cross-view depth agreement for one reference view: a pixel's depth is
/// consistent with a source view when its reprojection lands within
/// pixel_threshold and the relative depth gap is below rel_depth_threshold.
/// Source depths are looked up at the nearest pixel. Points behind a source
/// camera count as inconsistent for that view.
ConsistencyMaps geometric_consistency(const DepthView& ref,
                                      const std::vector<DepthView>& others,
                                      const FilterConfig& cfg);

struct FusionView
{
    Tensor<float> depth; // [h,w]
    Tensor<float> conf;  // [h,w]
    Camera cam;          // at depth-map resolution
    Tensor<float> color; // [3,h,w] in [0,1]
};

/// Photometric then geometric filtering, depth averaging over consistent
/// views, and unprojection of the survivors. Views are processed in a
/// canonical order derived from the camera poses, so the output is
/// independent of the input ordering; once a pixel's point is emitted the
/// matched source pixels are consumed and do not re-emit.
/// `provenance`, when given, receives one (input view index, pixel index)
/// per emitted point; `contributors` receives, per point, every (view, pixel)
/// that supported it (the reference pixel plus the matched source pixels).
FusedPointCloud fuse(const std::vector<FusionView>& views, const FilterConfig& cfg,
                     std::ostream& log,
                     std::vector<std::pair<int, int>>* provenance = nullptr,
                     std::vector<std::vector<std::pair<int, int>>>* contributors = nullptr);

/// One colored point per valid depth pixel.
FusedPointCloud depth_to_points(const Tensor<float>& depth, const Camera& cam,
                                const Tensor<float>& color);

} // namespace mvs

#endif
