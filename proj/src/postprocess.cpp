// Copyright Contributors to the mvskit Project
// SPDX-License-Identifier: Apache-2.0

#include "mvs/post/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace mvs {

void FilterConfig::validate() const
{
    if (!(prob_threshold > 0.0) || !(pixel_threshold > 0.0) || !(rel_depth_threshold > 0.0))
        throw std::invalid_argument("filter config: thresholds must be positive");
    if (min_consistent_views < 2)
        throw std::invalid_argument("filter config: min_consistent_views must be >= 2");
}

Tensor<float> confidence_map(const Tensor<float>& prob, const DepthHypotheses& hyp,
                             const Tensor<float>& estimate)
{
    if (prob.rank() != 3)
        throw std::invalid_argument("confidence_map: probability volume must be [D,h,w]");
    hyp.validate();
    const int d = prob.shape()[0], h = prob.shape()[1], w = prob.shape()[2];
    if (d != hyp.count)
        throw std::invalid_argument("confidence_map: volume depth " + std::to_string(d)
            + " does not match " + std::to_string(hyp.count) + " hypotheses");
    if (estimate.rank() != 2 || estimate.shape()[0] != h || estimate.shape()[1] != w)
        throw std::invalid_argument("confidence_map: estimate extents do not match volume");

    Tensor<float> conf = Tensor<float>::zeros({h, w});
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    for (std::int64_t i = 0; i < plane; ++i)
    {
        const double est = estimate.data()[i];
        const int k = static_cast<int>(std::floor((est - hyp.d_min) / hyp.interval));
        float acc = 0.0f;
        int prev = -1;
        for (int j = k - 1; j <= k + 2; ++j)
        {
            const int idx = std::clamp(j, 0, d - 1);
            if (idx == prev)
                continue; // clamped duplicates collapse at the range edges
            prev = idx;
            acc += prob.data()[idx * plane + i];
        }
        conf.data()[i] = acc;
    }
    return conf;
}

Tensor<float> photometric_filter(const Tensor<float>& depth, const Tensor<float>& conf,
                                 const FilterConfig& cfg)
{
    cfg.validate();
    detail::check_same_shape(depth.shape(), conf.shape(), "photometric_filter");
    Tensor<float> out = Tensor<float>::zeros(depth.shape());
    for (std::size_t i = 0; i < depth.data().size(); ++i)
        out.data()[i] = conf.data()[i] < static_cast<float>(cfg.prob_threshold)
            ? 0.0f
            : depth.data()[i];
    return out;
}

namespace {

struct Reprojection
{
    bool consistent = false;
    double depth = 0.0;  // d_reproj in the reference view
    int source_pixel = -1;
};

Reprojection check_against(const DepthView& ref, const DepthView& src,
                           const Eigen::Vector2d& p1, double d1, const FilterConfig& cfg)
{
    Reprojection out;
    const Eigen::Vector3d world = unproject(ref.cam, p1, d1);
    const auto proj = project(src.cam, world);
    if (!proj.in_front)
        return out;
    const int w = src.depth.shape()[1], h = src.depth.shape()[0];
    const int qx = static_cast<int>(std::lround(proj.pixel.x()));
    const int qy = static_cast<int>(std::lround(proj.pixel.y()));
    if (qx < 0 || qx >= w || qy < 0 || qy >= h)
        return out;
    const double src_depth = src.depth.data()[static_cast<std::size_t>(qy) * w + qx];
    if (!(src_depth > 0.0))
        return out;
    const Eigen::Vector3d back = unproject(src.cam, proj.pixel, src_depth);
    const auto reproj = project(ref.cam, back);
    if (!reproj.in_front)
        return out;
    if ((reproj.pixel - p1).norm() >= cfg.pixel_threshold)
        return out;
    if (std::abs(reproj.depth - d1) / d1 >= cfg.rel_depth_threshold)
        return out;
    out.consistent = true;
    out.depth = reproj.depth;
    out.source_pixel = qy * w + qx;
    return out;
}

} // namespace

ConsistencyMaps geometric_consistency(const DepthView& ref,
                                      const std::vector<DepthView>& others,
                                      const FilterConfig& cfg)
{
    cfg.validate();
    if (ref.depth.rank() != 2)
        throw std::invalid_argument("geometric_consistency: depth maps must be [h,w]");
    const int h = ref.depth.shape()[0], w = ref.depth.shape()[1];
    for (const auto& other : others)
        if (other.depth.shape() != ref.depth.shape())
            throw std::invalid_argument("geometric_consistency: depth maps must share "
                "resolution");

    ConsistencyMaps maps;
    maps.width = w;
    maps.height = h;
    maps.count.assign(static_cast<std::size_t>(h) * w, 0);
    maps.fused_depth.assign(static_cast<std::size_t>(h) * w, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
        {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            const double d1 = ref.depth.data()[i];
            if (!(d1 > 0.0))
                continue;
            double depth_acc = d1;
            int consistent = 0;
            for (const auto& other : others)
            {
                const Reprojection r =
                    check_against(ref, other, Eigen::Vector2d(x, y), d1, cfg);
                if (r.consistent)
                {
                    ++consistent;
                    depth_acc += r.depth;
                }
            }
            maps.count[i] = consistent;
            maps.fused_depth[i] = depth_acc / (consistent + 1);
        }
    return maps;
}

FusedPointCloud fuse(const std::vector<FusionView>& views, const FilterConfig& cfg,
                     std::ostream& log, std::vector<std::pair<int, int>>* provenance,
                     std::vector<std::vector<std::pair<int, int>>>* contributors)
{
    cfg.validate();
    if (provenance)
        provenance->clear();
    if (contributors)
        contributors->clear();
    FusedPointCloud cloud;
    if (static_cast<int>(views.size()) < cfg.min_consistent_views)
    {
        log << "fuse: only " << views.size() << " views for min_consistent_views = "
            << cfg.min_consistent_views << "; returning an empty cloud\n";
        return cloud;
    }

    const int n = static_cast<int>(views.size());
    const int h = views[0].depth.shape()[0];
    const int w = views[0].depth.shape()[1];
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    const std::int64_t cplane = static_cast<std::int64_t>(h) * w;

    // Canonical processing order from the camera poses, so the result does
    // not depend on how the caller ordered the views.
    std::vector<int> order(views.size());
    std::iota(order.begin(), order.end(), 0);
    auto pose_key = [](const Camera& cam) {
        std::vector<double> key;
        const Eigen::Vector3d c = cam.center();
        key.insert(key.end(), {c.x(), c.y(), c.z()});
        for (int r = 0; r < 3; ++r)
            for (int col = 0; col < 3; ++col)
                key.push_back(cam.R(r, col));
        for (int r = 0; r < 3; ++r)
            for (int col = 0; col < 3; ++col)
                key.push_back(cam.K(r, col));
        return key;
    };
    std::vector<std::vector<double>> keys;
    keys.reserve(views.size());
    for (const auto& v : views)
        keys.push_back(pose_key(v.cam));
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return keys[a] < keys[b]; });

    // Photometric filtering up front; geometric lookups use the filtered maps.
    std::vector<DepthView> filtered(views.size());
    for (std::size_t v = 0; v < views.size(); ++v)
    {
        if (views[v].depth.shape() != views[0].depth.shape())
            throw std::invalid_argument("fuse: depth maps must share resolution");
        filtered[v].depth = photometric_filter(views[v].depth, views[v].conf, cfg);
        filtered[v].cam = views[v].cam;
    }

    std::vector<std::vector<std::uint8_t>> consumed(views.size(),
                                                    std::vector<std::uint8_t>(plane, 0));
    for (int oi = 0; oi < n; ++oi)
    {
        const int v = order[oi];
        const DepthView& ref = filtered[v];
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
            {
                const std::size_t i = static_cast<std::size_t>(y) * w + x;
                if (consumed[v][i])
                    continue;
                const double d1 = ref.depth.data()[i];
                if (!(d1 > 0.0))
                    continue;

                double depth_acc = d1;
                int consistent = 0;
                std::vector<std::pair<int, int>> matches; // (view, pixel)
                // canonical enumeration keeps the depth average bit-exact
                // under input reordering
                for (int oj = 0; oj < n; ++oj)
                {
                    const int j = order[oj];
                    if (j == v)
                        continue;
                    const Reprojection r = check_against(ref, filtered[j],
                                                         Eigen::Vector2d(x, y), d1, cfg);
                    if (r.consistent)
                    {
                        ++consistent;
                        depth_acc += r.depth;
                        matches.emplace_back(j, r.source_pixel);
                    }
                }
                const int support = consistent + (cfg.count_reference ? 1 : 0);
                if (support < cfg.min_consistent_views)
                    continue;

                const double fused_depth = depth_acc / (consistent + 1);
                FusedPoint point;
                point.position = unproject(ref.cam, Eigen::Vector2d(x, y), fused_depth);
                point.support = consistent + 1;
                for (int c = 0; c < 3; ++c)
                {
                    const float col = views[v].color.data()[c * cplane + i];
                    point.color[c] = static_cast<std::uint8_t>(
                        std::lround(std::clamp(col, 0.0f, 1.0f) * 255.0f));
                }
                cloud.push_back(point);
                if (provenance)
                    provenance->emplace_back(v, static_cast<int>(i));
                if (contributors)
                {
                    std::vector<std::pair<int, int>> all = {{v, static_cast<int>(i)}};
                    all.insert(all.end(), matches.begin(), matches.end());
                    contributors->push_back(std::move(all));
                }
                for (const auto& [j, pixel] : matches)
                    consumed[j][pixel] = 1;
            }
    }
    return cloud;
}

FusedPointCloud depth_to_points(const Tensor<float>& depth, const Camera& cam,
                                const Tensor<float>& color)
{
    if (depth.rank() != 2)
        throw std::invalid_argument("depth_to_points: depth must be [h,w]");
    const int h = depth.shape()[0], w = depth.shape()[1];
    if (color.rank() != 3 || color.shape()[0] != 3 || color.shape()[1] != h
        || color.shape()[2] != w)
        throw std::invalid_argument("depth_to_points: color extents do not match depth");
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    FusedPointCloud cloud;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
        {
            const std::int64_t i = static_cast<std::int64_t>(y) * w + x;
            const double d = depth.data()[i];
            if (!(d > 0.0))
                continue;
            FusedPoint p;
            p.position = unproject(cam, Eigen::Vector2d(x, y), d);
            p.support = 1;
            for (int c = 0; c < 3; ++c)
                p.color[c] = static_cast<std::uint8_t>(
                    std::lround(std::clamp(color.data()[c * plane + i], 0.0f, 1.0f) * 255.0f));
            cloud.push_back(p);
        }
    return cloud;
}

} // namespace mvs
