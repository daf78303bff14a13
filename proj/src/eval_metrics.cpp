// Copyright Contributors to the mvskit Project
// SPDX-License-Identifier: Apache-2.0

#include "mvs/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace mvs {

namespace {

// The one distance expression both backends share; bit-equality between them
// depends on it.
inline double sq_dist(const Eigen::Vector3d& a, const Eigen::Vector3d& b)
{
    const double dx = a.x() - b.x();
    const double dy = a.y() - b.y();
    const double dz = a.z() - b.z();
    return dx * dx + dy * dy + dz * dz;
}

inline bool better(double d2, int idx, double best_d2, int best_idx)
{
    return d2 < best_d2 || (d2 == best_d2 && idx < best_idx);
}

} // namespace

NearestResult nearest_brute(const Eigen::Vector3d& query,
                            const std::vector<Eigen::Vector3d>& cloud)
{
    if (cloud.empty())
        throw std::invalid_argument("nearest_brute: empty cloud");
    double best_d2 = std::numeric_limits<double>::infinity();
    int best = -1;
    for (int i = 0; i < static_cast<int>(cloud.size()); ++i)
    {
        const double d2 = sq_dist(query, cloud[i]);
        if (better(d2, i, best_d2, best))
        {
            best_d2 = d2;
            best = i;
        }
    }
    return {best, std::sqrt(best_d2)};
}

GridIndex::GridIndex(std::vector<Eigen::Vector3d> points) : points_(std::move(points))
{
    if (points_.empty())
        throw std::invalid_argument("GridIndex: empty cloud");
    Eigen::Vector3d lo = points_[0], hi = points_[0];
    for (const auto& p : points_)
    {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    origin_ = lo;
    const double diag = (hi - lo).norm();
    // degenerate clouds (a single point, or all points coincident) get a
    // unit cell; everything then lives in one bucket
    cell_ = diag > 0.0 ? diag / std::cbrt(static_cast<double>(points_.size())) : 1.0;
    int max_extent = 1;
    for (int axis = 0; axis < 3; ++axis)
        max_extent = std::max(max_extent,
                              static_cast<int>((hi[axis] - lo[axis]) / cell_) + 1);
    max_ring_ = max_extent + 1;
    for (int i = 0; i < static_cast<int>(points_.size()); ++i)
    {
        const Eigen::Vector3d rel = (points_[i] - origin_) / cell_;
        cells_[key(static_cast<int>(std::floor(rel.x())), static_cast<int>(std::floor(rel.y())),
                   static_cast<int>(std::floor(rel.z())))]
            .push_back(i);
    }
}

std::int64_t GridIndex::key(int x, int y, int z) const
{
    // 21 bits per axis, offset to keep coordinates positive
    const std::int64_t b = 1 << 20;
    return ((static_cast<std::int64_t>(x) + b) << 42)
        | ((static_cast<std::int64_t>(y) + b) << 21) | (static_cast<std::int64_t>(z) + b);
}

NearestResult GridIndex::nearest(const Eigen::Vector3d& query) const
{
    const Eigen::Vector3d rel = (query - origin_) / cell_;
    // ring search starts from the cell clamped into the occupied box, with
    // the query's true cell offset folded into the termination bound; far
    // queries stay exact without huge ring counts
    double qoff = 0.0;
    int start[3];
    for (int axis = 0; axis < 3; ++axis)
    {
        const double cell_coord = std::floor(rel[axis]);
        const double clamped =
            std::clamp(cell_coord, 0.0, static_cast<double>(max_ring_ - 1));
        start[axis] = static_cast<int>(clamped);
        qoff = std::max(qoff, std::abs(cell_coord - clamped));
    }
    const int cx = start[0], cy = start[1], cz = start[2];

    double best_d2 = std::numeric_limits<double>::infinity();
    int best = -1;
    auto scan_cell = [&](int x, int y, int z) {
        const auto it = cells_.find(key(x, y, z));
        if (it == cells_.end())
            return;
        for (int i : it->second)
        {
            const double d2 = sq_dist(query, points_[i]);
            if (better(d2, i, best_d2, best))
            {
                best_d2 = d2;
                best = i;
            }
        }
    };

    for (int ring = 0; ring <= max_ring_; ++ring)
    {
        if (ring == 0)
        {
            scan_cell(cx, cy, cz);
        }
        else
        {
            // shell of cells at Chebyshev distance `ring`
            for (int x = cx - ring; x <= cx + ring; ++x)
                for (int y = cy - ring; y <= cy + ring; ++y)
                    for (int z = cz - ring; z <= cz + ring; ++z)
                    {
                        if (std::max({std::abs(x - cx), std::abs(y - cy), std::abs(z - cz)})
                            != ring)
                            continue;
                        scan_cell(x, y, z);
                    }
        }
        // any unscanned point lies in a cell at Chebyshev distance > ring
        // from the start cell, hence at least (ring - qoff) cells from the
        // query's own cell
        if (best >= 0)
        {
            const double guard = (static_cast<double>(ring) - qoff) * cell_;
            if (guard >= 0.0 && best_d2 <= guard * guard)
                break;
        }
    }
    return {best, std::sqrt(best_d2)};
}

namespace {

double mean_capped_distance(const std::vector<Eigen::Vector3d>& from,
                            const std::vector<Eigen::Vector3d>& to, double cap,
                            const char* what)
{
    if (from.empty() || to.empty())
        throw std::invalid_argument(std::string(what) + ": point clouds must be non-empty");
    if (!(cap > 0.0))
        throw std::invalid_argument(std::string(what) + ": cap must be positive");
    const GridIndex index(to);
    double acc = 0.0;
    for (const auto& p : from)
        acc += std::min(index.nearest(p).distance, cap);
    return acc / static_cast<double>(from.size());
}

} // namespace

double accuracy_distance(const std::vector<Eigen::Vector3d>& recon,
                         const std::vector<Eigen::Vector3d>& gt, double cap)
{
    return mean_capped_distance(recon, gt, cap, "accuracy_distance");
}

double completeness_distance(const std::vector<Eigen::Vector3d>& recon,
                             const std::vector<Eigen::Vector3d>& gt, double cap)
{
    return mean_capped_distance(gt, recon, cap, "completeness_distance");
}

PercentageMetrics percentage_metrics(const std::vector<Eigen::Vector3d>& recon,
                                     const std::vector<Eigen::Vector3d>& gt,
                                     double threshold)
{
    if (recon.empty() || gt.empty())
        throw std::invalid_argument("percentage_metrics: point clouds must be non-empty");
    if (!(threshold > 0.0))
        throw std::invalid_argument("percentage_metrics: threshold must be positive");
    const GridIndex gt_index(gt);
    std::size_t close_recon = 0;
    for (const auto& p : recon)
        if (gt_index.nearest(p).distance < threshold)
            ++close_recon;
    const GridIndex recon_index(recon);
    std::size_t close_gt = 0;
    for (const auto& p : gt)
        if (recon_index.nearest(p).distance < threshold)
            ++close_gt;

    PercentageMetrics out;
    out.precision = 100.0 * static_cast<double>(close_recon)
        / static_cast<double>(recon.size());
    out.recall = 100.0 * static_cast<double>(close_gt) / static_cast<double>(gt.size());
    out.f_score = (out.precision + out.recall > 0.0)
        ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
        : 0.0;
    return out;
}

MetricReport evaluate_clouds(const std::vector<Eigen::Vector3d>& recon,
                             const std::vector<Eigen::Vector3d>& gt, double cap,
                             const std::vector<double>& thresholds)
{
    MetricReport report;
    report.mean_accuracy = accuracy_distance(recon, gt, cap);
    report.mean_completeness = completeness_distance(recon, gt, cap);
    report.overall = 0.5 * (report.mean_accuracy + report.mean_completeness);
    report.recon_points = recon.size();
    report.gt_points = gt.size();
    report.distance_cap = cap;
    for (double t : thresholds)
    {
        const PercentageMetrics pm = percentage_metrics(recon, gt, t);
        report.percentages.push_back({t, pm.precision, pm.recall, pm.f_score});
    }
    return report;
}

std::string report_table(const MetricReport& report)
{
    std::ostringstream os;
    char line[160];
    os << "reconstruction quality\n";
    std::snprintf(line, sizeof(line), "  %-18s %12.6f\n", "mean accuracy",
                  report.mean_accuracy);
    os << line;
    std::snprintf(line, sizeof(line), "  %-18s %12.6f\n", "mean completeness",
                  report.mean_completeness);
    os << line;
    std::snprintf(line, sizeof(line), "  %-18s %12.6f   (cap %g)\n", "overall",
                  report.overall, report.distance_cap);
    os << line;
    std::snprintf(line, sizeof(line), "  %-18s %zu recon / %zu gt\n", "points",
                  report.recon_points, report.gt_points);
    os << line;
    for (const auto& p : report.percentages)
    {
        std::snprintf(line, sizeof(line),
                      "  threshold %-8g precision %7.2f%%  recall %7.2f%%  f-score %7.2f%%\n",
                      p.threshold, p.precision, p.recall, p.f_score);
        os << line;
    }
    return os.str();
}

std::string report_kv(const MetricReport& report)
{
    std::ostringstream os;
    char line[160];
    auto emit = [&](const char* k, double v) {
        std::snprintf(line, sizeof(line), "%s = %.17g\n", k, v);
        os << line;
    };
    emit("mean_accuracy", report.mean_accuracy);
    emit("mean_completeness", report.mean_completeness);
    emit("overall", report.overall);
    emit("distance_cap", report.distance_cap);
    os << "recon_points = " << report.recon_points << "\n";
    os << "gt_points = " << report.gt_points << "\n";
    for (const auto& p : report.percentages)
    {
        std::snprintf(line, sizeof(line), "precision@%g = %.17g\n", p.threshold, p.precision);
        os << line;
        std::snprintf(line, sizeof(line), "recall@%g = %.17g\n", p.threshold, p.recall);
        os << line;
        std::snprintf(line, sizeof(line), "f_score@%g = %.17g\n", p.threshold, p.f_score);
        os << line;
    }
    return os.str();
}

} // namespace mvs
