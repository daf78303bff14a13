// Copyright Contributors to the mvskit Project
// SPDX-License-Identifier: Apache-2.0

#ifndef MVS_EVAL_METRICS_HPP
#define MVS_EVAL_METRICS_HPP

#include <Eigen/Core>
#include <string>
#include <unordered_map>
#include <vector>

namespace mvs {

struct NearestResult
{
    int index = -1;
    double distance = 0.0;
};

/// Linear scan; ties break to the lower index.
NearestResult nearest_brute(const Eigen::Vector3d& query,
                            const std::vector<Eigen::Vector3d>& cloud);

/// Uniform-grid accelerated nearest neighbor. Distances (and tie-broken
/// indices) are bit-identical to the brute-force backend: both reduce the
/// same per-pair expression with the same comparison rule.
class GridIndex
{
public:
    explicit GridIndex(std::vector<Eigen::Vector3d> points);
    NearestResult nearest(const Eigen::Vector3d& query) const;
    std::size_t size() const { return points_.size(); }

private:
    std::vector<Eigen::Vector3d> points_;
    std::unordered_map<std::int64_t, std::vector<int>> cells_;
    Eigen::Vector3d origin_ = Eigen::Vector3d::Zero();
    double cell_ = 1.0;
    int max_ring_ = 0;

    std::int64_t key(int x, int y, int z) const;
};

/// Mean over recon points of the (capped) distance to the closest gt point.
double accuracy_distance(const std::vector<Eigen::Vector3d>& recon,
                         const std::vector<Eigen::Vector3d>& gt, double cap);

/// Mean over gt points of the (capped) distance to the closest recon point.
double completeness_distance(const std::vector<Eigen::Vector3d>& recon,
                             const std::vector<Eigen::Vector3d>& gt, double cap);

struct PercentageMetrics
{
    double precision = 0.0; // % of recon within threshold of gt
    double recall = 0.0;    // % of gt within threshold of recon
    double f_score = 0.0;   // harmonic mean, 0 when both are 0
};

PercentageMetrics percentage_metrics(const std::vector<Eigen::Vector3d>& recon,
                                     const std::vector<Eigen::Vector3d>& gt,
                                     double threshold);

struct MetricReport
{
    double mean_accuracy = 0.0;
    double mean_completeness = 0.0;
    double overall = 0.0; // (accuracy + completeness) / 2
    struct Threshold
    {
        double threshold = 0.0;
        double precision = 0.0;
        double recall = 0.0;
        double f_score = 0.0;
    };
    std::vector<Threshold> percentages;
    std::size_t recon_points = 0;
    std::size_t gt_points = 0;
    double distance_cap = 0.0;
};

MetricReport evaluate_clouds(const std::vector<Eigen::Vector3d>& recon,
                             const std::vector<Eigen::Vector3d>& gt, double cap,
                             const std::vector<double>& thresholds);

std::string report_table(const MetricReport& report);
std::string report_kv(const MetricReport& report);

} // namespace mvs

#endif
