// Copyright Contributors to the mvskit Project
// SPDX-License-Identifier: Apache-2.0

#include "mvs/geometry/camera.hpp"
#include "mvs/geometry/view_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mvs {

Eigen::Matrix3d Camera::K_inverse() const
{
    const double fx = K(0, 0), fy = K(1, 1), cx = K(0, 2), cy = K(1, 2);
    if (fx == 0.0 || fy == 0.0)
        throw std::invalid_argument("camera: intrinsics are not invertible (zero focal)");
    Eigen::Matrix3d inv = Eigen::Matrix3d::Identity();
    inv(0, 0) = 1.0 / fx;
    inv(1, 1) = 1.0 / fy;
    inv(0, 2) = -cx / fx;
    inv(1, 2) = -cy / fy;
    return inv;
}

Camera Camera::scaled(double s) const
{
    Camera c = *this;
    c.K(0, 0) *= s;
    c.K(1, 1) *= s;
    c.K(0, 2) *= s;
    c.K(1, 2) *= s;
    return c;
}

void Camera::validate() const
{
    const Eigen::Matrix3d rtr = R.transpose() * R;
    if ((rtr - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-9)
        throw std::invalid_argument("camera: R is not orthonormal");
    if (std::abs(R.determinant() - 1.0) > 1e-9)
        throw std::invalid_argument("camera: det(R) must be +1");
    if (!(K(0, 0) > 0.0) || !(K(1, 1) > 0.0))
        throw std::invalid_argument("camera: focal lengths must be positive");
    if (!(d_min > 0.0) || !(d_min < d_max))
        throw std::invalid_argument("camera: require 0 < d_min < d_max, got ["
            + std::to_string(d_min) + ", " + std::to_string(d_max) + "]");
}

bool Camera::same_pose_and_intrinsics(const Camera& other) const
{
    return K == other.K && R == other.R && t == other.t;
}

std::vector<double> DepthHypotheses::samples() const
{
    validate();
    std::vector<double> out(count);
    for (int k = 0; k < count; ++k)
        out[k] = d_min + interval * k;
    return out;
}

void DepthHypotheses::validate() const
{
    if (count < 1)
        throw std::invalid_argument("depth hypotheses: count must be >= 1");
    if (!(interval > 0.0))
        throw std::invalid_argument("depth hypotheses: interval must be positive");
    if (!(d_min > 0.0))
        throw std::invalid_argument("depth hypotheses: d_min must be positive");
}

Projection project(const Camera& cam, const Eigen::Vector3d& point)
{
    const Eigen::Vector3d pc = cam.R * point + cam.t;
    Projection out;
    out.depth = pc.z();
    out.in_front = pc.z() > 0.0;
    if (out.in_front)
    {
        const Eigen::Vector3d h = cam.K * pc;
        out.pixel = Eigen::Vector2d(h.x() / h.z(), h.y() / h.z());
    }
    return out;
}

Eigen::Vector3d unproject(const Camera& cam, const Eigen::Vector2d& pixel, double depth)
{
    const Eigen::Vector3d ray = cam.K_inverse() * Eigen::Vector3d(pixel.x(), pixel.y(), 1.0);
    return cam.R.transpose() * (depth * ray - cam.t);
}

Eigen::Matrix3d homography(const Camera& ref, const Camera& src, double depth)
{
    if (!(depth > 0.0))
        throw std::invalid_argument("homography: depth must be positive, got "
            + std::to_string(depth));
    if (ref.same_pose_and_intrinsics(src))
        return Eigen::Matrix3d::Identity();
    const Eigen::Vector3d baseline = src.center() - ref.center();
    const Eigen::Vector3d n1 = ref.principal_axis();
    const Eigen::Matrix3d plane_term =
        Eigen::Matrix3d::Identity() - (baseline * n1.transpose()) / depth;
    return src.K * src.R * plane_term * ref.R.transpose() * ref.K_inverse();
}

double piecewise_gaussian(double theta_deg, const ViewSelectionParams& p)
{
    const double d = theta_deg - p.theta0;
    const double sigma = theta_deg <= p.theta0 ? p.sigma1 : p.sigma2;
    return std::exp(-d * d / (2.0 * sigma * sigma));
}

double baseline_angle_deg(const Eigen::Vector3d& c_i, const Eigen::Vector3d& c_j,
                          const Eigen::Vector3d& p)
{
    const Eigen::Vector3d u = (c_i - p).normalized();
    const Eigen::Vector3d v = (c_j - p).normalized();
    const double d = std::clamp(u.dot(v), -1.0, 1.0);
    return std::acos(d) * (180.0 / 3.14159265358979323846);
}

double pair_score(const std::vector<SparseTrack>& tracks, const std::vector<Camera>& cams,
                  int i, int j, const ViewSelectionParams& p)
{
    const Eigen::Vector3d ci = cams.at(i).center();
    const Eigen::Vector3d cj = cams.at(j).center();
    double score = 0.0;
    for (const auto& track : tracks)
    {
        const bool sees_i = std::find(track.views.begin(), track.views.end(), i)
            != track.views.end();
        const bool sees_j = std::find(track.views.begin(), track.views.end(), j)
            != track.views.end();
        if (!sees_i || !sees_j)
            continue;
        if ((ci - track.position).norm() < 1e-12 || (cj - track.position).norm() < 1e-12)
            continue; // degenerate track at a camera center
        score += piecewise_gaussian(baseline_angle_deg(ci, cj, track.position), p);
    }
    return score;
}

std::vector<int> select_source_views(int ref_index, const std::vector<Camera>& cams,
                                     const std::vector<SparseTrack>& tracks, int count,
                                     const ViewSelectionParams& p)
{
    if (ref_index < 0 || ref_index >= static_cast<int>(cams.size()))
        throw std::invalid_argument("select_source_views: reference index out of range");
    std::vector<std::pair<double, int>> scored;
    for (int j = 0; j < static_cast<int>(cams.size()); ++j)
    {
        if (j == ref_index)
            continue;
        scored.emplace_back(pair_score(tracks, cams, ref_index, j, p), j);
    }
    if (count > static_cast<int>(scored.size()))
        throw std::invalid_argument("select_source_views: requested " + std::to_string(count)
            + " sources but only " + std::to_string(scored.size()) + " candidates exist");
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first)
            return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<int> out(count);
    for (int k = 0; k < count; ++k)
        out[k] = scored[k].second;
    return out;
}

} // namespace mvs
