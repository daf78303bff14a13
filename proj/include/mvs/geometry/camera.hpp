// Copyright Contributors to the mvskit Project
// SPDX-License-Identifier: Apache-2.0

#ifndef MVS_GEOMETRY_CAMERA_HPP
#define MVS_GEOMETRY_CAMERA_HPP

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <vector>

namespace mvs {

/// Pinhole camera: pixel ~ K * (R * X + t), zero skew, x right / y down /
/// z forward. Pixel (i,j) has coordinate (i,j) (pixel-center convention,
/// no half-pixel offset). depth_range bounds the scene along the principal
/// axis in scene units.
struct Camera
{
    Eigen::Matrix3d K = Eigen::Matrix3d::Identity();
    Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
    Eigen::Vector3d t = Eigen::Vector3d::Zero();
    double d_min = 1.0;
    double d_max = 2.0;

    Eigen::Vector3d center() const { return -R.transpose() * t; }

    /// Unit principal axis in world coordinates (third row of R).
    Eigen::Vector3d principal_axis() const { return R.row(2).transpose(); }

    /// Closed-form inverse of the zero-skew intrinsics.
    Eigen::Matrix3d K_inverse() const;

    /// Camera for an image downscaled by `s` (fx, fy, cx, cy all scaled).
    Camera scaled(double s) const;

    /// Throws std::invalid_argument when R is not a proper rotation
    /// (RtR = I within 1e-9, det = +1), focal lengths are not positive,
    /// or the depth range is empty or non-positive.
    void validate() const;

    bool same_pose_and_intrinsics(const Camera& other) const;
};

/// Uniform depth sampling d_min + k * interval, k = 0..count-1.
struct DepthHypotheses
{
    double d_min = 0.0;
    double interval = 1.0;
    int count = 1;

    double d_max() const { return d_min + interval * (count - 1); }
    std::vector<double> samples() const;
    void validate() const;
};

struct Projection
{
    Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
    double depth = 0.0;
    bool in_front = false; // depth > 0; callers must check before using pixel
};

/// Projects a world point; depth is the z-coordinate in the camera frame.
Projection project(const Camera& cam, const Eigen::Vector3d& point);

/// Inverse of project: the world point at `depth` along the pixel ray.
Eigen::Vector3d unproject(const Camera& cam, const Eigen::Vector2d& pixel, double depth);

struct SparseTrack
{
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    std::vector<int> views; // indices of observing views, size >= 2
};

struct ViewSelectionParams
{
    double theta0 = 5.0;  // preferred baseline angle, degrees
    double sigma1 = 1.0;  // spread below theta0
    double sigma2 = 10.0; // spread above theta0
};

} // namespace mvs

#endif
