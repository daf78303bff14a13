// Copyright Contributors to the mvskit Project
// SPDX-License-Identifier: Apache-2.0

#ifndef MVS_GEOMETRY_VIEW_GEOMETRY_HPP
#define MVS_GEOMETRY_VIEW_GEOMETRY_HPP

#include "mvs/geometry/camera.hpp"

namespace mvs {

/// Homography induced by the reference fronto-parallel plane at depth d,
/// mapping reference pixels to source pixels:
///
///   H(d) = K_src * R_src * (I - (c_src - c_ref) * n_ref^T / d) * R_ref^T * K_ref^-1
///
/// with camera centers c = -R^T t and n_ref the reference principal axis.
/// For src == ref the result is the exact identity. Validated against
/// unproject-then-project; see geometry tests.
Eigen::Matrix3d homography(const Camera& ref, const Camera& src, double depth);

/// Piecewise Gaussian scoring of a baseline angle (degrees): peak 1 at
/// theta0, falling off with sigma1 below and sigma2 above.
double piecewise_gaussian(double theta_deg, const ViewSelectionParams& p);

/// Baseline angle (degrees) at point p between the rays to two camera
/// centers; vectors are normalized before the arccos.
double baseline_angle_deg(const Eigen::Vector3d& c_i, const Eigen::Vector3d& c_j,
                          const Eigen::Vector3d& p);

/// Sum of piecewise-Gaussian scores over the tracks common to views i and j.
/// Tracks coincident with either camera center are skipped. Symmetric in i, j.
double pair_score(const std::vector<SparseTrack>& tracks, const std::vector<Camera>& cams,
                  int i, int j, const ViewSelectionParams& p);

/// The `count` highest-scoring source views for the reference, ordered by
/// descending score; ties broken by lower view index.
std::vector<int> select_source_views(int ref_index, const std::vector<Camera>& cams,
                                     const std::vector<SparseTrack>& tracks, int count,
                                     const ViewSelectionParams& p);

} // namespace mvs

#endif
