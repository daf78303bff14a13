// Copyright Contributors to the mvskit Project
// SPDX-License-Identifier: Apache-2.0

#ifndef MVS_POST_POINT_CLOUD_HPP
#define MVS_POST_POINT_CLOUD_HPP

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <vector>

namespace mvs {

struct FusedPoint
{
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    std::array<std::uint8_t, 3> color = {0, 0, 0};
    int support = 1; // reference + consistent source views
};

using FusedPointCloud = std::vector<FusedPoint>;

} // namespace mvs

#endif
