// Copyright Contributors to the mvskit Project
// SPDX-License-Identifier: Apache-2.0
//
// On-disk formats. All of them are bit-exact under write/read roundtrips at
// their declared precision: PFM and PLY carry little-endian float32, camera
// files carry 17-significant-digit decimal text.

#ifndef MVS_SCENE_FORMATS_HPP
#define MVS_SCENE_FORMATS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "mvs/geometry/camera.hpp"
#include "mvs/post/point_cloud.hpp"
#include "mvs/tensor/tensor.hpp"

namespace mvs {

/// Grayscale PFM ("Pf"), rows stored bottom to top, 32-bit floats. Invalid
/// pixels are stored as 0. scale must be negative (little-endian) on write;
/// big-endian files (positive scale) are byte-swapped on read.
void write_pfm(const std::string& path, const std::vector<float>& data, int width,
               int height, double scale = -1.0);
struct PfmImage
{
    std::vector<float> data; // row 0 = top
    int width = 0;
    int height = 0;
};
PfmImage read_pfm(const std::string& path);

/// Binary little-endian PLY with float x,y,z and uchar red,green,blue.
void write_ply(const std::string& path, const FusedPointCloud& cloud);
FusedPointCloud read_ply(const std::string& path);

/// Binary 8-bit PPM (P6). Tensors are [3,H,W] with values in [0,1].
void write_ppm(const std::string& path, const Tensor<float>& image);
Tensor<float> read_ppm(const std::string& path);

/// Binary 8-bit PGM (P5) masks: 255 valid, 0 invalid.
void write_pgm(const std::string& path, const std::vector<std::uint8_t>& mask, int width,
               int height);
struct PgmImage
{
    std::vector<std::uint8_t> data;
    int width = 0;
    int height = 0;
};
PgmImage read_pgm(const std::string& path);

/// Plain-text camera file:
///   extrinsic        (4 rows of [R|t; 0 0 0 1])
///   intrinsic        (3 rows of K)
///   d_min interval D d_max
/// Values are written with 17 significant digits so the decimal roundtrip is
/// bit-exact. Parse errors name the offending line.
void write_cam(const std::string& path, const Camera& cam, const DepthHypotheses& hyp);
void read_cam(const std::string& path, Camera& cam, DepthHypotheses& hyp);

} // namespace mvs

#endif
