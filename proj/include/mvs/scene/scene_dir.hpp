// Copyright Contributors to the mvskit Project
// SPDX-License-Identifier: Apache-2.0

#ifndef MVS_SCENE_SCENE_DIR_HPP
#define MVS_SCENE_SCENE_DIR_HPP

#include <string>

#include "mvs/scene/scene.hpp"

namespace mvs {

/// Scene directory layout (indices zero-based, zero-padded to 8 digits):
///   images/NNNNNNNN.ppm
///   cams/NNNNNNNN_cam.txt
///   depths/NNNNNNNN.pfm      (optional ground truth)
///   masks/NNNNNNNN.pgm       (optional validity masks)
///   tracks.txt               (one line per track: x y z k id_1..id_k)
void save_scene_dir(const SceneBundle& bundle, const std::string& dir);

/// Loads a scene directory. Missing depths/ yields a bundle without ground
/// truth. Image/camera count mismatches are reported with the orphan files.
SceneBundle load_scene_dir(const std::string& dir);

} // namespace mvs

#endif
