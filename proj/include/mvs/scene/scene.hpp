// Copyright Contributors to the mvskit Project
// SPDX-License-Identifier: Apache-2.0

#ifndef MVS_SCENE_SCENE_HPP
#define MVS_SCENE_SCENE_HPP

#include <cstdint>
#include <vector>

#include "mvs/geometry/camera.hpp"
#include "mvs/tensor/tensor.hpp"

namespace mvs {

/// Procedural scene description. Rendering is deterministic per seed and the
/// ground-truth depths are analytic (plane/sphere intersections), so every
/// valid pixel carries an exact depth.
struct SceneSpec
{
    std::uint64_t seed = 7;
    int width = 128;   // multiple of 32
    int height = 96;   // multiple of 32
    int num_cameras = 5;
    double ring_radius = 6.0;
    double ring_height = 5.0;
    Eigen::Vector3d look_at = Eigen::Vector3d(0.0, 0.0, 0.5);
    double fov_degrees = 52.0;
    int num_spheres = 2; // 1..4
    bool textureless_patch = false;
    double plane_extent = 6.0; // ground plane half-size
    int depth_count = 48;      // hypotheses written to the camera files

    void validate() const;
};

struct Sphere
{
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    double radius = 1.0;
};

/// Geometry plus texture parameters, resolved from a SceneSpec.
struct SceneModel
{
    double plane_extent = 6.0; // ground plane z = 0, |x|,|y| <= extent
    std::vector<Sphere> spheres;
    std::uint64_t texture_seed = 0;
    double texture_frequency = 0.9;
    bool textureless_patch = false;
    Eigen::AlignedBox2d patch; // on-plane rectangle rendered flat gray
};

struct RenderedView
{
    std::vector<float> image;  // [3,H,W] row-major planes
    std::vector<double> depth; // exact hit depth, 0 where no surface
    std::vector<std::uint8_t> mask; // 255 valid, 0 invalid
};

struct View
{
    Tensor<float> image; // [3,H,W]
    Camera cam;
    DepthHypotheses hyp;
};

struct SceneBundle
{
    int width = 0;
    int height = 0;
    std::vector<View> views;
    std::vector<std::vector<double>> gt_depth;        // per view, empty if absent
    std::vector<std::vector<std::uint8_t>> gt_mask;   // 255 valid
    std::vector<SparseTrack> tracks;

    bool has_gt() const { return !gt_depth.empty(); }
};

SceneModel build_scene_model(const SceneSpec& spec);

/// Camera on the rig ring at index i of spec.num_cameras, looking at
/// spec.look_at. Depth range is filled in by generate_scene.
Camera ring_camera(const SceneSpec& spec, int index);

/// First-hit ray casting of the model; colors come from a solid value-noise
/// texture evaluated at the hit point, so co-visible pixels agree exactly.
RenderedView render_view(const SceneModel& model, const Camera& cam, int width, int height);

/// Exact first-hit depth along the ray through a (possibly fractional)
/// pixel; 0 when the ray misses every surface.
double trace_depth(const SceneModel& model, const Camera& cam, const Eigen::Vector2d& pixel);

/// Full bundle: rendered views, exact depths and masks, per-camera depth
/// ranges with uniform hypotheses, and sparse surface tracks with
/// occlusion-tested visibility.
SceneBundle generate_scene(const SceneSpec& spec);

} // namespace mvs

#endif
