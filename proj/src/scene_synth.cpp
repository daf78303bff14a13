// Copyright Contributors to the mvskit Project
// SPDX-License-Identifier: Apache-2.0

#include "mvs/scene/scene.hpp"

#include "mvs/tensor/rng.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mvs {

namespace {

constexpr double kPi = 3.14159265358979323846;

double lattice_value(std::uint64_t seed, std::int64_t x, std::int64_t y, std::int64_t z)
{
    std::uint64_t h = seed;
    h = Rng::hash64(h ^ static_cast<std::uint64_t>(x) * 0x9e3779b97f4a7c15ULL);
    h = Rng::hash64(h ^ static_cast<std::uint64_t>(y) * 0xc2b2ae3d27d4eb4fULL);
    h = Rng::hash64(h ^ static_cast<std::uint64_t>(z) * 0x165667b19e3779f9ULL);
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double smooth(double t)
{
    return t * t * (3.0 - 2.0 * t);
}

// Trilinear lattice value noise in [0,1).
double value_noise(std::uint64_t seed, const Eigen::Vector3d& p)
{
    const double fx = std::floor(p.x()), fy = std::floor(p.y()), fz = std::floor(p.z());
    const auto x0 = static_cast<std::int64_t>(fx);
    const auto y0 = static_cast<std::int64_t>(fy);
    const auto z0 = static_cast<std::int64_t>(fz);
    const double tx = smooth(p.x() - fx);
    const double ty = smooth(p.y() - fy);
    const double tz = smooth(p.z() - fz);
    double acc = 0.0;
    for (int dz = 0; dz <= 1; ++dz)
        for (int dy = 0; dy <= 1; ++dy)
            for (int dx = 0; dx <= 1; ++dx)
            {
                const double w = (dx ? tx : 1.0 - tx) * (dy ? ty : 1.0 - ty)
                    * (dz ? tz : 1.0 - tz);
                acc += w * lattice_value(seed, x0 + dx, y0 + dy, z0 + dz);
            }
    return acc;
}

double fbm(std::uint64_t seed, Eigen::Vector3d p, int octaves)
{
    double acc = 0.0, amp = 1.0, norm = 0.0;
    for (int o = 0; o < octaves; ++o)
    {
        acc += amp * value_noise(seed + 1013 * o, p);
        norm += amp;
        p *= 2.0;
        amp *= 0.5;
    }
    return acc / norm;
}

Eigen::Vector3d texture_color(const SceneModel& model, const Eigen::Vector3d& hit)
{
    const Eigen::Vector3d p = hit * model.texture_frequency;
    const double r = fbm(model.texture_seed + 11, p, 3);
    const double g = fbm(model.texture_seed + 23, p, 3);
    const double b = fbm(model.texture_seed + 37, p, 3);
    return Eigen::Vector3d(0.12 + 0.78 * r, 0.12 + 0.78 * g, 0.12 + 0.78 * b);
}

struct Hit
{
    double depth = std::numeric_limits<double>::infinity();
    Eigen::Vector3d point = Eigen::Vector3d::Zero();
    bool on_plane = false;
    bool valid = false;
};

// Ray X(t) = origin + t * dir with dir scaled so t equals camera depth.
Hit cast_ray(const SceneModel& model, const Eigen::Vector3d& origin,
             const Eigen::Vector3d& dir)
{
    Hit best;
    if (dir.z() != 0.0)
    {
        const double t = -origin.z() / dir.z();
        if (t > 1e-9)
        {
            const Eigen::Vector3d p = origin + t * dir;
            if (std::abs(p.x()) <= model.plane_extent && std::abs(p.y()) <= model.plane_extent
                && t < best.depth)
            {
                best.depth = t;
                best.point = p;
                best.on_plane = true;
                best.valid = true;
            }
        }
    }
    for (const auto& s : model.spheres)
    {
        const Eigen::Vector3d oc = origin - s.center;
        const double a = dir.squaredNorm();
        const double b = 2.0 * dir.dot(oc);
        const double c = oc.squaredNorm() - s.radius * s.radius;
        const double disc = b * b - 4.0 * a * c;
        if (disc < 0.0)
            continue;
        const double sq = std::sqrt(disc);
        for (double t : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)})
        {
            if (t > 1e-9 && t < best.depth)
            {
                best.depth = t;
                best.point = origin + t * dir;
                best.on_plane = false;
                best.valid = true;
            }
        }
    }
    if (!best.valid)
        best.depth = 0.0;
    return best;
}

} // namespace

void SceneSpec::validate() const
{
    if (width <= 0 || width % 32 != 0 || height <= 0 || height % 32 != 0)
        throw std::invalid_argument("scene spec: image extents must be positive multiples "
            "of 32, got " + std::to_string(width) + "x" + std::to_string(height));
    if (num_cameras < 2)
        throw std::invalid_argument("scene spec: need at least 2 cameras");
    if (num_spheres < 1 || num_spheres > 4)
        throw std::invalid_argument("scene spec: num_spheres must be in [1,4]");
    if (depth_count < 2 || depth_count % 8 != 0)
        throw std::invalid_argument("scene spec: depth_count must be a positive multiple "
            "of 8, got " + std::to_string(depth_count));
    if (!(ring_radius > 0.0) || !(ring_height > 0.0) || !(plane_extent > 0.0))
        throw std::invalid_argument("scene spec: rig and plane dimensions must be positive");
    if (!(fov_degrees > 5.0) || !(fov_degrees < 150.0))
        throw std::invalid_argument("scene spec: fov_degrees out of range");
}

SceneModel build_scene_model(const SceneSpec& spec)
{
    spec.validate();
    SceneModel model;
    model.plane_extent = spec.plane_extent;
    model.texture_seed = spec.seed * 0x9e3779b97f4a7c15ULL + 1;
    model.textureless_patch = spec.textureless_patch;
    const double e = spec.plane_extent;
    model.patch = Eigen::AlignedBox2d(Eigen::Vector2d(0.15 * e, -0.25 * e),
                                      Eigen::Vector2d(0.55 * e, 0.25 * e));
    Rng rng(spec.seed);
    for (int i = 0; i < spec.num_spheres; ++i)
    {
        Sphere s;
        s.radius = rng.uniform(0.6, 1.2);
        const double angle = rng.uniform(0.0, 2.0 * kPi);
        const double dist = rng.uniform(0.2, 0.45) * e;
        s.center = Eigen::Vector3d(dist * std::cos(angle), dist * std::sin(angle), s.radius);
        model.spheres.push_back(s);
    }
    return model;
}

Camera ring_camera(const SceneSpec& spec, int index)
{
    const double angle = 2.0 * kPi * index / spec.num_cameras;
    const Eigen::Vector3d center(spec.look_at.x() + spec.ring_radius * std::cos(angle),
                                 spec.look_at.y() + spec.ring_radius * std::sin(angle),
                                 spec.look_at.z() + spec.ring_height);
    const Eigen::Vector3d forward = (spec.look_at - center).normalized();
    const Eigen::Vector3d up(0.0, 0.0, 1.0);
    Eigen::Vector3d x_cam = forward.cross(up);
    if (x_cam.norm() < 1e-9)
        x_cam = Eigen::Vector3d(1.0, 0.0, 0.0);
    x_cam.normalize();
    const Eigen::Vector3d y_cam = forward.cross(x_cam); // points world-down

    Camera cam;
    cam.R.row(0) = x_cam.transpose();
    cam.R.row(1) = y_cam.transpose();
    cam.R.row(2) = forward.transpose();
    cam.t = -cam.R * center;
    const double f = (spec.width / 2.0) / std::tan(spec.fov_degrees * kPi / 360.0);
    cam.K << f, 0.0, (spec.width - 1) / 2.0, 0.0, f, (spec.height - 1) / 2.0, 0.0, 0.0, 1.0;
    return cam;
}

double trace_depth(const SceneModel& model, const Camera& cam, const Eigen::Vector2d& pixel)
{
    const Eigen::Vector3d dir =
        cam.R.transpose() * cam.K_inverse() * Eigen::Vector3d(pixel.x(), pixel.y(), 1.0);
    return cast_ray(model, cam.center(), dir).depth;
}

RenderedView render_view(const SceneModel& model, const Camera& cam, int width, int height)
{
    RenderedView out;
    const std::int64_t npix = static_cast<std::int64_t>(width) * height;
    out.image.assign(3 * npix, 0.0f);
    out.depth.assign(npix, 0.0);
    out.mask.assign(npix, 0);

    const Eigen::Vector3d origin = cam.center();
    const Eigen::Matrix3d ray_mat = cam.R.transpose() * cam.K_inverse();
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
        {
            const Eigen::Vector3d dir =
                ray_mat * Eigen::Vector3d(static_cast<double>(x), static_cast<double>(y), 1.0);
            const Hit hit = cast_ray(model, origin, dir);
            const std::int64_t i = static_cast<std::int64_t>(y) * width + x;
            if (!hit.valid)
                continue;
            out.depth[i] = hit.depth;
            out.mask[i] = 255;
            Eigen::Vector3d color;
            if (model.textureless_patch && hit.on_plane
                && model.patch.contains(Eigen::Vector2d(hit.point.x(), hit.point.y())))
                color = Eigen::Vector3d(0.5, 0.5, 0.5);
            else
                color = texture_color(model, hit.point);
            out.image[i] = static_cast<float>(color.x());
            out.image[npix + i] = static_cast<float>(color.y());
            out.image[2 * npix + i] = static_cast<float>(color.z());
        }
    return out;
}

SceneBundle generate_scene(const SceneSpec& spec)
{
    spec.validate();
    const SceneModel model = build_scene_model(spec);

    SceneBundle bundle;
    bundle.width = spec.width;
    bundle.height = spec.height;
    const std::int64_t npix = static_cast<std::int64_t>(spec.width) * spec.height;

    std::vector<RenderedView> rendered;
    for (int v = 0; v < spec.num_cameras; ++v)
    {
        Camera cam = ring_camera(spec, v);
        RenderedView rv = render_view(model, cam, spec.width, spec.height);

        double lo = std::numeric_limits<double>::infinity();
        double hi = 0.0;
        for (std::int64_t i = 0; i < npix; ++i)
            if (rv.mask[i])
            {
                lo = std::min(lo, rv.depth[i]);
                hi = std::max(hi, rv.depth[i]);
            }
        if (!(hi > 0.0))
            throw std::runtime_error("scene: camera " + std::to_string(v)
                + " sees no surface");
        cam.d_min = lo * 0.95;
        cam.d_max = hi * 1.05;

        View view;
        view.cam = cam;
        view.hyp.d_min = cam.d_min;
        view.hyp.count = spec.depth_count;
        view.hyp.interval = (cam.d_max - cam.d_min) / (spec.depth_count - 1);
        view.image = Tensor<float>::from_data({3, spec.height, spec.width}, rv.image);
        bundle.views.push_back(std::move(view));
        bundle.gt_depth.push_back(rv.depth);
        bundle.gt_mask.push_back(rv.mask);
        rendered.push_back(std::move(rv));
    }

    // Sparse tracks: subsampled surface points with occlusion-tested
    // visibility; every ~16th valid pixel of view 0, sparser for the rest.
    auto visible_in = [&](const Eigen::Vector3d& point, int v) {
        const auto proj = project(bundle.views[v].cam, point);
        if (!proj.in_front)
            return false;
        const int px = static_cast<int>(std::lround(proj.pixel.x()));
        const int py = static_cast<int>(std::lround(proj.pixel.y()));
        if (px < 0 || px >= spec.width || py < 0 || py >= spec.height)
            return false;
        const std::int64_t i = static_cast<std::int64_t>(py) * spec.width + px;
        if (!rendered[v].mask[i])
            return false;
        return std::abs(rendered[v].depth[i] - proj.depth) < 0.005 * proj.depth;
    };
    for (int v = 0; v < spec.num_cameras; ++v)
    {
        const int stride = v == 0 ? 16 : 64;
        std::int64_t valid_counter = 0;
        for (std::int64_t i = 0; i < npix; ++i)
        {
            if (!rendered[v].mask[i])
                continue;
            if (valid_counter++ % stride != 0)
                continue;
            const int x = static_cast<int>(i % spec.width);
            const int y = static_cast<int>(i / spec.width);
            const Eigen::Vector3d point = unproject(bundle.views[v].cam,
                                                    Eigen::Vector2d(x, y),
                                                    rendered[v].depth[i]);
            SparseTrack track;
            track.position = point;
            for (int j = 0; j < spec.num_cameras; ++j)
                if (visible_in(point, j))
                    track.views.push_back(j);
            if (track.views.size() >= 2)
                bundle.tracks.push_back(std::move(track));
        }
    }
    return bundle;
}

} // namespace mvs
