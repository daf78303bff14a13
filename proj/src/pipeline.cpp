// Copyright Contributors to the mvskit Project
// SPDX-License-Identifier: Apache-2.0

#include "mvs/cli/pipeline.hpp"

#include "mvs/eval/metrics.hpp"
#include "mvs/net/checkpoint.hpp"
#include "mvs/net/dataset.hpp"
#include "mvs/net/train.hpp"
#include "mvs/post/postprocess.hpp"
#include "mvs/scene/formats.hpp"
#include "mvs/scene/scene_dir.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

namespace fs = std::filesystem;

namespace mvs {

namespace {

std::string view_id(int index)
{
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%08d", index);
    return buf;
}

NetworkConfig network_config(const PipelineConfig& cfg)
{
    NetworkConfig net;
    net.feature.single_layer_baseline = cfg.feature_mode == "single";
    if (!net.feature.single_layer_baseline)
    {
        net.feature.channels = cfg.feature_channel_list();
        net.feature.strides = {1, 1, 2, 1, 1, 2, 1, 1};
        net.feature.kernels = {3, 3, 5, 3, 3, 5, 3, 3};
    }
    net.regularizer.base_channels = cfg.regularizer_base;
    net.refiner.channels = cfg.refiner_channels;
    net.cost_metric = cfg.cost_metric == "mean" ? CostMetric::Mean : CostMetric::Variance;
    net.refinement_enabled = cfg.refine;
    return net;
}

FilterConfig filter_config(const PipelineConfig& cfg)
{
    FilterConfig f;
    f.prob_threshold = cfg.prob_threshold;
    f.pixel_threshold = cfg.pixel_threshold;
    f.rel_depth_threshold = cfg.rel_depth_threshold;
    f.min_consistent_views = cfg.min_consistent_views;
    f.count_reference = cfg.count_reference;
    return f;
}

ViewSelectionParams selection_params(const PipelineConfig& cfg)
{
    return ViewSelectionParams{cfg.theta0, cfg.sigma1, cfg.sigma2};
}

SceneBundle load_scene_checked(const PipelineConfig& cfg, bool need_gt)
{
    if (!fs::exists(cfg.scene_dir))
        throw ValidationError("scene_dir '" + cfg.scene_dir + "' does not exist");
    SceneBundle bundle = load_scene_dir(cfg.scene_dir);
    if (need_gt && !bundle.has_gt())
        throw ValidationError("scene_dir '" + cfg.scene_dir
            + "' has no ground-truth depths (depths/ missing)");
    return bundle;
}

MvsNet<float> load_model(const PipelineConfig& cfg)
{
    const std::string path = cfg.checkpoint_path();
    if (!fs::exists(path))
        throw ValidationError("checkpoint '" + path + "' does not exist");
    MvsNet<float> model(network_config(cfg));
    model.init_params(cfg.seed);
    load_checkpoint(path, model);
    return model;
}

Tensor<float> quarter_color(const Tensor<float>& image)
{
    const int h = image.shape()[1] / 4, w = image.shape()[2] / 4;
    const std::int64_t full = static_cast<std::int64_t>(image.shape()[1]) * image.shape()[2];
    Tensor<float> out = Tensor<float>::zeros({3, h, w});
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                out.data()[(static_cast<std::int64_t>(c) * h + y) * w + x] =
                    image.data()[c * full
                                 + static_cast<std::int64_t>(4 * y) * image.shape()[2]
                                 + 4 * x];
    return out;
}

std::vector<float> tensor_to_vec(const Tensor<float>& t)
{
    return t.data();
}

Tensor<float> pfm_to_tensor(const PfmImage& img)
{
    return Tensor<float>::from_data({img.height, img.width}, img.data);
}

} // namespace

void run_synth(const PipelineConfig& cfg, std::ostream& log)
{
    cfg.validate();
    SceneSpec spec;
    spec.seed = cfg.seed;
    spec.width = cfg.image_width;
    spec.height = cfg.image_height;
    spec.num_cameras = cfg.num_cameras;
    spec.ring_radius = cfg.ring_radius;
    spec.ring_height = cfg.ring_height;
    spec.fov_degrees = cfg.fov_degrees;
    spec.num_spheres = cfg.num_spheres;
    spec.textureless_patch = cfg.textureless_patch;
    spec.plane_extent = cfg.plane_extent;
    spec.depth_count = cfg.depth_count;
    const SceneBundle bundle = generate_scene(spec);
    save_scene_dir(bundle, cfg.scene_dir);
    log << "synth: wrote " << bundle.views.size() << " views (" << cfg.image_width << "x"
        << cfg.image_height << ", " << bundle.tracks.size() << " tracks) to "
        << cfg.scene_dir << "\n";
}

void run_train(const PipelineConfig& cfg, std::ostream& log)
{
    cfg.validate();
    const SceneBundle bundle = load_scene_checked(cfg, true);
    int dropped = 0;
    const auto samples =
        build_samples<float>(bundle, cfg.n_views, selection_params(cfg), {}, &dropped);
    if (dropped > 0)
        log << "train: dropped " << dropped << " sample(s) with empty masks\n";
    if (samples.empty())
        throw ValidationError("scene_dir '" + cfg.scene_dir
            + "' yields no usable training samples");

    MvsNet<float> model(network_config(cfg));
    TrainConfig tc;
    tc.lambda = cfg.lambda;
    tc.n_views = cfg.n_views;
    tc.iterations = cfg.train_steps;
    tc.learning_rate = cfg.learning_rate;
    tc.seed = cfg.seed;
    tc.log_every = std::max(1, cfg.train_steps / 10);
    const TrainResult result = train(model, samples, tc, log);

    fs::create_directories(cfg.output_dir);
    save_checkpoint(cfg.checkpoint_path(), model);
    std::ofstream history(cfg.output_dir + "/loss_history.txt");
    char buf[40];
    for (double v : result.loss_history)
    {
        std::snprintf(buf, sizeof(buf), "%.17g\n", v);
        history << buf;
    }
    log << "train: " << result.loss_history.size() << " steps, final loss "
        << (result.loss_history.empty() ? 0.0 : result.loss_history.back()) << ", checkpoint "
        << cfg.checkpoint_path() << "\n";
}

void run_infer(const PipelineConfig& cfg, std::ostream& log)
{
    cfg.validate();
    const SceneBundle bundle = load_scene_checked(cfg, false);
    MvsNet<float> model = load_model(cfg);
    if (cfg.n_views > static_cast<int>(bundle.views.size()))
        throw ValidationError("n_views exceeds the number of views in '" + cfg.scene_dir
            + "'");

    std::vector<Camera> cams;
    for (const auto& v : bundle.views)
        cams.push_back(v.cam);

    fs::create_directories(cfg.output_dir + "/depths_est");
    fs::create_directories(cfg.output_dir + "/conf");
    for (int r = 0; r < static_cast<int>(bundle.views.size()); ++r)
    {
        std::vector<Tensor<float>> images = {bundle.views[r].image};
        std::vector<Camera> view_cams = {cams[r]};
        for (int j : select_source_views(r, cams, bundle.tracks, cfg.n_views - 1,
                                         selection_params(cfg)))
        {
            images.push_back(bundle.views[j].image);
            view_cams.push_back(cams[j]);
        }
        const auto out = infer(model, images, view_cams, bundle.views[r].hyp);
        const auto conf = confidence_map(out.prob_volume, bundle.views[r].hyp,
                                         out.refined_depth);
        const int h = out.refined_depth.shape()[0], w = out.refined_depth.shape()[1];
        write_pfm(cfg.output_dir + "/depths_est/" + view_id(r) + ".pfm",
                  tensor_to_vec(out.refined_depth), w, h);
        write_pfm(cfg.output_dir + "/conf/" + view_id(r) + ".pfm", tensor_to_vec(conf), w, h);
        log << "infer: view " << r << " done (" << images.size() << " views)\n";
    }
}

void run_filter(const PipelineConfig& cfg, std::ostream& log)
{
    cfg.validate();
    const std::string est = cfg.output_dir + "/depths_est";
    const std::string conf_dir = cfg.output_dir + "/conf";
    if (!fs::exists(est) || !fs::exists(conf_dir))
        throw ValidationError("'" + est + "' or '" + conf_dir
            + "' missing; run the infer stage first");
    fs::create_directories(cfg.output_dir + "/depths_filtered");
    const FilterConfig fc = filter_config(cfg);
    int count = 0;
    for (int r = 0;; ++r)
    {
        const std::string depth_path = est + "/" + view_id(r) + ".pfm";
        if (!fs::exists(depth_path))
            break;
        const auto depth = pfm_to_tensor(read_pfm(depth_path));
        const auto conf = pfm_to_tensor(read_pfm(conf_dir + "/" + view_id(r) + ".pfm"));
        const auto filtered = photometric_filter(depth, conf, fc);
        write_pfm(cfg.output_dir + "/depths_filtered/" + view_id(r) + ".pfm",
                  filtered.data(), filtered.shape()[1], filtered.shape()[0]);
        ++count;
    }
    if (count == 0)
        throw ValidationError("'" + est + "' holds no depth maps");
    log << "filter: photometric filtering done for " << count << " views (threshold "
        << cfg.prob_threshold << ")\n";
}

void run_fuse(const PipelineConfig& cfg, std::ostream& log)
{
    cfg.validate();
    const SceneBundle bundle = load_scene_checked(cfg, false);
    const std::string filtered_dir = cfg.output_dir + "/depths_filtered";
    const std::string est_dir = cfg.output_dir + "/depths_est";
    const std::string depth_dir = fs::exists(filtered_dir) ? filtered_dir : est_dir;
    const std::string conf_dir = cfg.output_dir + "/conf";
    if (!fs::exists(depth_dir) || !fs::exists(conf_dir))
        throw ValidationError("'" + depth_dir
            + "' missing; run the infer (and filter) stages first");

    std::vector<FusionView> views;
    for (int r = 0; r < static_cast<int>(bundle.views.size()); ++r)
    {
        const std::string depth_path = depth_dir + "/" + view_id(r) + ".pfm";
        if (!fs::exists(depth_path))
            throw ValidationError("'" + depth_path + "' missing for view "
                + std::to_string(r));
        FusionView v;
        v.depth = pfm_to_tensor(read_pfm(depth_path));
        v.conf = pfm_to_tensor(read_pfm(conf_dir + "/" + view_id(r) + ".pfm"));
        v.cam = bundle.views[r].cam.scaled(0.25);
        v.color = quarter_color(bundle.views[r].image);
        views.push_back(std::move(v));
    }
    const auto cloud = fuse(views, filter_config(cfg), log);
    fs::create_directories(cfg.output_dir);
    write_ply(cfg.output_dir + "/fused.ply", cloud);
    log << "fuse: " << cloud.size() << " points -> " << cfg.output_dir << "/fused.ply\n";
}

void run_eval(const PipelineConfig& cfg, std::ostream& log)
{
    cfg.validate();
    const std::string ply = cfg.output_dir + "/fused.ply";
    if (!fs::exists(ply))
        throw ValidationError("'" + ply + "' missing; run the fuse stage first");
    const SceneBundle bundle = load_scene_checked(cfg, true);

    std::vector<Eigen::Vector3d> recon;
    for (const auto& p : read_ply(ply))
        recon.push_back(p.position);

    // ground-truth cloud: unproject every 4th pixel, matching the
    // resolution the depth maps were inferred at; coordinates are snapped to
    // the float32 grid the PLY format stores, so equal clouds compare equal
    std::vector<Eigen::Vector3d> gt;
    for (std::size_t v = 0; v < bundle.views.size(); ++v)
        for (int y = 0; y < bundle.height; y += 4)
            for (int x = 0; x < bundle.width; x += 4)
            {
                const std::size_t i = static_cast<std::size_t>(y) * bundle.width + x;
                if (!bundle.gt_mask[v][i])
                    continue;
                const Eigen::Vector3d p = unproject(bundle.views[v].cam,
                                                    Eigen::Vector2d(x, y),
                                                    bundle.gt_depth[v][i]);
                gt.emplace_back(static_cast<float>(p.x()), static_cast<float>(p.y()),
                                static_cast<float>(p.z()));
            }
    if (recon.empty())
        throw std::runtime_error("eval: the fused cloud is empty");
    if (gt.empty())
        throw std::runtime_error("eval: the ground-truth cloud is empty");

    const MetricReport report =
        evaluate_clouds(recon, gt, cfg.distance_cap, cfg.metric_threshold_list());
    fs::create_directories(cfg.output_dir);
    std::ofstream table(cfg.output_dir + "/metrics.txt");
    table << report_table(report);
    std::ofstream kv(cfg.output_dir + "/metrics.kv");
    kv << report_kv(report);
    log << "eval: overall " << report.overall << " (" << recon.size() << " recon / "
        << gt.size() << " gt points) -> " << cfg.output_dir << "/metrics.txt\n";
}

int run_command(const std::string& command, const PipelineConfig& cfg, std::ostream& log)
{
    try
    {
        if (command == "synth")
            run_synth(cfg, log);
        else if (command == "train")
            run_train(cfg, log);
        else if (command == "infer")
            run_infer(cfg, log);
        else if (command == "filter")
            run_filter(cfg, log);
        else if (command == "fuse")
            run_fuse(cfg, log);
        else if (command == "eval")
            run_eval(cfg, log);
        else if (command == "pipeline")
        {
            run_synth(cfg, log);
            run_train(cfg, log);
            run_infer(cfg, log);
            run_filter(cfg, log);
            run_fuse(cfg, log);
            run_eval(cfg, log);
        }
        else
        {
            log << "error: unknown command '" << command << "'\n";
            return 1;
        }
    }
    catch (const ValidationError& e)
    {
        log << "error: " << e.what() << "\n";
        return 1;
    }
    catch (const std::invalid_argument& e)
    {
        log << "error: " << e.what() << "\n";
        return 1;
    }
    catch (const std::exception& e)
    {
        log << "failure: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

} // namespace mvs
