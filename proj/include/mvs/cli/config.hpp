// Copyright Contributors to the mvskit Project
// SPDX-License-Identifier: Apache-2.0

#ifndef MVS_CLI_CONFIG_HPP
#define MVS_CLI_CONFIG_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace mvs {

/// Configuration or input-path problem: exit code 1 territory.
struct ValidationError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

/// Every pipeline knob, covering scene synthesis, the network, filtering and
/// evaluation. Loaded from a line-oriented `key = value` file; any key can be
/// overridden with a `--key value` command-line flag. Unknown keys are
/// rejected by name.
struct PipelineConfig
{
    std::string scene_dir = "scene";
    std::string output_dir = "out";
    std::string checkpoint; // empty -> <output_dir>/model.ckpt
    std::uint64_t seed = 7;

    int image_width = 128;
    int image_height = 96;
    int num_cameras = 5;
    int num_spheres = 2;
    bool textureless_patch = false;
    double ring_radius = 6.0;
    double ring_height = 5.0;
    double fov_degrees = 52.0;
    double plane_extent = 6.0;
    int depth_count = 48;

    int n_views = 3;
    std::string feature_channels = "8,8,16,16,16,32,32,32";
    std::string feature_mode = "deep"; // deep | single
    int regularizer_base = 8;
    int refiner_channels = 32;
    std::string cost_metric = "variance"; // variance | mean
    bool refine = true;
    double lambda = 1.0;
    double learning_rate = 1e-3;
    int train_steps = 1000;

    double prob_threshold = 0.8;
    double pixel_threshold = 1.0;
    double rel_depth_threshold = 0.01;
    int min_consistent_views = 3;
    bool count_reference = true;

    double theta0 = 5.0;
    double sigma1 = 1.0;
    double sigma2 = 10.0;

    double distance_cap = 20.0;
    std::string metric_thresholds = "1,2";

    std::string checkpoint_path() const
    {
        return checkpoint.empty() ? output_dir + "/model.ckpt" : checkpoint;
    }

    std::vector<int> feature_channel_list() const;
    std::vector<double> metric_threshold_list() const;

    /// Structural validation independent of any command (extent
    /// divisibility, enum values, positivity).
    void validate() const;
};

/// Parses `key = value` lines ('#' starts a comment). Unknown keys and
/// malformed values name the key and line. parse -> serialize -> parse is a
/// fixed point.
PipelineConfig parse_config(const std::string& text);
PipelineConfig load_config_file(const std::string& path);
std::string serialize_config(const PipelineConfig& cfg);

/// Applies one `--key value` override.
void apply_override(PipelineConfig& cfg, const std::string& key, const std::string& value);

bool operator==(const PipelineConfig& a, const PipelineConfig& b);

} // namespace mvs

#endif
