// Copyright Contributors to the mvskit Project
// SPDX-License-Identifier: Apache-2.0

#include "mvs/cli/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

namespace mvs {

namespace {

std::string trim(const std::string& s)
{
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos)
        return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

long long parse_int(const std::string& key, const std::string& value)
{
    char* end = nullptr;
    const long long v = std::strtoll(value.c_str(), &end, 10);
    if (end == value.c_str() || *end != '\0')
        throw ValidationError("config key '" + key + "': expected an integer, got '" + value
            + "'");
    return v;
}

double parse_double(const std::string& key, const std::string& value)
{
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0')
        throw ValidationError("config key '" + key + "': expected a number, got '" + value
            + "'");
    return v;
}

bool parse_bool(const std::string& key, const std::string& value)
{
    if (value == "true" || value == "1")
        return true;
    if (value == "false" || value == "0")
        return false;
    throw ValidationError("config key '" + key + "': expected true/false, got '" + value
        + "'");
}

std::string format_double(double v)
{
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct KeyDef
{
    const char* name;
    std::function<void(PipelineConfig&, const std::string&)> set;
    std::function<std::string(const PipelineConfig&)> get;
};

#define MVS_STR_KEY(field) \
    KeyDef{#field, [](PipelineConfig& c, const std::string& v) { c.field = v; }, \
           [](const PipelineConfig& c) { return c.field; }}
#define MVS_INT_KEY(field) \
    KeyDef{#field, \
           [](PipelineConfig& c, const std::string& v) { \
               c.field = static_cast<int>(parse_int(#field, v)); \
           }, \
           [](const PipelineConfig& c) { return std::to_string(c.field); }}
#define MVS_DBL_KEY(field) \
    KeyDef{#field, \
           [](PipelineConfig& c, const std::string& v) { c.field = parse_double(#field, v); }, \
           [](const PipelineConfig& c) { return format_double(c.field); }}
#define MVS_BOOL_KEY(field) \
    KeyDef{#field, \
           [](PipelineConfig& c, const std::string& v) { c.field = parse_bool(#field, v); }, \
           [](const PipelineConfig& c) { return c.field ? "true" : "false"; }}

const std::vector<KeyDef>& key_table()
{
    static const std::vector<KeyDef> keys = {
        MVS_STR_KEY(scene_dir),
        MVS_STR_KEY(output_dir),
        MVS_STR_KEY(checkpoint),
        KeyDef{"seed",
               [](PipelineConfig& c, const std::string& v) {
                   c.seed = static_cast<std::uint64_t>(parse_int("seed", v));
               },
               [](const PipelineConfig& c) { return std::to_string(c.seed); }},
        MVS_INT_KEY(image_width),
        MVS_INT_KEY(image_height),
        MVS_INT_KEY(num_cameras),
        MVS_INT_KEY(num_spheres),
        MVS_BOOL_KEY(textureless_patch),
        MVS_DBL_KEY(ring_radius),
        MVS_DBL_KEY(ring_height),
        MVS_DBL_KEY(fov_degrees),
        MVS_DBL_KEY(plane_extent),
        MVS_INT_KEY(depth_count),
        MVS_INT_KEY(n_views),
        MVS_STR_KEY(feature_channels),
        MVS_STR_KEY(feature_mode),
        MVS_INT_KEY(regularizer_base),
        MVS_INT_KEY(refiner_channels),
        MVS_STR_KEY(cost_metric),
        MVS_BOOL_KEY(refine),
        MVS_DBL_KEY(lambda),
        MVS_DBL_KEY(learning_rate),
        MVS_INT_KEY(train_steps),
        MVS_DBL_KEY(prob_threshold),
        MVS_DBL_KEY(pixel_threshold),
        MVS_DBL_KEY(rel_depth_threshold),
        MVS_INT_KEY(min_consistent_views),
        MVS_BOOL_KEY(count_reference),
        MVS_DBL_KEY(theta0),
        MVS_DBL_KEY(sigma1),
        MVS_DBL_KEY(sigma2),
        MVS_DBL_KEY(distance_cap),
        MVS_STR_KEY(metric_thresholds),
    };
    return keys;
}

#undef MVS_STR_KEY
#undef MVS_INT_KEY
#undef MVS_DBL_KEY
#undef MVS_BOOL_KEY

const KeyDef* find_key(const std::string& name)
{
    for (const auto& k : key_table())
        if (name == k.name)
            return &k;
    return nullptr;
}

std::vector<std::string> split_commas(const std::string& s)
{
    std::vector<std::string> out;
    std::string token;
    std::istringstream is(s);
    while (std::getline(is, token, ','))
        out.push_back(trim(token));
    return out;
}

} // namespace

std::vector<int> PipelineConfig::feature_channel_list() const
{
    std::vector<int> out;
    for (const auto& tok : split_commas(feature_channels))
        out.push_back(static_cast<int>(parse_int("feature_channels", tok)));
    return out;
}

std::vector<double> PipelineConfig::metric_threshold_list() const
{
    std::vector<double> out;
    for (const auto& tok : split_commas(metric_thresholds))
        out.push_back(parse_double("metric_thresholds", tok));
    return out;
}

void PipelineConfig::validate() const
{
    if (image_width <= 0 || image_width % 32 != 0)
        throw ValidationError("config key 'image_width': " + std::to_string(image_width)
            + " is not a positive multiple of 32");
    if (image_height <= 0 || image_height % 32 != 0)
        throw ValidationError("config key 'image_height': " + std::to_string(image_height)
            + " is not a positive multiple of 32");
    if (depth_count < 8 || depth_count % 8 != 0)
        throw ValidationError("config key 'depth_count': " + std::to_string(depth_count)
            + " is not a positive multiple of 8");
    if (n_views < 2)
        throw ValidationError("config key 'n_views': must be at least 2");
    if (n_views > num_cameras)
        throw ValidationError("config key 'n_views': " + std::to_string(n_views)
            + " exceeds num_cameras = " + std::to_string(num_cameras));
    if (feature_mode != "deep" && feature_mode != "single")
        throw ValidationError("config key 'feature_mode': expected deep|single, got '"
            + feature_mode + "'");
    if (cost_metric != "variance" && cost_metric != "mean")
        throw ValidationError("config key 'cost_metric': expected variance|mean, got '"
            + cost_metric + "'");
    if (lambda < 0.0)
        throw ValidationError("config key 'lambda': must be >= 0");
    if (train_steps < 1)
        throw ValidationError("config key 'train_steps': must be positive");
    if (!(learning_rate > 0.0))
        throw ValidationError("config key 'learning_rate': must be positive");
    if (!(prob_threshold > 0.0) || !(pixel_threshold > 0.0) || !(rel_depth_threshold > 0.0))
        throw ValidationError("config: filter thresholds must be positive");
    if (min_consistent_views < 2)
        throw ValidationError("config key 'min_consistent_views': must be >= 2");
    if (!(sigma1 > 0.0) || !(sigma2 > 0.0))
        throw ValidationError("config: sigma1 and sigma2 must be positive");
    if (!(distance_cap > 0.0))
        throw ValidationError("config key 'distance_cap': must be positive");
    const auto channels = feature_channel_list();
    if (feature_mode == "deep" && channels.size() != 8)
        throw ValidationError("config key 'feature_channels': expected 8 entries, got "
            + std::to_string(channels.size()));
    for (int c : channels)
        if (c < 1)
            throw ValidationError("config key 'feature_channels': entries must be positive");
    if (regularizer_base < 1 || refiner_channels < 1)
        throw ValidationError("config: network channel counts must be positive");
    for (double t : metric_threshold_list())
        if (!(t > 0.0))
            throw ValidationError("config key 'metric_thresholds': entries must be positive");
}

void apply_override(PipelineConfig& cfg, const std::string& key, const std::string& value)
{
    const KeyDef* def = find_key(key);
    if (!def)
        throw ValidationError("unknown config key '" + key + "'");
    def->set(cfg, value);
}

PipelineConfig parse_config(const std::string& text)
{
    PipelineConfig cfg;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line))
    {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        const std::string stripped = trim(line);
        if (stripped.empty())
            continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ValidationError("config line " + std::to_string(line_no)
                + ": expected 'key = value', got '" + stripped + "'");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty())
            throw ValidationError("config line " + std::to_string(line_no) + ": empty key");
        apply_override(cfg, key, value);
    }
    return cfg;
}

PipelineConfig load_config_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ValidationError("config file '" + path + "' cannot be opened");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

std::string serialize_config(const PipelineConfig& cfg)
{
    std::ostringstream os;
    for (const auto& k : key_table())
        os << k.name << " = " << k.get(cfg) << "\n";
    return os.str();
}

bool operator==(const PipelineConfig& a, const PipelineConfig& b)
{
    return serialize_config(a) == serialize_config(b);
}

} // namespace mvs
