// Copyright Contributors to the mvskit Project
// SPDX-License-Identifier: Apache-2.0
//
// The learned pipeline: shared feature towers, plane-sweep cost volume,
// multi-scale 3D regularization to a probability volume, soft-argmin depth
// regression, and residual refinement guided by the reference image.

#ifndef MVS_NET_MODEL_HPP
#define MVS_NET_MODEL_HPP

#include <string>
#include <vector>

#include "mvs/geometry/warp.hpp"
#include "mvs/net/layers.hpp"

namespace mvs {

enum class CostMetric { Variance, Mean };

struct FeatureExtractorConfig
{
    // default: two stride-2 layers (3 and 6) give 4x downsampling, F = 32
    std::vector<int> channels = {8, 8, 16, 16, 16, 32, 32, 32};
    std::vector<int> strides = {1, 1, 2, 1, 1, 2, 1, 1};
    std::vector<int> kernels = {3, 3, 5, 3, 3, 5, 3, 3};
    bool single_layer_baseline = false; // one bare conv, kernel 7, stride 4
    int baseline_channels = 32;

    int out_channels() const
    {
        return single_layer_baseline ? baseline_channels : channels.back();
    }

    void validate() const
    {
        if (single_layer_baseline)
            return;
        if (channels.empty() || channels.size() != strides.size()
            || channels.size() != kernels.size())
            throw std::invalid_argument("feature config: channels/strides/kernels must have "
                "equal length");
        int down = 1;
        for (int s : strides)
            down *= s;
        if (down != 4)
            throw std::invalid_argument("feature config: strides must downsample by 4, got "
                + std::to_string(down));
    }
};

struct RegularizerConfig
{
    int base_channels = 8; // schedule base, 2x, 4x, 8x over the four scales
    static constexpr int scales = 4;
    static constexpr int downsample = 8; // 2^(scales-1)

    void validate() const
    {
        if (base_channels < 1)
            throw std::invalid_argument("regularizer config: base_channels must be positive");
    }
};

struct RefinerConfig
{
    int channels = 32; // three hidden layers, then one bare 1-channel layer
};

struct NetworkConfig
{
    FeatureExtractorConfig feature;
    RegularizerConfig regularizer;
    RefinerConfig refiner;
    CostMetric cost_metric = CostMetric::Variance;
    bool refinement_enabled = true;
};

/// Eight-layer 2D CNN (or the single-layer baseline) producing 32-channel
/// maps at quarter resolution. Parameters are shared across all views.
template <typename S>
class FeatureExtractor
{
public:
    void init(const FeatureExtractorConfig& cfg, Rng& rng)
    {
        cfg.validate();
        cfg_ = cfg;
        layers_.clear();
        if (cfg.single_layer_baseline)
        {
            layers_.emplace_back();
            layers_.back().init(3, cfg.baseline_channels, 7, 4, false, rng);
            return;
        }
        int cin = 3;
        for (std::size_t i = 0; i < cfg.channels.size(); ++i)
        {
            const bool last = i + 1 == cfg.channels.size();
            layers_.emplace_back();
            layers_.back().init(cin, cfg.channels[i], cfg.kernels[i], cfg.strides[i], !last,
                                rng);
            cin = cfg.channels[i];
        }
    }

    Tensor<S> forward(Tape<S>* tape, const Tensor<S>& image, NormMode mode)
    {
        if (image.rank() != 3 || image.shape()[0] != 3)
            throw std::invalid_argument("extract_features: expected [3,H,W], got "
                + shape_str(image.shape()));
        const int h = image.shape()[1], w = image.shape()[2];
        if (h % 32 != 0 || w % 32 != 0)
            throw std::invalid_argument("extract_features: extents " + std::to_string(w) + "x"
                + std::to_string(h) + " must be divisible by 32; pad to "
                + std::to_string((w + 31) / 32 * 32) + "x" + std::to_string((h + 31) / 32 * 32));
        Tensor<S> x = image;
        for (auto& layer : layers_)
            x = layer.forward(tape, x, mode);
        return x;
    }

    void collect(NamedTensors<S>& params, NamedTensors<S>& buffers)
    {
        for (std::size_t i = 0; i < layers_.size(); ++i)
            layers_[i].collect("feature.layer" + std::to_string(i), params, buffers);
    }

private:
    FeatureExtractorConfig cfg_;
    std::vector<ConvBlock2d<S>> layers_;
};

/// Four-scale 3D encoder-decoder over the cost volume with additive skips;
/// the final 1-channel layer feeds a softmax along depth.
template <typename S>
class CostRegularizer
{
public:
    void init(int in_channels, const RegularizerConfig& cfg, Rng& rng)
    {
        cfg.validate();
        const int b = cfg.base_channels;
        enc0a_.init(in_channels, b, 3, 1, true, false, rng);
        enc0b_.init(b, b, 3, 1, true, false, rng);
        enc1a_.init(b, 2 * b, 3, 2, true, false, rng);
        enc1b_.init(2 * b, 2 * b, 3, 1, true, false, rng);
        enc2a_.init(2 * b, 4 * b, 3, 2, true, false, rng);
        enc2b_.init(4 * b, 4 * b, 3, 1, true, false, rng);
        enc3a_.init(4 * b, 8 * b, 3, 2, true, false, rng);
        enc3b_.init(8 * b, 8 * b, 3, 1, true, false, rng);
        dec2_.init(8 * b, 4 * b, 3, 2, true, true, rng);
        dec1_.init(4 * b, 2 * b, 3, 2, true, true, rng);
        dec0_.init(2 * b, b, 3, 2, true, true, rng);
        final_.init(b, 1, 3, 1, false, false, rng);
    }

    /// cost [F,D,h,w] -> probability volume [D,h,w], sums to 1 along depth.
    Tensor<S> forward(Tape<S>* tape, const Tensor<S>& cost, NormMode mode)
    {
        if (cost.rank() != 4)
            throw std::invalid_argument("regularize: expected [F,D,h,w], got "
                + shape_str(cost.shape()));
        const int d = cost.shape()[1], h = cost.shape()[2], w = cost.shape()[3];
        if (d % RegularizerConfig::downsample || h % RegularizerConfig::downsample
            || w % RegularizerConfig::downsample)
            throw std::invalid_argument("regularize: extents " + shape_str(cost.shape())
                + " must be divisible by "
                + std::to_string(RegularizerConfig::downsample));

        Tensor<S> s0 = enc0b_.forward(tape, enc0a_.forward(tape, cost, mode), mode);
        Tensor<S> s1 = enc1b_.forward(tape, enc1a_.forward(tape, s0, mode), mode);
        Tensor<S> s2 = enc2b_.forward(tape, enc2a_.forward(tape, s1, mode), mode);
        Tensor<S> s3 = enc3b_.forward(tape, enc3a_.forward(tape, s2, mode), mode);
        Tensor<S> u2 = add(tape, dec2_.forward(tape, s3, mode), s2);
        Tensor<S> u1 = add(tape, dec1_.forward(tape, u2, mode), s1);
        Tensor<S> u0 = add(tape, dec0_.forward(tape, u1, mode), s0);
        Tensor<S> logits = final_.forward(tape, u0, mode); // [1,D,h,w]
        logits = reshape(tape, logits, {d, h, w});
        return softmax_axis(tape, logits, 0);
    }

    void collect(NamedTensors<S>& params, NamedTensors<S>& buffers)
    {
        enc0a_.collect("reg.enc0a", params, buffers);
        enc0b_.collect("reg.enc0b", params, buffers);
        enc1a_.collect("reg.enc1a", params, buffers);
        enc1b_.collect("reg.enc1b", params, buffers);
        enc2a_.collect("reg.enc2a", params, buffers);
        enc2b_.collect("reg.enc2b", params, buffers);
        enc3a_.collect("reg.enc3a", params, buffers);
        enc3b_.collect("reg.enc3b", params, buffers);
        dec2_.collect("reg.dec2", params, buffers);
        dec1_.collect("reg.dec1", params, buffers);
        dec0_.collect("reg.dec0", params, buffers);
        final_.collect("reg.final", params, buffers);
    }

private:
    ConvBlock3d<S> enc0a_, enc0b_, enc1a_, enc1b_, enc2a_, enc2b_, enc3a_, enc3b_;
    ConvBlock3d<S> dec2_, dec1_, dec0_, final_;
};

/// Residual depth refinement from the depth map and the resized reference
/// image. The final layer is zero-initialized, so refinement starts as the
/// identity. The depth is min-max scaled to [0,1] before the network and
/// the residual is unscaled on the way out.
template <typename S>
class DepthRefiner
{
public:
    void init(const RefinerConfig& cfg, Rng& rng)
    {
        const int c = cfg.channels;
        conv1_.init(4, c, 3, 1, true, rng);
        conv2_.init(c, c, 3, 1, true, rng);
        conv3_.init(c, c, 3, 1, true, rng);
        final_.init(c, 1, 3, 1, false, rng, /*zero_init=*/true);
    }

    Tensor<S> forward(Tape<S>* tape, const Tensor<S>& depth, const Tensor<S>& image,
                      NormMode mode)
    {
        if (depth.rank() != 2)
            throw std::invalid_argument("refine_depth: depth must be [h,w], got "
                + shape_str(depth.shape()));
        if (image.rank() != 3 || image.shape()[0] != 3
            || image.shape()[1] != depth.shape()[0] || image.shape()[2] != depth.shape()[1])
            throw std::invalid_argument("refine_depth: image " + shape_str(image.shape())
                + " does not match depth " + shape_str(depth.shape()));
        const int h = depth.shape()[0], w = depth.shape()[1];

        Tensor<S> lo = reduce_min(tape, depth);
        Tensor<S> hi = reduce_max(tape, depth);
        Tensor<S> span = sub(tape, hi, lo);
        Tensor<S> scaled;
        Tensor<S> residual_scale;
        if (span.value() > S(1e-12))
        {
            scaled = div(tape, sub(tape, depth, lo), span);
            residual_scale = span;
        }
        else
        {
            // degenerate constant map: feed 0.5, keep the residual unscaled
            scaled = Tensor<S>::full({h, w}, S(0.5));
            residual_scale = Tensor<S>::scalar(S(1));
        }

        Tensor<S> x = concat_axis0(tape, {reshape(tape, scaled, {1, h, w}), image});
        x = conv1_.forward(tape, x, mode);
        x = conv2_.forward(tape, x, mode);
        x = conv3_.forward(tape, x, mode);
        Tensor<S> residual = reshape(tape, final_.forward(tape, x, mode), {h, w});
        return add(tape, depth, mul(tape, residual, residual_scale));
    }

    void collect(NamedTensors<S>& params, NamedTensors<S>& buffers)
    {
        conv1_.collect("refine.conv1", params, buffers);
        conv2_.collect("refine.conv2", params, buffers);
        conv3_.collect("refine.conv3", params, buffers);
        final_.collect("refine.final", params, buffers);
    }

private:
    ConvBlock2d<S> conv1_, conv2_, conv3_, final_;
};

/// 4x4 box average, used to bring the reference image to feature resolution.
template <typename S>
Tensor<S> downsample_image4(const Tensor<S>& image)
{
    const int c = image.shape()[0], h = image.shape()[1], w = image.shape()[2];
    if (h % 4 || w % 4)
        throw std::invalid_argument("downsample_image4: extents must be divisible by 4");
    const int oh = h / 4, ow = w / 4;
    Tensor<S> out = Tensor<S>::zeros({c, oh, ow});
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x)
            {
                S acc = S(0);
                for (int dy = 0; dy < 4; ++dy)
                    for (int dx = 0; dx < 4; ++dx)
                        acc += image.data()[(static_cast<std::int64_t>(ch) * h + 4 * y + dy)
                                            * w + 4 * x + dx];
                out.data()[(static_cast<std::int64_t>(ch) * oh + y) * ow + x] =
                    acc / S(16);
            }
    return out;
}

template <typename S>
struct PipelineOutput
{
    Tensor<S> initial_depth; // [h,w]
    Tensor<S> refined_depth; // [h,w]; equals initial when refinement is off
    Tensor<S> prob_volume;   // [D,h,w]
};

/// The end-to-end network. Accepts any number of views >= 2 at inference
/// regardless of the training view count: the only N-dependent computation
/// is the cost metric.
template <typename S>
class MvsNet
{
public:
    explicit MvsNet(NetworkConfig cfg = {}) : cfg_(std::move(cfg)) {}

    void init_params(std::uint64_t seed)
    {
        Rng rng(seed);
        features_.init(cfg_.feature, rng);
        regularizer_.init(cfg_.feature.out_channels(), cfg_.regularizer, rng);
        refiner_.init(cfg_.refiner, rng);
    }

    const NetworkConfig& config() const { return cfg_; }

    Tensor<S> extract_features(Tape<S>* tape, const Tensor<S>& image, NormMode mode)
    {
        return features_.forward(tape, image, mode);
    }

    /// Feature maps + full-resolution cameras (first entry is the reference)
    /// -> cost volume [F,D,h,w]. Cameras are rescaled to feature resolution
    /// here; the reference volume uses the identity warp.
    Tensor<S> build_cost_volume(Tape<S>* tape, const std::vector<Tensor<S>>& feats,
                                const std::vector<Camera>& cams,
                                const std::vector<double>& depths)
    {
        if (feats.size() < 2)
            throw std::invalid_argument("build_cost_volume: need at least 2 views, got "
                + std::to_string(feats.size()));
        if (feats.size() != cams.size())
            throw std::invalid_argument("build_cost_volume: " + std::to_string(feats.size())
                + " feature maps vs " + std::to_string(cams.size()) + " cameras");
        const Camera ref = cams[0].scaled(0.25);
        std::vector<Tensor<S>> volumes;
        volumes.reserve(feats.size());
        for (std::size_t i = 0; i < feats.size(); ++i)
            volumes.push_back(warp_to_volume(tape, feats[i], ref, cams[i].scaled(0.25),
                                             depths));
        return cfg_.cost_metric == CostMetric::Variance ? variance_across(tape, volumes)
                                                        : mean_across(tape, volumes);
    }

    Tensor<S> regularize(Tape<S>* tape, const Tensor<S>& cost, NormMode mode)
    {
        return regularizer_.forward(tape, cost, mode);
    }

    Tensor<S> refine_depth(Tape<S>* tape, const Tensor<S>& depth, const Tensor<S>& image,
                           NormMode mode)
    {
        return refiner_.forward(tape, depth, image, mode);
    }

    PipelineOutput<S> forward(Tape<S>* tape, const std::vector<Tensor<S>>& images,
                              const std::vector<Camera>& cams, const DepthHypotheses& hyp,
                              NormMode mode)
    {
        if (images.size() < 2)
            throw std::invalid_argument("forward: need at least 2 views, got "
                + std::to_string(images.size()));
        if (images.size() != cams.size())
            throw std::invalid_argument("forward: view/camera count mismatch");
        hyp.validate();

        std::vector<Tensor<S>> feats;
        feats.reserve(images.size());
        for (const auto& img : images)
            feats.push_back(features_.forward(tape, img, mode));

        const std::vector<double> depth_values = hyp.samples();
        Tensor<S> cost = build_cost_volume(tape, feats, cams, depth_values);

        PipelineOutput<S> out;
        out.prob_volume = regularizer_.forward(tape, cost, mode);
        std::vector<S> depths_s(depth_values.begin(), depth_values.end());
        out.initial_depth = expectation_along_depth(tape, out.prob_volume, depths_s);
        if (cfg_.refinement_enabled)
        {
            Tensor<S> small_image = downsample_image4(images[0]);
            out.refined_depth = refiner_.forward(tape, out.initial_depth, small_image, mode);
        }
        else
        {
            out.refined_depth = out.initial_depth;
        }
        return out;
    }

    /// Loss0 on the initial depth plus lambda * Loss1 on the refined depth
    /// (the refined term is dropped when refinement is off).
    Tensor<S> loss(Tape<S>* tape, const PipelineOutput<S>& out, const Tensor<S>& gt,
                   const Tensor<S>& mask, S lambda)
    {
        Tensor<S> l0 = masked_l1(tape, out.initial_depth, gt, mask);
        if (!cfg_.refinement_enabled)
            return l0;
        Tensor<S> l1 = masked_l1(tape, out.refined_depth, gt, mask);
        return add(tape, l0, scale(tape, l1, lambda));
    }

    NamedTensors<S> parameters()
    {
        NamedTensors<S> params, buffers;
        features_.collect(params, buffers);
        regularizer_.collect(params, buffers);
        refiner_.collect(params, buffers);
        return params;
    }

    NamedTensors<S> buffers()
    {
        NamedTensors<S> params, buffers;
        features_.collect(params, buffers);
        regularizer_.collect(params, buffers);
        refiner_.collect(params, buffers);
        return buffers;
    }

private:
    NetworkConfig cfg_;
    FeatureExtractor<S> features_;
    CostRegularizer<S> regularizer_;
    DepthRefiner<S> refiner_;
};

} // namespace mvs

#endif
