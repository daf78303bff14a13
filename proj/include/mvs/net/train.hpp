// Copyright Contributors to the mvskit Project
// SPDX-License-Identifier: Apache-2.0

#ifndef MVS_NET_TRAIN_HPP
#define MVS_NET_TRAIN_HPP

#include <iostream>
#include <optional>

#include "mvs/net/model.hpp"
#include "mvs/tensor/adam.hpp"

namespace mvs {

struct TrainConfig
{
    double lambda = 1.0;
    int n_views = 3;
    int iterations = 1000;
    double learning_rate = 1e-3;
    std::uint64_t seed = 7;
    int log_every = 100; // 0 silences progress lines
};

template <typename S>
struct TrainSample
{
    std::vector<Tensor<S>> images; // entry 0 is the reference
    std::vector<Camera> cams;
    DepthHypotheses hyp;
    Tensor<S> gt;   // [h,w] at feature resolution
    Tensor<S> mask; // [h,w], 1 valid / 0 invalid
    int ref_view = -1;
};

struct TrainResult
{
    std::vector<double> loss_history;
    int skipped_samples = 0;
};

template <typename S>
double sample_loss(MvsNet<S>& model, const TrainSample<S>& sample, double lambda,
                   NormMode mode)
{
    PipelineOutput<S> out = model.forward(nullptr, sample.images, sample.cams, sample.hyp,
                                          mode);
    return static_cast<double>(
        model.loss(nullptr, out, sample.gt, sample.mask, static_cast<S>(lambda)).value());
}

/// Mean loss over samples with eval-mode statistics; no parameter updates.
template <typename S>
double validation_loss(MvsNet<S>& model, const std::vector<TrainSample<S>>& samples,
                       double lambda)
{
    if (samples.empty())
        throw std::invalid_argument("validation_loss: no samples");
    double acc = 0.0;
    for (const auto& s : samples)
        acc += sample_loss(model, s, lambda, NormMode::Eval);
    return acc / static_cast<double>(samples.size());
}

/// Single-sample Adam steps over a random (seeded) sample order. Initializes
/// the model parameters from cfg.seed. Deterministic given identical inputs.
template <typename S>
TrainResult train(MvsNet<S>& model, const std::vector<TrainSample<S>>& samples,
                  const TrainConfig& cfg, std::ostream& log = std::cerr)
{
    if (samples.empty())
        throw std::invalid_argument("train: no training samples");
    model.init_params(cfg.seed);

    std::vector<Tensor<S>> param_tensors;
    for (auto& [name, t] : model.parameters())
        param_tensors.push_back(t);
    AdamConfig adam_cfg;
    adam_cfg.learning_rate = cfg.learning_rate;
    Adam<S> opt(param_tensors, adam_cfg);

    Rng order(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    TrainResult result;
    result.loss_history.reserve(cfg.iterations);
    int step = 0;
    int consecutive_skips = 0;
    while (step < cfg.iterations)
    {
        const auto& sample = samples[order.uniform_int(samples.size())];
        S mask_sum = S(0);
        for (S v : sample.mask.data())
            mask_sum += v;
        if (mask_sum == S(0))
        {
            log << "train: skipping sample for view " << sample.ref_view
                << " (empty validity mask)\n";
            ++result.skipped_samples;
            if (++consecutive_skips > static_cast<int>(samples.size()) + 1)
                throw std::runtime_error("train: every sample has an empty mask");
            continue;
        }
        consecutive_skips = 0;

        Tape<S> tape;
        PipelineOutput<S> out = model.forward(&tape, sample.images, sample.cams, sample.hyp,
                                              NormMode::Train);
        Tensor<S> l = model.loss(&tape, out, sample.gt, sample.mask,
                                 static_cast<S>(cfg.lambda));
        opt.zero_grad();
        tape.backward(l);
        opt.step();
        result.loss_history.push_back(static_cast<double>(l.value()));
        ++step;
        if (cfg.log_every > 0 && (step % cfg.log_every == 0 || step == 1))
            log << "train: step " << step << "/" << cfg.iterations << " loss "
                << result.loss_history.back() << "\n";
    }
    return result;
}

/// Forward pass with eval-mode statistics; accepts any N >= 2 regardless of
/// the training view count.
template <typename S>
PipelineOutput<S> infer(MvsNet<S>& model, const std::vector<Tensor<S>>& images,
                        const std::vector<Camera>& cams, const DepthHypotheses& hyp)
{
    return model.forward(nullptr, images, cams, hyp, NormMode::Eval);
}

} // namespace mvs

#endif
