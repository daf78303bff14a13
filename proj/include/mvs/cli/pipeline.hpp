// Copyright Contributors to the mvskit Project
// SPDX-License-Identifier: Apache-2.0

#ifndef MVS_CLI_PIPELINE_HPP
#define MVS_CLI_PIPELINE_HPP

#include <iosfwd>
#include <string>

#include "mvs/cli/config.hpp"

namespace mvs {

/// Stage entry points. Each stage reads its inputs from disk and persists its
/// outputs, so stages are independently runnable and re-runnable:
///   synth    scene_dir/ images, cameras, ground truth, tracks
///   train    scene_dir/ -> checkpoint + output_dir/loss_history.txt
///   infer    scene_dir/ + checkpoint -> output_dir/depths_est, conf
///   filter   output_dir/depths_est + conf -> output_dir/depths_filtered
///   fuse     filtered depths + cameras + images -> output_dir/fused.ply
///   eval     fused.ply vs ground truth -> output_dir/metrics.txt, metrics.kv
///   pipeline all of the above in order
void run_synth(const PipelineConfig& cfg, std::ostream& log);
void run_train(const PipelineConfig& cfg, std::ostream& log);
void run_infer(const PipelineConfig& cfg, std::ostream& log);
void run_filter(const PipelineConfig& cfg, std::ostream& log);
void run_fuse(const PipelineConfig& cfg, std::ostream& log);
void run_eval(const PipelineConfig& cfg, std::ostream& log);

/// Dispatches a command; returns the process exit code (0 success,
/// 1 validation error, 2 runtime failure). Failures are logged.
int run_command(const std::string& command, const PipelineConfig& cfg, std::ostream& log);

} // namespace mvs

#endif
