// Copyright Contributors to the mvskit Project
// SPDX-License-Identifier: Apache-2.0

#include "mvs/cli/pipeline.hpp"

#include <iostream>
#include <string>
#include <vector>

namespace {

void usage(std::ostream& out)
{
    out << "usage: mvs <command> [--config FILE] [--key value ...]\n"
           "commands:\n"
           "  synth     generate a synthetic scene into scene_dir\n"
           "  train     train the network on scene_dir, write the checkpoint\n"
           "  infer     estimate depth + confidence maps for every view\n"
           "  filter    photometric filtering of the estimated depths\n"
           "  fuse      geometric filtering + fusion into a point cloud\n"
           "  eval      compare the fused cloud against the ground truth\n"
           "  pipeline  all stages in order\n"
           "  config    print the effective configuration and exit\n"
           "Any config key can be overridden with --key value.\n";
}

} // namespace

int main(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    if (args.empty() || args[0] == "--help" || args[0] == "-h" || args[0] == "help")
    {
        usage(args.empty() ? std::cerr : std::cout);
        return args.empty() ? 1 : 0;
    }
    const std::string command = args[0];

    mvs::PipelineConfig cfg;
    try
    {
        // first pass: locate --config so file values load before overrides
        for (std::size_t i = 1; i < args.size(); ++i)
        {
            if (args[i] == "--config")
            {
                if (i + 1 >= args.size())
                    throw mvs::ValidationError("--config requires a file path");
                cfg = mvs::load_config_file(args[i + 1]);
                ++i;
            }
        }
        for (std::size_t i = 1; i < args.size(); ++i)
        {
            const std::string& arg = args[i];
            if (arg == "--config")
            {
                ++i;
                continue;
            }
            if (arg.rfind("--", 0) != 0)
                throw mvs::ValidationError("unexpected argument '" + arg + "'");
            if (i + 1 >= args.size())
                throw mvs::ValidationError("flag '" + arg + "' requires a value");
            mvs::apply_override(cfg, arg.substr(2), args[i + 1]);
            ++i;
        }
    }
    catch (const mvs::ValidationError& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    if (command == "config")
    {
        std::cout << mvs::serialize_config(cfg);
        return 0;
    }
    return mvs::run_command(command, cfg, std::cerr);
}
