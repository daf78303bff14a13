// Copyright Contributors to the mvskit Project
// SPDX-License-Identifier: Apache-2.0

#include "mvs/scene/scene_dir.hpp"

#include "mvs/scene/formats.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace mvs {

namespace {

std::string view_id(int index)
{
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%08d", index);
    return buf;
}

std::vector<std::string> list_sorted(const fs::path& dir, const std::string& extension)
{
    std::vector<std::string> names;
    if (!fs::exists(dir))
        return names;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == extension)
            names.push_back(entry.path().filename().string());
    std::sort(names.begin(), names.end());
    return names;
}

} // namespace

void save_scene_dir(const SceneBundle& bundle, const std::string& dir)
{
    const fs::path root(dir);
    fs::create_directories(root / "images");
    fs::create_directories(root / "cams");
    if (bundle.has_gt())
    {
        fs::create_directories(root / "depths");
        fs::create_directories(root / "masks");
    }
    for (std::size_t v = 0; v < bundle.views.size(); ++v)
    {
        const std::string id = view_id(static_cast<int>(v));
        write_ppm((root / "images" / (id + ".ppm")).string(), bundle.views[v].image);
        write_cam((root / "cams" / (id + "_cam.txt")).string(), bundle.views[v].cam,
                  bundle.views[v].hyp);
        if (bundle.has_gt())
        {
            std::vector<float> depth32(bundle.gt_depth[v].begin(), bundle.gt_depth[v].end());
            write_pfm((root / "depths" / (id + ".pfm")).string(), depth32, bundle.width,
                      bundle.height);
            write_pgm((root / "masks" / (id + ".pgm")).string(), bundle.gt_mask[v],
                      bundle.width, bundle.height);
        }
    }
    std::ofstream tracks((root / "tracks.txt").string());
    if (!tracks)
        throw std::runtime_error(dir + "/tracks.txt: cannot open for writing");
    char buf[96];
    for (const auto& tr : bundle.tracks)
    {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g", tr.position.x(),
                      tr.position.y(), tr.position.z());
        tracks << buf << " " << tr.views.size();
        for (int v : tr.views)
            tracks << " " << v;
        tracks << "\n";
    }
}

SceneBundle load_scene_dir(const std::string& dir)
{
    const fs::path root(dir);
    if (!fs::exists(root))
        throw std::runtime_error(dir + ": scene directory does not exist");
    const auto images = list_sorted(root / "images", ".ppm");
    const auto cams = list_sorted(root / "cams", ".txt");
    if (images.empty())
        throw std::runtime_error(dir + ": no images found under images/");
    if (images.size() != cams.size())
    {
        std::ostringstream msg;
        msg << dir << ": " << images.size() << " images vs " << cams.size()
            << " camera files;";
        for (const auto& img : images)
        {
            const std::string want = img.substr(0, img.size() - 4) + "_cam.txt";
            if (std::find(cams.begin(), cams.end(), want) == cams.end())
                msg << " missing " << want;
        }
        for (const auto& cam : cams)
        {
            const std::string want = cam.substr(0, cam.size() - 8) + ".ppm";
            if (std::find(images.begin(), images.end(), want) == images.end())
                msg << " orphan " << cam;
        }
        throw std::runtime_error(msg.str());
    }

    SceneBundle bundle;
    const bool gt = fs::exists(root / "depths");
    for (std::size_t v = 0; v < images.size(); ++v)
    {
        View view;
        view.image = read_ppm((root / "images" / images[v]).string());
        read_cam((root / "cams" / cams[v]).string(), view.cam, view.hyp);
        if (bundle.width == 0)
        {
            bundle.height = view.image.shape()[1];
            bundle.width = view.image.shape()[2];
        }
        else if (view.image.shape()[1] != bundle.height
                 || view.image.shape()[2] != bundle.width)
        {
            throw std::runtime_error(dir + ": image " + images[v]
                + " has mismatched extents");
        }
        bundle.views.push_back(std::move(view));

        if (gt)
        {
            const std::string id = images[v].substr(0, images[v].size() - 4);
            const PfmImage depth = read_pfm((root / "depths" / (id + ".pfm")).string());
            if (depth.width != bundle.width || depth.height != bundle.height)
                throw std::runtime_error(dir + ": depth map for view " + id
                    + " has mismatched extents");
            bundle.gt_depth.emplace_back(depth.data.begin(), depth.data.end());
            const fs::path mask_path = root / "masks" / (id + ".pgm");
            if (fs::exists(mask_path))
            {
                const PgmImage mask = read_pgm(mask_path.string());
                bundle.gt_mask.push_back(mask.data);
            }
            else
            {
                // fall back to depth > 0 as validity
                std::vector<std::uint8_t> mask(depth.data.size(), 0);
                for (std::size_t i = 0; i < depth.data.size(); ++i)
                    mask[i] = depth.data[i] > 0.0f ? 255 : 0;
                bundle.gt_mask.push_back(std::move(mask));
            }
        }
    }

    const fs::path tracks_path = root / "tracks.txt";
    if (fs::exists(tracks_path))
    {
        std::ifstream in(tracks_path.string());
        std::string line;
        int line_no = 0;
        while (std::getline(in, line))
        {
            ++line_no;
            std::istringstream ls(line);
            SparseTrack tr;
            std::size_t k = 0;
            if (!(ls >> tr.position.x() >> tr.position.y() >> tr.position.z() >> k))
            {
                if (line.find_first_not_of(" \t\r") == std::string::npos)
                    continue;
                throw std::runtime_error(dir + "/tracks.txt: malformed track at line "
                    + std::to_string(line_no));
            }
            for (std::size_t i = 0; i < k; ++i)
            {
                int id = 0;
                if (!(ls >> id))
                    throw std::runtime_error(dir + "/tracks.txt: truncated view list at line "
                        + std::to_string(line_no));
                tr.views.push_back(id);
            }
            bundle.tracks.push_back(std::move(tr));
        }
    }
    return bundle;
}

} // namespace mvs
