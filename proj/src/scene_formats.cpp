// Copyright Contributors to the mvskit Project
// SPDX-License-Identifier: Apache-2.0

#include "mvs/scene/formats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mvs {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what)
{
    throw std::runtime_error(path + ": " + what);
}

std::ofstream open_out(const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        fail(path, "cannot open for writing");
    return out;
}

std::ifstream open_in(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail(path, "cannot open for reading");
    return in;
}

std::string format_g17(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void swap4(char* p)
{
    std::swap(p[0], p[3]);
    std::swap(p[1], p[2]);
}

} // namespace

void write_pfm(const std::string& path, const std::vector<float>& data, int width,
               int height, double scale)
{
    if (width <= 0 || height <= 0
        || data.size() != static_cast<std::size_t>(width) * height)
        fail(path, "pfm: data size does not match extents");
    if (!(scale < 0.0))
        fail(path, "pfm: only little-endian output supported (scale must be negative)");
    auto out = open_out(path);
    out << "Pf\n" << width << " " << height << "\n" << format_g17(scale) << "\n";
    // scanlines bottom to top
    for (int y = height - 1; y >= 0; --y)
        out.write(reinterpret_cast<const char*>(data.data()
                                                + static_cast<std::size_t>(y) * width),
                  static_cast<std::streamsize>(sizeof(float)) * width);
    if (!out)
        fail(path, "pfm: write failed");
}

PfmImage read_pfm(const std::string& path)
{
    auto in = open_in(path);
    std::string magic;
    in >> magic;
    if (magic == "PF")
        fail(path, "pfm: color 'PF' files are not supported (expected grayscale 'Pf')");
    if (magic != "Pf")
        fail(path, "pfm: bad magic '" + magic + "'");
    PfmImage img;
    double scale = 0.0;
    if (!(in >> img.width >> img.height >> scale) || img.width <= 0 || img.height <= 0)
        fail(path, "pfm: malformed header");
    if (scale == 0.0)
        fail(path, "pfm: zero scale");
    in.get(); // single whitespace after the scale line
    img.data.assign(static_cast<std::size_t>(img.width) * img.height, 0.0f);
    for (int y = img.height - 1; y >= 0; --y)
    {
        char* row = reinterpret_cast<char*>(img.data.data()
                                            + static_cast<std::size_t>(y) * img.width);
        in.read(row, static_cast<std::streamsize>(sizeof(float)) * img.width);
        if (!in)
            fail(path, "pfm: truncated pixel data at row " + std::to_string(y));
        if (scale > 0.0) // big-endian file
            for (int x = 0; x < img.width; ++x)
                swap4(row + 4 * x);
    }
    return img;
}

void write_ply(const std::string& path, const FusedPointCloud& cloud)
{
    auto out = open_out(path);
    out << "ply\nformat binary_little_endian 1.0\n"
        << "element vertex " << cloud.size() << "\n"
        << "property float x\nproperty float y\nproperty float z\n"
        << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
        << "end_header\n";
    for (const auto& p : cloud)
    {
        const float xyz[3] = {static_cast<float>(p.position.x()),
                              static_cast<float>(p.position.y()),
                              static_cast<float>(p.position.z())};
        out.write(reinterpret_cast<const char*>(xyz), 12);
        out.write(reinterpret_cast<const char*>(p.color.data()), 3);
    }
    if (!out)
        fail(path, "ply: write failed");
}

FusedPointCloud read_ply(const std::string& path)
{
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line) || line != "ply")
        fail(path, "ply: missing magic");
    std::size_t count = 0;
    bool header_done = false;
    std::vector<std::string> properties;
    while (std::getline(in, line))
    {
        std::istringstream ls(line);
        std::string tok;
        ls >> tok;
        if (tok == "format")
        {
            std::string fmt;
            ls >> fmt;
            if (fmt != "binary_little_endian")
                fail(path, "ply: unsupported format '" + fmt + "'");
        }
        else if (tok == "element")
        {
            std::string name;
            ls >> name >> count;
            if (name != "vertex")
                fail(path, "ply: unsupported element '" + name + "'");
        }
        else if (tok == "property")
        {
            std::string type, name;
            ls >> type >> name;
            properties.push_back(type + " " + name);
        }
        else if (tok == "end_header")
        {
            header_done = true;
            break;
        }
    }
    if (!header_done)
        fail(path, "ply: missing end_header");
    const std::vector<std::string> expected = {"float x", "float y", "float z",
                                               "uchar red", "uchar green", "uchar blue"};
    if (properties != expected)
        fail(path, "ply: unsupported vertex layout");
    FusedPointCloud cloud(count);
    for (auto& p : cloud)
    {
        float xyz[3];
        in.read(reinterpret_cast<char*>(xyz), 12);
        in.read(reinterpret_cast<char*>(p.color.data()), 3);
        if (!in)
            fail(path, "ply: truncated vertex data");
        p.position = Eigen::Vector3d(xyz[0], xyz[1], xyz[2]);
        p.support = 0;
    }
    return cloud;
}

void write_ppm(const std::string& path, const Tensor<float>& image)
{
    if (image.rank() != 3 || image.shape()[0] != 3)
        fail(path, "ppm: image must be [3,H,W]");
    const int h = image.shape()[1], w = image.shape()[2];
    const std::int64_t npix = static_cast<std::int64_t>(w) * h;
    auto out = open_out(path);
    out << "P6\n" << w << " " << h << "\n255\n";
    std::vector<std::uint8_t> row(3 * w);
    for (int y = 0; y < h; ++y)
    {
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
            {
                const float v = image.data()[c * npix + static_cast<std::int64_t>(y) * w + x];
                const float clamped = std::min(1.0f, std::max(0.0f, v));
                row[3 * x + c] = static_cast<std::uint8_t>(std::lround(clamped * 255.0f));
            }
        out.write(reinterpret_cast<const char*>(row.data()), row.size());
    }
    if (!out)
        fail(path, "ppm: write failed");
}

Tensor<float> read_ppm(const std::string& path)
{
    auto in = open_in(path);
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    in >> magic >> w >> h >> maxval;
    if (magic != "P6" || w <= 0 || h <= 0 || maxval != 255)
        fail(path, "ppm: unsupported header");
    in.get();
    const std::int64_t npix = static_cast<std::int64_t>(w) * h;
    std::vector<std::uint8_t> raw(3 * npix);
    in.read(reinterpret_cast<char*>(raw.data()), raw.size());
    if (!in)
        fail(path, "ppm: truncated pixel data");
    Tensor<float> img = Tensor<float>::zeros({3, h, w});
    for (std::int64_t i = 0; i < npix; ++i)
        for (int c = 0; c < 3; ++c)
            img.data()[c * npix + i] = static_cast<float>(raw[3 * i + c]) / 255.0f;
    return img;
}

void write_pgm(const std::string& path, const std::vector<std::uint8_t>& mask, int width,
               int height)
{
    if (mask.size() != static_cast<std::size_t>(width) * height)
        fail(path, "pgm: data size does not match extents");
    auto out = open_out(path);
    out << "P5\n" << width << " " << height << "\n255\n";
    out.write(reinterpret_cast<const char*>(mask.data()), mask.size());
    if (!out)
        fail(path, "pgm: write failed");
}

PgmImage read_pgm(const std::string& path)
{
    auto in = open_in(path);
    std::string magic;
    int maxval = 0;
    PgmImage img;
    in >> magic >> img.width >> img.height >> maxval;
    if (magic != "P5" || img.width <= 0 || img.height <= 0 || maxval != 255)
        fail(path, "pgm: unsupported header");
    in.get();
    img.data.assign(static_cast<std::size_t>(img.width) * img.height, 0);
    in.read(reinterpret_cast<char*>(img.data.data()), img.data.size());
    if (!in)
        fail(path, "pgm: truncated pixel data");
    return img;
}

void write_cam(const std::string& path, const Camera& cam, const DepthHypotheses& hyp)
{
    auto out = open_out(path);
    out << "extrinsic\n";
    for (int r = 0; r < 3; ++r)
        out << format_g17(cam.R(r, 0)) << " " << format_g17(cam.R(r, 1)) << " "
            << format_g17(cam.R(r, 2)) << " " << format_g17(cam.t(r)) << "\n";
    out << "0 0 0 1\n\n";
    out << "intrinsic\n";
    for (int r = 0; r < 3; ++r)
        out << format_g17(cam.K(r, 0)) << " " << format_g17(cam.K(r, 1)) << " "
            << format_g17(cam.K(r, 2)) << "\n";
    out << "\n";
    out << format_g17(hyp.d_min) << " " << format_g17(hyp.interval) << " " << hyp.count
        << " " << format_g17(hyp.d_min + hyp.interval * (hyp.count - 1)) << "\n";
    if (!out)
        fail(path, "cam: write failed");
}

void read_cam(const std::string& path, Camera& cam, DepthHypotheses& hyp)
{
    auto in = open_in(path);
    std::string line;
    int line_no = 0;
    auto next_tokens = [&](const char* what) {
        while (std::getline(in, line))
        {
            ++line_no;
            std::istringstream ls(line);
            std::string first;
            if (ls >> first)
                return line;
        }
        fail(path, std::string("cam: missing ") + what + " (line "
            + std::to_string(line_no + 1) + ")");
    };
    auto parse_row = [&](const char* what, double* vals, int n) {
        const std::string row = next_tokens(what);
        std::istringstream ls(row);
        for (int i = 0; i < n; ++i)
            if (!(ls >> vals[i]))
                fail(path, std::string("cam: malformed ") + what + " at line "
                    + std::to_string(line_no));
    };

    auto expect_section = [&](const char* name) {
        std::istringstream ls(next_tokens(name));
        std::string tok;
        ls >> tok;
        if (tok != name)
            fail(path, std::string("cam: expected '") + name + "' at line "
                + std::to_string(line_no));
    };

    expect_section("extrinsic");
    for (int r = 0; r < 3; ++r)
    {
        double vals[4];
        parse_row("extrinsic row", vals, 4);
        for (int c = 0; c < 3; ++c)
            cam.R(r, c) = vals[c];
        cam.t(r) = vals[3];
    }
    {
        double vals[4];
        parse_row("extrinsic footer row", vals, 4);
        if (vals[0] != 0 || vals[1] != 0 || vals[2] != 0 || vals[3] != 1)
            fail(path, "cam: extrinsic footer must be '0 0 0 1' at line "
                + std::to_string(line_no));
    }
    expect_section("intrinsic");
    for (int r = 0; r < 3; ++r)
    {
        double vals[3];
        parse_row("intrinsic row", vals, 3);
        for (int c = 0; c < 3; ++c)
            cam.K(r, c) = vals[c];
    }
    {
        const std::string row = next_tokens("depth range line");
        std::istringstream ls(row);
        if (!(ls >> hyp.d_min >> hyp.interval >> hyp.count))
            fail(path, "cam: malformed depth range at line " + std::to_string(line_no));
        double d_max = 0.0;
        if (!(ls >> d_max))
            fail(path, "cam: depth range missing d_max at line " + std::to_string(line_no));
        cam.d_min = hyp.d_min;
        cam.d_max = d_max;
    }
}

} // namespace mvs
