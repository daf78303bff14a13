// Copyright Contributors to the mvskit Project
// SPDX-License-Identifier: Apache-2.0

#ifndef MVS_NET_CHECKPOINT_HPP
#define MVS_NET_CHECKPOINT_HPP

#include <cstring>
#include <fstream>
#include <map>

#include "mvs/net/model.hpp"

namespace mvs {

// Versioned binary checkpoint: magic, format version, then one record per
// tensor (name, shape, float32 little-endian values). Parameters and running
// statistics are both stored; a float-typed model reloads bit-exactly.
inline constexpr char kCheckpointMagic[8] = {'M', 'V', 'S', 'P', 'A', 'R', 'A', 'M'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

inline void write_u32(std::ostream& out, std::uint32_t v)
{
    out.write(reinterpret_cast<const char*>(&v), 4);
}

inline std::uint32_t read_u32(std::istream& in, const std::string& path)
{
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    if (!in)
        throw std::runtime_error(path + ": checkpoint truncated");
    return v;
}

} // namespace detail

template <typename S>
void save_checkpoint(const std::string& path, MvsNet<S>& model)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error(path + ": cannot open checkpoint for writing");
    NamedTensors<S> records = model.parameters();
    for (auto& b : model.buffers())
        records.push_back(b);

    out.write(kCheckpointMagic, 8);
    detail::write_u32(out, kCheckpointVersion);
    detail::write_u32(out, static_cast<std::uint32_t>(records.size()));
    for (auto& [name, tensor] : records)
    {
        detail::write_u32(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        detail::write_u32(out, static_cast<std::uint32_t>(tensor.rank()));
        for (int e : tensor.shape())
            detail::write_u32(out, static_cast<std::uint32_t>(e));
        for (S v : tensor.data())
        {
            const float f = static_cast<float>(v);
            out.write(reinterpret_cast<const char*>(&f), 4);
        }
    }
    if (!out)
        throw std::runtime_error(path + ": checkpoint write failed");
}

/// Loads a checkpoint into an initialized model. The record set must match
/// the model's tensors exactly (names and shapes).
template <typename S>
void load_checkpoint(const std::string& path, MvsNet<S>& model)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error(path + ": cannot open checkpoint for reading");
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0)
        throw std::runtime_error(path + ": not a parameter checkpoint (bad magic)");
    const std::uint32_t version = detail::read_u32(in, path);
    if (version != kCheckpointVersion)
        throw std::runtime_error(path + ": unsupported checkpoint version "
            + std::to_string(version));
    const std::uint32_t count = detail::read_u32(in, path);

    std::map<std::string, Tensor<S>> targets;
    for (auto& [name, tensor] : model.parameters())
        targets.emplace(name, tensor);
    for (auto& [name, tensor] : model.buffers())
        targets.emplace(name, tensor);
    if (count != targets.size())
        throw std::runtime_error(path + ": checkpoint has " + std::to_string(count)
            + " records but the model expects " + std::to_string(targets.size()));

    std::size_t loaded = 0;
    for (std::uint32_t r = 0; r < count; ++r)
    {
        const std::uint32_t name_len = detail::read_u32(in, path);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const std::uint32_t rank = detail::read_u32(in, path);
        Shape shape(rank);
        for (auto& e : shape)
            e = static_cast<int>(detail::read_u32(in, path));
        auto it = targets.find(name);
        if (it == targets.end())
            throw std::runtime_error(path + ": unknown tensor '" + name
                + "' (model/checkpoint configuration mismatch)");
        if (it->second.shape() != shape)
            throw std::runtime_error(path + ": tensor '" + name + "' has shape "
                + shape_str(shape) + " but the model expects "
                + shape_str(it->second.shape()));
        for (S& v : it->second.data())
        {
            float f = 0.0f;
            in.read(reinterpret_cast<char*>(&f), 4);
            v = static_cast<S>(f);
        }
        if (!in)
            throw std::runtime_error(path + ": checkpoint truncated in tensor '" + name + "'");
        ++loaded;
    }
    if (loaded != targets.size())
        throw std::runtime_error(path + ": missing tensors in checkpoint");
}

} // namespace mvs

#endif
