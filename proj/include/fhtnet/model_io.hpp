#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "fhtnet/io_util.hpp"
#include "fhtnet/tensor.hpp"

namespace fhtnet::nn {

// Parameter file layout: magic "FHTNN1\n", then u32 blob count, then per blob
// u32 rank, rank * u32 dims, and the raw f64 payload. All integers and floats
// little-endian.
inline constexpr char kModelMagic[7] = {'F', 'H', 'T', 'N', 'N', '1', '\n'};

static_assert(std::endian::native == std::endian::little,
              "model files are little-endian; big-endian hosts need byte swaps");

namespace detail {

inline void append_u32(std::string& out, std::uint32_t v) {
    char buf[4];
    std::memcpy(buf, &v, 4);
    out.append(buf, 4);
}

inline std::uint32_t read_u32(const std::string& bytes, std::size_t& pos) {
    if (pos + 4 > bytes.size())
        throw FormatError("model file truncated while reading a 32-bit field",
                          static_cast<long long>(pos));
    std::uint32_t v;
    std::memcpy(&v, bytes.data() + pos, 4);
    pos += 4;
    return v;
}

} // namespace detail

inline std::string serialize_params(const std::vector<Tensor>& params) {
    std::string out(kModelMagic, sizeof(kModelMagic));
    detail::append_u32(out, static_cast<std::uint32_t>(params.size()));
    for (const auto& t : params) {
        detail::append_u32(out, static_cast<std::uint32_t>(t.shape.size()));
        for (int d : t.shape) detail::append_u32(out, static_cast<std::uint32_t>(d));
        const std::size_t bytes = t.data.size() * sizeof(double);
        const std::size_t at = out.size();
        out.resize(at + bytes);
        std::memcpy(out.data() + at, t.data.data(), bytes);
    }
    return out;
}

inline std::vector<Tensor> deserialize_params(const std::string& bytes) {
    if (bytes.size() < sizeof(kModelMagic) ||
        std::memcmp(bytes.data(), kModelMagic, sizeof(kModelMagic)) != 0)
        throw FormatError("bad model magic; expected \"FHTNN1\\n\"", 0);
    std::size_t pos = sizeof(kModelMagic);
    const std::uint32_t count = detail::read_u32(bytes, pos);
    std::vector<Tensor> params;
    params.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t rank = detail::read_u32(bytes, pos);
        if (rank == 0 || rank > 8)
            throw FormatError("model blob " + std::to_string(i) + " has implausible rank " +
                                  std::to_string(rank),
                              static_cast<long long>(pos - 4));
        Tensor t;
        std::size_t elems = 1;
        for (std::uint32_t r = 0; r < rank; ++r) {
            const std::uint32_t dim = detail::read_u32(bytes, pos);
            if (dim == 0)
                throw FormatError("model blob " + std::to_string(i) + " has a zero dimension",
                                  static_cast<long long>(pos - 4));
            t.shape.push_back(static_cast<int>(dim));
            elems *= dim;
        }
        const std::size_t payload = elems * sizeof(double);
        if (pos + payload > bytes.size())
            throw FormatError("model file truncated inside blob " + std::to_string(i),
                              static_cast<long long>(pos));
        t.data.resize(elems);
        std::memcpy(t.data.data(), bytes.data() + pos, payload);
        pos += payload;
        params.push_back(std::move(t));
    }
    if (pos != bytes.size())
        throw FormatError("trailing bytes after the last model blob", static_cast<long long>(pos));
    return params;
}

inline void save_model(const std::filesystem::path& path, const std::vector<Tensor>& params) {
    atomic_write_file(path, serialize_params(params));
}

inline std::vector<Tensor> load_model(const std::filesystem::path& path) {
    return deserialize_params(read_file_bytes(path));
}

} // namespace fhtnet::nn
