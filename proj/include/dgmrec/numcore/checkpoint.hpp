#pragma once

#include "dgmrec/numcore/binary_io.hpp"
#include "dgmrec/numcore/tensor.hpp"

#include <filesystem>
#include <fstream>
#include <map>

namespace dgmrec {

/// Writes every tensor of `store` as: magic "CKPT", u32 count, then per
/// tensor u32 name length, name bytes, u32 rank (always 2), u32 dims,
/// little-endian f32 payload in row-major order.
inline void save_checkpoint(const ParamStore& store, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw std::runtime_error("cannot write checkpoint " + path.string());
    }
    os.write("CKPT", 4);
    binio::write_u32(os, static_cast<std::uint32_t>(store.size()));
    for (const auto* p : store.all()) {
        binio::write_u32(os, static_cast<std::uint32_t>(p->name.size()));
        os.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
        binio::write_u32(os, 2);
        binio::write_u32(os, static_cast<std::uint32_t>(p->value.rows()));
        binio::write_u32(os, static_cast<std::uint32_t>(p->value.cols()));
        for (Index i = 0; i < p->value.size(); ++i) {
            binio::write_f32(os, static_cast<float>(p->value.data()[i]));
        }
    }
    if (!os) {
        throw std::runtime_error("failed writing checkpoint " + path.string());
    }
}

inline std::map<std::string, Mat> read_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw std::runtime_error("cannot open checkpoint " + path.string());
    }
    binio::expect_magic(is, "CKPT");
    const auto count = binio::read_u32(is);
    std::map<std::string, Mat> out;
    for (std::uint32_t k = 0; k < count; ++k) {
        const auto len = binio::read_u32(is);
        std::string name(len, '\0');
        if (!is.read(name.data(), len)) {
            throw std::runtime_error("truncated checkpoint name");
        }
        const auto rank = binio::read_u32(is);
        std::vector<std::uint32_t> dims(rank);
        for (auto& d : dims) {
            d = binio::read_u32(is);
        }
        Index rows = 1, cols = 1;
        if (rank == 1) {
            cols = dims[0];
        } else if (rank == 2) {
            rows = dims[0];
            cols = dims[1];
        } else if (rank != 0) {
            throw std::runtime_error("unsupported tensor rank in checkpoint");
        }
        Mat m(rows, cols);
        for (Index i = 0; i < m.size(); ++i) {
            m.data()[i] = binio::read_f32(is);
        }
        out.emplace(std::move(name), std::move(m));
    }
    return out;
}

/// Loads values into an existing store; every tensor must be present with
/// a matching shape.
inline void load_checkpoint(ParamStore& store, const std::filesystem::path& path) {
    auto tensors = read_checkpoint(path);
    for (auto* p : store.all()) {
        auto it = tensors.find(p->name);
        if (it == tensors.end()) {
            throw std::runtime_error("checkpoint lacks tensor " + p->name);
        }
        if (it->second.rows() != p->value.rows() || it->second.cols() != p->value.cols()) {
            throw std::runtime_error("checkpoint shape mismatch for " + p->name);
        }
        p->value = it->second;
    }
}

} // namespace dgmrec
