#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "fdg/errors.hpp"
#include "fdg/matrix.hpp"

namespace fdg {

// Plain binary tensor record: magic "FDGT", u32 rank, u32 dims[rank],
// float32 row-major payload, little-endian. Multiple records may be
// concatenated in one stream.

static_assert(std::endian::native == std::endian::little,
              "tensor file writer assumes a little-endian host");

inline void write_tensor(std::ostream& out, const std::vector<std::uint32_t>& dims,
                         const std::vector<float>& payload) {
    std::size_t expect = 1;
    for (std::uint32_t d : dims) expect *= d;
    if (expect != payload.size()) throw invalid_parameter("write_tensor: dims/payload mismatch");

    out.write("FDGT", 4);
    const std::uint32_t rank = static_cast<std::uint32_t>(dims.size());
    out.write(reinterpret_cast<const char*>(&rank), 4);
    for (std::uint32_t d : dims) out.write(reinterpret_cast<const char*>(&d), 4);
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size() * sizeof(float)));
    if (!out) throw parse_error("write_tensor: write failed");
}

struct Tensor {
    std::vector<std::uint32_t> dims;
    std::vector<float> payload;
};

inline Tensor read_tensor(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != "FDGT")
        throw parse_error("read_tensor: missing FDGT magic");
    std::uint32_t rank = 0;
    in.read(reinterpret_cast<char*>(&rank), 4);
    if (!in || rank > 8) throw parse_error("read_tensor: bad rank");
    Tensor t;
    t.dims.resize(rank);
    std::size_t total = 1;
    for (std::uint32_t& d : t.dims) {
        in.read(reinterpret_cast<char*>(&d), 4);
        if (!in) throw parse_error("read_tensor: truncated dims");
        total *= d;
    }
    t.payload.resize(total);
    in.read(reinterpret_cast<char*>(t.payload.data()),
            static_cast<std::streamsize>(total * sizeof(float)));
    if (!in) throw parse_error("read_tensor: truncated payload");
    return t;
}

inline void write_tensor_file(const std::string& path, const std::vector<std::uint32_t>& dims,
                              const std::vector<float>& payload) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw parse_error("write_tensor_file: cannot open '" + path + "'");
    write_tensor(out, dims, payload);
}

inline Tensor read_tensor_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw parse_error("read_tensor_file: cannot open '" + path + "'");
    return read_tensor(in);
}

inline void write_matrix(std::ostream& out, const Matrix& m) {
    std::vector<float> payload(m.data.size());
    for (std::size_t i = 0; i < payload.size(); ++i) payload[i] = static_cast<float>(m.data[i]);
    write_tensor(out, {static_cast<std::uint32_t>(m.rows), static_cast<std::uint32_t>(m.cols)},
                 payload);
}

inline Matrix read_matrix(std::istream& in) {
    const Tensor t = read_tensor(in);
    if (t.dims.size() != 2) throw parse_error("read_matrix: expected a rank-2 tensor");
    Matrix m(t.dims[0], t.dims[1]);
    for (std::size_t i = 0; i < m.data.size(); ++i) m.data[i] = t.payload[i];
    return m;
}

}  // namespace fdg
