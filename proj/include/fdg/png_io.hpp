#pragma once

#include <zlib.h>

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "fdg/errors.hpp"
#include "fdg/image.hpp"

namespace fdg {

// sRGB transfer (IEC 61966-2-1). Images on disk are 8-bit sRGB; everything
// in memory is linear light.
inline double srgb_encode(double linear) {
    if (linear <= 0.0) return 0.0;
    if (linear >= 1.0) return 1.0;
    return linear <= 0.0031308 ? 12.92 * linear
                               : 1.055 * std::pow(linear, 1.0 / 2.4) - 0.055;
}

inline double srgb_decode(double encoded) {
    if (encoded <= 0.0) return 0.0;
    if (encoded >= 1.0) return 1.0;
    return encoded <= 0.04045 ? encoded / 12.92
                              : std::pow((encoded + 0.055) / 1.055, 2.4);
}

inline std::uint8_t quantize8(double v01) {
    const double v = v01 < 0.0 ? 0.0 : (v01 > 1.0 ? 1.0 : v01);
    return static_cast<std::uint8_t>(v * 255.0 + 0.5);
}

namespace pngdetail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

inline void write_chunk(std::ofstream& out, const char type[4],
                        const std::uint8_t* data, std::size_t len) {
    std::vector<std::uint8_t> head;
    put_u32(head, static_cast<std::uint32_t>(len));
    head.insert(head.end(), type, type + 4);
    out.write(reinterpret_cast<const char*>(head.data()), static_cast<std::streamsize>(head.size()));
    if (len > 0) out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(len));
    uLong crc = crc32(0L, reinterpret_cast<const Bytef*>(type), 4);
    if (len > 0) crc = crc32(crc, data, static_cast<uInt>(len));
    std::vector<std::uint8_t> tail;
    put_u32(tail, static_cast<std::uint32_t>(crc));
    out.write(reinterpret_cast<const char*>(tail.data()), 4);
}

inline void write_png(const std::string& path, int w, int h, int channels,
                      const std::vector<std::uint8_t>& pixels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw parse_error("write_png: cannot open '" + path + "' for writing");

    static const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    out.write(reinterpret_cast<const char*>(sig), 8);

    std::uint8_t color_type = 0;
    if (channels == 3) color_type = 2;
    if (channels == 4) color_type = 6;

    std::vector<std::uint8_t> ihdr;
    put_u32(ihdr, static_cast<std::uint32_t>(w));
    put_u32(ihdr, static_cast<std::uint32_t>(h));
    ihdr.push_back(8);           // bit depth
    ihdr.push_back(color_type);  // gray / rgb / rgba
    ihdr.push_back(0);           // compression
    ihdr.push_back(0);           // filter
    ihdr.push_back(0);           // interlace
    write_chunk(out, "IHDR", ihdr.data(), ihdr.size());

    const std::uint8_t intent = 0;  // perceptual
    write_chunk(out, "sRGB", &intent, 1);

    // filter byte 0 per scanline
    const std::size_t stride = static_cast<std::size_t>(w) * channels;
    std::vector<std::uint8_t> raw;
    raw.reserve((stride + 1) * h);
    for (int y = 0; y < h; ++y) {
        raw.push_back(0);
        raw.insert(raw.end(), pixels.begin() + static_cast<std::ptrdiff_t>(y * stride),
                   pixels.begin() + static_cast<std::ptrdiff_t>((y + 1) * stride));
    }

    uLongf comp_len = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> comp(comp_len);
    if (compress2(comp.data(), &comp_len, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
        throw numeric_error("write_png: deflate failed");
    write_chunk(out, "IDAT", comp.data(), comp_len);
    write_chunk(out, "IEND", nullptr, 0);
    if (!out) throw parse_error("write_png: write failed for '" + path + "'");
}

inline int paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

}  // namespace pngdetail

// Writes an RGBA PNG (8-bit sRGB, straight alpha) from linear color + coverage.
inline void write_png_rgba(const std::string& path, int w, int h,
                           const std::vector<double>& rgb, const std::vector<double>& alpha) {
    std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h * 4);
    for (std::size_t i = 0; i < static_cast<std::size_t>(w) * h; ++i) {
        px[i * 4 + 0] = quantize8(srgb_encode(rgb[i * 3 + 0]));
        px[i * 4 + 1] = quantize8(srgb_encode(rgb[i * 3 + 1]));
        px[i * 4 + 2] = quantize8(srgb_encode(rgb[i * 3 + 2]));
        px[i * 4 + 3] = quantize8(alpha[i]);
    }
    pngdetail::write_png(path, w, h, 4, px);
}

inline void write_png_rgb(const std::string& path, const Image& img) {
    std::vector<std::uint8_t> px(static_cast<std::size_t>(img.w) * img.h * 3);
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = quantize8(srgb_encode(img.px[i]));
    pngdetail::write_png(path, img.w, img.h, 3, px);
}

// Grayscale visualization of values already in [0,1].
inline void write_png_gray(const std::string& path, int w, int h, const std::vector<double>& v) {
    std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h);
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = quantize8(srgb_encode(v[i]));
    pngdetail::write_png(path, w, h, 1, px);
}

// Reads an 8-bit gray/RGB/RGBA PNG into a linear RGB image. Alpha is dropped.
inline Image read_png(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw parse_error("read_png: cannot open '" + path + "'");
    std::vector<std::uint8_t> file((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
    static const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    if (file.size() < 8 || std::memcmp(file.data(), sig, 8) != 0)
        throw parse_error("read_png: '" + path + "' is not a PNG");

    auto read_u32 = [&](std::size_t off) -> std::uint32_t {
        return (std::uint32_t(file[off]) << 24) | (std::uint32_t(file[off + 1]) << 16) |
               (std::uint32_t(file[off + 2]) << 8) | std::uint32_t(file[off + 3]);
    };

    std::size_t pos = 8;
    int w = 0, h = 0, bit_depth = 0, color_type = 0;
    std::vector<std::uint8_t> idat;
    bool done = false;
    while (!done) {
        if (pos + 8 > file.size()) throw parse_error("read_png: truncated chunk header");
        const std::uint32_t len = read_u32(pos);
        const std::string type(reinterpret_cast<const char*>(&file[pos + 4]), 4);
        const std::size_t data = pos + 8;
        if (data + len + 4 > file.size()) throw parse_error("read_png: truncated chunk '" + type + "'");
        if (type == "IHDR") {
            w = static_cast<int>(read_u32(data));
            h = static_cast<int>(read_u32(data + 4));
            bit_depth = file[data + 8];
            color_type = file[data + 9];
            if (bit_depth != 8) throw parse_error("read_png: only 8-bit depth supported");
            if (color_type != 0 && color_type != 2 && color_type != 6)
                throw parse_error("read_png: unsupported color type " + std::to_string(color_type));
            if (file[data + 12] != 0) throw parse_error("read_png: interlaced PNGs unsupported");
        } else if (type == "IDAT") {
            idat.insert(idat.end(), file.begin() + static_cast<std::ptrdiff_t>(data),
                        file.begin() + static_cast<std::ptrdiff_t>(data + len));
        } else if (type == "IEND") {
            done = true;
        }
        pos = data + len + 4;
    }
    if (w <= 0 || h <= 0) throw parse_error("read_png: missing IHDR");

    const int channels = color_type == 0 ? 1 : (color_type == 2 ? 3 : 4);
    const std::size_t stride = static_cast<std::size_t>(w) * channels;
    std::vector<std::uint8_t> raw((stride + 1) * h);
    uLongf raw_len = static_cast<uLongf>(raw.size());
    if (uncompress(raw.data(), &raw_len, idat.data(), static_cast<uLong>(idat.size())) != Z_OK ||
        raw_len != raw.size())
        throw parse_error("read_png: corrupt IDAT stream");

    // undo scanline filters in place
    std::vector<std::uint8_t> prev(stride, 0);
    Image img(h, w);
    for (int y = 0; y < h; ++y) {
        const std::uint8_t filter = raw[y * (stride + 1)];
        std::uint8_t* row = &raw[y * (stride + 1) + 1];
        for (std::size_t i = 0; i < stride; ++i) {
            const int a = i >= static_cast<std::size_t>(channels) ? row[i - channels] : 0;
            const int b = prev[i];
            const int c = i >= static_cast<std::size_t>(channels) ? prev[i - channels] : 0;
            int v = row[i];
            switch (filter) {
                case 0: break;
                case 1: v += a; break;
                case 2: v += b; break;
                case 3: v += (a + b) / 2; break;
                case 4: v += pngdetail::paeth(a, b, c); break;
                default: throw parse_error("read_png: unknown filter type");
            }
            row[i] = static_cast<std::uint8_t>(v);
        }
        std::memcpy(prev.data(), row, stride);
        for (int x = 0; x < w; ++x) {
            for (int ch = 0; ch < 3; ++ch) {
                const int src = channels == 1 ? 0 : ch;
                img.at(y, x, ch) = srgb_decode(row[x * channels + src] / 255.0);
            }
        }
    }
    return img;
}

// Dimensions without decoding the pixel payload.
inline std::pair<int, int> png_dimensions(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw parse_error("png_dimensions: cannot open '" + path + "'");
    std::uint8_t head[33];
    in.read(reinterpret_cast<char*>(head), sizeof(head));
    if (!in) throw parse_error("png_dimensions: truncated file '" + path + "'");
    auto u32 = [&](int off) {
        return (std::uint32_t(head[off]) << 24) | (std::uint32_t(head[off + 1]) << 16) |
               (std::uint32_t(head[off + 2]) << 8) | std::uint32_t(head[off + 3]);
    };
    return {static_cast<int>(u32(16)), static_cast<int>(u32(20))};  // width, height
}

}  // namespace fdg
