#pragma once
// Minimal raster I/O: binary PGM (P5) for occupancy rasters and a
// dependency-free PNG writer (stored deflate blocks) for renders.
// The PNG path trades file size for byte-for-byte reproducibility.

#include <array>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "floornav/core.hpp"

namespace floornav {

struct ImageGray {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> pixels;  // row-major, row 0 first

    uint8_t& at(int col, int row) { return pixels[static_cast<size_t>(row) * width + col]; }
    uint8_t at(int col, int row) const { return pixels[static_cast<size_t>(row) * width + col]; }
};

struct ImageRGB {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> pixels;  // row-major, 3 bytes per pixel

    void set(int col, int row, uint8_t r, uint8_t g, uint8_t b) {
        size_t i = (static_cast<size_t>(row) * width + col) * 3;
        pixels[i] = r;
        pixels[i + 1] = g;
        pixels[i + 2] = b;
    }
};

inline void write_pgm(const ImageGray& img, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open for writing: " + path);
    f << "P5\n" << img.width << " " << img.height << "\n255\n";
    f.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (!f) throw Error("short write: " + path);
}

inline ImageGray read_pgm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open: " + path);
    std::string magic;
    f >> magic;
    if (magic != "P5") throw Error("not a binary PGM (P5): " + path);
    int w = 0, h = 0, maxval = 0;
    f >> w >> h >> maxval;
    if (!f || w < 1 || h < 1 || maxval != 255) throw Error("malformed PGM header: " + path);
    f.get();  // single whitespace after maxval
    ImageGray img;
    img.width = w;
    img.height = h;
    img.pixels.resize(static_cast<size_t>(w) * h);
    f.read(reinterpret_cast<char*>(img.pixels.data()),
           static_cast<std::streamsize>(img.pixels.size()));
    if (f.gcount() != static_cast<std::streamsize>(img.pixels.size()))
        throw Error("truncated PGM raster: " + path);
    return img;
}

namespace detail {

inline uint32_t crc32_update(uint32_t crc, const uint8_t* data, size_t n) {
    static const auto table = [] {
        std::array<uint32_t, 256> t{};
        for (uint32_t i = 0; i < 256; ++i) {
            uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    for (size_t i = 0; i < n; ++i) crc = table[(crc ^ data[i]) & 0xFFu] ^ (crc >> 8);
    return crc;
}

inline void put_u32_be(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v >> 24));
    out.push_back(static_cast<uint8_t>(v >> 16));
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

inline void png_chunk(std::vector<uint8_t>& out, const char type[4],
                      const std::vector<uint8_t>& data) {
    put_u32_be(out, static_cast<uint32_t>(data.size()));
    size_t crc_start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    uint32_t crc = crc32_update(0xFFFFFFFFu, out.data() + crc_start, out.size() - crc_start);
    put_u32_be(out, crc ^ 0xFFFFFFFFu);
}

}  // namespace detail

// 8-bit RGB PNG, zlib stream with stored (uncompressed) deflate blocks.
inline std::vector<uint8_t> encode_png_rgb(const ImageRGB& img) {
    std::vector<uint8_t> raw;  // filter byte 0 + scanline, per row
    raw.reserve(static_cast<size_t>(img.height) * (1 + static_cast<size_t>(img.width) * 3));
    for (int r = 0; r < img.height; ++r) {
        raw.push_back(0);
        const uint8_t* row = img.pixels.data() + static_cast<size_t>(r) * img.width * 3;
        raw.insert(raw.end(), row, row + static_cast<size_t>(img.width) * 3);
    }

    std::vector<uint8_t> idat;
    idat.push_back(0x78);
    idat.push_back(0x01);
    size_t pos = 0;
    while (true) {
        size_t n = std::min<size_t>(raw.size() - pos, 65535);
        bool final = (pos + n == raw.size());
        idat.push_back(final ? 1 : 0);
        idat.push_back(static_cast<uint8_t>(n & 0xFF));
        idat.push_back(static_cast<uint8_t>(n >> 8));
        idat.push_back(static_cast<uint8_t>(~n & 0xFF));
        idat.push_back(static_cast<uint8_t>((~n >> 8) & 0xFF));
        idat.insert(idat.end(), raw.begin() + pos, raw.begin() + pos + n);
        pos += n;
        if (final) break;
    }
    uint32_t a = 1, b = 0;
    for (uint8_t c : raw) {
        a = (a + c) % 65521;
        b = (b + a) % 65521;
    }
    detail::put_u32_be(idat, (b << 16) | a);

    std::vector<uint8_t> out = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
    std::vector<uint8_t> ihdr;
    detail::put_u32_be(ihdr, static_cast<uint32_t>(img.width));
    detail::put_u32_be(ihdr, static_cast<uint32_t>(img.height));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(2);  // color type RGB
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    detail::png_chunk(out, "IHDR", ihdr);
    detail::png_chunk(out, "IDAT", idat);
    detail::png_chunk(out, "IEND", {});
    return out;
}

inline void write_png_rgb(const ImageRGB& img, const std::string& path) {
    auto bytes = encode_png_rgb(img);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open for writing: " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw Error("short write: " + path);
}

}  // namespace floornav
